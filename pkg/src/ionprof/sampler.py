"""Training/test dataset construction.

Each configuration contributes n points: half with r uniform on
[0, w/2 + 0.1] (teaching the models that nothing sits beyond the wall) and
half with r uniform on [max(0, w/2 - 0.5), w/2] (resolving the near-wall
structure). Configurations whose width or molarity falls on the held-out
grid lines go to the test set wholesale, so test error measures
interpolation between simulated conditions rather than memorization.
"""
from __future__ import annotations

import gzip
import zlib
from dataclasses import dataclass

import numpy as np

from .domain import ChannelConfig, IonSpecies, N_FEATURES, assemble_features_batch

TEST_WIDTHS = (1.6, 2.4, 2.8)  # nm
TEST_MOLARITIES = (1.4, 2.2, 3.0)  # M
_GRID_TOL = 1e-9

NEAR_WALL_BAND_NM = 0.5
BEYOND_WALL_MARGIN_NM = 0.1

CSV_HEADER = "r,sigma,epsilon,width,molarity,charge,cdf"


@dataclass(frozen=True)
class CdfSample:
    """One (feature vector, cumulative density) pair."""

    features: np.ndarray  # (6,) raw units
    target: float


class SampleSet:
    """A column-oriented batch of CDF samples."""

    def __init__(self, features: np.ndarray, targets: np.ndarray):
        features = np.asarray(features, dtype=np.float64).reshape(-1, N_FEATURES)
        targets = np.asarray(targets, dtype=np.float64).reshape(-1)
        if features.shape[0] != targets.shape[0]:
            raise ValueError("features and targets disagree in length")
        self.features = features
        self.targets = targets

    def __len__(self) -> int:
        return self.targets.size

    def __getitem__(self, i: int) -> CdfSample:
        return CdfSample(self.features[i].copy(), float(self.targets[i]))

    def __iter__(self):
        return (self[i] for i in range(len(self)))

    @staticmethod
    def concatenate(parts: list["SampleSet"]) -> "SampleSet":
        if not parts:
            return SampleSet(np.empty((0, N_FEATURES)), np.empty(0))
        return SampleSet(
            np.concatenate([p.features for p in parts]),
            np.concatenate([p.targets for p in parts]),
        )


@dataclass(frozen=True)
class Dataset:
    train: SampleSet
    test: SampleSet
    provenance: dict


def make_grid(
    ions: list[IonSpecies], widths: list[float], molarities: list[float]
) -> list[ChannelConfig]:
    """Cross product of ions x widths x molarities, in that nesting order."""
    return [
        ChannelConfig(ion, w, c) for ion in ions for w in widths for c in molarities
    ]


def full_grid_axes() -> tuple[list[float], list[float]]:
    """The full simulation grid: widths 0.8..3.0 nm by 0.1, molarities 0.8..3.6 M by 0.2."""
    widths = [i / 10 for i in range(8, 31)]
    molarities = [i / 10 for i in range(8, 37, 2)]
    return widths, molarities


def split_rule(config: ChannelConfig) -> str:
    """'test' iff width or molarity sits on a held-out grid line, else 'train'."""
    if any(abs(config.width - w) <= _GRID_TOL for w in TEST_WIDTHS):
        return "test"
    if any(abs(config.molarity - c) <= _GRID_TOL for c in TEST_MOLARITIES):
        return "test"
    return "train"


def config_seed(master_seed: int, config: ChannelConfig) -> np.random.SeedSequence:
    """Per-configuration RNG stream, derived from the configuration itself so
    adding or reordering grid entries never perturbs existing samples."""
    return np.random.SeedSequence(
        [
            int(master_seed),
            zlib.crc32(config.species.name.encode()),
            int(round(config.width * 1e6)),
            int(round(config.molarity * 1e6)),
        ]
    )


def sample_config(config: ChannelConfig, source, n: int, seed) -> SampleSet:
    """Draw n CDF samples for one configuration (two-interval scheme)."""
    if n < 2 or n % 2 != 0:
        raise ValueError(f"n must be even and >= 2, got {n}")
    half = config.half_width
    rng = np.random.default_rng(seed)
    r_wide = rng.uniform(0.0, half + BEYOND_WALL_MARGIN_NM, n // 2)
    r_wall = rng.uniform(max(0.0, half - NEAR_WALL_BAND_NM), half, n // 2)
    r = np.concatenate([r_wide, r_wall])
    features = assemble_features_batch(config, r)
    targets = np.asarray(source.cdf(config, r), dtype=np.float64)
    return SampleSet(features, targets)


def build_dataset(
    grid: list[ChannelConfig], source, per_config: int, master_seed: int
) -> Dataset:
    """Sample every configuration and split by the interpolation rule."""
    if not grid:
        raise ValueError("grid must be non-empty")
    seen = set()
    for cfg in grid:
        key = (cfg.species.name, round(cfg.width, 9), round(cfg.molarity, 9))
        if key in seen:
            raise ValueError(f"duplicate configuration in grid: {key}")
        seen.add(key)

    train_parts, test_parts = [], []
    for cfg in grid:
        part = sample_config(cfg, source, per_config, config_seed(master_seed, cfg))
        (train_parts if split_rule(cfg) == "train" else test_parts).append(part)

    provenance = {
        "master_seed": int(master_seed),
        "per_config": int(per_config),
        "n_configs": len(grid),
        "source": getattr(source, "version", source.__class__.__name__),
        "grid": [
            [cfg.species.name, cfg.width, cfg.molarity] for cfg in grid
        ],
    }
    return Dataset(
        train=SampleSet.concatenate(train_parts),
        test=SampleSet.concatenate(test_parts),
        provenance=provenance,
    )


def _open_text(path, mode: str):
    if str(path).endswith(".gz"):
        return gzip.open(path, mode + "t", newline="")
    return open(path, mode, newline="")


def write_samples_csv(samples: SampleSet, path) -> None:
    """One row per sample; floats carry full round-trip precision."""
    with _open_text(path, "w") as fh:
        fh.write(CSV_HEADER + "\n")
        feats = samples.features.tolist()  # python floats: repr is round-trip exact
        targets = samples.targets.tolist()
        for f, t in zip(feats, targets):
            fh.write(
                f"{f[0]!r},{f[1]!r},{f[2]!r},{f[3]!r},{f[4]!r},{int(f[5])},{t!r}\n"
            )


def read_samples_csv(path) -> SampleSet:
    import pandas as pd

    frame = pd.read_csv(path, dtype=np.float64, float_precision="round_trip")
    if list(frame.columns) != CSV_HEADER.split(","):
        raise ValueError(
            f"{path}: expected header {CSV_HEADER!r}, got {','.join(frame.columns)!r}"
        )
    data = frame.to_numpy(dtype=np.float64)
    return SampleSet(data[:, :N_FEATURES], data[:, N_FEATURES])
