"""Ground-truth conditional CDFs of ion distance from the channel center.

Two interchangeable sources:

* :class:`EmpiricalCdf` — pooled trajectory z-coordinates, where the CDF at r
  is the exact fraction of recorded positions within r of the channel center.
* :class:`SyntheticCdf` — a deterministic closed-form stand-in used when no
  trajectories are available. It is a mixture of wall-adjacent truncated
  Gaussians (a primary contact layer, plus a weaker second layer one water
  diameter further in when the channel is wide enough) over a uniform bulk
  component, written directly as a CDF so monotonicity holds by construction.
  It is a smooth test double, not a physics claim.
"""
from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field

import numpy as np
from scipy.special import ndtr

from .domain import ChannelConfig, IonSpecies, ion_by_name

# Ions may sit slightly outside the nominal channel when layered against the
# wall; coordinates beyond this slack are treated as data errors.
WALL_TOLERANCE_NM = 0.05

# Synthetic-oracle shape constants (nm).
HYDRATION_OFFSET_NM = 0.17
WATER_DIAMETER_NM = 0.28
LAYER_SPREAD_NM = 0.045

SYNTHETIC_ORACLE_VERSION = "synthetic-1"


@dataclass(frozen=True)
class TrajectorySlab:
    """Pooled ion z-coordinates of one configuration across all frames."""

    config: ChannelConfig
    center: float  # channel-center z-coordinate, nm
    z_coords: np.ndarray = field(repr=False)  # nm, flat over all frames

    def __post_init__(self):
        z = np.asarray(self.z_coords, dtype=np.float64)
        if z.ndim != 1 or z.size == 0:
            raise ValueError("z_coords must be a non-empty 1-d array")
        object.__setattr__(self, "z_coords", z)
        bound = self.config.half_width + WALL_TOLERANCE_NM
        worst = np.abs(z - self.center).max()
        if worst > bound:
            raise ValueError(
                f"coordinate {worst:.6f} nm from center exceeds "
                f"width/2 + {WALL_TOLERANCE_NM} = {bound:.6f} nm"
            )

    @property
    def distances(self) -> np.ndarray:
        return np.abs(self.z_coords - self.center)


def empirical_cdf(slab: TrajectorySlab, r: float) -> float:
    """Exact fraction of pooled coordinates with ``|z - center| <= r``."""
    if r < 0:
        raise ValueError(f"r must be non-negative, got {r}")
    d = slab.distances
    return float(np.count_nonzero(d <= r)) / d.size


def _layer_weights(config: ChannelConfig, mu2: float) -> tuple[float, float, float]:
    """Mixture weights (primary layer, secondary layer, uniform bulk).

    Smooth in molarity and charge; the secondary layer fades out smoothly as
    its position approaches the channel center.
    """
    c = config.molarity
    q = abs(config.species.charge)
    w_primary = 0.45 + 0.08 * np.tanh(c - 2.2) + 0.10 * (q - 1)
    gate = 0.5 * (1.0 + np.tanh((mu2 - 0.06) / 0.03))
    w_secondary = 0.5 * w_primary * gate
    w_uniform = 1.0 - w_primary - w_secondary
    return float(w_primary), float(w_secondary), float(w_uniform)


def _layer_positions(config: ChannelConfig) -> tuple[float, float]:
    """Centers of the two contact layers, as distance from the channel center.

    The primary layer sits one ion radius plus a hydration offset away from
    the wall; in channels too narrow for that, it collapses onto the center.
    """
    half = config.half_width
    d_wall = (config.species.sigma / 10.0) / 2.0 + HYDRATION_OFFSET_NM
    mu1 = max(0.0, half - d_wall)
    mu2 = mu1 - WATER_DIAMETER_NM
    return mu1, mu2


def _truncated_gaussian_cdf(r: np.ndarray, mu: float, half: float) -> np.ndarray:
    """CDF of a Gaussian at mu renormalized to [0, half]; exactly 0 / 1 at the ends."""
    s = LAYER_SPREAD_NM
    lo = ndtr((0.0 - mu) / s)
    hi = ndtr((half - mu) / s)
    return (ndtr((r - mu) / s) - lo) / (hi - lo)


def synthetic_cdf(config: ChannelConfig, r):
    """Deterministic ground-truth CDF stand-in; scalar in, scalar out.

    Exactly 0 at r=0 and exactly 1 for r >= width/2, continuous in r and in
    every configuration field, non-decreasing in r.
    """
    r_arr = np.asarray(r, dtype=np.float64)
    if r_arr.ndim == 0:
        if r_arr < 0:
            raise ValueError(f"r must be non-negative, got {r}")
        return float(synthetic_cdf(config, r_arr[None])[0])
    if r_arr.size and r_arr.min() < 0:
        raise ValueError("r must be non-negative")

    half = config.half_width
    mu1, mu2 = _layer_positions(config)
    w1, w2, wu = _layer_weights(config, mu2)

    inner = np.clip(r_arr, 0.0, half)
    mix = (
        w1 * _truncated_gaussian_cdf(inner, mu1, half)
        + w2 * _truncated_gaussian_cdf(inner, mu2, half)
        + wu * (inner / half)
    )
    out = np.where(r_arr >= half, 1.0, mix)
    return np.where(r_arr <= 0.0, 0.0, out)


def _invert_synthetic_cdf(config: ChannelConfig, u: np.ndarray) -> np.ndarray:
    """Bisection inverse of the synthetic CDF, elementwise over u in [0, 1]."""
    half = config.half_width
    lo = np.zeros_like(u)
    hi = np.full_like(u, half)
    for _ in range(60):
        mid = 0.5 * (lo + hi)
        below = synthetic_cdf(config, mid) < u
        lo = np.where(below, mid, lo)
        hi = np.where(below, hi, mid)
    return 0.5 * (lo + hi)


def synthesize_trajectory(
    config: ChannelConfig, n_ions: int, n_frames: int, seed: int
) -> TrajectorySlab:
    """Draw a fake trajectory slab by inverse-transform sampling the oracle."""
    if n_ions < 1 or n_frames < 1:
        raise ValueError("n_ions and n_frames must be >= 1")
    rng = np.random.default_rng(seed)
    n = n_ions * n_frames
    u = rng.random(n)
    r = _invert_synthetic_cdf(config, u)
    signs = rng.integers(0, 2, size=n) * 2.0 - 1.0
    return TrajectorySlab(config=config, center=0.0, z_coords=signs * r)


def _config_key(config: ChannelConfig) -> tuple:
    return (config.species.name, round(config.width, 9), round(config.molarity, 9))


class SyntheticCdf:
    """CdfSource backed by the closed-form oracle; answers any configuration."""

    version = SYNTHETIC_ORACLE_VERSION

    def cdf(self, config: ChannelConfig, r) -> np.ndarray:
        return synthetic_cdf(config, r)


class EmpiricalCdf:
    """CdfSource backed by ingested trajectory slabs.

    Holds one sorted distance array per configuration for O(log n) queries.
    """

    version = "empirical-1"

    def __init__(self):
        self._sorted: dict[tuple, np.ndarray] = {}
        self._configs: dict[tuple, ChannelConfig] = {}

    def add_slab(self, slab: TrajectorySlab) -> None:
        key = _config_key(slab.config)
        self._sorted[key] = np.sort(slab.distances)
        self._configs[key] = slab.config

    def configs(self) -> list[ChannelConfig]:
        return list(self._configs.values())

    def cdf(self, config: ChannelConfig, r) -> np.ndarray:
        key = _config_key(config)
        if key not in self._sorted:
            raise KeyError(f"no trajectory data for configuration {key}")
        d = self._sorted[key]
        r_arr = np.asarray(r, dtype=np.float64)
        counts = np.searchsorted(d, r_arr, side="right")
        out = counts / d.size
        return float(out) if r_arr.ndim == 0 else out

    def save(self, path) -> None:
        index = []
        arrays = {}
        for i, (key, d) in enumerate(self._sorted.items()):
            cfg = self._configs[key]
            index.append(
                {
                    "ion": cfg.species.name,
                    "sigma": cfg.species.sigma,
                    "epsilon": cfg.species.epsilon,
                    "charge": cfg.species.charge,
                    "width": cfg.width,
                    "molarity": cfg.molarity,
                    "array": f"d{i}",
                }
            )
            arrays[f"d{i}"] = d
        np.savez(path, index=json.dumps(index), **arrays)

    @classmethod
    def load(cls, path) -> "EmpiricalCdf":
        src = cls()
        with np.load(path, allow_pickle=False) as data:
            index = json.loads(str(data["index"]))
            for entry in index:
                ion = IonSpecies(
                    entry["ion"], entry["sigma"], entry["epsilon"], int(entry["charge"])
                )
                cfg = ChannelConfig(ion, entry["width"], entry["molarity"])
                key = _config_key(cfg)
                src._sorted[key] = np.asarray(data[entry["array"]], dtype=np.float64)
                src._configs[key] = cfg
        return src


def write_trajectory_csv(slab: TrajectorySlab, csv_path, sidecar_path, n_ions: int) -> None:
    """Write a slab in the interchange layout: CSV rows frame,ion_id,z plus a
    JSON sidecar carrying the configuration."""
    z = slab.z_coords
    with open(csv_path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["frame", "ion_id", "z"])
        for i, val in enumerate(z):
            writer.writerow([i // n_ions, i % n_ions, repr(float(val))])
    sidecar = {
        "ion_name": slab.config.species.name,
        "width_nm": slab.config.width,
        "molarity_M": slab.config.molarity,
        "center_nm": slab.center,
    }
    with open(sidecar_path, "w") as fh:
        json.dump(sidecar, fh, indent=2)
        fh.write("\n")


def read_trajectory_csv(csv_path, sidecar_path, catalog=None) -> TrajectorySlab:
    """Parse a trajectory CSV plus sidecar into a validated slab.

    Malformed rows and coordinates beyond the wall tolerance are rejected
    with their 1-based line number.
    """
    with open(sidecar_path) as fh:
        meta = json.load(fh)
    ion = ion_by_name(str(meta["ion_name"]), catalog)
    config = ChannelConfig(ion, float(meta["width_nm"]), float(meta["molarity_M"]))
    center = float(meta["center_nm"])
    bound = config.half_width + WALL_TOLERANCE_NM

    coords = []
    with open(csv_path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or [h.strip() for h in header] != ["frame", "ion_id", "z"]:
            raise ValueError(f"{csv_path}: expected header frame,ion_id,z")
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            try:
                z = float(row[2])
            except (IndexError, ValueError) as exc:
                raise ValueError(f"{csv_path}: malformed row at line {lineno}") from exc
            if abs(z - center) > bound:
                raise ValueError(
                    f"{csv_path}: line {lineno}: z={z} lies {abs(z - center):.6f} nm "
                    f"from center, beyond width/2 + {WALL_TOLERANCE_NM}"
                )
            coords.append(z)
    if not coords:
        raise ValueError(f"{csv_path}: no coordinate rows")
    return TrajectorySlab(config=config, center=center, z_coords=np.array(coords))
