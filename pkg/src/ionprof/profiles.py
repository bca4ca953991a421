"""Concentration profiles from CDFs.

A profile is the per-bin probability mass (CDF differences over a tiling of
[0, width/2]) rescaled so the channel-average concentration equals the
molarity: a bin [r1, r2] covers the slab fraction 2(r2-r1)/width, which
forces C = p * molarity * width / (2 * (r2 - r1)).

Edge values are clamped to [0, 1] pointwise before differencing. The clamp
depends only on the edge location, never on the rest of the grid, so
halving the bin size and re-summing adjacent bins reproduces the coarse
probabilities exactly for any regressor. The price is that a regressor
whose output dips along r yields small negative masses in the affected
bins instead of having them silently redistributed; an order-restoring
repair (see :func:`monotonize`) cannot be applied here without making the
result depend on the bin grid, which would break that aggregation
consistency.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .domain import ChannelConfig

# bin counts are small integers; this absorbs float noise in width/bin_size
_EDGE_TOL = 1e-9


@dataclass(frozen=True)
class ConcentrationProfile:
    config: ChannelConfig
    bin_edges: np.ndarray  # ascending, from 0 to width/2, nm
    concentrations: np.ndarray  # per bin, M

    def __post_init__(self):
        edges = np.asarray(self.bin_edges, dtype=np.float64)
        conc = np.asarray(self.concentrations, dtype=np.float64)
        if conc.size != edges.size - 1:
            raise ValueError("need exactly one concentration per bin")
        if np.any(np.diff(edges) <= 0):
            raise ValueError("bin edges must be strictly ascending")
        object.__setattr__(self, "bin_edges", edges)
        object.__setattr__(self, "concentrations", conc)

    @property
    def midpoints(self) -> np.ndarray:
        return 0.5 * (self.bin_edges[:-1] + self.bin_edges[1:])

    def peak_location(self) -> float:
        """Midpoint of the highest-concentration bin; ties go to smallest r."""
        return float(self.midpoints[int(np.argmax(self.concentrations))])

    def mean_concentration(self) -> float:
        """Volume-weighted channel average, M."""
        dr = np.diff(self.bin_edges)
        return float((2.0 / self.config.width) * np.sum(self.concentrations * dr))


def monotonize(cdf_values) -> np.ndarray:
    """Running maximum then clamp to [0, 1]; input ordered by ascending r.

    Order-restoring repair for predicted CDF values; a no-op on already
    monotone input. Offered as a post-processing utility: the binning
    pipeline itself differences clamped raw values (see module docstring).
    """
    v = np.asarray(cdf_values, dtype=np.float64)
    if v.size == 0:
        raise ValueError("cdf_values must be non-empty")
    return np.clip(np.maximum.accumulate(v), 0.0, 1.0)


def _clamp01(values) -> np.ndarray:
    v = np.asarray(values, dtype=np.float64)
    if v.size == 0:
        raise ValueError("cdf values must be non-empty")
    return np.clip(v, 0.0, 1.0)


def bin_edges(width: float, bin_size: float) -> np.ndarray:
    """Edges 0, b, 2b, ... tiling [0, width/2]; a final partial bin ends
    exactly at width/2 when width/2 is not a multiple of b."""
    half = width / 2.0
    if not 0.0 < bin_size <= half:
        raise ValueError(f"bin_size must be in (0, {half}], got {bin_size}")
    n_full = int(np.floor(half / bin_size + _EDGE_TOL))
    edges = bin_size * np.arange(n_full + 1, dtype=np.float64)
    if half - edges[-1] > _EDGE_TOL * half:
        edges = np.append(edges, half)
    else:
        edges[-1] = half
    return edges


def bin_probabilities(cdf, width: float, bin_size: float) -> np.ndarray:
    """Per-bin probabilities from a CDF callable (array of r -> array of F).

    Probabilities are differences of the clamped edge values; they sum to
    F(width/2) - F(0) and aggregate exactly under bin refinement.
    """
    edges = bin_edges(width, bin_size)
    return np.diff(_clamp01(cdf(edges)))


def to_concentration(probabilities, bin_edges_arr, molarity: float, width: float) -> np.ndarray:
    """Rescale bin probabilities to molar concentrations."""
    p = np.asarray(probabilities, dtype=np.float64)
    edges = np.asarray(bin_edges_arr, dtype=np.float64)
    if p.size != edges.size - 1:
        raise ValueError("need exactly one probability per bin")
    dr = np.diff(edges)
    if np.any(dr <= 0):
        raise ValueError("zero-width bin")
    return p * molarity * width / (2.0 * dr)


def predict_profile(model, config: ChannelConfig, bin_size: float) -> ConcentrationProfile:
    """Evaluate a CDF model at the bin edges and translate to a profile.

    ``model`` is anything exposing ``cdf(config, r_array)``: a trained
    regressor or a ground-truth source.
    """
    edges = bin_edges(config.width, bin_size)
    values = _clamp01(model.cdf(config, edges))
    conc = to_concentration(np.diff(values), edges, config.molarity, config.width)
    return ConcentrationProfile(config=config, bin_edges=edges, concentrations=conc)


def predict_profiles_batch(model, grid, bin_size: float) -> list[ConcentrationProfile]:
    """Profiles for many configurations, evaluating the model in one batch
    when it supports feature-matrix prediction."""
    predict_cdf = getattr(model, "predict_cdf", None)
    if predict_cdf is None:
        return [predict_profile(model, cfg, bin_size) for cfg in grid]

    from .domain import assemble_features_batch

    edge_arrays = [bin_edges(cfg.width, bin_size) for cfg in grid]
    features = np.concatenate(
        [assemble_features_batch(cfg, e) for cfg, e in zip(grid, edge_arrays)]
    )
    values = np.asarray(predict_cdf(features), dtype=np.float64)

    profiles = []
    offset = 0
    for cfg, edges in zip(grid, edge_arrays):
        v = _clamp01(values[offset : offset + edges.size])
        offset += edges.size
        conc = to_concentration(np.diff(v), edges, cfg.molarity, cfg.width)
        profiles.append(ConcentrationProfile(config=cfg, bin_edges=edges, concentrations=conc))
    return profiles


def write_profile_csv(profile: ConcentrationProfile, path) -> None:
    with open(path, "w", newline="") as fh:
        fh.write("r_lo,r_hi,concentration_M\n")
        edges = profile.bin_edges.tolist()
        for i, c in enumerate(profile.concentrations.tolist()):
            fh.write(f"{edges[i]!r},{edges[i + 1]!r},{c!r}\n")


def write_profiles_long_csv(entries, path) -> None:
    """Combined long-format export: one row per bin across many profiles.

    ``entries`` yields (profile, bin_size) pairs.
    """
    with open(path, "w", newline="") as fh:
        fh.write("ion,width,molarity,bin_size,r_lo,r_hi,concentration_M\n")
        for profile, bin_size in entries:
            cfg = profile.config
            edges = profile.bin_edges.tolist()
            for i, c in enumerate(profile.concentrations.tolist()):
                fh.write(
                    f"{cfg.species.name},{float(cfg.width)!r},{float(cfg.molarity)!r},"
                    f"{float(bin_size)!r},{edges[i]!r},{edges[i + 1]!r},{c!r}\n"
                )
