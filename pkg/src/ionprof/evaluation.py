"""Model evaluation: per-profile error metrics, grid sweeps, and the
inference-time benchmark.

Reference profiles come from whichever ground-truth source generated the
training targets, so errors measure the surrogate against its own oracle.
"""
from __future__ import annotations

import json
import time
from dataclasses import dataclass, field

import numpy as np

from .profiles import ConcentrationProfile, predict_profile, predict_profiles_batch
from .sampler import split_rule

DEFAULT_EVAL_BIN_SIZE = 0.05  # nm
DEFAULT_BENCH_RUNS = 6


def _require_same_bins(a: ConcentrationProfile, b: ConcentrationProfile) -> None:
    if a.bin_edges.size != b.bin_edges.size or not np.array_equal(a.bin_edges, b.bin_edges):
        raise ValueError("profiles have mismatched binning")


def profile_mae(predicted: ConcentrationProfile, reference: ConcentrationProfile) -> float:
    """Mean absolute per-bin concentration error, M."""
    _require_same_bins(predicted, reference)
    return float(np.mean(np.abs(predicted.concentrations - reference.concentrations)))


def peak_deviation(predicted: ConcentrationProfile, reference: ConcentrationProfile) -> float:
    """Distance between the peak-bin midpoints of the two profiles, nm."""
    _require_same_bins(predicted, reference)
    if predicted.concentrations.size == 0:
        raise ValueError("profiles must be non-empty")
    return float(abs(predicted.peak_location() - reference.peak_location()))


def evaluate_grid(model, source, grid, bin_size: float) -> list[dict]:
    """Per-configuration MAE and peak deviation of ``model`` against
    ``source``, with train/test partition labels."""
    if not grid:
        raise ValueError("grid must be non-empty")
    predicted = predict_profiles_batch(model, grid, bin_size)
    records = []
    for cfg, pred in zip(grid, predicted):
        ref = predict_profile(source, cfg, bin_size)
        records.append(
            {
                "ion": cfg.species.name,
                "width": cfg.width,
                "molarity": cfg.molarity,
                "partition": split_rule(cfg),
                "mae": profile_mae(pred, ref),
                "peak_dev": peak_deviation(pred, ref),
            }
        )
    return records


def mae_grid(model, source, grid, bin_size: float) -> list[dict]:
    """Per-configuration MAE with partition labels (heatmap source data)."""
    return [
        {k: rec[k] for k in ("ion", "width", "molarity", "partition", "mae")}
        for rec in evaluate_grid(model, source, grid, bin_size)
    ]


def aggregate_records(records: list[dict]) -> dict:
    out = {}
    for name in ("train", "test"):
        part = [r for r in records if r["partition"] == name]
        out[name] = {
            "n_configs": len(part),
            "mae": float(np.mean([r["mae"] for r in part])) if part else None,
            "peak_deviation": float(np.mean([r["peak_dev"] for r in part])) if part else None,
        }
    return out


@dataclass
class BenchResult:
    runs: list[float]  # wall-clock seconds per timed run
    profiles_per_run: int
    bin_size: float

    @property
    def mean(self) -> float:
        return float(np.mean(self.runs))

    @property
    def std(self) -> float:
        return float(np.std(self.runs, ddof=1)) if len(self.runs) > 1 else 0.0

    def format(self) -> str:
        return f"{self.mean:.2f}({self.std:.2f})"

    def to_dict(self) -> dict:
        return {
            "runs": self.runs,
            "mean": self.mean,
            "std": self.std,
            "profiles_per_run": self.profiles_per_run,
            "bin_size": self.bin_size,
        }


def bench_inference(model, grid, bin_size: float, runs: int = DEFAULT_BENCH_RUNS) -> BenchResult:
    """Time full-grid profile prediction: one untimed warm-up, then ``runs``
    serial timed repetitions."""
    if runs < 1:
        raise ValueError(f"runs must be >= 1, got {runs}")
    predict_profiles_batch(model, grid, bin_size)  # warm-up
    times = []
    for _ in range(runs):
        t0 = time.perf_counter()
        profiles = predict_profiles_batch(model, grid, bin_size)
        times.append(time.perf_counter() - t0)
    return BenchResult(runs=times, profiles_per_run=len(profiles), bin_size=bin_size)


@dataclass
class EvalReport:
    per_config: list[dict]
    aggregates: dict
    timing: dict | None = None
    meta: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "per_config": self.per_config,
            "aggregates": self.aggregates,
            "timing": self.timing,
            "meta": self.meta,
        }

    def save(self, path) -> None:
        with open(path, "w") as fh:
            json.dump(self.to_dict(), fh, indent=2)
            fh.write("\n")


def build_report(model, source, grid, bin_size: float, meta: dict | None = None) -> EvalReport:
    records = evaluate_grid(model, source, grid, bin_size)
    return EvalReport(
        per_config=records,
        aggregates=aggregate_records(records),
        meta=dict(meta or {}),
    )


def write_heatmap_csv(records: list[dict], path) -> None:
    with open(path, "w", newline="") as fh:
        fh.write("ion,width,molarity,partition,mae\n")
        for r in records:
            fh.write(
                f"{r['ion']},{float(r['width'])!r},{float(r['molarity'])!r},"
                f"{r['partition']},{float(r['mae'])!r}\n"
            )
