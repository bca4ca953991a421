"""Command-line pipeline: generate data, train models, predict profiles,
evaluate, and benchmark — reproducible end to end from one master seed.

Heavy imports happen inside commands so thread limits can be applied to the
numerics libraries before they load.
"""
from __future__ import annotations

import argparse
import hashlib
import json
import os
import sys
from pathlib import Path

_THREAD_ENV_VARS = (
    "OPENBLAS_NUM_THREADS",
    "OMP_NUM_THREADS",
    "MKL_NUM_THREADS",
    "NUMEXPR_NUM_THREADS",
)

DESK_WIDTHS = [i / 10 for i in (8, 10, 12, 14, 16, 18, 20, 22, 24, 26, 28, 30)]
DESK_MOLARITIES = [i / 10 for i in (8, 12, 14, 18, 22, 26, 30, 34)]

DEFAULT_MASTER_SEED = 1234


def preset_config(name: str) -> dict:
    """Built-in run configurations."""
    if name == "paper":
        from .sampler import full_grid_axes

        widths, molarities = full_grid_axes()
        return {
            "grid": {
                "ions": ["Na", "Cl", "Mg", "Li", "K"],
                "widths": widths,
                "molarities": molarities,
            },
            "sampling": {"per_config": 2000, "master_seed": DEFAULT_MASTER_SEED},
            "mlp": {
                "hidden_dims": [1024, 512, 256, 128, 32],
                "epochs": 100,
                "learning_rate": 0.005,
                "batch_size": 1024,
            },
            "gbdt": {
                "rounds": 100,
                "max_depth": 15,
                "lambda": 5.0,
                "shrinkage": 0.3,
                "base_score": 0.5,
                "min_samples": 1,
            },
            "evaluation": {"bin_size": 0.05, "bench_runs": 6},
            "paths": {"dataset_dir": "data", "model_dir": "models", "report_dir": "reports"},
            "catalog_file": None,
            "source_cache": None,
        }
    if name == "desk":
        cfg = preset_config("paper")
        cfg["grid"]["widths"] = list(DESK_WIDTHS)
        cfg["grid"]["molarities"] = list(DESK_MOLARITIES)
        cfg["sampling"]["per_config"] = 500
        cfg["mlp"]["hidden_dims"] = [64, 32]
        cfg["mlp"]["epochs"] = 50
        cfg["gbdt"]["rounds"] = 20
        return cfg
    raise ValueError(f"unknown preset {name!r}")


def _deep_update(base: dict, overlay: dict) -> dict:
    for key, val in overlay.items():
        if isinstance(val, dict) and isinstance(base.get(key), dict):
            _deep_update(base[key], val)
        else:
            base[key] = val
    return base


def load_run_config(args) -> dict:
    cfg = preset_config(args.preset)
    if args.config:
        with open(args.config) as fh:
            _deep_update(cfg, json.load(fh))
    if args.seed is not None:
        cfg["sampling"]["master_seed"] = int(args.seed)
    validate_run_config(cfg)
    return cfg


def validate_run_config(cfg: dict) -> None:
    from .domain import ion_by_name, load_catalog

    catalog = load_catalog(cfg["catalog_file"]) if cfg.get("catalog_file") else None
    for name in cfg["grid"]["ions"]:
        ion_by_name(name, catalog)
    if cfg["sampling"]["per_config"] % 2 != 0:
        raise ValueError("per_config must be even")
    if cfg["evaluation"]["bin_size"] <= 0:
        raise ValueError("bin_size must be positive")


def _catalog_and_grid(cfg: dict):
    from .domain import ion_by_name, load_catalog
    from .sampler import make_grid

    catalog = load_catalog(cfg["catalog_file"]) if cfg.get("catalog_file") else None
    ions = [ion_by_name(n, catalog) for n in cfg["grid"]["ions"]]
    return catalog, make_grid(ions, cfg["grid"]["widths"], cfg["grid"]["molarities"])


def _ground_truth_source(cfg: dict):
    from .ground_truth import EmpiricalCdf, SyntheticCdf

    if cfg.get("source_cache"):
        return EmpiricalCdf.load(cfg["source_cache"])
    return SyntheticCdf()


def _subseed(master: int, tag: int) -> int:
    import numpy as np

    return int(np.random.SeedSequence([int(master), int(tag)]).generate_state(1)[0])


def sha256_file(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def _atomic_write_text(path: Path, text: str) -> None:
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_text(text)
    os.replace(tmp, path)


def _write_manifest(path: Path, manifest: dict) -> None:
    _atomic_write_text(path, json.dumps(manifest, indent=2, sort_keys=True) + "\n")


def cmd_generate(args) -> int:
    from .sampler import build_dataset, write_samples_csv

    cfg = load_run_config(args)
    _, grid = _catalog_and_grid(cfg)
    source = _ground_truth_source(cfg)
    dataset = build_dataset(
        grid, source, cfg["sampling"]["per_config"], cfg["sampling"]["master_seed"]
    )

    out = Path(args.out) / cfg["paths"]["dataset_dir"]
    out.mkdir(parents=True, exist_ok=True)
    train_path, test_path = out / "train.csv", out / "test.csv"
    write_samples_csv(dataset.train, train_path)
    write_samples_csv(dataset.test, test_path)

    manifest = {
        "kind": "dataset",
        "provenance": dataset.provenance,
        "rows": {"train": len(dataset.train), "test": len(dataset.test)},
        "outputs": {
            "train.csv": sha256_file(train_path),
            "test.csv": sha256_file(test_path),
        },
    }
    _write_manifest(out / "dataset.manifest.json", manifest)
    print(
        f"generated {len(grid)} configs: {len(dataset.train)} train rows, "
        f"{len(dataset.test)} test rows -> {out}"
    )
    return 0


def cmd_train(args) -> int:
    from .sampler import read_samples_csv

    cfg = load_run_config(args)
    data_dir = Path(args.out) / cfg["paths"]["dataset_dir"]
    train_path = data_dir / "train.csv"
    if not train_path.exists() and train_path.with_suffix(".csv.gz").exists():
        train_path = train_path.with_suffix(".csv.gz")
    if not train_path.exists():
        raise FileNotFoundError(f"dataset not found: {train_path} (run generate first)")
    train = read_samples_csv(train_path)

    model_dir = Path(args.out) / cfg["paths"]["model_dir"]
    model_dir.mkdir(parents=True, exist_ok=True)
    master = cfg["sampling"]["master_seed"]
    dataset_hash = sha256_file(train_path)

    if args.model_kind == "mlp":
        from .domain import N_FEATURES
        from .mlp import init_mlp, save_mlp, train_mlp

        mc = cfg["mlp"]
        dims = [N_FEATURES, *mc["hidden_dims"], 1]
        model = init_mlp(dims, seed=_subseed(master, 101))
        model, history = train_mlp(
            model,
            train.features,
            train.targets,
            epochs=mc["epochs"],
            learning_rate=mc["learning_rate"],
            batch_size=mc["batch_size"],
            seed=_subseed(master, 102),
        )
        model.provenance["master_seed"] = master
        model.provenance["dataset_sha256"] = dataset_hash
        model_path = model_dir / "mlp.json"
        save_mlp(model, model_path)
        history_header = "epoch,mse"
    else:
        from .gbdt import save_gbdt, train_gbdt

        gc = cfg["gbdt"]
        model, history = train_gbdt(
            train.features,
            train.targets,
            rounds=gc["rounds"],
            shrinkage=gc["shrinkage"],
            max_depth=gc["max_depth"],
            lam=gc["lambda"],
            base_score=gc["base_score"],
            min_samples=gc["min_samples"],
        )
        model.provenance["master_seed"] = master
        model.provenance["dataset_sha256"] = dataset_hash
        model_path = model_dir / "gbdt.json"
        save_gbdt(model, model_path)
        history_header = "round,mse"

    history_path = model_dir / f"{args.model_kind}_loss.csv"
    lines = [history_header] + [f"{i},{loss!r}" for i, loss in enumerate(history)]
    _atomic_write_text(history_path, "\n".join(lines) + "\n")
    _write_manifest(
        model_dir / f"{args.model_kind}.manifest.json",
        {
            "kind": f"model-{args.model_kind}",
            "inputs": {"train_dataset": dataset_hash},
            "outputs": {
                model_path.name: sha256_file(model_path),
                history_path.name: sha256_file(history_path),
            },
        },
    )
    final = history[-1] if history else float("nan")
    print(f"trained {args.model_kind}: {len(history)} rounds, final mse {final:.6g} -> {model_path}")
    return 0


def load_any_model(path):
    with open(path) as fh:
        kind = json.load(fh).get("type")
    if kind == "mlp":
        from .mlp import load_mlp

        return load_mlp(path), "mlp"
    if kind == "gbdt":
        from .gbdt import load_gbdt

        return load_gbdt(path), "gbdt"
    raise ValueError(f"{path}: unknown model type {kind!r}")


def cmd_predict(args) -> int:
    from .domain import ChannelConfig, ion_by_name, load_catalog
    from .profiles import predict_profile, write_profile_csv

    catalog = load_catalog(args.catalog) if args.catalog else None
    ion = ion_by_name(args.ion, catalog)
    config = ChannelConfig(ion, args.width, args.molarity)
    model, _ = load_any_model(args.model)
    profile = predict_profile(model, config, args.bin_size)

    out_path = Path(args.out_file)
    out_path.parent.mkdir(parents=True, exist_ok=True)
    write_profile_csv(profile, out_path)
    print(
        f"peak at r = {profile.peak_location()!r} nm; "
        f"channel-average {profile.mean_concentration()!r} M "
        f"(molarity {config.molarity!r} M) -> {out_path}"
    )
    return 0


def cmd_evaluate(args) -> int:
    from .evaluation import build_report, write_heatmap_csv

    cfg = load_run_config(args)
    _, grid = _catalog_and_grid(cfg)
    source = _ground_truth_source(cfg)
    bin_size = cfg["evaluation"]["bin_size"]
    report_dir = Path(args.out) / cfg["paths"]["report_dir"]
    report_dir.mkdir(parents=True, exist_ok=True)

    for model_path in args.models:
        model, kind = load_any_model(model_path)
        report = build_report(
            model,
            source,
            grid,
            bin_size,
            meta={
                "model": kind,
                "model_sha256": sha256_file(model_path),
                "bin_size": bin_size,
                "source": getattr(source, "version", "unknown"),
            },
        )
        report_path = report_dir / f"report_{kind}.json"
        report.save(report_path)
        write_heatmap_csv(report.per_config, report_dir / f"heatmap_{kind}.csv")
        agg = report.aggregates
        test = agg["test"]
        mae = "n/a" if test["mae"] is None else f"{test['mae']:.4f}"
        peak = (
            "n/a" if test["peak_deviation"] is None else f"{test['peak_deviation']:.4f}"
        )
        print(
            f"{kind}: interpolation MAE {mae} M over {test['n_configs']} test configs, "
            f"peak deviation {peak} nm -> {report_path}"
        )
    return 0


def cmd_bench(args) -> int:
    from .evaluation import bench_inference

    cfg = load_run_config(args)
    _, grid = _catalog_and_grid(cfg)
    bin_size = cfg["evaluation"]["bin_size"]
    runs = args.runs if args.runs is not None else cfg["evaluation"]["bench_runs"]
    report_dir = Path(args.out) / cfg["paths"]["report_dir"]
    report_dir.mkdir(parents=True, exist_ok=True)

    for model_path in args.models:
        model, kind = load_any_model(model_path)
        result = bench_inference(model, grid, bin_size, runs=runs)
        out_path = report_dir / f"bench_{kind}.json"
        _atomic_write_text(out_path, json.dumps(result.to_dict(), indent=2) + "\n")
        print(
            f"{kind}: {result.format()} s for {result.profiles_per_run} profiles "
            f"at {bin_size} nm bins over {len(result.runs)} runs"
        )
    return 0


def cmd_ingest(args) -> int:
    from .domain import load_catalog
    from .ground_truth import EmpiricalCdf, read_trajectory_csv

    catalog = load_catalog(args.catalog) if args.catalog else None
    source = EmpiricalCdf()
    for csv_path in args.trajectories:
        sidecar = Path(csv_path).with_suffix(".json")
        if not sidecar.exists():
            raise FileNotFoundError(f"missing sidecar config {sidecar}")
        slab = read_trajectory_csv(csv_path, sidecar, catalog)
        source.add_slab(slab)

    cache_path = Path(args.cache)
    cache_path.parent.mkdir(parents=True, exist_ok=True)
    source.save(cache_path)
    print(f"ingested {len(args.trajectories)} trajectories -> {cache_path}")
    return 0


def cmd_catalog(args) -> int:
    from .domain import ion_catalog, load_catalog

    catalog = load_catalog(args.catalog) if args.catalog else ion_catalog()
    print(f"{'name':<6}{'sigma_A':>10}{'epsilon_kcal_mol':>18}{'charge_e':>10}")
    for ion in catalog:
        print(f"{ion.name:<6}{ion.sigma:>10.4f}{ion.epsilon:>18.4f}{ion.charge:>+10d}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ionprof",
        description="Surrogate models for ion concentration profiles in slit nanochannels.",
    )
    parser.add_argument("--config", help="run-config JSON file (overlays the preset)")
    parser.add_argument("--seed", type=int, help="master seed override")
    parser.add_argument("--out", default=".", help="base output directory")
    parser.add_argument(
        "--preset", choices=["paper", "desk"], default="paper", help="built-in run config"
    )
    parser.add_argument(
        "--threads",
        type=int,
        help="cap numerics-library threads (env IONPROF_THREADS also honored)",
    )

    sub = parser.add_subparsers(dest="command", required=True)

    sub.add_parser("generate", help="sample the CDF dataset and write train/test CSVs")

    p_train = sub.add_parser("train", help="train a model on the generated dataset")
    p_train.add_argument("model_kind", choices=["mlp", "gbdt"])

    p_pred = sub.add_parser("predict", help="predict one concentration profile")
    p_pred.add_argument("model", help="model JSON file")
    p_pred.add_argument("ion")
    p_pred.add_argument("width", type=float, help="channel width, nm")
    p_pred.add_argument("molarity", type=float, help="ion molarity, M")
    p_pred.add_argument("bin_size", type=float, help="bin size, nm")
    p_pred.add_argument("--out-file", default="profile.csv")
    p_pred.add_argument("--catalog", help="catalog override JSON")

    p_eval = sub.add_parser("evaluate", help="error metrics over the configured grid")
    p_eval.add_argument("models", nargs="+", help="model JSON files")

    p_bench = sub.add_parser("bench", help="inference-time benchmark over the grid")
    p_bench.add_argument("models", nargs="+", help="model JSON files")
    p_bench.add_argument("--runs", type=int, help="timed runs (default from config)")

    p_ing = sub.add_parser("ingest", help="cache trajectory CSVs as an empirical CDF source")
    p_ing.add_argument("trajectories", nargs="+", help="trajectory CSV files")
    p_ing.add_argument("--cache", default="empirical_cache.npz")
    p_ing.add_argument("--catalog", help="catalog override JSON")

    p_cat = sub.add_parser("catalog", help="print the ion catalog")
    p_cat.add_argument("--catalog", help="catalog override JSON")

    return parser


_COMMANDS = {
    "generate": cmd_generate,
    "train": cmd_train,
    "predict": cmd_predict,
    "evaluate": cmd_evaluate,
    "bench": cmd_bench,
    "ingest": cmd_ingest,
    "catalog": cmd_catalog,
}


def _apply_thread_limit(args) -> None:
    threads = args.threads
    if threads is None:
        env = os.environ.get("IONPROF_THREADS")
        threads = int(env) if env else None
    if threads is not None:
        if threads < 1:
            raise ValueError("--threads must be >= 1")
        for var in _THREAD_ENV_VARS:
            os.environ[var] = str(threads)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        _apply_thread_limit(args)
        return _COMMANDS[args.command](args)
    except Exception as exc:  # noqa: BLE001 - single reporting point for the CLI
        print(
            json.dumps({"error": type(exc).__name__, "detail": str(exc)}),
            file=sys.stderr,
        )
        return 1


if __name__ == "__main__":
    sys.exit(main())
