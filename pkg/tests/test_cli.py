import json

import pytest

from ionprof.cli import main, preset_config
from ionprof.domain import ChannelConfig, ion_by_name
from ionprof.ground_truth import synthesize_trajectory, write_trajectory_csv


@pytest.fixture()
def tiny_config(tmp_path):
    """A seconds-scale run config exercising every pipeline stage."""
    cfg = {
        "grid": {
            "ions": ["Na", "Cl"],
            "widths": [1.0, 1.6, 2.0],
            "molarities": [1.0, 2.2],
        },
        "sampling": {"per_config": 60, "master_seed": 77},
        "mlp": {
            "hidden_dims": [16, 8],
            "epochs": 4,
            "learning_rate": 0.005,
            "batch_size": 32,
        },
        "gbdt": {
            "rounds": 3,
            "max_depth": 4,
            "lambda": 5.0,
            "shrinkage": 0.3,
            "base_score": 0.5,
            "min_samples": 1,
        },
        "evaluation": {"bin_size": 0.05, "bench_runs": 2},
    }
    path = tmp_path / "run.json"
    path.write_text(json.dumps(cfg))
    return path


def _run(*argv):
    return main([str(a) for a in argv])


class TestPresets:
    def test_paper_preset_full_grid(self):
        cfg = preset_config("paper")
        assert len(cfg["grid"]["ions"]) == 5
        assert len(cfg["grid"]["widths"]) == 23
        assert len(cfg["grid"]["molarities"]) == 15
        assert cfg["sampling"]["per_config"] == 2000
        assert cfg["mlp"]["hidden_dims"] == [1024, 512, 256, 128, 32]
        assert cfg["mlp"]["epochs"] == 100
        assert cfg["mlp"]["learning_rate"] == 0.005
        assert cfg["gbdt"]["max_depth"] == 15
        assert cfg["gbdt"]["lambda"] == 5.0
        assert cfg["evaluation"]["bench_runs"] == 6

    def test_desk_preset_row_arithmetic(self):
        cfg = preset_config("desk")
        rows = (
            len(cfg["grid"]["ions"])
            * len(cfg["grid"]["widths"])
            * len(cfg["grid"]["molarities"])
            * cfg["sampling"]["per_config"]
        )
        assert rows == 240_000
        assert cfg["mlp"]["hidden_dims"] == [64, 32]
        assert cfg["mlp"]["epochs"] == 50
        assert cfg["gbdt"]["rounds"] == 20


class TestCatalog:
    def test_prints_five_ions(self, capsys):
        assert _run("catalog") == 0
        out = capsys.readouterr().out
        for name in ("Na", "Cl", "Mg", "Li", "K"):
            assert name in out


class TestGenerate:
    def test_writes_dataset_and_manifest(self, tmp_path, tiny_config):
        assert _run("--config", tiny_config, "--out", tmp_path, "generate") == 0
        data = tmp_path / "data"
        train = (data / "train.csv").read_text().strip().splitlines()
        test = (data / "test.csv").read_text().strip().splitlines()
        # 2 ions x (1.0, 2.0) x 1.0 M are train; the rest hit 1.6 nm or 2.2 M
        assert len(train) == 1 + 2 * 2 * 1 * 60
        assert len(test) == 1 + 2 * 4 * 60
        manifest = json.loads((data / "dataset.manifest.json").read_text())
        assert manifest["rows"] == {"train": 240, "test": 480}
        assert "train.csv" in manifest["outputs"]

    def test_rerun_byte_identical(self, tmp_path, tiny_config):
        _run("--config", tiny_config, "--out", tmp_path / "a", "generate")
        _run("--config", tiny_config, "--out", tmp_path / "b", "generate")
        for name in ("train.csv", "test.csv", "dataset.manifest.json"):
            a = (tmp_path / "a" / "data" / name).read_bytes()
            b = (tmp_path / "b" / "data" / name).read_bytes()
            assert a == b, name

    def test_odd_per_config_rejected(self, tmp_path):
        bad = tmp_path / "bad.json"
        bad.write_text(json.dumps({"sampling": {"per_config": 3}}))
        assert _run("--config", bad, "--out", tmp_path, "generate") == 1

    def test_unknown_ion_rejected(self, tmp_path, capsys):
        bad = tmp_path / "bad.json"
        bad.write_text(json.dumps({"grid": {"ions": ["Uuu"]}}))
        assert _run("--config", bad, "--out", tmp_path, "generate") == 1
        err = capsys.readouterr().err.strip().splitlines()[-1]
        assert json.loads(err)["error"] == "KeyError"


class TestTrainPredictEvaluateBench:
    @pytest.fixture()
    def pipeline_dir(self, tmp_path, tiny_config):
        _run("--config", tiny_config, "--out", tmp_path, "generate")
        assert _run("--config", tiny_config, "--out", tmp_path, "train", "mlp") == 0
        assert _run("--config", tiny_config, "--out", tmp_path, "train", "gbdt") == 0
        return tmp_path

    def test_model_files_and_loss_histories(self, pipeline_dir, tiny_config):
        models = pipeline_dir / "models"
        mlp_doc = json.loads((models / "mlp.json").read_text())
        assert mlp_doc["type"] == "mlp"
        assert mlp_doc["layer_dims"] == [6, 16, 8, 1]
        assert mlp_doc["training_provenance"]["dataset_sha256"]
        gbdt_doc = json.loads((models / "gbdt.json").read_text())
        assert gbdt_doc["type"] == "gbdt"
        assert len(gbdt_doc["trees"]) == 3
        mlp_loss = (models / "mlp_loss.csv").read_text().strip().splitlines()
        assert mlp_loss[0] == "epoch,mse"
        assert len(mlp_loss) == 1 + 4  # header + epochs
        gbdt_loss = (models / "gbdt_loss.csv").read_text().strip().splitlines()
        assert len(gbdt_loss) == 1 + 3  # header + rounds

    def test_missing_dataset_fails(self, tmp_path, tiny_config):
        assert _run("--config", tiny_config, "--out", tmp_path / "nowhere", "train", "mlp") == 1

    def test_predict_profile_csv(self, pipeline_dir, capsys):
        out_file = pipeline_dir / "profile.csv"
        code = _run(
            "predict", pipeline_dir / "models" / "mlp.json",
            "Na", "2.0", "2.2", "0.05", "--out-file", out_file,
        )
        assert code == 0
        lines = out_file.read_text().strip().splitlines()
        assert lines[0] == "r_lo,r_hi,concentration_M"
        assert len(lines) == 1 + 20  # (2.0/2)/0.05 bins
        printed = capsys.readouterr().out
        assert "peak at r" in printed and "channel-average" in printed

    def test_predict_invalid_bin_size(self, pipeline_dir, capsys):
        code = _run("predict", pipeline_dir / "models" / "mlp.json", "Na", "2.0", "2.2", "0")
        assert code == 1
        err = capsys.readouterr().err.strip().splitlines()[-1]
        assert json.loads(err)["error"] == "ValueError"

    def test_predict_unknown_ion(self, pipeline_dir):
        assert _run("predict", pipeline_dir / "models" / "mlp.json", "Zz", "2.0", "2.2", "0.05") == 1

    def test_evaluate_both_models_one_invocation(self, pipeline_dir, tiny_config):
        models = pipeline_dir / "models"
        code = _run(
            "--config", tiny_config, "--out", pipeline_dir,
            "evaluate", models / "mlp.json", models / "gbdt.json",
        )
        assert code == 0
        reports = pipeline_dir / "reports"
        for kind in ("mlp", "gbdt"):
            doc = json.loads((reports / f"report_{kind}.json").read_text())
            assert len(doc["per_config"]) == 12  # 2 ions x 3 widths x 2 molarities
            assert doc["aggregates"]["test"]["n_configs"] == 8  # 1.6 nm or 2.2 M
            assert doc["timing"] is None
            heat = (reports / f"heatmap_{kind}.csv").read_text().strip().splitlines()
            assert heat[0] == "ion,width,molarity,partition,mae"
            assert len(heat) == 1 + 12

    def test_bench_output_format(self, pipeline_dir, tiny_config, capsys):
        models = pipeline_dir / "models"
        code = _run(
            "--config", tiny_config, "--out", pipeline_dir,
            "bench", models / "mlp.json", "--runs", "2",
        )
        assert code == 0
        out = capsys.readouterr().out
        assert "(" in out and ") s for 12 profiles" in out
        doc = json.loads((pipeline_dir / "reports" / "bench_mlp.json").read_text())
        assert len(doc["runs"]) == 2
        assert doc["profiles_per_run"] == 12

    def test_full_rerun_byte_identical(self, tmp_path, tiny_config):
        # generate + train mlp + evaluate twice: all artifacts byte-equal
        outputs = {}
        for tag in ("x", "y"):
            base = tmp_path / tag
            _run("--config", tiny_config, "--out", base, "generate")
            _run("--config", tiny_config, "--out", base, "train", "mlp")
            _run(
                "--config", tiny_config, "--out", base,
                "evaluate", base / "models" / "mlp.json",
            )
            outputs[tag] = {
                p.relative_to(base): p.read_bytes()
                for p in sorted(base.rglob("*"))
                if p.is_file()
            }
        assert outputs["x"].keys() == outputs["y"].keys()
        for name in outputs["x"]:
            assert outputs["x"][name] == outputs["y"][name], name


class TestIngest:
    def test_ingest_then_generate_then_train(self, tmp_path, capsys):
        # fabricate two trajectory exports
        traj_dir = tmp_path / "traj"
        traj_dir.mkdir()
        configs = [
            ChannelConfig(ion_by_name("Na"), 1.0, 1.0),
            ChannelConfig(ion_by_name("Na"), 2.0, 2.2),
        ]
        for i, cfg in enumerate(configs):
            slab = synthesize_trajectory(cfg, 40, 50, seed=100 + i)
            write_trajectory_csv(
                slab, traj_dir / f"t{i}.csv", traj_dir / f"t{i}.json", n_ions=40
            )
        cache = tmp_path / "cache.npz"
        code = _run("ingest", traj_dir / "t0.csv", traj_dir / "t1.csv", "--cache", cache)
        assert code == 0
        assert cache.exists()

        run_cfg = {
            "grid": {"ions": ["Na"], "widths": [1.0, 2.0], "molarities": [1.0, 2.2]},
            "sampling": {"per_config": 40, "master_seed": 3},
            "mlp": {"hidden_dims": [8], "epochs": 2, "learning_rate": 0.005, "batch_size": 16},
            "source_cache": str(cache),
        }
        cfg_path = tmp_path / "run.json"
        cfg_path.write_text(json.dumps(run_cfg))
        # grid has configs without trajectories -> those queries must fail loudly
        run_cfg["grid"]["widths"] = [1.0]
        run_cfg["grid"]["molarities"] = [1.0, 2.2]
        cfg_path.write_text(json.dumps(run_cfg))
        code = _run("--config", cfg_path, "--out", tmp_path, "generate")
        assert code == 1  # (1.0, 2.2) has no slab

        run_cfg["grid"]["molarities"] = [1.0]
        cfg_path.write_text(json.dumps(run_cfg))
        assert _run("--config", cfg_path, "--out", tmp_path, "generate") == 0
        assert _run("--config", cfg_path, "--out", tmp_path, "train", "mlp") == 0

        # empirical targets replicate direct counting
        train_rows = (tmp_path / "data" / "train.csv").read_text().strip().splitlines()
        assert len(train_rows) == 1 + 40

    def test_missing_sidecar(self, tmp_path):
        csv_path = tmp_path / "t.csv"
        csv_path.write_text("frame,ion_id,z\n0,0,0.0\n")
        assert _run("ingest", csv_path) == 1

    def test_bad_coordinate_reports_row(self, tmp_path, capsys):
        csv_path = tmp_path / "t.csv"
        csv_path.write_text("frame,ion_id,z\n0,0,0.0\n0,1,9.9\n")
        (tmp_path / "t.json").write_text(
            '{"ion_name": "Na", "width_nm": 2.0, "molarity_M": 2.0, "center_nm": 0.0}'
        )
        assert _run("ingest", csv_path) == 1
        err = capsys.readouterr().err
        assert "line 3" in err


class TestThreadsFlag:
    def test_thread_env_applied(self, tmp_path, monkeypatch):
        import os

        monkeypatch.delenv("OPENBLAS_NUM_THREADS", raising=False)
        assert _run("--threads", "2", "catalog") == 0
        assert os.environ["OPENBLAS_NUM_THREADS"] == "2"

    def test_invalid_threads_rejected(self):
        assert _run("--threads", "0", "catalog") == 1
