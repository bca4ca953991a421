import pytest

from ionprof.cli import preset_config
from ionprof.domain import ion_by_name
from ionprof.ground_truth import SyntheticCdf
from ionprof.gbdt import train_gbdt
from ionprof.mlp import init_mlp, train_mlp
from ionprof.sampler import build_dataset, make_grid

# pass/fail lines registered by the acceptance tests, echoed at session end
ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def oracle():
    return SyntheticCdf()


@pytest.fixture(scope="session")
def desk_run(oracle):
    """The full desk-preset pipeline, shared by the acceptance criteria:
    dataset, trained MLP and GBDT with their loss histories."""
    cfg = preset_config("desk")
    ions = [ion_by_name(n) for n in cfg["grid"]["ions"]]
    grid = make_grid(ions, cfg["grid"]["widths"], cfg["grid"]["molarities"])
    dataset = build_dataset(
        grid, oracle, cfg["sampling"]["per_config"], cfg["sampling"]["master_seed"]
    )

    mc = cfg["mlp"]
    mlp = init_mlp([6, *mc["hidden_dims"], 1], seed=11)
    mlp, mlp_history = train_mlp(
        mlp,
        dataset.train.features,
        dataset.train.targets,
        epochs=mc["epochs"],
        learning_rate=mc["learning_rate"],
        batch_size=mc["batch_size"],
        seed=12,
    )

    gc = cfg["gbdt"]
    gbdt, gbdt_history = train_gbdt(
        dataset.train.features,
        dataset.train.targets,
        rounds=gc["rounds"],
        shrinkage=gc["shrinkage"],
        max_depth=gc["max_depth"],
        lam=gc["lambda"],
        base_score=gc["base_score"],
    )

    return {
        "config": cfg,
        "grid": grid,
        "dataset": dataset,
        "mlp": mlp,
        "mlp_history": mlp_history,
        "gbdt": gbdt,
        "gbdt_history": gbdt_history,
    }


@pytest.fixture()
def mini_models(oracle):
    """Small trained models for unit tests that need realistic regressors."""
    ions = [ion_by_name(n) for n in ("Na", "Cl")]
    grid = make_grid(ions, [1.0, 1.6, 2.0], [1.0, 2.0])
    dataset = build_dataset(grid, oracle, 200, 5)
    mlp = init_mlp((6, 32, 16, 1), seed=1)
    mlp, _ = train_mlp(
        mlp,
        dataset.train.features,
        dataset.train.targets,
        epochs=15,
        learning_rate=0.005,
        batch_size=128,
        seed=2,
    )
    gbdt, _ = train_gbdt(
        dataset.train.features, dataset.train.targets, rounds=8, max_depth=10, lam=5.0
    )
    return {"grid": grid, "dataset": dataset, "mlp": mlp, "gbdt": gbdt}
