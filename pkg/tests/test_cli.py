import os

import numpy as np
import pytest

from vdsom import cli
from vdsom.data import StreamSpec, write_idx_images
from vdsom.grid import GridSpec
from vdsom.render import read_csv
from vdsom.runner import RunConfig, TrainingError, initial_weights, run_sweep, run_train

SMALL = ["--rows", "4", "--cols", "4", "--steps", "300", "--switch-step", "150",
         "--log-interval", "50", "--snapshot-steps", "0,150", "--eval-size", "64"]


def small_config(tmp_path=None, **kw):
    base = dict(grid=GridSpec(4, 4), steps=200, log_interval=50, eval_size=64,
                stream=StreamSpec("moons", seed=3), output_dir=None if tmp_path is None else str(tmp_path))
    base.update(kw)
    return RunConfig(**base)


def test_zero_learning_rate_keeps_weights():
    config = small_config(steps=1, lr=0.0)
    log = run_train(config)
    np.testing.assert_array_equal(log.final_state.weights, initial_weights(config, 16, 2))


def test_records_and_snapshots():
    log = run_train(small_config(steps=120, snapshot_steps=(0, 60)))
    assert [r.step for r in log.records] == [0, 50, 60, 100, 120]
    assert set(log.snapshots) == {0, 60, 120}


@pytest.mark.parametrize("kw", [dict(sigma0=0.0), dict(steps=0), dict(log_interval=0),
                                dict(optimizer="rmsprop"), dict(algorithm="ng")])
def test_config_validation(kw):
    with pytest.raises(ValueError):
        small_config(**kw)


def test_dsom_and_sgd_runs():
    log = run_train(small_config(algorithm="dsom"))
    assert np.isnan(log.records[-1].objective) and log.records[-1].sigma > 0
    log = run_train(small_config(optimizer="sgd", lr=0.01))
    assert np.isfinite(log.records[-1].objective)


def test_mutate_dimension_mismatch_rejected(tmp_path, rng):
    path = tmp_path / "img.idx"
    write_idx_images(path, rng.random((3, 4)), 2, 2)
    first = StreamSpec("idx_file", path=str(path), seed=1)
    second = StreamSpec("moons", seed=2)
    bad = StreamSpec("mutate", first=first, second=second, switch_step=5)
    with pytest.raises(ValueError):
        run_train(small_config(stream=bad))


def test_gradient_failure_reports_step(monkeypatch):
    from vdsom import runner

    calls = {"n": 0}
    real = runner.gradient

    def flaky(*args):
        calls["n"] += 1
        if calls["n"] == 7:
            raise FloatingPointError("boom")
        return real(*args)

    monkeypatch.setattr(runner, "gradient", flaky)
    with pytest.raises(TrainingError, match="step 7"):
        run_train(small_config())


def test_image_outputs(tmp_path, rng):
    path = tmp_path / "img.idx"
    write_idx_images(path, rng.random((20, 9)), 3, 3)
    out = tmp_path / "run"
    run_train(small_config(out, grid=GridSpec(2, 3, "toroidal"), steps=40,
                           stream=StreamSpec("idx_file", path=str(path), seed=1)))
    data = (out / "weights_000040.pgm").read_bytes()
    assert data.startswith(b"P5\n9 6\n255\n")
    assert not list(out.glob("*.svg"))


def test_sweep_rows_and_order(tmp_path):
    base = small_config(tmp_path, steps=50)
    rows = run_sweep(base, [2.0, 1.0, 2.0], workers=1)
    assert [(r.algorithm, r.eta) for r in rows] == [
        ("vdsom", 2.0), ("vdsom", 1.0), ("vdsom", 2.0), ("dsom", 2.0), ("dsom", 1.0), ("dsom", 2.0)]
    assert rows[0].distortion == rows[2].distortion
    lines = (tmp_path / "sweep.csv").read_text().splitlines()
    assert lines[0] == "algorithm,eta,distortion" and len(lines) == 7


def test_sweep_single_and_parallel(tmp_path):
    base = small_config(tmp_path, steps=50)
    rows = run_sweep(base, [1.0], algorithms=("dsom",))
    assert len(rows) == 1
    par = run_sweep(small_config(steps=50), [0.5, 1.0], workers=2)
    seq = run_sweep(small_config(steps=50), [0.5, 1.0], workers=1)
    assert [r.distortion for r in par] == [r.distortion for r in seq]


def test_sweep_isolates_failures(monkeypatch):
    from vdsom import runner

    real = runner.run_train

    def sometimes(config, write=True):
        if config.eta == 3.0:
            raise RuntimeError("diverged")
        return real(config, write)

    monkeypatch.setattr(runner, "run_train", sometimes)
    rows = run_sweep(small_config(steps=20), [1.0, 3.0], algorithms=("vdsom",))
    assert rows[0].error is None and "diverged" in rows[1].error
    with pytest.raises(ValueError):
        run_sweep(small_config(), [])


def test_cli_train(tmp_path, capsys):
    out = tmp_path / "run"
    assert cli.main(["train", *SMALL, "--output-dir", str(out)]) == 0
    names = sorted(os.listdir(out))
    assert names == ["config.txt", "log.csv", "map_000000.svg", "map_000150.svg",
                     "map_000300.svg"]
    rows = read_csv(out / "log.csv")
    assert rows[0][0] == 0 and rows[-1][0] == 300
    assert "step 300" in capsys.readouterr().out


def test_cli_config_file_and_precedence(tmp_path, monkeypatch):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("# tiny run\nrows = 3\ncols = 3\nsteps = 40\nstream = circles\n"
                   "log_interval = 20\nsnapshot_steps = \neval_size = 16\noutput_dir = ignored\n")
    env_out = tmp_path / "env"
    monkeypatch.setenv(cli.OUTPUT_ENV, str(env_out))
    assert cli.main(["train", "--config", str(cfg), "--steps", "60"]) == 0
    assert [r[0] for r in read_csv(env_out / "log.csv")] == [0, 20, 40, 60]
    flag_out = tmp_path / "flag"
    assert cli.main(["train", "--config", str(cfg), "--output-dir", str(flag_out)]) == 0
    assert (flag_out / "log.csv").exists()
    # the dumped config reproduces the run
    again = tmp_path / "again"
    assert cli.main(["train", "--config", str(flag_out / "config.txt"), "--output-dir", str(again)]) == 0
    assert (again / "log.csv").read_bytes() == (flag_out / "log.csv").read_bytes()


def test_cli_every_runconfig_field_has_a_key():
    import dataclasses

    fields = {f.name for f in dataclasses.fields(RunConfig)}
    covered = set(cli.KEYS) | {"grid", "stream"}
    assert fields <= covered


@pytest.mark.parametrize("argv", [
    ["train", "--steps", "zero"],
    ["train", "--sigma0", "-1"],
    ["train", "--topology", "hex"],
    ["gradcheck", "--trials", "0"],
])
def test_cli_validation_exit_code(argv, tmp_path, monkeypatch):
    monkeypatch.setenv(cli.OUTPUT_ENV, str(tmp_path))
    assert cli.main(argv) == cli.EXIT_INVALID


@pytest.mark.parametrize("argv", [["train", "--bogus", "1"], ["frobnicate"], []])
def test_cli_usage_exit_code(argv):
    with pytest.raises(SystemExit) as exc:
        cli.main(argv)
    assert exc.value.code == cli.EXIT_INVALID


def test_cli_unknown_config_key(tmp_path):
    cfg = tmp_path / "bad.cfg"
    cfg.write_text("colour = blue\n")
    assert cli.main(["train", "--config", str(cfg)]) == cli.EXIT_INVALID


def test_cli_sweep(tmp_path, capsys):
    out = tmp_path / "sweep"
    code = cli.main(["sweep", *SMALL, "--steps", "40", "--etas", "1,2", "--output-dir", str(out)])
    assert code == 0
    assert len((out / "sweep.csv").read_text().splitlines()) == 5


def test_cli_gradcheck(capsys):
    assert cli.main(["gradcheck", "--trials", "1"]) == 0
    assert "PASS" in capsys.readouterr().out


def test_cli_gradcheck_failure_code(monkeypatch):
    from vdsom.gradcheck import GradcheckReport

    monkeypatch.setattr(cli, "run_gradcheck", lambda trials, seed: GradcheckReport(trials, 1.0, 1))
    assert cli.main(["gradcheck", "--trials", "3"]) == cli.EXIT_GRADCHECK


def test_cli_runtime_error_code(monkeypatch):
    def explode(config):
        raise TrainingError("step 3: boom")

    monkeypatch.setattr(cli, "run_train", explode)
    assert cli.main(["train", *SMALL]) == cli.EXIT_RUNTIME
