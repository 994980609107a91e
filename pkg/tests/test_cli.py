"""End-to-end tests of the command line front end.

Every test drives ``polarlab.cli.main`` in process with an explicit argv
and a tmp_path output directory, then inspects exit codes and the files
the run leaves behind. Runs use deliberately tiny problem sizes so the
whole module stays fast.
"""

import json
import os

import numpy as np
import pytest

from polarlab import io as pio
from polarlab.cli import EXIT_BUDGET, EXIT_ERROR, EXIT_OK, _THREAD_ENV_VARS, main

# small, quickly converging factorization run (converges around iteration 200)
FAST_FACTORIZE = [
    "--m", "12", "--n", "12", "--r", "5", "--r-a", "2", "--kappa", "2.0",
    "--eta", "0.05", "--seed", "1", "--max-iters", "20000",
    "--loss-threshold", "1e-8", "--record-every", "100",
]

FAST_FINETUNE = [
    "--m", "24", "--n", "16", "--n-cols", "48", "--r-a", "2", "--kappa", "4.0",
    "--r", "4", "--eta", "0.05", "--lam", "1e-3", "--max-iters", "400",
    "--loss-threshold", "1e-4", "--record-every", "50", "--seed", "0",
]


def _read_config_echo(out_dir):
    with open(os.path.join(out_dir, "config_resolved.txt")) as fh:
        pairs = [line.strip().partition("=") for line in fh if line.strip()]
    return {key: val for key, _, val in pairs}


# ---------------------------------------------------------------------------
# exit codes


def test_factorize_converges_exit_zero(tmp_path):
    out = str(tmp_path / "run")
    assert main(["factorize", "--out", out, *FAST_FACTORIZE]) == EXIT_OK
    names = sorted(os.listdir(out))
    assert "config_resolved.txt" in names
    assert "checkpoint" in names
    assert any(name.endswith(".csv") for name in names)


def test_factorize_budget_exhausted_exit_two(tmp_path):
    out = str(tmp_path / "run")
    argv = ["factorize", "--out", out, *FAST_FACTORIZE]
    argv[argv.index("--max-iters") + 1] = "50"
    assert main(argv) == EXIT_BUDGET
    # the run still leaves a complete, analyzable output directory behind
    assert os.path.isfile(os.path.join(out, "config_resolved.txt"))
    assert os.path.isfile(os.path.join(out, "checkpoint", "meta.json"))


def test_finetune_toy_converges_exit_zero(tmp_path):
    out = str(tmp_path / "run")
    assert main(["finetune-toy", "--out", out, *FAST_FINETUNE]) == EXIT_OK
    _, meta = pio.load_checkpoint(os.path.join(out, "checkpoint"))
    assert meta["kind"] == "polar-adapter"
    assert meta["method"] == "landing-polar"


def test_finetune_toy_lora_baseline(tmp_path):
    out = str(tmp_path / "run")
    rc = main(["finetune-toy", "--out", out, "--method", "lora", *FAST_FINETUNE])
    assert rc in (EXIT_OK, EXIT_BUDGET)
    _, meta = pio.load_checkpoint(os.path.join(out, "checkpoint"))
    assert meta["kind"] == "lora"


def test_unknown_algorithm_exits_one(tmp_path, capsys):
    rc = main(["factorize", "--out", str(tmp_path / "r"), "--algo", "newton"])
    assert rc == EXIT_ERROR
    assert "newton" in capsys.readouterr().err


def test_unknown_schedule_exits_one(tmp_path, capsys):
    rc = main(["finetune-toy", "--out", str(tmp_path / "r"), "--schedule", "cosine", *FAST_FINETUNE])
    assert rc == EXIT_ERROR
    assert "cosine" in capsys.readouterr().err


def test_unknown_grad_mode_exits_one(tmp_path, capsys):
    rc = main(["finetune-toy", "--out", str(tmp_path / "r"), "--grad-mode", "nope", *FAST_FINETUNE])
    assert rc == EXIT_ERROR
    assert "nope" in capsys.readouterr().err


def test_usage_errors_raise_system_exit_one():
    # argparse normally exits 2 on usage errors; 2 means budget exhausted here
    with pytest.raises(SystemExit) as exc:
        main([])
    assert exc.value.code == EXIT_ERROR
    with pytest.raises(SystemExit) as exc:
        main(["factorize", "--bogus-flag", "1"])
    assert exc.value.code == EXIT_ERROR
    with pytest.raises(SystemExit) as exc:
        main(["factorize", "--m", "not-an-int"])
    assert exc.value.code == EXIT_ERROR


def test_threads_must_be_positive(tmp_path, capsys):
    rc = main(["factorize", "--out", str(tmp_path / "r"), "--threads", "0"])
    assert rc == EXIT_ERROR
    assert "--threads" in capsys.readouterr().err


def test_threads_sets_blas_env_vars(monkeypatch, capsys):
    for var in _THREAD_ENV_VARS:
        monkeypatch.delenv(var, raising=False)
    # analyze without a path errors out after the env vars are pinned
    assert main(["analyze", "--threads", "3"]) == EXIT_ERROR
    capsys.readouterr()
    for var in _THREAD_ENV_VARS:
        assert os.environ[var] == "3"


# ---------------------------------------------------------------------------
# configuration layering


def test_config_file_then_flag_precedence(tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("# comment line\n\nkappa=4.0\neta=0.007\n")
    out = str(tmp_path / "run")
    rc = main([
        "factorize", "--config", str(cfg), "--out", out,
        "--kappa", "2.0", "--m", "8", "--n", "8", "--r", "3", "--r-a", "2",
        "--max-iters", "5", "--record-every", "5",
    ])
    assert rc == EXIT_BUDGET
    echoed = _read_config_echo(out)
    assert echoed["kappa"] == "2.0"  # flag beats config file
    assert echoed["eta"] == "0.007"  # config file beats default
    assert echoed["m"] == "8"
    assert echoed["loss_threshold"] == "1e-08"  # untouched default


def test_config_resolved_is_self_describing(tmp_path):
    from polarlab import __version__
    from polarlab.cli import FACTORIZE_SCHEMA

    out = str(tmp_path / "run")
    argv = ["factorize", "--out", out, *FAST_FACTORIZE]
    argv[argv.index("--max-iters") + 1] = "5"
    assert main(argv) == EXIT_BUDGET
    echoed = _read_config_echo(out)
    assert set(echoed) == set(FACTORIZE_SCHEMA) | {"out", "polarlab_version"}
    assert echoed["out"] == out
    assert echoed["polarlab_version"] == __version__
    with open(os.path.join(out, "config_resolved.txt")) as fh:
        keys = [line.partition("=")[0] for line in fh if line.strip()]
    assert keys[:-2] == sorted(keys[:-2])


def test_unknown_config_key_exits_one(tmp_path, capsys):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("bogus=1\n")
    rc = main(["factorize", "--config", str(cfg), "--out", str(tmp_path / "r")])
    assert rc == EXIT_ERROR
    assert "bogus" in capsys.readouterr().err


def test_bad_config_value_exits_one(tmp_path, capsys):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("m=twelve\n")
    rc = main(["factorize", "--config", str(cfg), "--out", str(tmp_path / "r")])
    assert rc == EXIT_ERROR
    assert "m" in capsys.readouterr().err


def test_malformed_config_line_exits_one(tmp_path, capsys):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("kappa 4.0\n")
    rc = main(["factorize", "--config", str(cfg), "--out", str(tmp_path / "r")])
    assert rc == EXIT_ERROR
    assert "key=value" in capsys.readouterr().err


def test_missing_config_file_exits_one(tmp_path, capsys):
    rc = main(["factorize", "--config", str(tmp_path / "absent.cfg"), "--out", str(tmp_path / "r")])
    assert rc == EXIT_ERROR
    assert "absent.cfg" in capsys.readouterr().err


def test_analyze_requires_path(tmp_path, capsys):
    rc = main(["analyze", "--out", str(tmp_path / "r")])
    assert rc == EXIT_ERROR
    assert "path" in capsys.readouterr().err


# ---------------------------------------------------------------------------
# determinism


def test_repeated_runs_are_byte_identical(tmp_path):
    out_a, out_b = str(tmp_path / "a"), str(tmp_path / "b")
    argv = [*FAST_FACTORIZE]
    argv[argv.index("--max-iters") + 1] = "300"
    assert main(["factorize", "--out", out_a, *argv]) == EXIT_OK
    assert main(["factorize", "--out", out_b, *argv]) == EXIT_OK
    csvs = sorted(name for name in os.listdir(out_a) if name.endswith(".csv"))
    assert csvs
    for name in csvs:
        with open(os.path.join(out_a, name), "rb") as fa, open(os.path.join(out_b, name), "rb") as fb:
            assert fa.read() == fb.read(), name
    for name in sorted(os.listdir(os.path.join(out_a, "checkpoint"))):
        with open(os.path.join(out_a, "checkpoint", name), "rb") as fa:
            with open(os.path.join(out_b, "checkpoint", name), "rb") as fb:
                assert fa.read() == fb.read(), name


# ---------------------------------------------------------------------------
# analyze


def test_analyze_rank_one_checkpoint(tmp_path):
    from polarlab.stiefel import sample_stiefel_uniform

    rng = np.random.default_rng(3)
    ckpt = str(tmp_path / "ckpt")
    pio.save_checkpoint(
        ckpt,
        {
            "X": sample_stiefel_uniform(6, 1, rng),
            "Theta": np.array([[2.0]]),
            "Y": sample_stiefel_uniform(5, 1, rng),
        },
        {"kind": "polar-factors"},
    )
    out = str(tmp_path / "analysis")
    assert main(["analyze", "--path", ckpt, "--out", out]) == EXIT_OK
    with open(os.path.join(out, "report.json")) as fh:
        report = json.load(fh)
    assert report["kind"] == "polar-factors"
    assert report["stable_rank"] == pytest.approx(1.0, abs=1e-9)
    assert report["spectral_norm"] == pytest.approx(2.0, abs=1e-9)
    assert report["top_singular_values"][0] == pytest.approx(2.0, abs=1e-9)
    assert report["n_left"] <= 1e-20 and report["n_right"] <= 1e-20
    assert os.path.isfile(os.path.join(out, "pairwise_distances_ckpt.csv"))


def test_analyze_run_directory_with_trace(tmp_path):
    run = str(tmp_path / "toy")
    assert main(["finetune-toy", "--out", run, *FAST_FINETUNE]) == EXIT_OK
    out = str(tmp_path / "analysis")
    assert main(["analyze", "--path", run, "--out", out]) == EXIT_OK
    with open(os.path.join(out, "report.json")) as fh:
        report = json.load(fh)
    assert report["kind"] == "polar-adapter"
    assert report["final_loss"] <= 1e-4
    assert "stable_rank" in report
    # the landing trace logs feasibility, so the curve is exported
    feas = os.path.join(out, "feasibility_toy.csv")
    assert report["feasibility_csv"] == feas
    with open(feas) as fh:
        header = fh.readline().strip()
        rows = fh.read().strip().splitlines()
    assert header == "iter,n_x,n_y"
    assert len(rows) == 400 // 50 + 1  # iterations 0,50,...,400 inclusive


def test_analyze_grid_of_runs(tmp_path):
    root = tmp_path / "grid"
    for seed in (0, 1):
        argv = [*FAST_FINETUNE]
        argv[argv.index("--seed") + 1] = str(seed)
        assert main(["finetune-toy", "--out", str(root / f"seed{seed}"), *argv]) == EXIT_OK
    out = str(tmp_path / "analysis")
    assert main(["analyze", "--path", str(root), "--out", out]) == EXIT_OK
    with open(os.path.join(out, "report.json")) as fh:
        reports = json.load(fh)
    assert [rep["label"] for rep in reports] == ["seed0", "seed1"]
    with open(os.path.join(out, "stable_rank.csv")) as fh:
        lines = fh.read().strip().splitlines()
    assert lines[0] == "label,stable_rank"
    assert len(lines) == 3


def test_analyze_empty_directory_exits_one(tmp_path, capsys):
    empty = tmp_path / "empty"
    empty.mkdir()
    rc = main(["analyze", "--path", str(empty), "--out", str(tmp_path / "r")])
    assert rc == EXIT_ERROR
    assert "no checkpoint or trace" in capsys.readouterr().err


def test_analyze_missing_path_exits_one(tmp_path, capsys):
    rc = main(["analyze", "--path", str(tmp_path / "nothing-here"), "--out", str(tmp_path / "r")])
    assert rc == EXIT_ERROR
    capsys.readouterr()


# ---------------------------------------------------------------------------
# bench


def test_bench_smoke(tmp_path):
    out = str(tmp_path / "bench")
    rc = main([
        "bench", "--out", out, "--m", "32", "--ranks", "2,4",
        "--warmup-iters", "2", "--max-samples", "5",
    ])
    assert rc == EXIT_OK
    for name in ("results_m32.csv", "table_m32.txt", "results_full.csv", "config_resolved.txt"):
        assert os.path.isfile(os.path.join(out, name)), name
    with open(os.path.join(out, "results_m32.csv")) as fh:
        header = fh.readline().strip()
        rows = fh.read().strip().splitlines()
    assert header == "op,m,r,median_micros,iqr_over_median,n_samples,stable,threads"
    assert len(rows) == 4  # two ops x two ranks
    with open(os.path.join(out, "table_m32.txt")) as fh:
        table = fh.read()
    assert "m=32" in table and "retraction" in table and "landing" in table
