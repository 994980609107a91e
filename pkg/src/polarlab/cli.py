"""Command line front end.

Subcommands
-----------
factorize     run one matrix-factorization experiment and write its trace
finetune-toy  train the polar adapter (or the LoRA baseline) on the whitened toy task
analyze       report spectrum / feasibility / diversity diagnostics of a checkpoint
bench         time the retraction and landing kernels over a rank sweep

Configuration is resolved in three layers: built-in defaults, then a flat
``key=value`` config file (``--config``), then explicit flags. Unknown
config keys are an error. The resolved configuration is echoed to
``<out>/config_resolved.txt`` so a run can be reproduced from its output
directory alone.

Exit codes: 0 the run converged (or the command has no convergence
notion), 2 the iteration budget ran out first, 1 any error.

Only the standard library is imported at module load; ``--threads`` must
take effect through the BLAS environment variables before numpy first
loads, so all numerical imports happen inside the subcommand handlers.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_BUDGET = 2

_THREAD_ENV_VARS = (
    "OMP_NUM_THREADS",
    "OPENBLAS_NUM_THREADS",
    "MKL_NUM_THREADS",
    "NUMEXPR_NUM_THREADS",
    "VECLIB_MAXIMUM_THREADS",
)

# schema: config key -> (caster, default); None default means required
FACTORIZE_SCHEMA = {
    "algo": (str, "polar-rgd"),
    "m": (int, 50),
    "n": (int, 50),
    "r": (int, 9),
    "r_a": (int, 4),
    "kappa": (float, 10.0),
    "eta": (float, 1e-3),
    "gamma": (float, 1.0),
    "seed": (int, 0),
    "target_seed": (int, 1234),
    "max_iters": (int, 100_000),
    "loss_threshold": (float, 1e-8),
    "record_every": (int, 100),
}

FINETUNE_SCHEMA = {
    "method": (str, "landing-polar"),
    "m": (int, 64),
    "n": (int, 32),
    "n_cols": (int, 256),
    "r_a": (int, 4),
    "kappa": (float, 10.0),
    "r": (int, 8),
    "alpha": (float, 32.0),
    "eta": (float, 1e-2),
    "lam": (float, 1e-3),
    "schedule": (str, "constant"),
    "theta_mode": (str, "full"),
    "grad_mode": (str, "landing"),
    "seed": (int, 0),
    "target_seed": (int, 1234),
    "max_iters": (int, 2000),
    "loss_threshold": (float, 1e-4),
    "record_every": (int, 10),
}

ANALYZE_SCHEMA = {
    "path": (str, None),
    "top_k": (int, 10),
}

BENCH_SCHEMA = {
    "m": (str, "256"),
    "ranks": (str, "4,32,64,256"),
    "ops": (str, "retraction,landing"),
    "warmup_iters": (int, 10),
    "max_samples": (int, 50),
    "seed": (int, 0),
}

SCHEMAS = {
    "factorize": FACTORIZE_SCHEMA,
    "finetune-toy": FINETUNE_SCHEMA,
    "analyze": ANALYZE_SCHEMA,
    "bench": BENCH_SCHEMA,
}


class CliError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    # argparse exits with 2 on usage errors; 2 is reserved for exhausted budgets here
    def error(self, message):
        self.print_usage(sys.stderr)
        raise SystemExit(EXIT_ERROR)


def _build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="polarlab", description=__doc__.split("\n\n")[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    defaults_out = {
        "factorize": "runs/factorize",
        "finetune-toy": "runs/finetune-toy",
        "analyze": "runs/analyze",
        "bench": "runs/bench",
    }
    for name, schema in SCHEMAS.items():
        p = sub.add_parser(name)
        p.add_argument("--config", help="flat key=value config file")
        p.add_argument("--out", default=defaults_out[name], help="output directory")
        p.add_argument("--threads", type=int, help="pin BLAS to this many threads")
        for key, (caster, _default) in schema.items():
            p.add_argument(f"--{key.replace('_', '-')}", dest=key, type=caster, default=None)
    return parser


def _parse_config_file(path: str) -> dict:
    values = {}
    with open(path) as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise CliError(f"{path}:{lineno}: expected key=value, got {line!r}")
            key, _, val = line.partition("=")
            values[key.strip()] = val.strip()
    return values


def _resolve_config(command: str, args) -> dict:
    schema = SCHEMAS[command]
    cfg = {key: default for key, (_caster, default) in schema.items()}
    if args.config:
        for key, val in _parse_config_file(args.config).items():
            if key not in schema:
                raise CliError(f"unknown config key {key!r} for {command}")
            caster = schema[key][0]
            try:
                cfg[key] = caster(val)
            except ValueError as exc:
                raise CliError(f"config key {key!r}: {exc}") from exc
    for key in schema:
        flag_value = getattr(args, key, None)
        if flag_value is not None:
            cfg[key] = flag_value
    missing = [key for key, val in cfg.items() if val is None]
    if missing:
        raise CliError(f"{command} requires {', '.join(sorted(missing))} (flag or config)")
    return cfg


def _echo_config(out_dir: str, cfg: dict) -> None:
    from . import __version__

    os.makedirs(out_dir, exist_ok=True)
    lines = [f"{key}={cfg[key]}" for key in sorted(cfg)]
    lines.append(f"out={out_dir}")
    lines.append(f"polarlab_version={__version__}")
    with open(os.path.join(out_dir, "config_resolved.txt"), "w") as fh:
        fh.write("\n".join(lines) + "\n")


# ---------------------------------------------------------------------------
# subcommands


def _cmd_factorize(cfg: dict, out_dir: str) -> int:
    import numpy as np

    from . import factorization as fx
    from . import io as pio
    from .trace import write_trace

    target_rng = np.random.default_rng(cfg["target_seed"])
    common = dict(
        eta=cfg["eta"],
        seed=cfg["seed"],
        max_iters=cfg["max_iters"],
        loss_threshold=cfg["loss_threshold"],
        record_every=cfg["record_every"],
    )
    algorithm = cfg["algo"]
    if algorithm == "polar-rgd":
        target = fx.make_target(cfg["m"], cfg["n"], cfg["r_a"], cfg["kappa"], target_rng)
        trace, factors = fx.run_polar_rgd(target, cfg["r"], gamma=cfg["gamma"], **common)
        matrices = {"X": factors.X, "Theta": factors.Theta, "Y": factors.Y}
        kind = "polar-factors"
    elif algorithm == "bm-gd":
        target = fx.make_target(cfg["m"], cfg["n"], cfg["r_a"], cfg["kappa"], target_rng)
        trace, factors = fx.run_bm_gd(target, cfg["r"], **common)
        matrices = {"Z1": factors.Z1, "Z2": factors.Z2}
        kind = "bm-factors"
    elif algorithm == "polar-rgd-sym":
        target = fx.make_sym_target(cfg["m"], cfg["r_a"], cfg["kappa"], target_rng)
        trace, factors = fx.run_sym_rgd(target, cfg["r"], gamma=cfg["gamma"], **common)
        matrices = {"X": factors.X, "Theta": factors.Theta}
        kind = "sym-factors"
    else:
        raise CliError(f"unknown algorithm {algorithm!r}")
    csv_path = write_trace(trace, out_dir)
    meta = {"kind": kind}
    meta.update(trace.metadata)
    pio.save_checkpoint(os.path.join(out_dir, "checkpoint"), matrices, meta)
    converged = bool(trace.metadata.get("converged", False))
    print(
        f"{algorithm}: {'converged' if converged else 'budget exhausted'} "
        f"at iteration {trace.metadata['iterations']}, final loss {trace.final_loss:.6e}"
    )
    print(f"trace: {csv_path}")
    return EXIT_OK if converged else EXIT_BUDGET


def _cmd_finetune_toy(cfg: dict, out_dir: str) -> int:
    import numpy as np

    from . import landing as ld
    from .trace import write_trace

    task_rng = np.random.default_rng(cfg["target_seed"])
    task = ld.make_whitened_task(cfg["m"], cfg["n"], cfg["n_cols"], cfg["r_a"], task_rng, kappa=cfg["kappa"])
    if cfg["schedule"] == "constant":
        schedule = None
    elif cfg["schedule"] == "linear":
        schedule = ld.linear_decay_schedule(cfg["eta"], cfg["max_iters"])
    else:
        raise CliError(f"unknown schedule {cfg['schedule']!r} (expected constant or linear)")
    config = ld.LandingConfig(
        lam=cfg["lam"],
        eta=cfg["eta"],
        eta_schedule=schedule,
        max_iters=cfg["max_iters"],
        seed=cfg["seed"],
    )
    method = cfg["method"]
    if method == "landing-polar":
        state, trace = ld.train_polar_landing(
            task,
            cfg["r"],
            config,
            scale_alpha=cfg["alpha"],
            record_every=cfg["record_every"],
            theta_mode=cfg["theta_mode"],
            grad_mode=cfg["grad_mode"],
        )
    elif method == "lora":
        state, trace = ld.train_lora(task, cfg["r"], config, scale_alpha=cfg["alpha"], record_every=cfg["record_every"])
    else:
        raise CliError(f"unknown method {method!r} (expected landing-polar or lora)")
    csv_path = write_trace(trace, out_dir)
    ld.save_adapter_checkpoint(os.path.join(out_dir, "checkpoint"), state, {"method": method})
    converged = trace.final_loss <= cfg["loss_threshold"]
    print(
        f"{method}: final loss {trace.final_loss:.6e} after {cfg['max_iters']} iterations "
        f"({'below' if converged else 'above'} threshold {cfg['loss_threshold']:.1e})"
    )
    print(f"trace: {csv_path}")
    return EXIT_OK if converged else EXIT_BUDGET


def _analyze_product(matrices: dict, meta: dict):
    kind = meta.get("kind")
    if kind == "polar-adapter":
        scale = float(meta["scale_alpha"]) / matrices["X"].shape[1]
        return scale * (matrices["X"] @ matrices["Theta"] @ matrices["Y"].T), ("X", "Y")
    if kind == "lora":
        scale = float(meta["scale_alpha"]) / matrices["Z1"].shape[1]
        return scale * (matrices["Z1"] @ matrices["Z2"].T), ("Z1", "Z2")
    if kind == "polar-factors":
        return matrices["X"] @ matrices["Theta"] @ matrices["Y"].T, ("X", "Y")
    if kind == "bm-factors":
        return matrices["Z1"] @ matrices["Z2"].T, ("Z1", "Z2")
    if kind == "sym-factors":
        return matrices["X"] @ matrices["Theta"] @ matrices["X"].T, ("X", "X")
    raise CliError(f"checkpoint has unknown kind {kind!r}")


def _is_checkpoint_dir(path: str) -> bool:
    return os.path.isfile(os.path.join(path, "meta.json"))


def _trace_csvs(path: str) -> list:
    out = []
    for name in sorted(os.listdir(path)):
        full = os.path.join(path, name)
        if not (name.endswith(".csv") and os.path.isfile(full)):
            continue
        with open(full) as fh:
            header = fh.readline().strip().split(",")
        if header[:2] == ["iter", "loss"]:
            out.append(full)
    return out


def _analyze_targets(root: str) -> list:
    """(label, checkpoint dir or None, trace csv or None) per run found under root."""
    root = root.rstrip("/")
    if _is_checkpoint_dir(root):
        return [(os.path.basename(root) or "checkpoint", root, None)]
    targets = []
    ckpt = os.path.join(root, "checkpoint")
    traces = _trace_csvs(root)
    if _is_checkpoint_dir(ckpt) or traces:
        label = os.path.basename(root) or "run"
        targets.append((label, ckpt if _is_checkpoint_dir(ckpt) else None, traces[0] if traces else None))
        return targets
    # one level of run directories, e.g. the output of a seed grid
    for name in sorted(os.listdir(root)):
        sub = os.path.join(root, name)
        if not os.path.isdir(sub):
            continue
        if _is_checkpoint_dir(sub):
            targets.append((name, sub, None))
            continue
        sub_ckpt = os.path.join(sub, "checkpoint")
        sub_traces = _trace_csvs(sub)
        if _is_checkpoint_dir(sub_ckpt) or sub_traces:
            targets.append((name, sub_ckpt if _is_checkpoint_dir(sub_ckpt) else None, sub_traces[0] if sub_traces else None))
    if not targets:
        raise CliError(f"{root}: no checkpoint or trace directory found")
    return targets


def _analyze_one(label: str, ckpt: str | None, trace_csv: str | None, cfg: dict, out_dir: str) -> dict:
    import numpy as np

    from . import io as pio
    from .stiefel import distance_to_stiefel, pairwise_direction_distances, stable_rank
    from .trace import read_trace_csv

    report: dict = {"label": label}
    if ckpt is not None:
        matrices, meta = pio.load_checkpoint(ckpt)
        W, factor_names = _analyze_product(matrices, meta)
        report.update(
            {
                "checkpoint": ckpt,
                "kind": meta.get("kind"),
                "shape": list(W.shape),
                "fro_norm": float(np.linalg.norm(W)),
            }
        )
        if np.any(W != 0):
            summary = stable_rank(W)
            spread = pairwise_direction_distances(W)
            report.update(
                {
                    "stable_rank": summary.stable_rank,
                    "spectral_norm": summary.spectral,
                    "top_singular_values": [float(s) for s in summary.singular_values[: cfg["top_k"]]],
                    "mean_pairwise_distance": spread.mean_distance,
                    "n_excluded_rows": len(spread.excluded_rows),
                }
            )
            pio.save_matrix_csv(os.path.join(out_dir, f"pairwise_distances_{label}.csv"), spread.distances)
        else:
            report["zero_update"] = True
        for key, name in zip(("n_left", "n_right"), factor_names):
            report[key] = distance_to_stiefel(matrices[name])
    if trace_csv is not None:
        columns = read_trace_csv(trace_csv)
        report["trace"] = trace_csv
        report["final_loss"] = columns["loss"][-1] if columns["loss"] else float("nan")
        if "n_x" in columns and "n_y" in columns:
            # feasibility curve: squared distance to the Stiefel manifold per iterate
            lines = ["iter,n_x,n_y"]
            for it, nx, ny in zip(columns["iter"], columns["n_x"], columns["n_y"]):
                lines.append(f"{it},{nx!r},{ny!r}")
            feas_path = os.path.join(out_dir, f"feasibility_{label}.csv")
            with open(feas_path, "w") as fh:
                fh.write("\n".join(lines) + "\n")
            report["feasibility_csv"] = feas_path
    return report


def _cmd_analyze(cfg: dict, out_dir: str) -> int:
    targets = _analyze_targets(cfg["path"])
    reports = [_analyze_one(label, ckpt, trace, cfg, out_dir) for label, ckpt, trace in targets]

    sr_lines = ["label,stable_rank"]
    for rep in reports:
        if "stable_rank" in rep:
            sr_lines.append(f"{rep['label']},{rep['stable_rank']!r}")
    if len(sr_lines) > 1:
        with open(os.path.join(out_dir, "stable_rank.csv"), "w") as fh:
            fh.write("\n".join(sr_lines) + "\n")

    path = os.path.join(out_dir, "report.json")
    with open(path, "w") as fh:
        json.dump(reports if len(reports) > 1 else reports[0], fh, indent=2, sort_keys=True)
        fh.write("\n")
    for rep in reports:
        for key in sorted(rep):
            print(f"{key}: {rep[key]}")
    print(f"report: {path}")
    return EXIT_OK


def _cmd_bench(cfg: dict, out_dir: str) -> int:
    from .bench import format_bench_table, run_rank_sweep, write_bench_csv

    sizes = [int(tok) for tok in str(cfg["m"]).split(",") if tok]
    ranks = [int(tok) for tok in cfg["ranks"].split(",") if tok]
    ops = [tok.strip() for tok in cfg["ops"].split(",") if tok.strip()]
    all_results = []
    for m in sizes:
        results = run_rank_sweep(
            m,
            ranks=ranks,
            ops=ops,
            warmup_iters=cfg["warmup_iters"],
            max_samples=cfg["max_samples"],
            seed=cfg["seed"],
        )
        all_results.extend(results)
        write_bench_csv(results, os.path.join(out_dir, f"results_m{m}.csv"))
        table = format_bench_table(results, m)
        with open(os.path.join(out_dir, f"table_m{m}.txt"), "w") as fh:
            fh.write(table + "\n")
        print(table)
        print()
    write_bench_csv(all_results, os.path.join(out_dir, "results_full.csv"))
    print(f"full results: {os.path.join(out_dir, 'results_full.csv')}")
    return EXIT_OK


# ---------------------------------------------------------------------------


_HANDLERS = {
    "factorize": _cmd_factorize,
    "finetune-toy": _cmd_finetune_toy,
    "analyze": _cmd_analyze,
    "bench": _cmd_bench,
}


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    if args.threads is not None:
        if args.threads < 1:
            print("error: --threads must be >= 1", file=sys.stderr)
            return EXIT_ERROR
        if "numpy" in sys.modules:
            print(
                "warning: numpy already imported, --threads may not take effect",
                file=sys.stderr,
            )
        for var in _THREAD_ENV_VARS:
            os.environ[var] = str(args.threads)
    try:
        cfg = _resolve_config(args.command, args)
        _echo_config(args.out, cfg)
        return _HANDLERS[args.command](cfg, args.out)
    except (CliError, ValueError, RuntimeError, OSError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    raise SystemExit(main())
