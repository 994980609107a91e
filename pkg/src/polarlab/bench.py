"""Microbenchmarks for the per-iteration manifold kernels.

Two operations are timed at matched shapes (m x r):

* ``retraction``: the polar retraction step, dominated by an r x r
  eigendecomposition plus thin products, cost about 2 m r^2 + O(r^3).
* ``landing``: one landing-field update X - eta * Gamma(X), with the
  skew term materialized as the m x m matrix Skew(G X^T), cost about
  2 m^2 r + O(m r^2). The training loop reassociates this product down
  to O(m r^2); the benchmark keeps the materialized form so the two
  kernel structures (matmul pipeline vs eigendecomposition) are compared
  on the terms the cost model states.

Each sample draws fresh inputs outside the clock; sub-millisecond
kernels are batched inside one clock read so that timer resolution does
not dominate. Sampling stops once the interquartile range falls below
15% of the median or the sample budget is exhausted.
"""

from __future__ import annotations

import os
import time
from dataclasses import dataclass, field

import numpy as np

from .landing import grad_distance_to_stiefel
from .stiefel import require_stiefel, sample_stiefel_uniform, skew_part, tangent_project

OPS = ("retraction", "landing")
DEFAULT_RANKS = (4, 32, 64, 256)

MIN_SAMPLES = 5
IQR_TARGET = 0.15
BATCH_TARGET_SECONDS = 1e-3


@dataclass(frozen=True)
class BenchSpec:
    """One benchmark point: operation, shape and sampling budget."""

    m: int
    r: int
    op: str
    warmup_iters: int = 10
    max_samples: int = 50
    eta: float = 1e-3
    lam: float = 1.0
    seed: int = 0

    def __post_init__(self):
        if self.op not in OPS:
            raise ValueError(f"unknown op {self.op!r}, expected one of {OPS}")
        if not (0 < self.r <= self.m):
            raise ValueError(f"need 0 < r <= m, got m={self.m}, r={self.r}")


@dataclass(frozen=True)
class BenchResult:
    """Median timing plus the raw samples and stability of the estimate."""

    spec: BenchSpec
    median_micros: float
    samples: tuple
    iqr_over_median: float
    stable: bool
    metadata: dict = field(default_factory=dict)


def median_micros(samples) -> float:
    """Median of a nonempty sample list, in the samples' own units."""
    samples = list(samples)
    if not samples:
        raise ValueError("no samples")
    return float(np.median(samples))


def _fresh_inputs(spec: BenchSpec, rng: np.random.Generator):
    X = sample_stiefel_uniform(spec.m, spec.r, rng)
    G = rng.standard_normal((spec.m, spec.r))
    if spec.op == "retraction":
        return X, tangent_project(X, G)
    return X, G


def _make_kernel(spec: BenchSpec):
    from .stiefel import polar_retract

    if spec.op == "retraction":
        return lambda X, D: polar_retract(X, D, spec.eta)

    def landing_step(X, G):
        # materialized skew, deliberately not the reassociated O(m r^2) form
        return X - spec.eta * (skew_part(G @ X.T) @ X + spec.lam * grad_distance_to_stiefel(X))

    return landing_step


def _verify_kernel(spec: BenchSpec, kernel, rng) -> None:
    # run once off the clock and sanity-check the output before timing
    X, D = _fresh_inputs(spec, rng)
    out = kernel(X, D)
    if out.shape != (spec.m, spec.r) or not np.all(np.isfinite(out)):
        raise ValueError(f"{spec.op} kernel produced an invalid output at m={spec.m}, r={spec.r}")
    if spec.op == "retraction":
        require_stiefel(out, name="retraction output")


def run_bench(spec: BenchSpec, rng: np.random.Generator | None = None) -> BenchResult:
    """Time one kernel at one shape until the median estimate stabilizes."""
    if rng is None:
        rng = np.random.default_rng(spec.seed)
    kernel = _make_kernel(spec)
    _verify_kernel(spec, kernel, rng)

    inputs = _fresh_inputs(spec, rng)
    for _ in range(spec.warmup_iters):
        kernel(*inputs)

    # estimate a batch size that makes one clocked region ~1 ms
    t0 = time.perf_counter()
    kernel(*inputs)
    once = max(time.perf_counter() - t0, 1e-9)
    batch = max(1, int(BATCH_TARGET_SECONDS / once))

    samples: list[float] = []
    stable = False
    while len(samples) < spec.max_samples:
        inputs = _fresh_inputs(spec, rng)
        t0 = time.perf_counter()
        for _ in range(batch):
            kernel(*inputs)
        elapsed = time.perf_counter() - t0
        samples.append(elapsed / batch * 1e6)
        if len(samples) >= MIN_SAMPLES:
            med = median_micros(samples)
            q75, q25 = np.percentile(samples, [75, 25])
            if (q75 - q25) / med < IQR_TARGET:
                stable = True
                break
    med = median_micros(samples)
    q75, q25 = np.percentile(samples, [75, 25])
    return BenchResult(
        spec=spec,
        median_micros=med,
        samples=tuple(samples),
        iqr_over_median=float((q75 - q25) / med),
        stable=stable,
        metadata={
            "batch": batch,
            "threads": os.environ.get("OMP_NUM_THREADS", "unset"),
            "n_samples": len(samples),
        },
    )


def run_rank_sweep(
    m: int,
    ranks=DEFAULT_RANKS,
    ops=OPS,
    warmup_iters: int = 10,
    max_samples: int = 50,
    seed: int = 0,
) -> list[BenchResult]:
    """Benchmark every (op, r) pair at a fixed m; ranks above m are skipped."""
    results = []
    for op in ops:
        for r in ranks:
            if r > m:
                continue
            spec = BenchSpec(m=m, r=r, op=op, warmup_iters=warmup_iters, max_samples=max_samples, seed=seed)
            results.append(run_bench(spec))
    return results


def write_bench_csv(results, path) -> None:
    """One row per benchmark point, comma-separated."""
    lines = ["op,m,r,median_micros,iqr_over_median,n_samples,stable,threads"]
    for res in results:
        s = res.spec
        lines.append(
            f"{s.op},{s.m},{s.r},{res.median_micros:.3f},{res.iqr_over_median:.4f},"
            f"{res.metadata['n_samples']},{res.stable},{res.metadata['threads']}"
        )
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def format_bench_table(results, m: int) -> str:
    """Aligned text table for one m: rows are ops, columns are ranks (microseconds)."""
    rows = [r for r in results if r.spec.m == m]
    if not rows:
        raise ValueError(f"no results at m={m}")
    ranks = sorted({r.spec.r for r in rows})
    by_key = {(r.spec.op, r.spec.r): r for r in rows}
    header = f"median microseconds per call, m={m}"
    width = 12
    lines = [header, "op".ljust(12) + "".join(f"r={r}".rjust(width) for r in ranks)]
    for op in OPS:
        cells = []
        for r in ranks:
            res = by_key.get((op, r))
            cells.append(f"{res.median_micros:.1f}".rjust(width) if res else "-".rjust(width))
        lines.append(op.ljust(12) + "".join(cells))
    return "\n".join(lines)
