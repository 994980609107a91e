"""Tests for the manifold-kernel microbenchmark plumbing.

Timing magnitudes are hardware-bound, so the assertions target the
estimator (median, IQR stopping rule), the spec validation, the kernel
verification hook and the CSV/table formatting.
"""

import numpy as np
import pytest

from polarlab.bench import (
    BenchSpec,
    _verify_kernel,
    format_bench_table,
    median_micros,
    run_bench,
    run_rank_sweep,
    write_bench_csv,
)


def test_median_micros_oracle():
    assert median_micros([3.0, 1.0, 2.0]) == 2.0
    assert median_micros([4.0, 1.0, 3.0, 2.0]) == 2.5
    assert median_micros([7.5]) == 7.5
    with pytest.raises(ValueError, match="no samples"):
        median_micros([])


@pytest.mark.parametrize("seed", range(10))
def test_median_monotone_under_union(seed):
    # appending samples that all sit at or above the current median can
    # never lower the median; dually for samples below
    rng = np.random.default_rng(seed)
    a = list(rng.uniform(1.0, 2.0, size=rng.integers(1, 20)))
    med_a = median_micros(a)
    high = list(rng.uniform(med_a, med_a + 5.0, size=rng.integers(1, 20)))
    low = list(rng.uniform(med_a - 1.0, med_a, size=rng.integers(1, 20)))
    assert median_micros(a + high) >= med_a
    assert median_micros(a + low) <= med_a


def test_bench_spec_validation():
    with pytest.raises(ValueError, match="unknown op"):
        BenchSpec(m=16, r=4, op="qr")
    with pytest.raises(ValueError, match="r <= m"):
        BenchSpec(m=16, r=32, op="landing")
    with pytest.raises(ValueError, match="r <= m"):
        BenchSpec(m=16, r=0, op="retraction")


@pytest.mark.parametrize("op", ["retraction", "landing"])
def test_run_bench_smoke(op):
    res = run_bench(BenchSpec(m=32, r=4, op=op, warmup_iters=2, max_samples=50))
    assert res.median_micros > 0
    assert len(res.samples) >= 5
    assert res.stable is True
    assert res.iqr_over_median <= 0.15
    assert res.metadata["n_samples"] == len(res.samples)
    assert res.metadata["batch"] >= 1


def test_verify_kernel_rejects_broken_output():
    spec = BenchSpec(m=8, r=2, op="landing")
    rng = np.random.default_rng(0)
    with pytest.raises(ValueError, match="invalid output"):
        _verify_kernel(spec, lambda X, G: np.full((8, 2), np.nan), rng)
    with pytest.raises(ValueError, match="invalid output"):
        _verify_kernel(spec, lambda X, G: np.zeros((8, 3)), rng)


def test_rank_sweep_skips_oversized_ranks():
    results = run_rank_sweep(16, ranks=(4, 32), warmup_iters=1, max_samples=8)
    assert len(results) == 2  # one op x one admissible rank, for both ops
    assert {res.spec.op for res in results} == {"retraction", "landing"}
    assert all(res.spec.r == 4 for res in results)


def test_bench_csv_layout(tmp_path):
    results = run_rank_sweep(16, ranks=(2, 4), warmup_iters=1, max_samples=6)
    out = tmp_path / "bench.csv"
    write_bench_csv(results, out)
    lines = out.read_text().splitlines()
    assert lines[0] == "op,m,r,median_micros,iqr_over_median,n_samples,stable,threads"
    assert len(lines) == 1 + len(results)
    first = lines[1].split(",")
    assert first[0] in ("retraction", "landing")
    assert int(first[1]) == 16
    assert float(first[3]) > 0


def test_bench_table_format():
    results = run_rank_sweep(16, ranks=(2, 4), warmup_iters=1, max_samples=6)
    table = format_bench_table(results, 16)
    assert "median microseconds per call, m=16" in table
    assert "retraction" in table and "landing" in table
    assert "r=2" in table and "r=4" in table
    # a missing (op, rank) combination renders as a dash
    only_retraction = [res for res in results if res.spec.op == "retraction"]
    partial = format_bench_table(only_retraction, 16)
    assert "-" in partial.splitlines()[-1]
    with pytest.raises(ValueError, match="no results"):
        format_bench_table(results, 4096)
