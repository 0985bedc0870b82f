from __future__ import annotations
import logging
import time
from typing import Optional, Sequence

import numpy as np

from .double_space import validate_double
from .errors import IncompatibleOperandsError, InternalInvariantError, InvalidInputError
from .kernel import minplus
from .models import BenchReport, ComposeOptions, DoubleMetric

logger = logging.getLogger(__name__)

BENCH_MAX_N = 4096


def same_base(D1: DoubleMetric, D2: DoubleMetric) -> bool:
    if D1.base is D2.base:
        return True
    return D1.n == D2.n and np.array_equal(D1.base.dist, D2.base.dist)


def compose(
    D1: DoubleMetric,
    D2: DoubleMetric,
    opts: Optional[ComposeOptions] = None,
    threads: int = 1,
    block_rows: int = 32,
    validate: bool = True,
) -> DoubleMetric:
    """(d1 d2)(x, y′) = min_u d1(x, u′) + d2(u, y′), plus the junction penalty once."""
    opts = opts or ComposeOptions()
    if not same_base(D1, D2):
        raise IncompatibleOperandsError(f"compose needs a common base (sizes {D1.n} and {D2.n})")
    cross = minplus(D1.cross, D2.cross, threads=threads, block_rows=block_rows)
    if opts.junction_penalty:
        cross += opts.junction_penalty
    if validate:
        report = validate_double(D1.base, cross, limit=10)
        if not report.ok:
            raise InternalInvariantError(f"composition produced an invalid double: {report.violations[0]}")
    return DoubleMetric(D1.base, cross)


def compose_chain(
    doubles: Sequence[DoubleMetric],
    opts: Optional[ComposeOptions] = None,
    threads: int = 1,
    block_rows: int = 32,
    validate: bool = True,
) -> DoubleMetric:
    if len(doubles) < 2:
        raise IncompatibleOperandsError("compose_chain needs at least two operands")
    acc = doubles[0]
    for D in doubles[1:]:
        acc = compose(acc, D, opts, threads=threads, block_rows=block_rows, validate=validate)
    return acc


def bench_minplus(n: int, threads: int = 1, seed: int = 0, block_rows: int = 32) -> BenchReport:
    if not 1 <= n <= BENCH_MAX_N:
        raise InvalidInputError(f"bench size must be in [1, {BENCH_MAX_N}]")
    rng = np.random.default_rng(seed)
    A = rng.integers(1, 1 << 20, size=(n, n), dtype=np.int64)
    B = rng.integers(1, 1 << 20, size=(n, n), dtype=np.int64)
    start = time.perf_counter_ns()
    C = minplus(A, B, threads=threads, block_rows=block_rows)
    elapsed = time.perf_counter_ns() - start
    checksum = int(C.astype(np.uint64).sum(dtype=np.uint64))
    logger.info("bench n=%d threads=%d %.3f s checksum=%d", n, threads, elapsed / 1e9, checksum)
    return BenchReport(
        n=n,
        threads=threads,
        seed=seed,
        ns_per_op=elapsed / float(n) ** 3,
        seconds=elapsed / 1e9,
        checksum=checksum,
    )
