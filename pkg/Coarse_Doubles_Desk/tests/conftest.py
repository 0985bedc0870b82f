from __future__ import annotations
import sys
from pathlib import Path

import numpy as np
import pytest

BASE_DIR = Path(__file__).resolve()
project_root = BASE_DIR.parent.parent
sys.path.insert(0, str(project_root / "app"))

from doubles.catalog import catalog_family, function_family, named_family  # noqa: E402
from doubles.double_space import assemble_double  # noqa: E402
from doubles.kernel import minplus  # noqa: E402
from doubles.metric_core import metric_closure  # noqa: E402
from doubles.models import DoubleMetric, FiniteMetric, Ladder  # noqa: E402

HALFLINE_LEVELS = (16, 32, 64, 128, 256)
LINE_LEVELS = (20, 40, 80, 160, 320)
SMALL_LEVELS = (8, 16, 32, 64)


# ---------- Ladders ----------
@pytest.fixture(scope="session")
def halfline() -> Ladder:
    return Ladder.of("halfline", HALFLINE_LEVELS)


@pytest.fixture(scope="session")
def small_halfline() -> Ladder:
    return Ladder.of("halfline", SMALL_LEVELS)


@pytest.fixture(scope="session")
def line() -> Ladder:
    return Ladder.of("line", LINE_LEVELS)


@pytest.fixture(scope="session")
def small_line() -> Ladder:
    return Ladder.of("line", (10, 20, 40, 80))


# ---------- Families on the halfline ladder ----------
@pytest.fixture(scope="session")
def b_line(halfline):
    return named_family(halfline, "b_line")


@pytest.fixture(scope="session")
def c_wedge(halfline):
    return named_family(halfline, "c_wedge")


@pytest.fixture(scope="session")
def small_families(small_halfline):
    return {
        "unit": catalog_family(small_halfline, "lambda", "unit", **{"lambda": 1}),
        "focused": catalog_family(small_halfline, "focused", "focused", basepoint=0, **{"lambda": 1}),
        "b_line": named_family(small_halfline, "b_line"),
        "c_wedge": named_family(small_halfline, "c_wedge"),
        "c_wedge_double": function_family(small_halfline, "2 * (abs(x0 - y0) + min(x0, y0) + 1)", "c_wedge_double"),
    }


# ---------- Random valid doubles ----------
def _random_base(rng: np.random.Generator, n: int) -> FiniteMetric:
    raw = rng.integers(1, 20, size=(n, n))
    raw = np.triu(raw, 1)
    raw = raw + raw.T
    return metric_closure(raw)


def _random_cross(rng: np.random.Generator, base: FiniteMetric) -> np.ndarray:
    d = base.dist
    n = base.n
    kind = rng.integers(0, 3)
    if kind == 0:
        return d + int(rng.integers(1, 6))
    if kind == 1:
        p = int(rng.integers(0, n))
        return d[:, p, None] + d[None, p, :] + int(rng.integers(1, 6))
    # min over anchor pairs (p, q) of d(x, p) + d(q, y) + C, valid once C >= max d(p, q)
    m = int(rng.integers(1, min(n, 5) + 1))
    ps = rng.integers(0, n, size=m)
    qs = rng.integers(0, n, size=m)
    C = max(1, int(d[ps, qs].max())) + int(rng.integers(0, 4))
    return minplus(d[:, ps], d[qs, :]) + C


@pytest.fixture(scope="session")
def random_double():
    """Factory: random_double(rng, n=None, base=None) -> a valid DoubleMetric."""

    def make(rng: np.random.Generator, n: int | None = None, base: FiniteMetric | None = None) -> DoubleMetric:
        if base is None:
            base = _random_base(rng, int(n or rng.integers(2, 49)))
        return assemble_double(base, _random_cross(rng, base))

    return make


@pytest.fixture(scope="session")
def random_base():
    return _random_base
