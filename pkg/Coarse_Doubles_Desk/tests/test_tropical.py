import numpy as np
import pytest

from doubles.double_space import assemble_double, make_catalog_double, transpose, validate_double
from doubles.errors import IncompatibleOperandsError, InvalidInputError
from doubles.kernel import minplus
from doubles.metric_core import as_metric, generate_space
from doubles.models import ComposeOptions, DoubleMetric
from doubles.tropical import bench_minplus, compose, compose_chain


def _brute_minplus(A, B):
    n, m = A.shape
    p = B.shape[1]
    out = np.empty((n, p), dtype=np.int64)
    for i in range(n):
        for j in range(p):
            out[i, j] = min(int(A[i, k]) + int(B[k, j]) for k in range(m))
    return out


def test_minplus_matches_brute_force():
    rng = np.random.default_rng(0)
    A = rng.integers(0, 50, size=(9, 6))
    B = rng.integers(0, 50, size=(6, 11))
    assert np.array_equal(minplus(A, B), _brute_minplus(A, B))
    with pytest.raises(ValueError):
        minplus(A, A)


def test_minplus_is_identical_across_threads():
    rng = np.random.default_rng(1)
    A = rng.integers(0, 1 << 20, size=(70, 70))
    B = rng.integers(0, 1 << 20, size=(70, 70))
    ref = minplus(A, B, threads=1)
    assert np.array_equal(minplus(A, B, threads=4, block_rows=8), ref)
    assert np.array_equal(minplus(A, B, threads=3, block_rows=1), ref)


def test_composition_is_associative(random_double):
    rng = np.random.default_rng(2024)
    for _ in range(200):
        n = int(rng.integers(2, 49))
        D1 = random_double(rng, n)
        D2 = random_double(rng, base=D1.base)
        D3 = random_double(rng, base=D1.base)
        left = compose(compose(D1, D2), D3)
        right = compose(D1, compose(D2, D3))
        assert np.array_equal(left.cross, right.cross)


def test_composition_stays_valid(random_double):
    rng = np.random.default_rng(11)
    for _ in range(200):
        D1 = random_double(rng)
        D2 = random_double(rng, base=D1.base)
        D = compose(D1, D2, validate=False)
        assert validate_double(D.base, D.cross).ok
        assert D.floor >= 1


def test_unit_law(random_double):
    rng = np.random.default_rng(5)
    for _ in range(100):
        D = random_double(rng)
        e1 = make_catalog_double(D.base, "lambda", {"lambda": 1})
        assert np.array_equal(compose(e1, D).cross, D.cross + 1)
        assert np.array_equal(compose(D, e1).cross, D.cross + 1)


def test_pseudoinverse_law(random_double):
    rng = np.random.default_rng(9)
    for _ in range(100):
        D = random_double(rng)
        DDD = compose_chain([D, transpose(D), D])
        assert (DDD.cross >= D.cross).all()


def test_small_compositions():
    point = as_metric([[0]])
    got = compose(assemble_double(point, [[2]]), assemble_double(point, [[3]]))
    assert got.cross.tolist() == [[5]]
    pair = as_metric([[0, 2], [2, 0]])
    got = compose(assemble_double(pair, [[1, 3], [3, 1]]), assemble_double(pair, [[2, 2], [2, 2]]))
    assert got.cross.tolist() == [[3, 3], [3, 3]]


def test_composition_is_monotone(random_double):
    rng = np.random.default_rng(23)
    for _ in range(100):
        D1 = random_double(rng)
        D2 = random_double(rng, base=D1.base)
        n = D1.n
        up1 = DoubleMetric(D1.base, D1.cross + rng.integers(0, 5, size=(n, n)))
        up2 = DoubleMetric(D1.base, D2.cross + rng.integers(0, 5, size=(n, n)))
        assert (compose(D1, D2).cross <= compose(up1, up2, validate=False).cross).all()


def test_junction_penalty_is_added_once():
    base = generate_space("halfline", None, 10)
    D = make_catalog_double(base, "focused", {"basepoint": 0, "lambda": 1})
    plain = compose(D, D)
    charged = compose(D, D, ComposeOptions(junction_penalty=1))
    assert np.array_equal(charged.cross, plain.cross + 1)
    with pytest.raises(ValueError):
        ComposeOptions(junction_penalty=-1)


def test_compose_needs_a_common_base():
    D1 = make_catalog_double(generate_space("halfline", None, 5), "lambda")
    D2 = make_catalog_double(generate_space("halfline", None, 6), "lambda")
    with pytest.raises(IncompatibleOperandsError):
        compose(D1, D2)
    with pytest.raises(IncompatibleOperandsError):
        compose_chain([D1])


def test_bench_checksum_does_not_depend_on_threads():
    one = bench_minplus(64, threads=1, seed=3)
    four = bench_minplus(64, threads=4, seed=3)
    assert one.checksum == four.checksum
    assert one.seconds >= 0
    with pytest.raises(InvalidInputError):
        bench_minplus(0)
