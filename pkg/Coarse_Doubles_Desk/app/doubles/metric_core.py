from __future__ import annotations
import logging
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np

from .errors import InvalidInputError, ShapeError, UnknownKindError
from .models import MAX_QUANTA, FiniteMetric, ValidationReport, Violation

logger = logging.getLogger(__name__)

SPACE_KINDS = ("halfline", "line", "grid", "tree", "random")


def as_matrix(m: Any) -> np.ndarray:
    """Square int64 view of `m`; rejects non-square shapes and values over the quanta cap."""
    arr = np.asarray(m)
    if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
        raise ShapeError(f"expected a square matrix, got shape {arr.shape}")
    if arr.size and not np.issubdtype(arr.dtype, np.integer):
        if not np.all(np.equal(np.mod(arr, 1), 0)):
            raise InvalidInputError("distances must be integer quanta")
    arr = arr.astype(np.int64)
    if arr.size and int(np.abs(arr).max()) > MAX_QUANTA:
        raise InvalidInputError(f"distance exceeds the cap of 2^40 quanta")
    return arr


# ================================================================
# Validation
# ================================================================
def validate_metric(m: Any) -> ValidationReport:
    d = as_matrix(m)
    n = d.shape[0]
    found: List[Violation] = []

    for i in np.nonzero(np.diagonal(d) != 0)[0]:
        found.append(Violation("diagonal", (int(i), int(i)), int(d[i, i]), 0))

    iu, ju = np.nonzero(np.triu(d != d.T, k=1))
    for i, j in zip(iu, ju):
        found.append(Violation("symmetry", (int(i), int(j)), int(d[i, j]), int(d[j, i])))

    off = ~np.eye(n, dtype=bool)
    ip, jp = np.nonzero((d <= 0) & off)
    for i, j in zip(ip, jp):
        found.append(Violation("positivity", (int(i), int(j)), int(d[i, j]), 0))

    # dist[i][k] <= dist[i][j] + dist[j][k], j is the intermediate point
    for j in range(n):
        via = d[:, j, None] + d[None, j, :]
        it, kt = np.nonzero(d > via)
        for i, k in zip(it, kt):
            found.append(Violation("triangle", (int(i), j, int(k)), int(d[i, k]), int(via[i, k])))

    found.sort(key=lambda v: (v.indices, v.kind))
    return ValidationReport(tuple(found))


def as_metric(
    m: Any,
    labels: Optional[Sequence[Sequence[int]]] = None,
    scale_denominator: int = 1,
) -> FiniteMetric:
    report = validate_metric(m)
    if not report.ok:
        first = report.violations[0]
        raise InvalidInputError(
            f"not a metric: {len(report.violations)} violation(s), first {first.kind} at {first.indices}",
            report,
        )
    if scale_denominator < 1:
        raise InvalidInputError("scale_denominator must be a positive integer")
    if labels is not None and len(labels) != as_matrix(m).shape[0]:
        raise ShapeError("one label per point is required")
    return FiniteMetric(as_matrix(m), scale_denominator, tuple(tuple(l) for l in labels) if labels is not None else None)


# ================================================================
# Closure (min-plus all-pairs shortest paths)
# ================================================================
def metric_closure(
    m: Any,
    labels: Optional[Sequence[Sequence[int]]] = None,
    scale_denominator: int = 1,
) -> FiniteMetric:
    d = as_matrix(m)
    n = d.shape[0]
    if (d < 0).any():
        raise InvalidInputError("closure input has a negative entry")
    if (np.diagonal(d) != 0).any():
        raise InvalidInputError("closure input has a nonzero diagonal")
    if not np.array_equal(d, d.T):
        raise InvalidInputError("closure input must be symmetric")
    if n > 1 and (d[~np.eye(n, dtype=bool)] == 0).any():
        raise InvalidInputError("closure input must be positive off the diagonal")

    out = d.copy()
    for k in range(n):
        np.minimum(out, out[:, k, None] + out[None, k, :], out=out)
    return FiniteMetric(out, scale_denominator, tuple(tuple(l) for l in labels) if labels is not None else None)


# ================================================================
# Prototype spaces (every generator is prefix-nested)
# ================================================================
def line_coordinate(i: int) -> int:
    # 0, -1, 1, -2, 2, ... so each prefix of size n is {-floor(n/2) .. ceil(n/2)-1}
    return i // 2 if i % 2 == 0 else -(i + 1) // 2


def _ceil_sqrt(q: np.ndarray) -> np.ndarray:
    r = np.floor(np.sqrt(q.astype(np.float64))).astype(np.int64)
    for _ in range(2):
        r = np.where(r * r > q, r - 1, r)
        r = np.where((r + 1) * (r + 1) <= q, r + 1, r)
    return np.where(r * r == q, r, r + 1)


def _random_points(n: int, seed: int, dim: int, box: int) -> np.ndarray:
    if box ** dim < n:
        raise InvalidInputError(f"box {box}^{dim} cannot hold {n} distinct points")
    pts: List[Tuple[int, ...]] = []
    seen = set()
    for i in range(n):
        rng = np.random.default_rng([seed, i])
        while True:
            p = tuple(int(v) for v in rng.integers(0, box, size=dim))
            if p not in seen:
                break
        seen.add(p)
        pts.append(p)
    return np.array(pts, dtype=np.int64).reshape(n, dim)


def _tree_metric(n: int, b: int) -> Tuple[np.ndarray, List[Tuple[int, int]]]:
    d = np.zeros((n, n), dtype=np.int64)
    depth = [0] * n
    labels = [(0, 0)]
    per_depth: Dict[int, int] = {0: 1}
    for i in range(1, n):
        p = (i - 1) // b
        depth[i] = depth[p] + 1
        # in BFS order no j < i lies below i, so the path to j leaves through the parent
        d[i, :i] = d[p, :i] + 1
        d[:i, i] = d[i, :i]
        pos = per_depth.get(depth[i], 0)
        per_depth[depth[i]] = pos + 1
        labels.append((depth[i], pos))
    return d, labels


def generate_space(kind: str, params: Optional[Dict[str, Any]], level_size: int) -> FiniteMetric:
    params = dict(params or {})
    n = int(level_size)
    if n < 1:
        raise InvalidInputError("level_size must be >= 1")

    if kind == "halfline":
        coords = np.arange(n, dtype=np.int64)
        d = np.abs(coords[:, None] - coords[None, :])
        return FiniteMetric(d, 1, tuple((int(c),) for c in coords))

    if kind == "line":
        coords = np.array([line_coordinate(i) for i in range(n)], dtype=np.int64)
        d = np.abs(coords[:, None] - coords[None, :])
        return FiniteMetric(d, 1, tuple((int(c),) for c in coords))

    if kind == "grid":
        width = int(params.get("width", 0))
        if width < 1:
            raise InvalidInputError("grid needs width >= 1")
        idx = np.arange(n, dtype=np.int64)
        cols, rows = idx % width, idx // width
        d = np.abs(cols[:, None] - cols[None, :]) + np.abs(rows[:, None] - rows[None, :])
        return FiniteMetric(d, 1, tuple((int(c), int(r)) for c, r in zip(cols, rows)))

    if kind == "tree":
        b = int(params.get("branching", 0))
        if b < 1:
            raise InvalidInputError("tree needs branching >= 1")
        d, labels = _tree_metric(n, b)
        return FiniteMetric(d, 1, tuple(labels))

    if kind == "random":
        seed = int(params.get("seed", 0))
        dim = int(params.get("dim", 2))
        box = int(params.get("box", 100))
        scale = int(params.get("scale", 1))
        if dim < 1 or box < 1 or scale < 1:
            raise InvalidInputError("random space needs dim, box, scale >= 1")
        pts = _random_points(n, seed, dim, box)
        diff = pts[:, None, :] - pts[None, :, :]
        sq = (diff * diff).sum(axis=2) * (scale * scale)
        # ceil of a metric is a metric, so quantization keeps the triangle inequality
        d = _ceil_sqrt(sq)
        logger.debug("random space seed=%d n=%d dim=%d", seed, n, dim)
        return metric_closure(d, labels=[tuple(int(v) for v in p) for p in pts], scale_denominator=scale)

    raise UnknownKindError(f"unknown space kind {kind!r}; expected one of {SPACE_KINDS}")
