"""Finite unit-edge graphs: distances, punctured distances, four-point delta, medians."""
from __future__ import annotations

import json
import random
from collections import deque
from dataclasses import dataclass
from fractions import Fraction
from math import floor
from typing import Any, Iterable, Sequence

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import shortest_path

from .errors import InputError, PreconditionError, StructuralError

UNREACHABLE = -1
DELTA_EXHAUSTIVE_MAX = 200
MEDIAN_EXHAUSTIVE_MAX = 300


def as_fraction(x) -> Fraction:
    if isinstance(x, Fraction):
        return x
    if isinstance(x, float):
        return Fraction(x).limit_denominator(10**9)
    return Fraction(x)


@dataclass(frozen=True)
class Ball:
    """Closed ball ``{v : d(v, center) <= radius}``; a negative radius is empty."""

    center: int
    radius: Fraction

    def __post_init__(self):
        object.__setattr__(self, "radius", as_fraction(self.radius))

    @property
    def int_radius(self) -> int:
        # vertex distances are integers, so only the floor matters
        return floor(self.radius)

    def is_empty(self) -> bool:
        return self.radius < 0


def empty_ball() -> Ball:
    return Ball(0, Fraction(-1))


class MetricGraph:
    """Immutable simple connected graph on vertices ``0..n-1`` with unit edges."""

    def __init__(self, n: int, edges: Iterable[Sequence[int]], labels: dict | None = None,
                 check_connected: bool = True):
        if n < 0:
            raise InputError("vertex count must be nonnegative")
        adj: list[set[int]] = [set() for _ in range(n)]
        for e in edges:
            u, v = int(e[0]), int(e[1])
            if not (0 <= u < n and 0 <= v < n):
                raise InputError(f"edge ({u},{v}) has an invalid endpoint")
            if u == v:
                raise InputError(f"loop at vertex {u}")
            adj[u].add(v)
            adj[v].add(u)
        self.n = n
        self.adjacency: tuple[tuple[int, ...], ...] = tuple(tuple(sorted(a)) for a in adj)
        self.labels: dict[int, Any] = dict(labels or {})
        self._rows: dict[int, np.ndarray] = {}
        self._masks: dict[tuple[int, int], np.ndarray] = {}
        self._csr = None
        self._is_tree = None
        self._label_index = None
        if check_connected and n > 0 and int((self.distance_row(0) < 0).sum()) > 0:
            raise InputError("graph is not connected")

    # basic structure

    @property
    def vertex_count(self) -> int:
        return self.n

    def edges(self) -> list[tuple[int, int]]:
        return [(u, v) for u in range(self.n) for v in self.adjacency[u] if u < v]

    @property
    def edge_count(self) -> int:
        return sum(len(a) for a in self.adjacency) // 2

    def neighbors(self, v: int) -> tuple[int, ...]:
        return self.adjacency[v]

    def has_edge(self, u: int, v: int) -> bool:
        return v in self.adjacency[u]

    def check_vertex(self, v) -> int:
        if not isinstance(v, (int, np.integer)) or not 0 <= int(v) < self.n:
            raise InputError(f"invalid vertex {v!r}")
        return int(v)

    def index_of(self, label) -> int:
        if self._label_index is None:
            self._label_index = {_hashable(lab): v for v, lab in self.labels.items()}
        key = _hashable(label)
        if key not in self._label_index:
            raise InputError(f"no vertex labelled {label!r}")
        return self._label_index[key]

    def is_tree(self) -> bool:
        if self._is_tree is None:
            self._is_tree = self.edge_count == self.n - 1
        return self._is_tree

    def _tree_struct(self):
        if getattr(self, "_tree", None) is None:
            parent = [-1] * self.n
            depth = [0] * self.n
            seen = [False] * self.n
            seen[0] = True
            q = deque([0])
            while q:
                u = q.popleft()
                for w in self.adjacency[u]:
                    if not seen[w]:
                        seen[w] = True
                        parent[w] = u
                        depth[w] = depth[u] + 1
                        q.append(w)
            self._tree = (parent, depth)
        return self._tree

    def tree_path(self, u: int, v: int) -> list[int]:
        """Unique path from ``u`` to ``v`` (trees only)."""
        parent, depth = self._tree_struct()
        left, right = [u], [v]
        a, b = u, v
        while depth[a] > depth[b]:
            a = parent[a]
            left.append(a)
        while depth[b] > depth[a]:
            b = parent[b]
            right.append(b)
        while a != b:
            a, b = parent[a], parent[b]
            left.append(a)
            right.append(b)
        right.pop()
        return left + right[::-1]

    def tree_dist(self, u: int, v: int) -> int:
        parent, depth = self._tree_struct()
        a, b, k = u, v, 0
        while depth[a] > depth[b]:
            a = parent[a]
            k += 1
        while depth[b] > depth[a]:
            b = parent[b]
            k += 1
        while a != b:
            a, b = parent[a], parent[b]
            k += 2
        return k

    def csr(self):
        if self._csr is None:
            rows, cols = [], []
            for u, nb in enumerate(self.adjacency):
                rows.extend([u] * len(nb))
                cols.extend(nb)
            data = np.ones(len(rows), dtype=np.int8)
            self._csr = csr_matrix((data, (rows, cols)), shape=(self.n, self.n))
        return self._csr

    # distances

    def distance_row(self, src: int) -> np.ndarray:
        """BFS distances from ``src`` as an int array (cached)."""
        row = self._rows.get(src)
        if row is None:
            row = bfs(self.adjacency, src)
            if (len(self._rows) + 1) * self.n > 40_000_000:
                self._rows.clear()
            row.setflags(write=False)
            self._rows[src] = row
        return row

    def d(self, u: int, v: int) -> int:
        if u in self._rows:
            return int(self._rows[u][v])
        if v in self._rows:
            return int(self._rows[v][u])
        if self.n > 2000 and self.is_tree():
            return self.tree_dist(u, v)
        return int(self.distance_row(u)[v])

    def dist_to_set(self, v: int, vs: Iterable[int]) -> int:
        row = self.distance_row(v)
        return int(min(row[list(vs)]))

    def ball_mask(self, ball: Ball) -> np.ndarray:
        r = ball.int_radius
        key = (ball.center, r)
        m = self._masks.get(key)
        if m is None:
            if r < 0:
                m = np.zeros(self.n, dtype=bool)
            else:
                m = self.distance_row(ball.center) <= r
            m.setflags(write=False)
            if (len(self._masks) + 1) * self.n > 20_000_000:
                self._masks.clear()
            self._masks[key] = m
        return m

    def in_ball(self, v: int, ball: Ball) -> bool:
        if ball.is_empty():
            return False
        return self.d(ball.center, v) <= ball.radius

    def all_pairs(self) -> np.ndarray:
        """Full distance matrix (small graphs)."""
        mat = shortest_path(self.csr(), unweighted=True, directed=False)
        return _to_int(mat)

    def eccentricity(self, v: int) -> int:
        return int(self.distance_row(v).max())

    def diameter(self, chunk: int = 512) -> int:
        best = 0
        for start in range(0, self.n, chunk):
            idx = list(range(start, min(self.n, start + chunk)))
            part = shortest_path(self.csr(), unweighted=True, directed=False, indices=idx)
            best = max(best, int(part.max()))
        return best

    # serialisation

    def to_json_obj(self) -> dict:
        return {"vertices": self.n, "edges": [list(e) for e in self.edges()],
                "labels": {str(k): _jsonable(v) for k, v in sorted(self.labels.items())}}

    @classmethod
    def from_json_obj(cls, obj: dict) -> "MetricGraph":
        try:
            n = int(obj["vertices"])
            edges = [tuple(e) for e in obj["edges"]]
        except (KeyError, TypeError, ValueError) as exc:
            raise InputError(f"malformed graph JSON: {exc}") from exc
        labels = {int(k): _hashable(v) for k, v in obj.get("labels", {}).items()}
        return cls(n, edges, labels)

    def to_dot(self, name: str = "G", extra_edges: Iterable[tuple[int, int]] = ()) -> str:
        lines = [f"graph {name} {{"]
        for v in range(self.n):
            lab = self.labels.get(v)
            if lab is None:
                lines.append(f"  {v};")
            else:
                lines.append(f'  {v} [label="{_label_text(lab)}"];')
        for u, v in self.edges():
            lines.append(f"  {u} -- {v};")
        for u, v in extra_edges:
            lines.append(f"  {u} -- {v} [style=dashed];")
        lines.append("}")
        return "\n".join(lines) + "\n"

    def __repr__(self):
        return f"MetricGraph(n={self.n}, m={self.edge_count})"


def bfs(adjacency, src: int, blocked: np.ndarray | None = None) -> np.ndarray:
    n = len(adjacency)
    dist = np.empty(n, dtype=np.int32)
    dist_l = [UNREACHABLE] * n
    dist_l[src] = 0
    q = deque([src])
    if blocked is None:
        while q:
            u = q.popleft()
            du = dist_l[u] + 1
            for w in adjacency[u]:
                if dist_l[w] < 0:
                    dist_l[w] = du
                    q.append(w)
    else:
        bl = blocked.tolist()
        while q:
            u = q.popleft()
            du = dist_l[u] + 1
            for w in adjacency[u]:
                if dist_l[w] < 0 and not bl[w]:
                    dist_l[w] = du
                    q.append(w)
    dist[:] = dist_l
    return dist


def _to_int(mat: np.ndarray) -> np.ndarray:
    out = np.where(np.isinf(mat), UNREACHABLE, mat)
    return out.astype(np.int32)


def _hashable(x):
    if isinstance(x, list):
        return tuple(_hashable(y) for y in x)
    return x


def _jsonable(x):
    if isinstance(x, tuple):
        return [_jsonable(y) for y in x]
    return x


def _label_text(lab) -> str:
    if isinstance(lab, tuple):
        return "(" + ",".join(str(c) for c in lab) + ")"
    return str(lab).replace('"', "'")


def load_graph(path) -> MetricGraph:
    """Read a graph JSON file, either bare or wrapped under "graph" as ``gen`` writes it."""
    with open(path) as fh:
        obj = json.load(fh)
    if isinstance(obj, dict) and isinstance(obj.get("graph"), dict):
        obj = obj["graph"]
    return MetricGraph.from_json_obj(obj)


# metric-graph operations

def distance_map(g: MetricGraph, src: int) -> dict[int, int]:
    src = g.check_vertex(src)
    return {v: int(d) for v, d in enumerate(g.distance_row(src))}


def punctured_row(g: MetricGraph, src: int, ball: Ball) -> np.ndarray:
    """Distances from ``src`` in the subgraph induced on V minus the ball (-1 = unreachable)."""
    if ball.is_empty():
        return g.distance_row(src)
    mask = g.ball_mask(ball)
    if mask[src]:
        raise PreconditionError(
            f"source {src} lies in the ball (distance {g.d(ball.center, src)} <= {ball.radius})")
    return bfs(g.adjacency, src, mask)


def punctured_distance_map(g: MetricGraph, src: int, ball: Ball) -> dict[int, int | None]:
    src = g.check_vertex(src)
    row = punctured_row(g, src, ball)
    return {v: (int(d) if d >= 0 else None) for v, d in enumerate(row)}


@dataclass
class DeltaResult:
    delta: Fraction
    exhaustive: bool
    sample_size: int
    witness: tuple[int, int, int, int] | None

    @property
    def is_lower_bound(self) -> bool:
        return not self.exhaustive


def _delta_on(D: np.ndarray, chunk: int = 24) -> tuple[int, tuple[int, int, int, int] | None]:
    """Exact doubled four-point defect over all quadruples of a distance matrix."""
    D = D.astype(np.int32)
    k = D.shape[0]
    best, wit = 0, None
    for w in range(k):
        dw = D[w]
        for x0 in range(w, k, chunk):
            xs = slice(x0, min(k, x0 + chunk))
            Dx = D[xs]
            s1 = dw[xs][:, None, None] + D[None, :, :]      # d(w,x)+d(y,z)
            s2 = dw[None, :, None] + Dx[:, None, :]         # d(w,y)+d(x,z)
            s3 = dw[None, None, :] + Dx[:, :, None]         # d(w,z)+d(x,y)
            hi = np.maximum(np.maximum(s1, s2), s3)
            lo = np.minimum(np.minimum(s1, s2), s3)
            gap = 2 * hi + lo - s1 - s2 - s3
            val = int(gap.max())
            if val > best:
                best = val
                x, y, z = np.unravel_index(int(gap.argmax()), gap.shape)
                wit = (w, x0 + int(x), int(y), int(z))
    return best, wit


def four_point_delta(g: MetricGraph, sampling: str | int = "auto", seed: int = 0,
                     exhaustive_max: int = DELTA_EXHAUSTIVE_MAX,
                     dist_matrix_rows=None) -> DeltaResult:
    """Gromov four-point delta.

    ``sampling`` is ``"exhaustive"``, ``"auto"`` (exhaustive up to ``exhaustive_max``
    vertices) or an integer: the size of a seeded vertex subset scanned exhaustively,
    which yields a lower bound.
    """
    n = g.n
    if n <= 1:
        return DeltaResult(Fraction(0), True, n, None)
    if sampling == "auto":
        sampling = "exhaustive" if n <= exhaustive_max else 64
    if sampling == "exhaustive":
        if n > exhaustive_max:
            raise InputError(f"exhaustive delta limited to {exhaustive_max} vertices")
        D = g.all_pairs() if dist_matrix_rows is None else dist_matrix_rows(list(range(n)))
        val, wit = _delta_on(D)
        return DeltaResult(Fraction(val, 2), True, n, wit)
    if not isinstance(sampling, (int, np.integer)) or sampling < 1:
        raise InputError(f"invalid sampling spec {sampling!r}")
    k = min(int(sampling), n)
    rng = random.Random(seed)
    subset = sorted(rng.sample(range(n), k))
    if dist_matrix_rows is None:
        rows = shortest_path(g.csr(), unweighted=True, directed=False, indices=subset)
        D = _to_int(rows)[:, subset]
    else:
        D = dist_matrix_rows(subset)[:, subset]
    val, wit = _delta_on(D)
    if wit is not None:
        wit = tuple(subset[i] for i in wit)
    return DeltaResult(Fraction(val, 2), k == n, k, wit)


def interval_mask(g: MetricGraph, a: int, b: int) -> np.ndarray:
    ra, rb = g.distance_row(a), g.distance_row(b)
    return ra + rb == ra[b]


def median_candidates(g: MetricGraph, x: int, y: int, z: int) -> list[int]:
    m = interval_mask(g, x, y) & interval_mask(g, x, z) & interval_mask(g, y, z)
    return [int(v) for v in np.flatnonzero(m)]


def median(g: MetricGraph, x: int, y: int, z: int) -> int:
    for v in (x, y, z):
        g.check_vertex(v)
    c = median_candidates(g, x, y, z)
    if len(c) != 1:
        raise StructuralError(f"not a median graph: triple {(x, y, z)} has medians {c}")
    return c[0]


@dataclass
class MedianCheck:
    is_median: bool
    counterexample: tuple[int, int, int] | None
    exhaustive: bool
    sample_size: int

    def __bool__(self):
        return self.is_median


def is_median_graph(g: MetricGraph, exhaustive_max: int = MEDIAN_EXHAUSTIVE_MAX,
                    samples: int = 2000, seed: int = 0) -> MedianCheck:
    n = g.n
    if n <= exhaustive_max:
        D = g.all_pairs()
        for x in range(n):
            for y in range(x, n):
                ixy = D[x] + D[y] == D[x, y]
                if not ixy.any():
                    continue
                for z in range(y, n):
                    m = ixy & (D[x] + D[z] == D[x, z]) & (D[y] + D[z] == D[y, z])
                    if int(m.sum()) != 1:
                        return MedianCheck(False, (x, y, z), True, n)
        return MedianCheck(True, None, True, n)
    rng = random.Random(seed)
    for _ in range(samples):
        x, y, z = (rng.randrange(n) for _ in range(3))
        if len(median_candidates(g, x, y, z)) != 1:
            return MedianCheck(False, (x, y, z), False, samples)
    return MedianCheck(True, None, False, samples)


def induced_permutation_ok(g: MetricGraph, perm: Sequence[int]) -> bool:
    """True iff ``perm`` is a graph automorphism."""
    if sorted(perm) != list(range(g.n)):
        return False
    for u, v in g.edges():
        if not g.has_edge(perm[u], perm[v]):
            return False
    return True


__all__ = [
    "Ball", "MetricGraph", "UNREACHABLE", "bfs", "distance_map", "punctured_distance_map",
    "punctured_row", "four_point_delta", "DeltaResult", "median", "is_median_graph",
    "MedianCheck", "interval_mask", "load_graph", "empty_ball", "as_fraction",
    "induced_permutation_ok",
]
