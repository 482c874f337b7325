"""Path systems: providers of special paths with ball-avoiding leg queries.

Every kind answers three questions: which special paths join ``x`` and ``y``,
what is the shortest special path from ``x`` to ``y`` avoiding a ball, and (for
bounded kinds) how to replace a special path when its endpoint moves by one.
"""
from __future__ import annotations

import json
import random
from collections import OrderedDict
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Iterator, Sequence

import numpy as np
from scipy.sparse.csgraph import shortest_path

from .errors import (CapabilityError, ConsistencyError, InputError, PreconditionError,
                     StructuralError)
from .graph import Ball, MetricGraph, as_fraction, bfs, is_median_graph, median
from .paths import EdgePath, hausdorff, lexmin_geodesic, rectify

INF = np.iinfo(np.int32).max // 4
MATRIX_MAX = 1200


@dataclass(frozen=True)
class PathSystemConfig:
    lambda0: Fraction = Fraction(1)
    kappa0: Fraction = Fraction(0)
    c_p: Fraction = Fraction(1)
    undirected: bool = True

    def __post_init__(self):
        for name in ("lambda0", "kappa0", "c_p"):
            object.__setattr__(self, name, as_fraction(getattr(self, name)))
        if self.lambda0 < 1 or self.kappa0 < 0 or self.c_p < 1:
            raise InputError("need lambda0 >= 1, kappa0 >= 0, c_p >= 1")

    def D(self, r) -> Fraction:
        return self.c_p * as_fraction(r) + self.c_p

    def to_json_obj(self) -> dict:
        return {"lambda0": str(self.lambda0), "kappa0": str(self.kappa0),
                "c_p": str(self.c_p), "undirected": self.undirected}

    @classmethod
    def from_json_obj(cls, obj: dict) -> "PathSystemConfig":
        return cls(Fraction(obj.get("lambda0", 1)), Fraction(obj.get("kappa0", 0)),
                   Fraction(obj.get("c_p", 1)), bool(obj.get("undirected", True)))


class _LRU(OrderedDict):
    def __init__(self, cap: int):
        super().__init__()
        self.cap = cap

    def put(self, key, value):
        self[key] = value
        self.move_to_end(key)
        while len(self) > self.cap:
            self.popitem(last=False)

    def fetch(self, key):
        v = self.get(key)
        if v is not None:
            self.move_to_end(key)
        return v


class PathSystem:
    """Base class. Subclasses override ``iter_paths`` and the leg queries."""

    kind = "abstract"
    bounded_kappa: int | None = None

    def __init__(self, g: MetricGraph, config: PathSystemConfig | None = None):
        self.g = g
        self.config = config or PathSystemConfig()
        self._legmats = _LRU(64)
        self._reach = _LRU(2048)

    # enumeration

    def iter_paths(self, x: int, y: int) -> Iterator[tuple[int, ...]]:
        raise NotImplementedError

    def special_paths(self, x: int, y: int, cap: int = 1000) -> tuple[list[EdgePath], bool]:
        """Up to ``cap`` special paths from x to y and whether the list is complete."""
        out = []
        it = self.iter_paths(x, y)
        for p in it:
            if len(out) == cap:
                return out, False
            out.append(EdgePath(p, self.g, check=False))
        return out, True

    def contains(self, vertices: Sequence[int]) -> bool:
        vs = tuple(vertices)
        return any(p == vs for p in self.iter_paths(vs[0], vs[-1]))

    def extensions(self, prefix: Sequence[int], target: int | None) -> list[int]:
        """Vertices w such that prefix+[w] starts some special path (to target)."""
        raise CapabilityError(f"{self.kind} does not support prefix extension")

    # leg queries

    def _endpoint_blocked(self, x: int, y: int, ball: Ball) -> bool:
        if ball.is_empty():
            return False
        return self.g.in_ball(x, ball) or self.g.in_ball(y, ball)

    def min_leg_avoiding(self, x: int, y: int, ball: Ball) -> int | None:
        if self._endpoint_blocked(x, y, ball):
            return None
        mask = self.g.ball_mask(ball)
        best = None
        for p in self.iter_paths(x, y):
            if not mask[list(p)].any():
                if best is None or len(p) - 1 < best:
                    best = len(p) - 1
        return best

    def leg_row(self, u: int, ball: Ball) -> np.ndarray:
        row = np.full(self.g.n, -1, dtype=np.int32)
        if not ball.is_empty() and self.g.in_ball(u, ball):
            return row
        for v in range(self.g.n):
            c = self.min_leg_avoiding(u, v, ball)
            if c is not None:
                row[v] = c
        return row

    def _compute_leg_matrix(self, ball: Ball) -> np.ndarray:
        return np.stack([self.leg_row(u, ball) for u in range(self.g.n)])

    def leg_matrix(self, ball: Ball) -> np.ndarray:
        """``M[u, v]`` = min_leg_avoiding(u, v, ball) or -1; cached per ball."""
        key = (ball.center, ball.int_radius) if not ball.is_empty() else None
        m = self._legmats.fetch(key)
        if m is None:
            m = self._compute_leg_matrix(ball)
            m.setflags(write=False)
            self._legmats.put(key, m)
        return m

    # line reachability

    def line_reachable(self, src: int, dst: int, ball: Ball, n: int) -> bool:
        """Is there a line of at most n special paths from src to dst avoiding the ball?"""
        if self._endpoint_blocked(src, dst, ball):
            return False
        if src == dst:
            return True
        if n < 1:
            return False
        if self.g.n <= MATRIX_MAX // 3:
            return bool(self.reach_closure(ball, n)[src, dst])
        return line_search(self, src, dst, ball, n, lengths=False) is not None

    def reach_closure(self, ball: Ball, n: int) -> np.ndarray:
        key = ((ball.center, ball.int_radius) if not ball.is_empty() else None, n)
        r = self._reach.fetch(key)
        if r is None:
            r = _bool_power(self.leg_matrix(ball) >= 0, n)
            r.setflags(write=False)
            self._reach.put(key, r)
        return r

    # boundedness

    def bounded_replacement(self, h, y2: int) -> tuple[EdgePath, int]:
        raise CapabilityError(f"{self.kind} does not support bounded replacement")

    def combing_line(self, a: int, b: int) -> EdgePath:
        raise CapabilityError(f"{self.kind} is not a combing")

    def describe(self) -> dict:
        return {"kind": self.kind, "config": self.config.to_json_obj()}


def _bool_power(F: np.ndarray, n: int) -> np.ndarray:
    """Pairs joined by at most n steps of the relation F (diagonal kept where allowed)."""
    allowed = F.diagonal().copy()
    M = F.astype(np.float32)
    result = None
    base = M
    k = n
    while k:
        if k & 1:
            result = base if result is None else ((result @ base) > 0).astype(np.float32)
        k >>= 1
        if k:
            base = ((base @ base) > 0).astype(np.float32)
    out = result > 0
    np.fill_diagonal(out, allowed)
    return out


class AllGeodesics(PathSystem):
    """Every geodesic is special."""

    kind = "AllGeodesics"

    def __init__(self, g: MetricGraph, config: PathSystemConfig | None = None):
        super().__init__(g, config or PathSystemConfig())

    def iter_paths(self, x: int, y: int) -> Iterator[tuple[int, ...]]:
        g = self.g
        if g.is_tree():
            yield tuple(g.tree_path(x, y))
            return
        row = g.distance_row(y)
        adj = g.adjacency
        stack = [(x,)]
        while stack:
            p = stack.pop()
            cur = p[-1]
            if cur == y:
                yield p
                continue
            want = row[cur] - 1
            nxt = [w for w in adj[cur] if row[w] == want]
            for w in reversed(nxt):
                stack.append(p + (w,))

    def count_paths(self, x: int, y: int) -> int:
        rx, ry = self.g.distance_row(x), self.g.distance_row(y)
        d = int(rx[y])
        layers: dict[int, list[int]] = {}
        for v in np.flatnonzero(rx + ry == d):
            layers.setdefault(int(rx[v]), []).append(int(v))
        cnt = {x: 1}
        for k in range(1, d + 1):
            for v in layers.get(k, []):
                cnt[v] = sum(cnt.get(w, 0) for w in self.g.adjacency[v] if rx[w] == k - 1)
        return cnt[y]

    def contains(self, vertices: Sequence[int]) -> bool:
        vs = list(vertices)
        if any(not self.g.has_edge(a, b) for a, b in zip(vs, vs[1:])):
            return False
        return self.g.d(vs[0], vs[-1]) == len(vs) - 1

    def extensions(self, prefix: Sequence[int], target: int | None) -> list[int]:
        g = self.g
        cur = prefix[-1]
        if g.is_tree():
            prev = prefix[-2] if len(prefix) > 1 else None
            if target is None:
                return [w for w in g.adjacency[cur] if w != prev]
            if cur == target:
                return []
            path = g.tree_path(cur, target)
            return [path[1]]
        if target is not None:
            row = g.distance_row(target)
            want = row[cur] - 1
            return [w for w in g.adjacency[cur] if row[w] == want]
        row = g.distance_row(prefix[0])
        want = len(prefix)
        return [w for w in g.adjacency[cur] if row[w] == want]

    def min_leg_avoiding(self, x: int, y: int, ball: Ball) -> int | None:
        g = self.g
        if self._endpoint_blocked(x, y, ball):
            return None
        if ball.is_empty():
            return g.d(x, y)
        if g.is_tree():
            # distance from the center to the x-y geodesic is a Gromov product in a tree
            c = ball.center
            dxy = g.d(x, y)
            gap2 = g.d(x, c) + g.d(y, c) - dxy
            return dxy if gap2 > 2 * ball.int_radius else None
        prow = bfs(g.adjacency, x, g.ball_mask(ball))
        d = g.d(x, y)
        return d if prow[y] == d else None

    def leg_row(self, u: int, ball: Ball) -> np.ndarray:
        g = self.g
        row = g.distance_row(u).astype(np.int32)
        if ball.is_empty():
            return row.copy()
        mask = g.ball_mask(ball)
        if mask[u]:
            return np.full(g.n, -1, dtype=np.int32)
        prow = bfs(g.adjacency, u, mask)
        return np.where(prow == row, row, -1).astype(np.int32)

    def _compute_leg_matrix(self, ball: Ball) -> np.ndarray:
        g = self.g
        D = self.distance_matrix()
        if ball.is_empty():
            return D.copy()
        mask = g.ball_mask(ball)
        keep = np.flatnonzero(~mask)
        sub = g.csr()[keep][:, keep]
        Dp = shortest_path(sub, unweighted=True, directed=False)
        out = np.full((g.n, g.n), -1, dtype=np.int32)
        Dk = D[np.ix_(keep, keep)]
        ok = Dp == Dk
        out[np.ix_(keep, keep)] = np.where(ok, Dk, -1)
        return out

    def distance_matrix(self) -> np.ndarray:
        if getattr(self, "_D", None) is None:
            self._D = self.g.all_pairs()
        return self._D

    def line_reachable(self, src: int, dst: int, ball: Ball, n: int) -> bool:
        if self.g.is_tree() and n >= 1:
            # every line between two vertices of a tree covers their geodesic
            return self.min_leg_avoiding(src, dst, ball) is not None
        return super().line_reachable(src, dst, ball, n)

    def bounded_replacement(self, h, y2: int) -> tuple[EdgePath, int]:
        if not self._median_ok():
            raise CapabilityError("geodesic replacement needs a median graph")
        return _median_replacement(self, h, y2, bound=2)

    def _median_ok(self) -> bool:
        if getattr(self, "_is_median", None) is None:
            self._is_median = bool(is_median_graph(self.g))
        return self._is_median

    def combing_line(self, a: int, b: int) -> EdgePath:
        if not self.g.is_tree():
            raise CapabilityError("geodesics form a combing only on trees")
        return EdgePath(self.g.tree_path(a, b), self.g, check=False)


class MedianMonotone(AllGeodesics):
    """All geodesics of a median graph; supports 2-bounded replacement."""

    kind = "MedianMonotone"
    bounded_kappa = 2

    def __init__(self, g: MetricGraph, config: PathSystemConfig | None = None, check: bool = True):
        super().__init__(g, config)
        if check:
            res = is_median_graph(g)
            if not res:
                raise StructuralError(f"not a median graph: witness {res.counterexample}")
        self._is_median = True


class TreeGeodesics(AllGeodesics):
    """Unique geodesics of a tree; a geodesic combing with kappa0 = 0."""

    kind = "TreeGeodesics"
    bounded_kappa = 1

    def __init__(self, g: MetricGraph, config: PathSystemConfig | None = None):
        if not g.is_tree():
            raise StructuralError("TreeGeodesics needs a tree")
        super().__init__(g, config)
        self._is_median = True

    def bounded_replacement(self, h, y2: int) -> tuple[EdgePath, int]:
        return _median_replacement(self, h, y2, bound=1)


def _median_replacement(ps: PathSystem, h, y2: int, bound: int) -> tuple[EdgePath, int]:
    """Gate the geodesic h onto the interval I(h-, y2) using medians."""
    g = ps.g
    vs = list(h.vertices if isinstance(h, EdgePath) else h)
    x, y = vs[0], vs[-1]
    if g.d(y, y2) > 1:
        raise PreconditionError("replacement target must be within 1 of the endpoint")
    if y2 == y:
        return EdgePath(vs, g, check=False), 0
    if g.d(x, y2) == len(vs):
        out = vs + [y2]
    else:
        out = []
        for v in vs:
            m = median(g, x, v, y2)
            if not out or out[-1] != m:
                out.append(m)
    path = EdgePath(out, g)
    if path.end != y2 or g.d(x, y2) != path.length:
        raise ConsistencyError(f"replacement is not a geodesic: {out}")
    hd = hausdorff(g, vs, out)
    if hd > bound:
        raise ConsistencyError(f"replacement Hausdorff distance {hd} exceeds {bound}")
    return path, hd


class StaircaseCombingZ2(PathSystem):
    """Staircase combing of the box [-N, N]^2, closed under subsegments and inverses.

    The line from a=(xa,ya) to b=(xb,yb) runs through (xa,z) and (xb,z) with
    z = sgn(ya) * max(0, sgn(ya) * yb).
    """

    kind = "StaircaseCombingZ2"
    bounded_kappa = 2

    def __init__(self, g: MetricGraph, N: int, config: PathSystemConfig | None = None):
        super().__init__(g, config or PathSystemConfig())
        self.N = N
        side = 2 * N + 1
        if g.n != side * side:
            raise StructuralError("staircase combing needs the full box graph")
        self.xy = np.array([g.labels[v] for v in range(g.n)], dtype=np.int32)
        for v in range(g.n):
            x, y = (int(c) for c in self.xy[v])
            if self.vid(x, y) != v or max(abs(x), abs(y)) > N:
                raise StructuralError("box labels are inconsistent")

    def vid(self, x: int, y: int) -> int:
        N = self.N
        return (x + N) * (2 * N + 1) + (y + N)

    @staticmethod
    def z_of(ya: int, yb: int) -> int:
        s = (ya > 0) - (ya < 0)
        return s * max(0, s * yb)

    def _through(self, x1, y1, x2, y2, w) -> tuple[int, ...]:
        pts = []

        def seg(xa, ya, xb, yb):
            if xa == xb:
                step = 1 if yb >= ya else -1
                for yy in range(ya, yb + step, step):
                    pts.append((xa, yy))
            else:
                step = 1 if xb >= xa else -1
                for xx in range(xa, xb + step, step):
                    pts.append((xx, ya))

        seg(x1, y1, x1, w)
        seg(x1, w, x2, w)
        seg(x2, w, x2, y2)
        out = []
        for p in pts:
            v = self.vid(*p)
            if not out or out[-1] != v:
                out.append(v)
        return tuple(out)

    def combing_line(self, a: int, b: int) -> EdgePath:
        (xa, ya), (xb, yb) = self.xy[a], self.xy[b]
        z = self.z_of(int(ya), int(yb))
        return EdgePath(self._through(int(xa), int(ya), int(xb), int(yb), z), self.g, check=False)

    def _heights(self, y1: int, y2: int, x1: int, x2: int) -> list[int]:
        if x1 == x2:
            return [y1]
        if y1 * y2 <= 0:
            return [0]
        return sorted({y2, y1})

    def iter_paths(self, x: int, y: int) -> Iterator[tuple[int, ...]]:
        (x1, y1), (x2, y2) = (tuple(int(c) for c in self.xy[x]), tuple(int(c) for c in self.xy[y]))
        seen = set()
        for w in self._heights(y1, y2, x1, x2):
            p = self._through(x1, y1, x2, y2, w)
            if p not in seen:
                seen.add(p)
                yield p

    def extensions(self, prefix: Sequence[int], target: int | None) -> list[int]:
        raise CapabilityError("staircase paths are enumerated directly")

    def min_leg_avoiding(self, x: int, y: int, ball: Ball) -> int | None:
        if self._endpoint_blocked(x, y, ball):
            return None
        M = self._pair_costs(np.array([x]), np.array([y]), ball)
        c = int(M[0, 0])
        return c if c >= 0 else None

    def _pair_costs(self, us: np.ndarray, vs: np.ndarray, ball: Ball) -> np.ndarray:
        """Vectorised leg costs for all (u in us, v in vs)."""
        X1 = self.xy[us, 0][:, None]
        Y1 = self.xy[us, 1][:, None]
        X2 = self.xy[vs, 0][None, :]
        Y2 = self.xy[vs, 1][None, :]
        X1, Y1, X2, Y2 = np.broadcast_arrays(X1, Y1, X2, Y2)
        L1 = np.abs(X1 - X2) + np.abs(Y1 - Y2)
        if ball.is_empty():
            return L1.astype(np.int32)
        cx, cy = (int(c) for c in self.xy[ball.center])
        r = ball.int_radius

        def clamp_gap(c, a, b):
            lo, hi = np.minimum(a, b), np.maximum(a, b)
            return np.maximum(0, np.maximum(lo - c, c - hi))

        def path_clear(w):
            d1 = np.abs(X1 - cx) + clamp_gap(cy, Y1, w)
            d2 = np.abs(w - cy) + clamp_gap(cx, X1, X2)
            d3 = np.abs(X2 - cx) + clamp_gap(cy, w, Y2)
            return np.minimum(np.minimum(d1, d2), d3) > r

        vertical = X1 == X2
        straddle = Y1 * Y2 <= 0
        ok_vert = vertical & path_clear(Y1)
        ok_axis = ~vertical & straddle & path_clear(np.zeros_like(Y1))
        same = ~vertical & ~straddle
        ok_same = same & (path_clear(Y2) | path_clear(Y1))
        ok = ok_vert | ok_axis | ok_same
        return np.where(ok, L1, -1).astype(np.int32)

    def leg_row(self, u: int, ball: Ball) -> np.ndarray:
        if not ball.is_empty() and self.g.in_ball(u, ball):
            return np.full(self.g.n, -1, dtype=np.int32)
        return self._pair_costs(np.array([u]), np.arange(self.g.n), ball)[0]

    def _compute_leg_matrix(self, ball: Ball) -> np.ndarray:
        allv = np.arange(self.g.n)
        M = self._pair_costs(allv, allv, ball)
        if not ball.is_empty():
            mask = self.g.ball_mask(ball)
            M[mask, :] = -1
            M[:, mask] = -1
        return M

    def bounded_replacement(self, h, y2: int) -> tuple[EdgePath, int]:
        g = self.g
        vs = list(h.vertices if isinstance(h, EdgePath) else h)
        if g.d(vs[-1], y2) > 1:
            raise PreconditionError("replacement target must be within 1 of the endpoint")
        if y2 == vs[-1]:
            return EdgePath(vs, g, check=False), 0
        best = None
        for p in self.iter_paths(vs[0], y2):
            hd = hausdorff(g, vs, p)
            if best is None or hd < best[1]:
                best = (EdgePath(p, g, check=False), hd)
        if best[1] > self.bounded_kappa:
            raise ConsistencyError(f"replacement Hausdorff distance {best[1]} exceeds {self.bounded_kappa}")
        return best


class StoredSet(PathSystem):
    """An explicit finite set of paths, closed under subsegments (and inverses if undirected)."""

    kind = "StoredSet"

    def __init__(self, g: MetricGraph, paths: Sequence[Sequence[int]],
                 config: PathSystemConfig | None = None, enforce: bool = True,
                 complete_closure: bool = False):
        super().__init__(g, config or PathSystemConfig())
        store: set[tuple[int, ...]] = set()
        for p in paths:
            vs = tuple(int(v) for v in p)
            EdgePath(vs, g)
            store.add(vs)
        if complete_closure:
            store = closure_of(store, self.config.undirected, g.n)
        self.store = store
        self._by_pair: dict[tuple[int, int], list[tuple[int, ...]]] = {}
        for p in sorted(store):
            self._by_pair.setdefault((p[0], p[-1]), []).append(p)
        self._by_start: dict[int, list[tuple[int, ...]]] = {}
        for p in sorted(store):
            self._by_start.setdefault(p[0], []).append(p)
        if enforce:
            missing = first_closure_defect(store, self.config.undirected, g.n)
            if missing is not None:
                raise StructuralError(f"path set is not closed: missing {list(missing)}")

    def iter_paths(self, x: int, y: int) -> Iterator[tuple[int, ...]]:
        yield from self._by_pair.get((x, y), [])

    def contains(self, vertices: Sequence[int]) -> bool:
        return tuple(vertices) in self.store

    def extensions(self, prefix: Sequence[int], target: int | None) -> list[int]:
        k = len(prefix)
        pre = tuple(prefix)
        out = set()
        for p in self._by_start.get(prefix[0], []):
            if len(p) > k and p[:k] == pre and (target is None or p[-1] == target):
                out.add(p[k])
        return sorted(out)

    def leg_row(self, u: int, ball: Ball) -> np.ndarray:
        row = np.full(self.g.n, -1, dtype=np.int32)
        mask = self.g.ball_mask(ball)
        if mask[u]:
            return row
        for p in self._by_start.get(u, []):
            if not mask[list(p)].any():
                c = len(p) - 1
                if row[p[-1]] < 0 or c < row[p[-1]]:
                    row[p[-1]] = c
        return row

    def to_json_obj(self) -> dict:
        return {"config": self.config.to_json_obj(), "paths": [list(p) for p in sorted(self.store)]}

    @classmethod
    def from_json_obj(cls, g: MetricGraph, obj: dict) -> "StoredSet":
        try:
            cfg = PathSystemConfig.from_json_obj(obj.get("config", {}))
            paths = obj["paths"]
        except (KeyError, TypeError, ValueError) as exc:
            raise InputError(f"malformed path-set JSON: {exc}") from exc
        return cls(g, paths, cfg)


def first_closure_defect(store: set, undirected: bool, n: int):
    for v in range(n):
        if (v,) not in store:
            return (v,)
    for p in sorted(store):
        if undirected and p[::-1] not in store:
            return p[::-1]
        L = len(p)
        for i in range(L):
            for j in range(i, L):
                if p[i:j + 1] not in store:
                    return p[i:j + 1]
    return None


def closure_of(store: set, undirected: bool, n: int) -> set:
    out = {(v,) for v in range(n)}
    for p in store:
        L = len(p)
        for i in range(L):
            for j in range(i, L):
                s = p[i:j + 1]
                out.add(s)
                if undirected:
                    out.add(s[::-1])
    return out


def load_stored_set(g: MetricGraph, path) -> StoredSet:
    with open(path) as fh:
        return StoredSet.from_json_obj(g, json.load(fh))


def materialize(ps: PathSystem, cap_per_pair: int = 50) -> StoredSet:
    """Copy an implicit system into a StoredSet (closure completed)."""
    paths = []
    for x in range(ps.g.n):
        for y in range(ps.g.n):
            got, _ = ps.special_paths(x, y, cap_per_pair)
            paths.extend(p.vertices for p in got)
    return StoredSet(ps.g, paths, ps.config, complete_closure=True)


# shared line-search engine

@dataclass
class LineResult:
    length: int
    legs: list[tuple[int, ...]]
    hops: int


def line_search(ps: PathSystem, src: int, dst: int, ball: Ball, n: int,
                lengths: bool = True, budget=None, want_line: bool = False) -> LineResult | None:
    """Hop-bounded minimum-total-length search over legs avoiding the ball.

    State is (vertex, legs used); the transition cost is min_leg_avoiding.
    Returns None when no line with at most n legs (and length within budget) exists.
    """
    g = ps.g
    if ps._endpoint_blocked(src, dst, ball):
        return None
    if src == dst:
        return LineResult(0, [(src,)], 0) if want_line else LineResult(0, [], 0)
    use_matrix = g.n <= MATRIX_MAX
    M = ps.leg_matrix(ball) if use_matrix else None
    best = np.full(g.n, INF, dtype=np.int64)
    best[src] = 0
    preds: list[np.ndarray] = []
    row_cache: dict[int, np.ndarray] = {}
    for hop in range(1, n + 1):
        active = np.flatnonzero(best < INF)
        if use_matrix:
            C = M[active].astype(np.int64)
            C = np.where(C >= 0, C, INF)
        else:
            rows = []
            for u in active:
                r = row_cache.get(int(u))
                if r is None:
                    r = ps.leg_row(int(u), ball)
                    row_cache[int(u)] = r
                rows.append(r)
            C = np.stack(rows).astype(np.int64)
            C = np.where(C >= 0, C, INF)
        tot = best[active][:, None] + C
        arg = tot.argmin(axis=0)
        new = tot[arg, np.arange(g.n)]
        pred = np.where(new < best, active[arg], -1)
        nb = np.minimum(best, new)
        preds.append(pred)
        best = nb
        if not lengths and best[dst] < INF:
            break
    if best[dst] >= INF:
        return None
    total = int(best[dst])
    if budget is not None and total > budget:
        return None
    if not want_line:
        return LineResult(total, [], len(preds))
    # walk predecessors back: the hop at which each vertex last improved
    legs_pts = [dst]
    cur = dst
    h = len(preds) - 1
    cur_val = total
    while cur != src:
        while h >= 0 and preds[h][cur] < 0:
            h -= 1
        u = int(preds[h][cur])
        legs_pts.append(u)
        cur = u
        h -= 1
    legs_pts.reverse()
    legs = []
    for a, b in zip(legs_pts, legs_pts[1:]):
        leg = best_leg(ps, a, b, ball)
        legs.append(leg)
    length = sum(len(leg) - 1 for leg in legs)
    if length != cur_val:
        raise ConsistencyError(f"line reconstruction mismatch {length} != {cur_val}")
    return LineResult(total, legs, len(legs))


def best_leg(ps: PathSystem, a: int, b: int, ball: Ball) -> tuple[int, ...]:
    """A shortest special path from a to b avoiding the ball (explicit vertices)."""
    g = ps.g
    if isinstance(ps, AllGeodesics) and not isinstance(ps, StoredSet):
        if g.is_tree():
            return tuple(g.tree_path(a, b))
        mask = g.ball_mask(ball)
        # walk a geodesic inside the punctured graph
        prow = bfs(g.adjacency, b, mask) if not ball.is_empty() else g.distance_row(b)
        out = [a]
        cur = a
        while cur != b:
            want = prow[cur] - 1
            for w in g.adjacency[cur]:
                if prow[w] == want and prow[w] >= 0:
                    cur = w
                    break
            out.append(cur)
        return tuple(out)
    mask = g.ball_mask(ball)
    best = None
    for p in ps.iter_paths(a, b):
        if not mask[list(p)].any() and (best is None or len(p) < len(best)):
            best = p
    if best is None:
        raise ConsistencyError(f"no avoiding special path {a}->{b}")
    return best


# validation and push-forward

@dataclass
class ValidationReport:
    passed: bool
    failures: list[dict] = field(default_factory=list)
    measured_lambda: Fraction = Fraction(1)
    measured_kappa: Fraction = Fraction(0)
    paths_checked: int = 0

    def to_json_obj(self) -> dict:
        return {"passed": self.passed, "failures": self.failures,
                "measured_lambda": str(self.measured_lambda),
                "measured_kappa": str(self.measured_kappa), "paths_checked": self.paths_checked}


def validate_system(ps: PathSystem, samples: int = 200, seed: int = 0,
                    exhaustive: bool = False, cap: int = 4) -> ValidationReport:
    g = ps.g
    rep = ValidationReport(True)
    rng = random.Random(seed)
    for v in range(g.n):
        got, _ = ps.special_paths(v, v, 2)
        if not got or got[0].vertices != (v,):
            rep.passed = False
            rep.failures.append({"check": "trivial", "vertex": v})
            break
    if isinstance(ps, StoredSet):
        miss = first_closure_defect(ps.store, ps.config.undirected, g.n)
        if miss is not None:
            rep.passed = False
            rep.failures.append({"check": "closure", "missing": list(miss)})
        pool = sorted(ps.store)
        if not exhaustive and len(pool) > samples:
            pool = rng.sample(pool, samples)
    else:
        if exhaustive:
            pairs = [(x, y) for x in range(g.n) for y in range(g.n)]
        else:
            pairs = [(rng.randrange(g.n), rng.randrange(g.n)) for _ in range(samples)]
        pool = []
        for x, y in pairs:
            got, _ = ps.special_paths(x, y, cap)
            pool.extend(p.vertices for p in got)
    lam, kap = ps.config.lambda0, ps.config.kappa0
    worst_ratio = Fraction(1)
    worst_excess = Fraction(0)
    for p in pool:
        rep.paths_checked += 1
        if not isinstance(ps, StoredSet):
            for i in range(len(p)):
                for j in range(i, len(p)):
                    if not ps.contains(p[i:j + 1]):
                        rep.passed = False
                        rep.failures.append({"check": "closure", "path": list(p), "sub": [i, j]})
                        break
                else:
                    continue
                break
        if ps.config.undirected and not ps.contains(p[::-1]):
            rep.passed = False
            rep.failures.append({"check": "inverse", "path": list(p)})
        rows = [g.distance_row(v) for v in p]
        for i in range(len(p)):
            ri = rows[i]
            for j in range(i + 1, len(p)):
                d = int(ri[p[j]])
                ln = j - i
                if ln > lam * d + kap:
                    rep.passed = False
                    rep.failures.append({"check": "quasi-geodesic", "path": list(p), "sub": [i, j]})
                if d > 0:
                    worst_ratio = max(worst_ratio, Fraction(ln, d))
                worst_excess = max(worst_excess, Fraction(ln - d))
    rep.measured_lambda = worst_ratio
    rep.measured_kappa = worst_excess
    rep.failures = rep.failures[:20]
    return rep


@dataclass
class QIReport:
    ok: bool
    witness: tuple[int, int] | None
    pairs_checked: int


def check_quasi_isometry(f: Sequence[int], src: MetricGraph, dst: MetricGraph, C,
                         samples: int = 2000, seed: int = 0) -> QIReport:
    C = as_fraction(C)
    k = max(C, Fraction(1))
    n = src.n
    if n * n <= 4 * samples:
        pairs = [(x, y) for x in range(n) for y in range(x + 1, n)]
    else:
        rng = random.Random(seed)
        pairs = [(rng.randrange(n), rng.randrange(n)) for _ in range(samples)]
    for x, y in pairs:
        d = src.d(x, y)
        dd = dst.d(f[x], f[y])
        if not (Fraction(d) / k - C <= dd <= k * d + C):
            return QIReport(False, (x, y), len(pairs))
    image = sorted(set(f))
    for v in range(dst.n):
        if dst.dist_to_set(v, image) > C:
            return QIReport(False, (-1, v), len(pairs))
    return QIReport(True, None, len(pairs))


class PushForward(StoredSet):
    kind = "PushForward"


def push_forward(f: Sequence[int], C, source: PathSystem, target: MetricGraph,
                 paths_per_pair: int = 1, max_attachments: int = 64, seed: int = 0
                 ) -> tuple[PushForward, dict]:
    """C-push-forward: rectified images with end attachments, closed under subsegments."""
    C = as_fraction(C)
    f = list(f)
    if len(f) != source.g.n:
        raise InputError("map must be defined on every source vertex")
    qi = check_quasi_isometry(f, source.g, target, C, seed=seed)
    if not qi.ok:
        raise InputError(f"map is not a {C}-quasi-isometry: witness pair {qi.witness}")
    near: dict[int, list[int]] = {}

    def around(v):
        if v not in near:
            row = target.distance_row(v)
            near[v] = sorted(np.flatnonzero(row <= C).tolist(), key=lambda w: (row[w], w))
        return near[v]

    store: set[tuple[int, ...]] = set()
    truncated = 0
    for x in range(source.g.n):
        for y in range(source.g.n):
            got, _ = source.special_paths(x, y, paths_per_pair)
            for h in got:
                img = [f[v] for v in h.vertices]
                A, B = around(img[0]), around(img[-1])
                combos = [(a, b) for a in A for b in B]
                if len(combos) > max_attachments:
                    truncated += len(combos) - max_attachments
                    combos = combos[:max_attachments]
                for a, b in combos:
                    store.add(rectify([a] + img + [b], target).vertices)
    cfg = PathSystemConfig(source.config.lambda0, source.config.kappa0, source.config.c_p,
                           source.config.undirected)
    ps = PushForward(target, sorted(store), cfg, enforce=False, complete_closure=True)
    meta = {"C": str(C), "base_paths": len(store), "closed_paths": len(ps.store),
            "truncated_attachments": truncated}
    return ps, meta


PathSystemHandle = PathSystem

__all__ = [
    "PathSystemConfig", "PathSystem", "PathSystemHandle", "AllGeodesics", "MedianMonotone",
    "TreeGeodesics", "StaircaseCombingZ2", "StoredSet", "PushForward", "push_forward",
    "validate_system", "ValidationReport", "line_search", "LineResult", "best_leg",
    "materialize", "load_stored_set", "check_quasi_isometry", "closure_of",
    "first_closure_defect", "INF",
]
