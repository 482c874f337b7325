"""Edge paths, polygonal lines and the basic path calculus."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .errors import InputError
from .graph import MetricGraph


class EdgePath:
    """A nonempty vertex sequence whose consecutive vertices are adjacent.

    Unit speed: the domain length ``|p|`` and the path length ``||p||`` agree.
    """

    __slots__ = ("vertices", "host")

    def __init__(self, vertices: Iterable[int], host: MetricGraph | None = None, check: bool = True):
        vs = tuple(int(v) for v in vertices)
        if not vs:
            raise InputError("an edge path needs at least one vertex")
        if check and host is not None:
            for a, b in zip(vs, vs[1:]):
                if not host.has_edge(a, b):
                    raise InputError(f"({a},{b}) is not an edge")
        self.vertices = vs
        self.host = host

    @property
    def length(self) -> int:
        return len(self.vertices) - 1

    norm = length

    @property
    def start(self) -> int:
        return self.vertices[0]

    @property
    def end(self) -> int:
        return self.vertices[-1]

    def inverse(self) -> "EdgePath":
        return EdgePath(self.vertices[::-1], self.host, check=False)

    def window(self, i: int, j: int) -> "EdgePath":
        """Subpath between parameters ``i <= j``."""
        return EdgePath(self.vertices[i:j + 1], self.host, check=False)

    def __iter__(self):
        return iter(self.vertices)

    def __getitem__(self, i):
        return self.vertices[i]

    def __eq__(self, other):
        return isinstance(other, EdgePath) and self.vertices == other.vertices

    def __hash__(self):
        return hash(self.vertices)

    def __repr__(self):
        return f"EdgePath({list(self.vertices)})"


def as_path(p, host: MetricGraph | None = None) -> EdgePath:
    if isinstance(p, EdgePath):
        return p
    return EdgePath(p, host)


def midpoint(p) -> int:
    """Vertex at parameter floor(|p|/2)."""
    vs = p.vertices if isinstance(p, EdgePath) else tuple(p)
    return vs[(len(vs) - 1) // 2]


def midpoint_index(length: int) -> int:
    return length // 2


def subsegment_between(p, u: int, v: int) -> EdgePath:
    """Subpath from the first occurrence of ``u`` to the last occurrence of ``v``."""
    p = as_path(p)
    vs = p.vertices
    try:
        i = vs.index(u)
    except ValueError:
        raise InputError(f"vertex {u} is not on the path") from None
    if v not in vs:
        raise InputError(f"vertex {v} is not on the path")
    j = len(vs) - 1 - vs[::-1].index(v)
    if j < i:
        raise InputError(f"{u} does not precede {v} on the path")
    return p.window(i, j)


def prefix_to(p, v: int) -> EdgePath:
    p = as_path(p)
    return subsegment_between(p, p.start, v)


def suffix_from(p, u: int) -> EdgePath:
    p = as_path(p)
    return subsegment_between(p, u, p.end)


def concat(*paths) -> EdgePath:
    out: list[int] = []
    host = None
    for q in paths:
        q = as_path(q)
        host = host or q.host
        if out and out[-1] != q.start:
            raise InputError(f"paths do not match: {out[-1]} != {q.start}")
        out.extend(q.vertices[1:] if out else q.vertices)
    return EdgePath(out, host, check=False)


def lexmin_geodesic(g: MetricGraph, a: int, b: int) -> EdgePath:
    """Lexicographically smallest shortest path from ``a`` to ``b`` (by vertex index)."""
    row = g.distance_row(b)
    out = [a]
    cur = a
    while cur != b:
        want = row[cur] - 1
        for w in g.adjacency[cur]:
            if row[w] == want:
                cur = w
                break
        out.append(cur)
    return EdgePath(out, g, check=False)


def rectify(points: Sequence[int], g: MetricGraph) -> EdgePath:
    """Join consecutive points by lexicographically smallest geodesics."""
    pts = list(points)
    if not pts:
        raise InputError("rectify needs a nonempty sequence")
    out = [pts[0]]
    for a, b in zip(pts, pts[1:]):
        out.extend(lexmin_geodesic(g, a, b).vertices[1:])
    return EdgePath(out, g, check=False)


def distance_to_path(g: MetricGraph, v: int, p) -> int:
    vs = p.vertices if isinstance(p, EdgePath) else tuple(p)
    return int(g.distance_row(v)[list(vs)].min())


def hausdorff(g: MetricGraph, p, q) -> int:
    a = list(p.vertices if isinstance(p, EdgePath) else p)
    b = list(q.vertices if isinstance(q, EdgePath) else q)
    da = max(int(g.distance_row(x)[b].min()) for x in a)
    db = max(int(g.distance_row(y)[a].min()) for y in b)
    return max(da, db)


def is_geodesic(g: MetricGraph, p) -> bool:
    p = as_path(p)
    return g.d(p.start, p.end) == p.length


@dataclass
class PolygonalLine:
    """Concatenation of legs with matching endpoints."""

    legs: list[EdgePath]
    tags: list[str] = field(default_factory=list)

    def __post_init__(self):
        self.legs = [as_path(leg) for leg in self.legs]
        for a, b in zip(self.legs, self.legs[1:]):
            if a.end != b.start:
                raise InputError(f"legs do not match: {a.end} != {b.start}")
        if not self.tags:
            self.tags = ["P"] * len(self.legs)

    @property
    def start(self) -> int:
        return self.legs[0].start

    @property
    def end(self) -> int:
        return self.legs[-1].end

    @property
    def leg_count(self) -> int:
        return len(self.legs)

    @property
    def norm(self) -> int:
        return sum(leg.length for leg in self.legs)

    def vertices(self) -> list[int]:
        out: list[int] = []
        for leg in self.legs:
            out.extend(leg.vertices[1:] if out else leg.vertices)
        return out

    def as_path(self) -> EdgePath:
        return EdgePath(self.vertices(), self.legs[0].host, check=False)

    def distance_to(self, g: MetricGraph, v: int) -> int:
        return int(g.distance_row(v)[np.array(self.vertices())].min())

    def to_json_obj(self) -> list[list[int]]:
        return [list(leg.vertices) for leg in self.legs]


__all__ = [
    "EdgePath", "PolygonalLine", "as_path", "midpoint", "midpoint_index", "subsegment_between",
    "prefix_to", "suffix_from", "concat", "lexmin_geodesic", "rectify", "distance_to_path",
    "hausdorff", "is_geodesic",
]
