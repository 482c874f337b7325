"""Midthin and anti-contracting detection, contraction spaces and their geometry."""
from __future__ import annotations

import math
import random
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np

from .errors import IncompleteEnumerationError, InputError, PreconditionError
from .graph import Ball, MetricGraph, as_fraction, four_point_delta
from .paths import EdgePath, as_path, hausdorff, lexmin_geodesic
from .systems import PathSystem

ALLOWED_CHECK_RADIUS = 2000


class Gauge:
    """Nondecreasing K: max of affine pieces a*r+b and a step table {r_i: K_i}."""

    def __init__(self, affine: Sequence[tuple] = (), steps: Sequence[tuple] = ()):
        self.affine = [(as_fraction(a), as_fraction(b)) for a, b in affine]
        self.steps = sorted((as_fraction(r), as_fraction(k)) for r, k in steps)
        if not self.affine and not self.steps:
            raise InputError("gauge needs at least one piece")
        if any(a < 0 for a, _ in self.affine):
            raise InputError("affine pieces must be nondecreasing")
        ks = [k for _, k in self.steps]
        if ks != sorted(ks):
            raise InputError("step values must be nondecreasing")

    def __call__(self, r) -> Fraction:
        r = as_fraction(r)
        vals = [a * r + b for a, b in self.affine]
        step = None
        for ri, ki in self.steps:
            if ri <= r:
                step = ki
        if step is not None:
            vals.append(step)
        return max(vals) if vals else Fraction(0)

    def largest_radius_below(self, length: int, cap: int) -> int:
        """Largest integer r in [0, cap] with K(r) <= length, or -1."""
        if self(0) > length:
            return -1
        lo, hi = 0, cap
        if self(hi) <= length:
            return hi
        while hi - lo > 1:
            mid = (lo + hi) // 2
            if self(mid) <= length:
                lo = mid
            else:
                hi = mid
        return lo

    def slope(self) -> Fraction:
        return max((a for a, _ in self.affine), default=Fraction(0))

    def to_json_obj(self) -> dict:
        return {"affine": [[str(a), str(b)] for a, b in self.affine],
                "steps": [[str(r), str(k)] for r, k in self.steps]}

    @classmethod
    def from_json_obj(cls, obj: dict) -> "Gauge":
        return cls([tuple(Fraction(x) for x in p) for p in obj.get("affine", [])],
                   [tuple(Fraction(x) for x in p) for p in obj.get("steps", [])])

    def __repr__(self):
        return f"Gauge(affine={[(str(a), str(b)) for a, b in self.affine]}, steps={len(self.steps)})"


@dataclass
class AllowedReport:
    allowed: bool
    violations: list[str] = field(default_factory=list)


@dataclass
class ContractionTriple:
    K: Gauge
    n: int
    ps: PathSystem
    full: bool = True

    def __post_init__(self):
        if self.n < 7:
            raise InputError("contraction triples need n >= 7")

    def check_allowed(self, radius: int = ALLOWED_CHECK_RADIUS) -> AllowedReport:
        D = self.ps.config.D
        rep = AllowedReport(True)
        for r in range(radius + 1):
            k = self.K(r)
            if not k > D(1):
                rep.violations.append(f"K({r})={k} <= D(1)={D(1)}")
            if not k > 2 * D(r):
                rep.violations.append(f"K({r})={k} <= 2D({r})={2 * D(r)}")
            if not k > D(3 * r + D(6 * r)):
                rep.violations.append(f"K({r})={k} <= D(3r+D(6r))={D(3 * r + D(6 * r))}")
            if len(rep.violations) > 5:
                break
        c = self.ps.config.c_p
        need = 3 * c + 6 * c * c
        if self.K.slope() < need:
            rep.violations.append(f"asymptotic slope {self.K.slope()} < {need}")
        rep.allowed = not rep.violations
        return rep

    def to_json_obj(self) -> dict:
        return {"K": self.K.to_json_obj(), "n": self.n, "system": self.ps.describe()}


def default_gauge(ps: PathSystem) -> Gauge:
    """Tightest affine gauge meeting the three thresholds, floored by 4r+4."""
    c = ps.config.c_p
    # D(3r + D(6r)) + 1 = (3c + 6c^2) r + c^2 + c + 1
    return Gauge([(4, 4), (3 * c + 6 * c * c, c * c + c + 1)])


def default_triple(ps: PathSystem, n: int = 7) -> ContractionTriple:
    t = ContractionTriple(default_gauge(ps), n, ps)
    rep = t.check_allowed()
    if not rep.allowed:
        raise AssertionError(f"derived default gauge is not allowed: {rep.violations}")
    return t


def _require_allowed(triple: ContractionTriple):
    if not getattr(triple, "_allowed_ok", False):
        rep = triple.check_allowed()
        if not rep.allowed:
            raise PreconditionError(f"triple is not allowed: {rep.violations[:3]}")
        triple._allowed_ok = True


def _check_member(h: EdgePath, ps: PathSystem):
    if not ps.contains(h.vertices):
        raise PreconditionError(f"path {list(h.vertices)[:12]} is not a special path")


def neck_radius(h, n: int, ps: PathSystem, check: bool = True) -> Fraction:
    """Max over (n,P)-lines from h+ to h- of their distance to the midpoint of h."""
    h = as_path(h, ps.g)
    if n < 1:
        raise InputError("n must be positive")
    if check:
        _check_member(h, ps)
    g = ps.g
    m = h.vertices[h.length // 2]
    a, b = h.start, h.end
    cap = min(g.d(a, m), g.d(b, m))
    # smallest r such that no line from h+ to h- avoids B(m, r)
    lo, hi = 0, cap
    if not ps.line_reachable(b, a, Ball(m, 0), n):
        return Fraction(0)
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if ps.line_reachable(b, a, Ball(m, mid), n):
            lo = mid
        else:
            hi = mid
    return Fraction(hi)


@dataclass
class MidthinResult:
    midthin: bool
    neck: Fraction

    def __bool__(self):
        return self.midthin


def is_midthin(h, triple: ContractionTriple) -> MidthinResult:
    _require_allowed(triple)
    h = as_path(h, triple.ps.g)
    r = neck_radius(h, triple.n, triple.ps)
    return MidthinResult(h.length >= triple.K(r), r)


class _WindowOracle:
    """Cached midthin decisions for windows given by (start, end, midpoint, length)."""

    def __init__(self, triple: ContractionTriple):
        self.t = triple
        self.ps = triple.ps
        self.g = triple.ps.g
        self.K0 = triple.K(0)
        self.cache: dict[tuple[int, int, int, int], bool] = {}

    def midthin(self, a: int, b: int, m: int, length: int) -> bool:
        if length < self.K0:
            return False
        key = (a, b, m, length)
        v = self.cache.get(key)
        if v is None:
            g = self.g
            if g.is_tree():
                cap = min(g.tree_dist(a, m), g.tree_dist(b, m))
            else:
                cap = min(g.d(a, m), g.d(b, m))
            r0 = self.t.K.largest_radius_below(length, cap)
            if r0 < 0:
                v = False
            elif r0 >= cap:
                v = True
            else:
                v = not self.ps.line_reachable(b, a, Ball(m, r0), self.t.n)
            if len(self.cache) > 2_000_000:
                self.cache.clear()
            self.cache[key] = v
        return v

    def first_midthin_window(self, vs: Sequence[int]) -> tuple[int, int] | None:
        L = len(vs) - 1
        for i in range(L + 1):
            for j in range(i, L + 1):
                ln = j - i
                if ln >= self.K0 and self.midthin(vs[i], vs[j], vs[i + ln // 2], ln):
                    return (i, j)
        return None

    def new_windows_ok(self, vs: Sequence[int]) -> bool:
        """Windows ending at the last vertex are all non-midthin."""
        j = len(vs) - 1
        last = vs[j]
        K0 = self.K0
        for i in range(0, j + 1):
            ln = j - i
            if ln < K0:
                break
            if self.midthin(vs[i], last, vs[i + ln // 2], ln):
                return False
        return True


@dataclass
class AntiResult:
    anti_contracting: bool
    witness: tuple[int, int] | None
    witness_path: list[int] | None = None

    def __bool__(self):
        return self.anti_contracting


def is_anti_contracting(h, triple: ContractionTriple, oracle: _WindowOracle | None = None) -> AntiResult:
    _require_allowed(triple)
    h = as_path(h, triple.ps.g)
    _check_member(h, triple.ps)
    oracle = oracle or _WindowOracle(triple)
    w = oracle.first_midthin_window(h.vertices)
    if w is None:
        return AntiResult(True, None)
    return AntiResult(False, w, list(h.vertices[w[0]:w[1] + 1]))


class ContractionSpace:
    """Base graph plus an edge for every pair joined by an anti-contracting special path."""

    def __init__(self, base: MetricGraph, triple: ContractionTriple, extra_edges: set,
                 scope: str = "all", pairs_checked: int = 0):
        self.base = base
        self.triple = triple
        self.extra_edges = set(extra_edges)
        self.scope = scope
        self.pairs_checked = pairs_checked
        self.hat = MetricGraph(base.n, list(base.edges()) + sorted(self.extra_edges),
                               base.labels, check_connected=False)
        self._diameter = None
        self._delta = None

    def dhat(self, x: int, y: int) -> int:
        return self.hat.d(x, y)

    def diameter(self) -> int:
        if self._diameter is None:
            self._diameter = self.hat.diameter()
        return self._diameter

    def delta_hat(self, sampling="auto", seed: int = 0):
        if self._delta is None or self._delta[0] != (sampling, seed):
            self._delta = ((sampling, seed), four_point_delta(self.hat, sampling, seed))
        return self._delta[1]

    def edge_counts(self) -> dict:
        base = self.base.edge_count
        return {"base": base, "anti_contracting": len(self.extra_edges),
                "total": self.hat.edge_count}

    def summary(self, sampling="auto", seed: int = 0) -> dict:
        dr = self.delta_hat(sampling, seed)
        return {"diameter": self.diameter(), "delta_hat": str(dr.delta),
                "delta_hat_is_lower_bound": dr.is_lower_bound,
                "edge_counts": self.edge_counts(), "scope": self.scope}

    def to_json_obj(self) -> dict:
        base_edges = [[u, v] for u, v in self.base.edges()]
        edges = [{"u": u, "v": v, "anti_contracting": False} for u, v in base_edges]
        edges += [{"u": u, "v": v, "anti_contracting": True} for u, v in sorted(self.extra_edges)]
        obj = self.base.to_json_obj()
        obj["edges"] = [[e["u"], e["v"]] for e in edges]
        obj["edge_tags"] = [e["anti_contracting"] for e in edges]
        obj["anti_contracting_edges"] = [[u, v] for u, v in sorted(self.extra_edges)]
        obj["triple"] = self.triple.to_json_obj()
        obj["scope"] = self.scope
        return obj


def load_contraction_edges(obj: dict) -> tuple[MetricGraph, set]:
    """Inverse of ContractionSpace.to_json_obj: the base graph and the tagged extra edges."""
    tags = obj.get("edge_tags", [])
    edges = obj["edges"]
    base = [e for e, t in zip(edges, tags) if not t]
    extra = {tuple(e) for e, t in zip(edges, tags) if t}
    g = MetricGraph.from_json_obj({"vertices": obj["vertices"], "edges": base,
                                   "labels": obj.get("labels", {})})
    return g, extra


def build_contraction_space(g: MetricGraph, triple: ContractionTriple, scope: str = "all",
                            samples: int = 2000, seed: int = 0, source_budget: int | None = None,
                            pair_budget: int = 200_000) -> ContractionSpace:
    """Add an edge (x, y) iff some special path between x and y is anti-contracting.

    The search extends special-path prefixes one vertex at a time and prunes a
    prefix as soon as a window ending at its last vertex is midthin; since every
    window of a prefix is a window of its extensions, pruning is exact.
    """
    _require_allowed(triple)
    ps = triple.ps
    if ps.g is not g:
        raise InputError("triple's path system lives on a different graph")
    oracle = _WindowOracle(triple)
    n = g.n
    extra: set[tuple[int, int]] = set()
    if scope == "all":
        pairs = None
    elif scope == "sampled":
        rng = random.Random(seed)
        pairs = sorted({tuple(sorted((rng.randrange(n), rng.randrange(n)))) for _ in range(samples)})
    else:
        raise InputError(f"unknown pair scope {scope!r}")
    supports_ext = True
    try:
        ps.extensions((0,), None)
    except Exception:
        supports_ext = False
    if source_budget is None:
        source_budget = 400 if not g.is_tree() else 10**7

    def add(x, y):
        if x != y and not g.has_edge(x, y):
            extra.add((min(x, y), max(x, y)))

    if pairs is None and supports_ext:
        reached_from: list[set] = []
        complete_from: list[bool] = []
        for x in range(n):
            reached, complete = _dfs_from(ps, oracle, x, source_budget)
            reached_from.append(reached)
            complete_from.append(complete)
            for y in reached:
                add(x, y)
        for x in range(n):
            for y in range(x + 1, n):
                if y in reached_from[x] or x in reached_from[y]:
                    continue
                orient = []
                if not complete_from[x]:
                    orient.append((x, y))
                if not complete_from[y]:
                    orient.append((y, x))
                if orient and _pair_anti(ps, oracle, orient, pair_budget, True):
                    add(x, y)
        checked = n * (n - 1) // 2
    else:
        todo = pairs if pairs is not None else [(x, y) for x in range(n) for y in range(x + 1, n)]
        for x, y in todo:
            if x != y and _pair_anti(ps, oracle, [(x, y), (y, x)], pair_budget, supports_ext,
                                     strict=(scope == "all")):
                add(x, y)
        checked = len(todo)
    return ContractionSpace(g, triple, extra, scope, checked)


def _dfs_from(ps: PathSystem, oracle: _WindowOracle, x: int, budget: int) -> tuple[set, bool]:
    reached = set()
    stack = [[x]]
    nodes = 0
    while stack:
        p = stack.pop()
        nodes += 1
        if nodes > budget:
            return reached, False
        if not oracle.new_windows_ok(p):
            continue
        reached.add(p[-1])
        for w in reversed(ps.extensions(p, None)):
            stack.append(p + [w])
    return reached, True


def _pair_anti(ps, oracle, orientations, budget, supports_ext, strict: bool = True) -> bool:
    """Does some special path in one of the given orientations avoid midthin windows?"""
    for a, b in orientations:
        if supports_ext:
            stack = [[a]]
            nodes = 0
            while stack:
                p = stack.pop()
                nodes += 1
                if nodes > budget:
                    if strict:
                        raise IncompleteEnumerationError(
                            f"special-path search for pair ({a},{b}) exceeded {budget} prefixes")
                    break
                if not oracle.new_windows_ok(p):
                    continue
                if p[-1] == b:
                    return True
                for w in reversed(ps.extensions(p, b)):
                    stack.append(p + [w])
        else:
            got, complete = ps.special_paths(a, b, budget)
            for p in got:
                if oracle.first_midthin_window(p.vertices) is None:
                    return True
            if not complete and strict:
                raise IncompleteEnumerationError(f"special paths {a}->{b} exceed cap {budget}")
    return False


@dataclass
class QGResult:
    """Minimal Q with |t-s|/Q - Q <= dhat <= Q|t-s| + Q over all parameter pairs."""

    value: float
    binding: tuple[int, int] | None
    pairs: list[tuple[int, int]] = field(repr=False, default_factory=list)

    def admits(self, Q) -> bool:
        """Exact test of the quasi-geodesic inequalities at rational Q."""
        Q = as_fraction(Q)
        if Q < 1:
            return False
        for delta, dh in self.pairs:
            if Fraction(delta) / Q - Q > dh or dh > Q * delta + Q:
                return False
        return True


def image_quasi_geodesic_constant(h, space: ContractionSpace) -> QGResult:
    h = as_path(h, space.base)
    vs = h.vertices
    rows = {}
    pairs = set()
    best, binding = 1.0, None
    for s in range(len(vs)):
        if vs[s] not in rows:
            rows[vs[s]] = space.hat.distance_row(vs[s])
        r = rows[vs[s]]
        for t in range(s + 1, len(vs)):
            delta, dh = t - s, int(r[vs[t]])
            pairs.add((delta, dh))
    for delta, dh in sorted(pairs):
        lower = (-dh + math.sqrt(dh * dh + 4 * delta)) / 2
        upper = dh / (delta + 1)
        q = max(lower, upper)
        if q > best:
            best, binding = q, (delta, dh)
    return QGResult(best, binding, sorted(pairs))


def weak_dichotomy_bound(delta, rho) -> Fraction:
    delta, rho = as_fraction(delta), as_fraction(rho)
    if delta < 0 or rho < 0:
        raise InputError("delta and rho must be nonnegative")
    return 4 * delta + 4 * rho + 3


@dataclass
class GrowthValue:
    count: int
    truncated: bool


def growth(g: MetricGraph, x: int, k: int) -> int:
    return growth_report(g, x, k).count


def growth_report(g: MetricGraph, x: int, k: int) -> GrowthValue:
    row = g.distance_row(g.check_vertex(x))
    return GrowthValue(int((row <= k).sum()), k > int(row.max()))


def growth_min(g: MetricGraph, k: int) -> int:
    return min(growth(g, x, k) for x in range(g.n))


def image_geodesic_hausdorff(h, space: ContractionSpace) -> int:
    """Hausdorff distance in the contraction space between h and a dhat-geodesic."""
    h = as_path(h, space.base)
    geo = lexmin_geodesic(space.hat, h.start, h.end)
    return hausdorff(space.hat, h.vertices, geo.vertices)


__all__ = [
    "Gauge", "ContractionTriple", "default_gauge", "default_triple", "neck_radius", "is_midthin",
    "is_anti_contracting", "ContractionSpace", "build_contraction_space", "QGResult",
    "image_quasi_geodesic_constant", "weak_dichotomy_bound", "growth", "growth_report",
    "growth_min", "image_geodesic_hausdorff", "load_contraction_edges", "MidthinResult",
    "AntiResult", "AllowedReport",
]
