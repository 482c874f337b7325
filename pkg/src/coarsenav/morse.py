"""Curvature detectors: proportional thinness, contraction and a brute-force Morse oracle.

The Morse oracle ranges over length-budgeted paths rather than quasi-geodesics.
Every tame quasi-geodesic is length-budgeted, so the value it returns is an
upper bound for the true gauge.
"""
from __future__ import annotations

import math
import random
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np

from .errors import CoarseNavError, InputError, PreconditionError
from .graph import Ball, MetricGraph, as_fraction
from .paths import EdgePath, PolygonalLine, as_path
from .systems import PathSystem, line_search

EXHAUSTIVE_MAX = 400
ORACLE_NOTE = "upper bound: ranges over length-budgeted paths"


class SearchExhaustedError(CoarseNavError):
    exit_code = 4

    def __init__(self, msg: str, trace: list):
        super().__init__(msg)
        self.trace = trace


@dataclass(frozen=True)
class ThinnessParams:
    epsilon: Fraction
    A: Fraction
    n: int
    R: Fraction = Fraction(0)
    L: Fraction | None = None

    def __post_init__(self):
        object.__setattr__(self, "epsilon", as_fraction(self.epsilon))
        object.__setattr__(self, "A", as_fraction(self.A))
        object.__setattr__(self, "R", as_fraction(self.R))
        if self.L is not None:
            object.__setattr__(self, "L", as_fraction(self.L))
        if not 0 < self.epsilon < 1:
            raise InputError("epsilon must lie in (0, 1)")
        if self.A < 1:
            raise InputError("A must be at least 1")
        if self.n < 1:
            raise InputError("n must be at least 1")
        if self.R < 0 or (self.L is not None and self.L <= 0):
            raise InputError("R must be nonnegative and L positive")

    def to_json_obj(self) -> dict:
        return {"epsilon": str(self.epsilon), "A": str(self.A), "n": self.n, "R": str(self.R),
                "L": None if self.L is None else str(self.L)}

    @classmethod
    def from_json_obj(cls, obj: dict) -> "ThinnessParams":
        return cls(Fraction(obj["epsilon"]), Fraction(obj["A"]), int(obj["n"]),
                   Fraction(obj.get("R", "0")), None if obj.get("L") is None else Fraction(obj["L"]))


@dataclass
class MorseReport:
    verdict: bool
    witness: dict | None = None
    constants: dict = field(default_factory=dict)

    def __bool__(self):
        return self.verdict

    def to_json_obj(self) -> dict:
        return {"verdict": self.verdict, "witness": self.witness,
                "constants": {k: (str(v) if isinstance(v, Fraction) else v)
                              for k, v in self.constants.items()}}


# proportional thinness

def _thin_violation(vs: Sequence[int], p: ThinnessParams, ps: PathSystem):
    g = ps.g
    a, b = vs[0], vs[-1]
    d = g.d(a, b)
    radius = p.epsilon * d
    budget = math.floor(p.A * d)
    seen = set()
    for z in vs:
        if z in seen:
            continue
        seen.add(z)
        ball = Ball(z, radius)
        if g.in_ball(a, ball) or g.in_ball(b, ball):
            continue
        res = line_search(ps, b, a, ball, p.n, budget=budget, want_line=True)
        if res is not None:
            return {"z": z, "radius": str(radius), "line": [list(leg) for leg in res.legs],
                    "length": res.length, "budget": budget}
    return None


def proportionally_thin(gamma, p: ThinnessParams, ps: PathSystem) -> MorseReport:
    """Does every short (n, P)-line from the end back to the start pass close to each point?"""
    vs = as_path(gamma).vertices
    w = _thin_violation(vs, p, ps)
    consts = {"d": ps.g.d(vs[0], vs[-1]), **p.to_json_obj()}
    if w is None:
        return MorseReport(True, None, consts)
    w["window"] = list(vs)
    return MorseReport(False, w, consts)


def weakly_polygonally_morse(gamma, p: ThinnessParams, ps: PathSystem) -> MorseReport:
    vs = as_path(gamma).vertices
    T = len(vs) - 1
    checked = 0
    for i in range(T + 1):
        for j in range(i, T + 1):
            ln = j - i
            if ln < p.R or (p.L is not None and ln > p.L):
                continue
            checked += 1
            w = _thin_violation(vs[i:j + 1], p, ps)
            if w is not None:
                w["window"] = list(vs[i:j + 1])
                w["window_params"] = [i, j]
                return MorseReport(False, w, {"windows_checked": checked, **p.to_json_obj()})
    return MorseReport(True, None, {"windows_checked": checked, **p.to_json_obj()})


def verify_thinness_witness(g: MetricGraph, ps: PathSystem, witness: dict, p: ThinnessParams) -> bool:
    """Replay a violation: legs are special paths avoiding the ball, within budget."""
    window = witness["window"]
    a, b = window[0], window[-1]
    d = g.d(a, b)
    ball = Ball(witness["z"], p.epsilon * d)
    legs = witness["line"]
    if not legs or legs[0][0] != b or legs[-1][-1] != a or len(legs) > p.n:
        return False
    if witness["z"] not in window:
        return False
    mask = g.ball_mask(ball)
    total = 0
    for x, y in zip(legs, legs[1:]):
        if x[-1] != y[0]:
            return False
    for leg in legs:
        if not ps.contains(leg) or mask[list(leg)].any():
            return False
        total += len(leg) - 1
    return total <= p.A * d


# projections and contraction

def closest_point_projection(g: MetricGraph, gamma) -> np.ndarray:
    """For each vertex, the closest vertex of gamma (smallest index on ties)."""
    pts = sorted(set(as_path(gamma).vertices))
    D = np.stack([g.distance_row(v) for v in pts])
    return np.asarray(pts, dtype=np.int64)[D.argmin(axis=0)]


def p_contracting_check(gamma, C, ps: PathSystem, projection: Sequence[int] | None = None,
                        samples: int = 200, seed: int = 0) -> MorseReport:
    g = ps.g
    C = as_fraction(C)
    vs = as_path(gamma).vertices
    pi = np.asarray(projection, dtype=np.int64) if projection is not None else closest_point_projection(g, vs)
    for x in vs:
        if g.d(x, int(pi[x])) > C:
            return MorseReport(False, {"kind": "far_projection", "x": x}, {"C": str(C)})
    exhaustive = g.n <= EXHAUSTIVE_MAX
    if exhaustive:
        sources = range(g.n)
    else:
        rng = random.Random(seed)
        sources = sorted(rng.sample(range(g.n), min(samples, g.n)))
    image = sorted(set(int(v) for v in pi))
    pd = {p: g.distance_row(p)[pi] for p in image}  # d(p, pi(y)) for all y
    for p in image:
        ball = Ball(p, C)
        far = pd[p] >= C
        for x in sources:
            px = int(pi[x])
            row = ps.leg_row(x, ball)
            # x-side: paths from x avoiding B(pi(x), C) to y with d(pi(x), pi(y)) >= C
            if px == p:
                bad = np.flatnonzero((row >= 0) & far)
                if bad.size:
                    y = int(bad[0])
                    return _pc_fail(x, y, p, C, exhaustive)
            # y-side: paths from x to y avoiding B(pi(y), C) with pi(y) = p
            bad = np.flatnonzero((row >= 0) & (pi == p) & (pd[p][x] >= C))
            if bad.size:
                return _pc_fail(x, int(bad[0]), p, C, exhaustive)
    return MorseReport(True, None, {"C": str(C), "exhaustive": exhaustive,
                                    "sources": g.n if exhaustive else len(sources)})


def _pc_fail(x, y, p, C, exhaustive) -> MorseReport:
    return MorseReport(False, {"kind": "avoiding_path", "x": x, "y": y, "avoided": p},
                       {"C": str(C), "exhaustive": exhaustive})


def minimal_p_contracting_constant(gamma, ps: PathSystem, c_max: int | None = None, **kw) -> int | None:
    c_max = c_max if c_max is not None else ps.g.diameter()
    for c in range(c_max + 1):
        if p_contracting_check(gamma, c, ps, **kw).verdict:
            return c
    return None


def strong_contraction_constant(gamma, g: MetricGraph) -> int:
    """Largest projection diameter of a ball disjoint from gamma (centers scanned exhaustively)."""
    vs = as_path(gamma).vertices
    pi = closest_point_projection(g, vs)
    on = set(vs)
    Dg = np.stack([g.distance_row(v) for v in vs]).min(axis=0)
    best = 0
    for v in range(g.n):
        if v in on:
            continue
        r = int(Dg[v]) - 1
        if r < 0:
            continue
        members = g.distance_row(v) <= r
        proj = np.unique(pi[members])
        if proj.size > 1:
            sub = np.stack([g.distance_row(int(q))[proj] for q in proj])
            best = max(best, int(sub.max()))
    return best


def projection_points(h, gamma, R, g: MetricGraph) -> tuple[int, list[int]]:
    """R-upper projection point of h onto gamma and the lower points near it."""
    R = as_fraction(R)
    hv = as_path(h).vertices
    gv = as_path(gamma).vertices
    gset = sorted(set(gv))
    Dg = np.stack([g.distance_row(v) for v in gset]).min(axis=0)
    upper = next((v for v in hv if Dg[v] <= R), None)
    if upper is None:
        raise PreconditionError("no vertex of h lies within R of gamma")
    row = g.distance_row(upper)
    lowers = [v for v in gset if row[v] <= R]
    return upper, lowers


def is_almost_orthogonal(h, gamma, R, C, ps: PathSystem) -> bool:
    """Every R-lower projection point is close to h's endpoint, relative to |h|."""
    g = ps.g
    hv = as_path(h).vertices
    if hv[-1] not in as_path(gamma).vertices:
        raise PreconditionError("h must end on gamma")
    R, C = as_fraction(R), as_fraction(C)
    _, lowers = projection_points(hv, gamma, R, g)
    bound = Fraction(g.d(hv[0], hv[-1])) / C + 4 * ps.config.D(R + 1)
    return all(g.d(t, hv[-1]) <= bound for t in lowers)


def _lower_param(gv: Sequence[int], lowers: list[int], i: int) -> int:
    params = [k for k, v in enumerate(gv) if v in set(lowers)]
    return min(params, key=lambda k: (abs(k - i), k))


def find_almost_orthogonal(x: int, gamma, R, C, ps: PathSystem) -> EdgePath:
    """Leaning scan over special paths from x to the points of gamma.

    Each candidate is left leaning when its lower projection parameter is at
    most its target parameter. Candidates at a leaning switch, at the extremes,
    or hitting their own target are tried, nearest targets first.
    """
    g = ps.g
    gv = as_path(gamma).vertices
    if x in gv:
        return EdgePath((x,), g, check=False)
    T = len(gv) - 1
    hs, s, trace = [], [], []
    for i in range(T + 1):
        paths, _ = ps.special_paths(x, gv[i], cap=1)
        h = paths[0]
        _, lowers = projection_points(h, gv, R, g)
        si = _lower_param(gv, lowers, i)
        hs.append(h)
        s.append(si)
        trace.append({"i": i, "s": si, "leaning": "left" if si <= i else "right"})
    left = [si <= i for i, si in enumerate(s)]
    cands = {0, T} | {i for i in range(T + 1) if s[i] == i}
    for i in range(T):
        if left[i] != left[i + 1]:
            cands |= {i, i + 1}
    order = sorted(range(T + 1), key=lambda i: (i not in cands, g.d(x, gv[i]), i))
    for i in order:
        if is_almost_orthogonal(hs[i], gv, R, C, ps):
            return hs[i]
    raise SearchExhaustedError("no almost orthogonal special path found", trace)


# Morse oracle

def morse_gauge_oracle(gamma, Q, q, g: MetricGraph) -> Fraction:
    """Largest excursion from gamma[s, t] of a path of length at most Q d + q between its ends.

    A path through w has length at least d(a, w) + d(w, b), and two geodesics
    realize that, so the far vertices reachable within budget are exactly those
    with d(a, w) + d(w, b) within budget.
    """
    Q, q = as_fraction(Q), as_fraction(q)
    vs = as_path(gamma).vertices
    T = len(vs) - 1
    if T == 0:
        return Fraction(0)
    rows = np.stack([g.distance_row(v) for v in vs]).astype(np.int64)
    best = 0
    for s in range(T + 1):
        # prefix minimum over gamma[s, t]
        seg_min = rows[s].copy()
        for t in range(s + 1, T + 1):
            np.minimum(seg_min, rows[t], out=seg_min)
            d = int(rows[s][vs[t]])
            budget = math.floor(Q * d + q)
            ok = rows[s] + rows[t] <= budget
            if ok.any():
                best = max(best, int(seg_min[ok].max()))
    return Fraction(best)


__all__ = [
    "ThinnessParams", "MorseReport", "proportionally_thin", "weakly_polygonally_morse",
    "verify_thinness_witness", "closest_point_projection", "p_contracting_check",
    "minimal_p_contracting_constant", "strong_contraction_constant", "projection_points",
    "is_almost_orthogonal", "find_almost_orthogonal", "morse_gauge_oracle", "SearchExhaustedError",
    "ORACLE_NOTE",
]
