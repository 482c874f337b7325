"""Navigability search, slides, avoidance constructions and divergence."""
from __future__ import annotations

import csv
import io
import math
import random
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np
from scipy.sparse import diags
from scipy.sparse.csgraph import shortest_path

from .errors import (CapabilityError, CoarseNavError, ConsistencyError, InputError,
                     PreconditionError)
from .graph import Ball, MetricGraph, as_fraction, bfs, median
from .paths import EdgePath, PolygonalLine, as_path, lexmin_geodesic
from .systems import PathSystem, best_leg, line_search

INFINITE = math.inf


def exclusion_ball(m: int, R) -> Ball:
    """Closed ball whose complement is exactly {v : d(v, m) >= R}."""
    R = as_fraction(R)
    return Ball(m, Fraction(math.ceil(R) - 1))


def line_distance(g: MetricGraph, line, m: int) -> int:
    vs = line.vertices() if isinstance(line, PolygonalLine) else list(as_path(line).vertices)
    return int(g.distance_row(m)[vs].min())


@dataclass
class NavigabilityInstance:
    m: int
    R: Fraction
    alpha: PolygonalLine
    g: MetricGraph = field(repr=False)

    def __post_init__(self):
        self.R = as_fraction(self.R)
        if self.R < 0:
            raise InputError("R must be nonnegative")
        if not isinstance(self.alpha, PolygonalLine):
            self.alpha = PolygonalLine([as_path(leg, self.g) for leg in self.alpha])
        row = self.g.distance_row(self.m)
        if row[self.alpha.vertices()].min() < self.R:
            raise InputError("alpha comes closer than R to m")
        if row[self.alpha.start] > 2 * self.R or row[self.alpha.end] > 2 * self.R:
            raise InputError("alpha's endpoints must lie within 2R of m")

    @property
    def n(self) -> int:
        return self.alpha.leg_count


@dataclass
class InfeasibleCertificate:
    """Exhaustion proof of the hop-bounded search."""

    hops: int
    budget: int
    min_length: int | None  # None: no line at all within the hop bound

    def to_json_obj(self) -> dict:
        return {"infeasible": True, "hops": self.hops, "budget": self.budget,
                "min_length": self.min_length}


def navigate_search(inst: NavigabilityInstance, C, k: int, ps: PathSystem,
                    enforce_radius: bool = True) -> PolygonalLine | InfeasibleCertificate:
    """Hop-bounded search for a line with at most k*n legs, length <= CnR, avoiding B(m, R/C).

    ``enforce_radius=False`` lifts the R >= C hypothesis; the search itself is
    meaningful for any R.
    """
    C = as_fraction(C)
    if enforce_radius and inst.R < C:
        raise PreconditionError("navigability needs R >= C")
    n = inst.n
    ball = Ball(inst.m, inst.R / C)
    budget = math.floor(C * n * inst.R)
    a, b = inst.alpha.start, inst.alpha.end
    res = line_search(ps, a, b, ball, k * n, budget=budget, want_line=True)
    if res is not None:
        legs = res.legs if res.legs else [(a,)]
        return PolygonalLine([EdgePath(leg, ps.g, check=False) for leg in legs])
    free = line_search(ps, a, b, ball, k * n)
    return InfeasibleCertificate(k * n, budget, None if free is None else free.length)


def in_closure(ps: PathSystem, leg: Sequence[int], brute_max: int = 200) -> bool:
    """Is leg a subsegment of some special path?"""
    leg = tuple(leg)
    if ps.contains(leg):
        return True
    g = ps.g
    if g.n > brute_max:
        return False
    k = len(leg)
    for x in range(g.n):
        for y in range(g.n):
            paths, _ = ps.special_paths(x, y, cap=200)
            for p in paths:
                vs = p.vertices
                for i in range(len(vs) - k + 1):
                    if vs[i:i + k] == leg:
                        return True
    return False


@dataclass
class LineCheck:
    ok: bool
    reasons: list[str]
    length: int
    legs: int
    clearance: int


def verify_line(line: PolygonalLine, ps: PathSystem, start: int, end: int, max_legs: int,
                max_length, ball: Ball) -> LineCheck:
    """Independent check of a navigation output: legs, length and ball avoidance."""
    g = ps.g
    reasons = []
    legs = [tuple(leg.vertices) for leg in line.legs]
    if legs[0][0] != start or legs[-1][-1] != end:
        reasons.append("wrong endpoints")
    for a, b in zip(legs, legs[1:]):
        if a[-1] != b[0]:
            reasons.append("legs do not chain")
    for leg in legs:
        for u, v in zip(leg, leg[1:]):
            if not g.has_edge(u, v):
                reasons.append(f"non-edge {u}-{v}")
        if not in_closure(ps, leg):
            reasons.append(f"leg {leg[0]}->{leg[-1]} is not in the closure")
    length = sum(len(leg) - 1 for leg in legs)
    if len(legs) > max_legs:
        reasons.append(f"{len(legs)} legs > {max_legs}")
    if length > as_fraction(max_length):
        reasons.append(f"length {length} > {max_length}")
    row = g.distance_row(ball.center)
    clearance = min(int(row[list(leg)].min()) for leg in legs)
    if not ball.is_empty() and clearance <= ball.radius:
        reasons.append(f"meets the ball (clearance {clearance})")
    return LineCheck(not reasons, reasons, length, len(legs), clearance)


# avoidance constructions

def _check_avoid_pre(g, z1, z2, y, m, R, h1, h2):
    for z in (z1, z2):
        if g.d(m, z) > 4 * R:
            raise PreconditionError("d(m, z_i) must be at most 4R")
    for h, z in ((h1, z1), (h2, z2)):
        if h.start != z or h.end != y:
            raise PreconditionError("h_i must run from z_i to y")
        if line_distance(g, h, m) < R:
            raise PreconditionError("h_i must stay at distance >= R from m")


def _point_at(h: EdgePath, dist: Fraction) -> int:
    """Index of the vertex of a geodesic h at distance ceil(dist) from its start (capped)."""
    return min(math.ceil(dist), h.length)


def avoiding_geodesic(g: MetricGraph, z: int, y: int, m: int, R) -> EdgePath | None:
    """A geodesic z -> y staying at distance >= R from m, if one exists."""
    ball = exclusion_ball(m, R)
    if ball.is_empty():
        return lexmin_geodesic(g, z, y)
    mask = g.ball_mask(ball)
    if mask[z] or mask[y]:
        return None
    row = bfs(g.adjacency, y, mask)
    if row[z] != g.d(z, y):
        return None
    out, cur = [z], z
    while cur != y:
        want = row[cur] - 1
        cur = next(w for w in g.adjacency[cur] if row[w] == want)
        out.append(cur)
    return EdgePath(out, g, check=False)


def median_avoid(z1: int, z2: int, y: int, m: int, R, g: MetricGraph,
                 h1=None, h2=None, check_median: bool = False) -> PolygonalLine:
    """At most three geodesic legs from z1 to z2, length <= 28R, staying R away from m."""
    R = as_fraction(R)
    if R < 14:
        raise PreconditionError("median avoidance needs R >= 14")
    if check_median:
        from .graph import is_median_graph
        if not is_median_graph(g):
            raise PreconditionError("graph is not median")
    h1 = as_path(h1, g) if h1 is not None else avoiding_geodesic(g, z1, y, m, R)
    h2 = as_path(h2, g) if h2 is not None else avoiding_geodesic(g, z2, y, m, R)
    if h1 is None or h2 is None:
        raise PreconditionError("no geodesic from z_i to y avoids the ball")
    _check_avoid_pre(g, z1, z2, y, m, R, h1, h2)
    if g.d(y, z1) <= 5 * R or g.d(y, z2) <= 5 * R:
        legs = [h1, h2.inverse()]
        tags = ["short", "short"]
    else:
        i1, i2 = _point_at(h1, 5 * R), _point_at(h2, 5 * R)
        x1, x2 = h1[i1], h2[i2]
        u = median(g, x1, x2, y)
        mid = lexmin_geodesic(g, x1, u).vertices + lexmin_geodesic(g, u, x2).vertices[1:]
        legs = [h1.window(0, i1), EdgePath(mid, g, check=False), h2.window(0, i2).inverse()]
        tags = ["h1", "through-median", "h2"]
    line = PolygonalLine(legs, tags)
    if line.leg_count > 3 or line.norm > 28 * R or line_distance(g, line, m) < R:
        raise ConsistencyError(f"median avoidance postcondition failed: norm {line.norm}, "
                               f"clearance {line_distance(g, line, m)}, R {R}")
    return line


def combing_avoid(z1: int, z2: int, y: int, m: int, R, ps: PathSystem, kappa0: int = 0,
                  h1=None, h2=None) -> PolygonalLine:
    """Five combing legs from z1 to z2, length <= 100(k0+1)R, staying R away from m."""
    g = ps.g
    R = as_fraction(R)
    if R < 50 * (kappa0 + 1):
        raise PreconditionError("combing avoidance needs R >= 50(kappa0+1)")
    h1 = as_path(h1, g) if h1 is not None else ps.combing_line(z1, y)
    h2 = as_path(h2, g) if h2 is not None else ps.combing_line(z2, y)
    _check_avoid_pre(g, z1, z2, y, m, R, h1, h2)
    if g.d(y, z1) <= (20 * kappa0 + 5) * R or g.d(y, z2) <= (20 * kappa0 + 5) * R:
        line = PolygonalLine([h1, h2.inverse()], ["short", "short"])
    else:
        i1, i2 = _point_at(h1, 5 * R), _point_at(h2, 5 * R)
        x1, x2 = h1[i1], h2[i2]
        a1, a2 = ps.combing_line(y, x1), ps.combing_line(y, x2)
        off = 20 * kappa0 * R
        j1 = max(a1.length - math.ceil(off), 0)
        j2 = max(a2.length - math.ceil(off), 0)
        u1, u2 = a1[j1], a2[j2]
        legs = [h1.window(0, i1), a1.window(j1, a1.length).inverse(), ps.combing_line(u1, u2),
                a2.window(j2, a2.length), h2.window(0, i2).inverse()]
        line = PolygonalLine(legs, ["h1", "alpha1", "bridge", "alpha2", "h2"])
    C = 100 * (kappa0 + 1)
    if line.leg_count > 5 or line.norm > C * R or line_distance(g, line, m) < R:
        raise ConsistencyError(f"combing avoidance postcondition failed: norm {line.norm}, "
                               f"clearance {line_distance(g, line, m)}, R {R}")
    return line


# slides

@dataclass
class SlideResult:
    line: PolygonalLine
    log: list[dict]
    measured_C: Fraction
    escalated: bool
    kappa0: int


def _toward(g: MetricGraph, m: int, v: int) -> int:
    """Neighbour of v one step closer to m (smallest index)."""
    row = g.distance_row(m)
    return next(w for w in g.adjacency[v] if row[w] == row[v] - 1)


def _dist(g, m, vs) -> int:
    return int(g.distance_row(m)[list(vs)].min())


def _calibrate(leg: EdgePath, m: int, R: Fraction, ps: PathSystem, log: list) -> tuple[EdgePath, EdgePath, int]:
    g = ps.g
    beta = leg
    gamma = EdgePath((leg.end,), g, check=False)
    kappa = 0
    # central slides: walk the junction toward m
    while _dist(g, m, beta) > R and _dist(g, m, gamma) > R:
        junction = beta.end
        x = _toward(g, m, junction)
        nb, k1 = ps.bounded_replacement(beta, x)
        ng_rev, k2 = ps.bounded_replacement(gamma.inverse(), x)
        if g.d(m, x) >= g.d(m, junction):
            raise ConsistencyError("central slide did not approach m")
        beta, gamma = nb, ng_rev.inverse()
        kappa = max(kappa, k1, k2)
        log.append({"step": "central", "junction": x, "d": g.d(m, x)})
    flipped = _dist(g, m, beta) > R
    if flipped:
        # slide along gamma instead: work with reversed roles
        beta, gamma = gamma.inverse(), beta.inverse()
    # side slides: move the split point along beta until gamma touches the annulus
    while _dist(g, m, gamma) > R:
        row = g.distance_row(m)
        t = next(i for i, v in enumerate(beta.vertices) if row[v] <= R)
        end = beta.end
        er = g.distance_row(end)
        s = next(i for i in range(t, beta.length + 1) if er[beta[i]] <= 1)
        x = beta[s]
        if s >= beta.length:
            raise ConsistencyError("side slide made no progress")
        ng_rev, k = ps.bounded_replacement(gamma.inverse(), x)
        beta = beta.window(0, s)
        gamma = ng_rev.inverse()
        kappa = max(kappa, k)
        log.append({"step": "side", "split": x, "param": s})
    if flipped:
        beta, gamma = gamma.inverse(), beta.inverse()
    return beta, gamma, kappa


def _pick_calibrated(path: EdgePath, m: int, lo: Fraction, R: Fraction, g: MetricGraph) -> int:
    """Index of a vertex of path in the annulus lo < d(., m) <= R (first one)."""
    row = g.distance_row(m)
    for i, v in enumerate(path.vertices):
        if lo < row[v] <= R:
            return i
    raise ConsistencyError("calibrated path misses the annulus")


def slides_navigate(inst: NavigabilityInstance, ps: PathSystem, C, k: int,
                    avoid: str = "auto", kappa0: int | None = None,
                    enforce_radius: bool = True) -> SlideResult:
    """Calibrate every leg by central and side slides, then stitch avoidance certificates.

    ``avoid`` selects the avoidance construction: "median", "combing", "search"
    or "auto" (the specialised one when its preconditions hold, else the search).
    Any failure of the stitched construction escalates to navigate_search.
    """
    g = ps.g
    C = as_fraction(C)
    R, m = inst.R, inst.m
    if enforce_radius and R < C:
        raise PreconditionError("navigability needs R >= C")
    log: list[dict] = []
    paths: list[EdgePath] = []
    kap = 0
    for i, leg in enumerate(inst.alpha.legs):
        beta, gamma, kk = _calibrate(leg, m, R, ps, log)
        kap = max(kap, kk)
        paths.extend([beta, gamma])
        log.append({"step": "calibrated", "leg": i, "beta": [beta.start, beta.end],
                    "gamma": [gamma.start, gamma.end]})
    kap = kappa0 if kappa0 is not None else max(kap, 1)
    Rp = R - kap
    target = Ball(m, R / C)
    pts = [paths[0].start]
    cuts = []
    for j, p in enumerate(paths[1:], start=1):
        idx = _pick_calibrated(p, m, Rp, R, g)
        pts.append(p[idx])
        cuts.append(idx)
    pts.append(paths[-1].end)
    pieces: list[EdgePath] = []
    escalated = False
    try:
        for j in range(len(paths)):
            z1, z2 = pts[j], pts[j + 1]
            # h1: from z1 forward to the junction y; h2: from z2 back to y
            cur = paths[j]
            start_idx = 0 if j == 0 else cuts[j - 1]
            h1 = cur.window(start_idx, cur.length)
            y = h1.end
            if j + 1 < len(paths):
                nxt = paths[j + 1]
                h2 = nxt.window(0, cuts[j]).inverse()
            else:
                h2 = EdgePath((y,), g, check=False)
            line = _avoid(z1, z2, y, m, Rp, ps, h1, h2, avoid, C, k, target, kap)
            log.append({"step": "avoid", "from": z1, "to": z2, "legs": line.leg_count, "norm": line.norm})
            pieces.extend(line.legs)
    except (PreconditionError, ConsistencyError, CapabilityError) as exc:
        log.append({"step": "escalate", "reason": str(exc)})
        escalated = True
    if escalated:
        res = navigate_search(inst, C, k, ps, enforce_radius)
        if isinstance(res, InfeasibleCertificate):
            raise CoarseNavError(f"escalated search found no line: {res.to_json_obj()}")
        out = res
    else:
        out = PolygonalLine([p for p in pieces if p.length > 0] or [pieces[0]])
    clearance = line_distance(g, out, m)
    if clearance <= target.radius:
        raise ConsistencyError("slides output meets B(m, R/C)")
    nR = inst.n * R
    measured = Fraction(out.norm) / nR if nR else Fraction(0)
    measured = max(measured, R / clearance if clearance else measured)
    return SlideResult(out, log, measured, escalated, kap)


def _avoid(z1, z2, y, m, Rp, ps, h1, h2, avoid, C, k, target, kap) -> PolygonalLine:
    g = ps.g
    choice = avoid
    if choice == "auto":
        choice = "search"
        if Rp >= 50 * (kap + 1) and _is_tree(g):
            choice = "combing"
        elif Rp >= 14 and _is_grid_like(ps):
            choice = "median"
    if choice == "median":
        line = median_avoid(z1, z2, y, m, Rp, g, h1, h2)
    elif choice == "combing":
        line = combing_avoid(z1, z2, y, m, Rp, ps, 0, h1, h2)
    else:
        budget = math.floor(C * Rp) if Rp > 0 else 0
        res = line_search(ps, z1, z2, target, k, budget=budget, want_line=True)
        if res is None:
            raise PreconditionError(f"no {k}-leg avoiding line {z1}->{z2} within {budget}")
        if not res.legs:
            return PolygonalLine([EdgePath((z1,), g, check=False)])
        return PolygonalLine([EdgePath(leg, g, check=False) for leg in res.legs])
    if line_distance(g, line, m) <= target.radius:
        raise ConsistencyError("avoidance line meets the target ball")
    return line


def _is_tree(g) -> bool:
    return g.is_tree()


def _is_grid_like(ps) -> bool:
    return getattr(ps, "_median_ok", None) is not None and ps._median_ok()


# divergence

def divergence_threshold(g: MetricGraph, a: int, b: int, c: int, delta, epsilon) -> Fraction:
    return as_fraction(delta) * min(g.d(c, a), g.d(c, b)) - as_fraction(epsilon)


def divergence_point(a: int, b: int, c: int, delta, epsilon, g: MetricGraph):
    """Shortest a-b path through vertices at distance >= threshold from c (inf if none)."""
    if a == b:
        raise PreconditionError("divergence needs a != b")
    thr = divergence_threshold(g, a, b, c, delta, epsilon)
    if thr <= 0:
        return g.d(a, b)
    ball = Ball(c, Fraction(math.ceil(thr) - 1))
    mask = g.ball_mask(ball)
    if mask[a] or mask[b]:
        return INFINITE
    d = bfs(g.adjacency, a, mask)[b]
    return int(d) if d >= 0 else INFINITE


@dataclass
class DivergenceEntry:
    n: int
    delta: Fraction
    epsilon: Fraction
    value: float | int
    witness: tuple | None = None


@dataclass
class DivergenceProfile:
    entries: list[DivergenceEntry]
    exhaustive: bool
    samples: int | None
    seed: int
    restricted_to: int | None = None  # inner-safe radius when restricted

    @property
    def is_lower_bound(self) -> bool:
        return not self.exhaustive

    @property
    def linear_coefficient(self):
        vals = [e.value / e.n for e in self.entries if e.n > 0]
        return max(vals) if vals else 0

    @property
    def has_infinite(self) -> bool:
        return any(e.value == INFINITE for e in self.entries)

    def to_rows(self, family: str = "", size="") -> list[dict]:
        return [{"family": family, "instance_size": size, "n": e.n, "delta": str(e.delta),
                 "epsilon": str(e.epsilon), "value": "inf" if e.value == INFINITE else e.value,
                 "is_lower_bound": self.is_lower_bound} for e in self.entries]

    def to_json_obj(self) -> dict:
        return {"entries": [{"n": e.n, "delta": str(e.delta), "epsilon": str(e.epsilon),
                             "value": "inf" if e.value == INFINITE else e.value,
                             "witness": list(e.witness) if e.witness else None}
                            for e in self.entries],
                "exhaustive": self.exhaustive, "is_lower_bound": self.is_lower_bound,
                "samples": self.samples, "seed": self.seed, "restricted_to": self.restricted_to,
                "linear_coefficient": _num(self.linear_coefficient)}


def _num(x):
    if x == INFINITE:
        return "inf"
    return str(Fraction(x).limit_denominator(10**6)) if not isinstance(x, int) else x


CSV_COLUMNS = ["family", "instance_size", "n", "delta", "epsilon", "value", "is_lower_bound"]


def profiles_to_csv(rows: list[dict]) -> str:
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=CSV_COLUMNS, lineterminator="\n")
    w.writeheader()
    for r in rows:
        w.writerow(r)
    return buf.getvalue()


def _punctured_block(g: MetricGraph, mask: np.ndarray, sources: np.ndarray) -> np.ndarray:
    keep = diags((~mask).astype(np.int8))
    A = keep @ g.csr() @ keep
    D = shortest_path(A, unweighted=True, directed=False, indices=sources)
    return D


def divergence_profile(g: MetricGraph, n_values: Sequence[int], delta, epsilon,
                       mode: str = "exhaustive", samples: int = 400, seed: int = 0,
                       vertices: Sequence[int] | None = None, restricted_to: int | None = None,
                       exhaustive_max: int = 200) -> DivergenceProfile:
    """Max of divergence_point over triples with d(a, b) <= n, for each n.

    For a fixed center c and source a, every target b with d(c, b) >= d(c, a)
    shares the threshold of (a, c), so one punctured search from a handles all
    of them; the remaining targets are covered with the roles of a and b swapped.
    """
    delta, epsilon = as_fraction(delta), as_fraction(epsilon)
    if not 0 < delta < 1:
        raise InputError("delta must lie in (0, 1)")
    verts = np.arange(g.n) if vertices is None else np.asarray(sorted(set(vertices)))
    in_set = np.zeros(g.n, dtype=bool)
    in_set[verts] = True
    nmax = max(n_values) if n_values else 0
    if mode == "exhaustive":
        if len(verts) > exhaustive_max:
            raise InputError(f"exhaustive divergence limited to {exhaustive_max} vertices")
        pairs = [(int(c), int(a)) for c in verts for a in verts if a != c]
    elif mode == "sampled":
        # a uniform source, then a center on a sphere around it of uniform radius
        rng = random.Random(seed)
        pairs = set()
        vl = [int(v) for v in verts]
        tries = 0
        while len(pairs) < samples and tries < samples * 20:
            tries += 1
            a = rng.choice(vl)
            ra = g.distance_row(a)
            rho = rng.randint(1, max(nmax, 1))
            sphere = np.flatnonzero((ra == rho) & in_set)
            if sphere.size:
                pairs.add((int(sphere[rng.randrange(sphere.size)]), a))
        pairs = sorted(pairs)
    else:
        raise InputError(f"unknown mode {mode!r}")
    best = {}  # d(a,b) -> (value, witness)
    by_c: dict[int, list[int]] = {}
    for c, a in pairs:
        by_c.setdefault(c, []).append(a)
    for c, sources in by_c.items():
        rc = g.distance_row(c)
        groups: dict[int, list[int]] = {}
        for a in sources:
            thr = delta * int(rc[a]) - epsilon
            r = math.ceil(thr) - 1 if thr > 0 else -1
            groups.setdefault(r, []).append(a)
        for r, srcs in groups.items():
            src = np.asarray(srcs)
            if r < 0:
                D = np.stack([g.distance_row(int(a)) for a in src]).astype(float)
                mask = np.zeros(g.n, dtype=bool)
            else:
                mask = g.ball_mask(Ball(c, Fraction(r)))
                D = _punctured_block(g, mask, src)
            for idx, a in enumerate(src):
                dab = g.distance_row(int(a))
                sel = in_set & (rc >= rc[a]) & (dab >= 1) & (dab <= nmax)
                if not sel.any():
                    continue
                bs = np.flatnonzero(sel)
                vals = D[idx][bs]
                for dv in np.unique(dab[bs]):
                    pick = dab[bs] == dv
                    j = int(np.argmax(vals[pick]))
                    v = vals[pick][j]
                    b = int(bs[pick][j])
                    v = INFINITE if np.isinf(v) else int(v)
                    cur = best.get(int(dv))
                    if cur is None or v > cur[0]:
                        best[int(dv)] = (v, (int(a), b, c))
    entries = []
    run, wit = 0, None
    for n in sorted(n_values):
        for dv in sorted(k for k in best if k <= n):
            if best[dv][0] > run:
                run, wit = best[dv]
        entries.append(DivergenceEntry(n, delta, epsilon, run, wit))
    return DivergenceProfile(entries, mode == "exhaustive" and vertices is None, None if mode == "exhaustive" else samples,
                             seed, restricted_to)


# instance sampling

def sample_avoid_instance(g: MetricGraph, R: int, rng: random.Random, m: int | None = None,
                          span: int | None = None, tries: int = 500):
    """Random (z1, z2, y, m, h1, h2) satisfying the avoidance hypotheses, or None."""
    n = g.n
    for _ in range(tries):
        mm = m if m is not None else rng.randrange(n)
        rm = g.distance_row(mm)
        ring = np.flatnonzero((rm >= R) & (rm <= 4 * R))
        if ring.size == 0:
            continue
        z1, z2 = int(ring[rng.randrange(ring.size)]), int(ring[rng.randrange(ring.size)])
        far = np.flatnonzero(rm >= R) if span is None else np.flatnonzero((rm >= R) & (rm <= span))
        y = int(far[rng.randrange(far.size)])
        h1 = avoiding_geodesic(g, z1, y, mm, R)
        if h1 is None:
            continue
        h2 = avoiding_geodesic(g, z2, y, mm, R)
        if h2 is None:
            continue
        return z1, z2, y, mm, h1, h2
    return None


__all__ = [
    "NavigabilityInstance", "InfeasibleCertificate", "navigate_search", "verify_line", "LineCheck",
    "in_closure", "median_avoid", "combing_avoid", "avoiding_geodesic", "slides_navigate",
    "SlideResult", "divergence_point", "divergence_profile", "DivergenceProfile", "DivergenceEntry",
    "profiles_to_csv", "CSV_COLUMNS", "exclusion_ball", "line_distance", "sample_avoid_instance",
    "INFINITE",
]
