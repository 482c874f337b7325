import itertools
import random
from fractions import Fraction

import networkx as nx
import pytest
from hypothesis import given, settings, strategies as st

from coarsenav.errors import InputError, PreconditionError
from coarsenav.graph import Ball
from coarsenav.instances import (FamilySpec, free_group_ball, generate, grid_graph, path_graph,
                                 regular_tree)
from coarsenav.morse import (MorseReport, ThinnessParams,
                             closest_point_projection, find_almost_orthogonal, is_almost_orthogonal,
                             minimal_p_contracting_constant, morse_gauge_oracle, p_contracting_check,
                             projection_points, proportionally_thin, strong_contraction_constant,
                             verify_thinness_witness, weakly_polygonally_morse)
from coarsenav.paths import EdgePath, lexmin_geodesic
from coarsenav.systems import AllGeodesics

from conftest import geodesic_legs, gid, to_nx


def axis(g, length, y=0):
    return EdgePath([gid(g, i, y) for i in range(length + 1)], g)


# independent oracles

def brute_thin(g, legs, vs, p):
    """Explicit leg-list DP: shortest line of <= n geodesic legs avoiding each ball."""
    D = dict(nx.all_pairs_shortest_path_length(to_nx(g)))
    a, b = vs[0], vs[-1]
    d = D[a][b]
    for z in set(vs):
        bad = {v for v in range(g.n) if D[z][v] <= p.epsilon * d}
        if a in bad or b in bad:
            continue
        cost = {}
        for (x, y), paths in legs.items():
            if any(not bad.intersection(q) for q in paths):
                cost[(x, y)] = D[x][y]
        best = {b: 0}
        for _ in range(p.n):
            nxt = dict(best)
            for u, cu in best.items():
                for v in range(g.n):
                    if (u, v) in cost and cu + cost[(u, v)] < nxt.get(v, 10**9):
                        nxt[v] = cu + cost[(u, v)]
            best = nxt
        if best.get(a, 10**9) <= p.A * d:
            return False
    return True


def brute_projection(g, gv):
    D = dict(nx.all_pairs_shortest_path_length(to_nx(g)))
    return [min(set(gv), key=lambda w: (D[v][w], w)) for v in range(g.n)], D


def brute_strong(g, gv):
    pi, D = brute_projection(g, gv)
    best = 0
    for v in range(g.n):
        if v in gv:
            continue
        dv = min(D[v][w] for w in gv)
        for r in range(dv):
            proj = {pi[u] for u in range(g.n) if D[v][u] <= r}
            best = max([best] + [D[s][t] for s in proj for t in proj])
    return best


def brute_pc(g, gv, C):
    pi, D = brute_projection(g, gv)
    h = to_nx(g)
    if any(D[x][pi[x]] > C for x in gv):
        return False
    for x, y in itertools.product(range(g.n), repeat=2):
        if D[pi[x]][pi[y]] < C:
            continue
        for q in nx.all_shortest_paths(h, x, y):
            if min(D[pi[x]][v] for v in q) > C or min(D[pi[y]][v] for v in q) > C:
                return False
    return True


def brute_morse(g, gv, Q, q):
    """Walk enumeration: farthest excursion of a budgeted walk between points of gamma."""
    D = dict(nx.all_pairs_shortest_path_length(to_nx(g)))
    best = 0
    for s in range(len(gv)):
        for t in range(s + 1, len(gv)):
            seg = gv[s:t + 1]
            budget = int(Q * D[gv[s]][gv[t]] + q)
            far = lambda w: min(D[w][u] for u in seg)
            frontier = {(gv[s], far(gv[s]))}
            for _ in range(budget):
                step = set()
                for v, m in frontier:
                    for w in g.neighbors(v):
                        step.add((w, max(m, far(w))))
                frontier |= step
            best = max([best] + [m for v, m in frontier if v == gv[t]])
    return best


# thinness

def test_params_validation():
    with pytest.raises(InputError):
        ThinnessParams(1, 2, 3)
    with pytest.raises(InputError):
        ThinnessParams(Fraction(1, 4), Fraction(1, 2), 3)
    p = ThinnessParams(Fraction(1, 3), 2, 3, 4, 10)
    assert ThinnessParams.from_json_obj(p.to_json_obj()) == p


def test_geodesics_thin_at_one_half():
    g = grid_graph(7)
    ps = AllGeodesics(g)
    rng = random.Random(1)
    for _ in range(10):
        h = lexmin_geodesic(g, rng.randrange(g.n), rng.randrange(g.n))
        for n in (1, 3, 7):
            assert proportionally_thin(h, ThinnessParams(Fraction(1, 2), 5, n), ps)


def test_staircase_two_versus_three_legs():
    inst = generate(FamilySpec("staircase_z2", {"N": 12}))
    g, ps = inst.graph, inst.system
    gamma = [g.index_of((i, 0)) for i in range(11)]
    assert proportionally_thin(gamma, ThinnessParams(Fraction(1, 4), 10, 2), ps)
    p3 = ThinnessParams(Fraction(1, 4), 3, 3)
    rep = proportionally_thin(gamma, p3, ps)
    assert not rep.verdict
    assert len(rep.witness["line"]) <= 3 and rep.witness["length"] <= 30
    assert verify_thinness_witness(g, ps, rep.witness, p3)
    # the rectangle over the segment is itself a violating line
    rect = {"window": gamma, "z": g.index_of((5, 0)),
            "line": [list(ps.combing_line(g.index_of(a), g.index_of(b)).vertices)
                     for a, b in [((10, 0), (10, 10)), ((10, 10), (0, 10)), ((0, 10), (0, 0))]]}
    assert verify_thinness_witness(g, ps, rect, p3)


def test_tampered_witness_rejected():
    inst = generate(FamilySpec("staircase_z2", {"N": 12}))
    g, ps = inst.graph, inst.system
    gamma = [g.index_of((i, 0)) for i in range(11)]
    p3 = ThinnessParams(Fraction(1, 4), 3, 3)
    w = dict(proportionally_thin(gamma, p3, ps).witness)
    w["z"] = g.index_of((12, 12))
    assert not verify_thinness_witness(g, ps, w, p3)


def test_wpm_examples():
    g = grid_graph(13)
    ps = AllGeodesics(g)
    gamma = axis(g, 12)
    assert weakly_polygonally_morse(gamma, ThinnessParams(Fraction(1, 8), 4, 3, 13), ps)
    rep = weakly_polygonally_morse(gamma, ThinnessParams(Fraction(1, 8), 4, 3, 4), ps)
    assert not rep.verdict
    i, j = rep.witness["window_params"]
    assert j - i >= 4
    t = regular_tree(3, 4)
    h = lexmin_geodesic(t, 20, 50)
    assert weakly_polygonally_morse(h, ThinnessParams(Fraction(1, 10), 5, 7, 1), AllGeodesics(t))


def test_thinness_matches_leg_enumeration():
    g = grid_graph(5)
    ps = AllGeodesics(g)
    legs = geodesic_legs(g)
    rng = random.Random(3)
    for _ in range(25):
        h = lexmin_geodesic(g, rng.randrange(g.n), rng.randrange(g.n))
        p = ThinnessParams(Fraction(rng.choice([1, 2, 3]), 8), rng.choice([1, 2, 3]),
                           rng.choice([1, 2, 3]))
        assert proportionally_thin(h, p, ps).verdict == brute_thin(g, legs, h.vertices, p)


@settings(max_examples=30, deadline=None)
@given(st.integers(1, 5), st.integers(1, 4), st.integers(1, 4), st.integers(0, 3),
       st.integers(0, 3), st.integers(0, 3))
def test_thinness_monotone(e, A, n, de, dA, dn):
    g = grid_graph(6)
    ps = AllGeodesics(g)
    gamma = lexmin_geodesic(g, gid(g, 0, 1), gid(g, 5, 3))
    strict = ThinnessParams(Fraction(e, 12), A + dA, n + dn)
    loose = ThinnessParams(Fraction(e + de, 12), A, n)
    if proportionally_thin(gamma, strict, ps):
        assert proportionally_thin(gamma, loose, ps)


# contraction

def test_p_contracting_examples():
    t = regular_tree(2, 4)
    h = lexmin_geodesic(t, 15, 30)
    assert p_contracting_check(h, 1, AllGeodesics(t))
    line = path_graph(9)
    assert p_contracting_check(list(range(9)), 0, AllGeodesics(line))
    g = grid_graph(11)
    rep = p_contracting_check(axis(g, 10), 2, AllGeodesics(g))
    assert not rep.verdict and rep.witness["kind"] == "avoiding_path"


@pytest.mark.parametrize("C", [0, 1, 2, 3, 4])
def test_p_contracting_matches_enumeration(C):
    g = grid_graph(5)
    gv = axis(g, 4, 1).vertices
    assert p_contracting_check(gv, C, AllGeodesics(g)).verdict == brute_pc(g, gv, C)


def test_minimal_p_constant_grid():
    g = grid_graph(11)
    assert minimal_p_contracting_constant(axis(g, 10), AllGeodesics(g)) == 10


def test_projection_ties_by_index():
    g = grid_graph(5)
    gv = axis(g, 4).vertices
    pi = closest_point_projection(g, gv)
    ref, _ = brute_projection(g, gv)
    assert list(pi) == ref


def test_strong_constant_examples():
    g = grid_graph(9)
    val = strong_contraction_constant(axis(g, 8), g)
    assert val >= 6 and val == brute_strong(g, axis(g, 8).vertices)
    t = regular_tree(2, 4)
    assert strong_contraction_constant(lexmin_geodesic(t, 15, 30), t) == 0
    assert strong_contraction_constant([4], t) == 0


@pytest.mark.parametrize("size,y", [(5, 0), (5, 2), (6, 1)])
def test_strong_constant_matches_enumeration(size, y):
    g = grid_graph(size)
    gv = axis(g, size - 1, y).vertices
    assert strong_contraction_constant(gv, g) == brute_strong(g, gv)


def test_strong_bounded_by_p_constant():
    for g, gamma in [(grid_graph(7), None), (free_group_ball(4), None), (regular_tree(2, 5), None)]:
        ps = AllGeodesics(g)
        rng = random.Random(g.n)
        for _ in range(4):
            h = lexmin_geodesic(g, rng.randrange(g.n), rng.randrange(g.n))
            C = minimal_p_contracting_constant(h, ps)
            assert strong_contraction_constant(h, g) <= 14 * C + 2


# projection points and almost orthogonality

def test_projection_points_examples():
    g = grid_graph(7)
    gamma = axis(g, 6)
    drop = EdgePath([gid(g, 3, y) for y in range(5, -1, -1)], g)
    upper, lowers = projection_points(drop, gamma, 2, g)
    assert upper == gid(g, 3, 2) and lowers == [gid(g, 3, 0)]
    assert projection_points(EdgePath([gid(g, 2, 0), gid(g, 2, 1)], g), gamma, 0, g)[0] == gid(g, 2, 0)
    assert projection_points(drop, gamma, 50, g)[0] == drop.start


def test_almost_orthogonal_in_grid():
    g = grid_graph(7)
    ps = AllGeodesics(g)
    gamma = axis(g, 6)
    h = find_almost_orthogonal(gid(g, 3, 5), gamma, 1, 2, ps)
    assert h.vertices == tuple(gid(g, 3, y) for y in range(5, -1, -1))
    assert find_almost_orthogonal(gid(g, 2, 0), gamma, 1, 2, ps).vertices == (gid(g, 2, 0),)


def test_almost_orthogonal_tree_gate():
    g = free_group_ball(4)
    ps = AllGeodesics(g)
    D = g.all_pairs()
    a, b = divmod(int(D.argmax()), g.n)
    gamma = lexmin_geodesic(g, a, b)
    for x in range(0, g.n, 7):
        h = find_almost_orthogonal(x, gamma, 1, 2, ps)
        gate = min(gamma.vertices, key=lambda v: D[x, v])
        assert h.end == gate and h.length == D[x, gate]
        assert is_almost_orthogonal(h, gamma, 1, 2, ps)


def test_almost_orthogonal_needs_endpoint_on_gamma():
    g = grid_graph(7)
    gamma = axis(g, 6)
    with pytest.raises(PreconditionError):
        is_almost_orthogonal(EdgePath([gid(g, 3, 3), gid(g, 3, 2)], g), gamma, 1, 2, AllGeodesics(g))


# Morse oracle

def test_morse_oracle_examples():
    t = regular_tree(2, 4)
    assert morse_gauge_oracle(lexmin_geodesic(t, 15, 30), 1, 0, t) == 0
    assert morse_gauge_oracle([3], 2, 5, t) == 0
    g = grid_graph(9)
    assert morse_gauge_oracle(axis(g, 8), 3, 0, g) >= 4


@pytest.mark.parametrize("Q,q", [(1, 0), (2, 0), (2, 1), (3, 0)])
def test_morse_oracle_matches_walk_enumeration(Q, q):
    g = grid_graph(4)
    gv = axis(g, 3, 1).vertices
    assert morse_gauge_oracle(gv, Q, q, g) == brute_morse(g, gv, Q, q)


def test_report_json():
    rep = MorseReport(False, {"z": 1}, {"C": Fraction(1, 2)})
    assert rep.to_json_obj()["constants"]["C"] == "1/2" and not rep
