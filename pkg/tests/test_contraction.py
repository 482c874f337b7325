import itertools
import math
import random
from fractions import Fraction

import networkx as nx
import pytest

from coarsenav.contraction import (ContractionTriple, Gauge, build_contraction_space,
                                   default_triple, growth, growth_report,
                                   image_quasi_geodesic_constant, is_anti_contracting, is_midthin,
                                   load_contraction_edges, neck_radius, weak_dichotomy_bound)
from coarsenav.errors import IncompleteEnumerationError, InputError, PreconditionError
from coarsenav.graph import MetricGraph
from coarsenav.instances import (FamilySpec, automorphisms, cycle_graph, free_group_ball, generate,
                                 grid_graph, path_graph, random_tree, regular_tree)
from coarsenav.paths import EdgePath, lexmin_geodesic
from coarsenav.systems import AllGeodesics

from conftest import brute_hat_edges, brute_neck, geodesic_legs, gid, to_nx


def _triple(g):
    return default_triple(AllGeodesics(g))


def test_default_gauge_values():
    t = _triple(grid_graph(3))
    for r in range(12):
        assert t.K(r) == max(4 * r + 4, 9 * r + 3)
    assert t.check_allowed().allowed


def test_too_small_gauge_rejected():
    ps = AllGeodesics(grid_graph(3))
    t = ContractionTriple(Gauge([(4, 4)]), 7, ps)
    assert not t.check_allowed().allowed
    with pytest.raises(PreconditionError):
        is_midthin(EdgePath([0, 1], ps.g), t)
    with pytest.raises(InputError):
        ContractionTriple(Gauge([(9, 3)]), 6, ps)


def test_tree_neck_is_zero():
    g = regular_tree(2, 4)
    ps = AllGeodesics(g)
    for b in (15, 22, 30):
        h = lexmin_geodesic(g, 16, b)
        assert neck_radius(h, 7, ps) == 0


def test_cycle_neck():
    g = cycle_graph(8)
    assert neck_radius(EdgePath([0, 1, 2, 3, 4], g), 7, AllGeodesics(g)) == 2


def test_grid_axis_neck():
    g = grid_graph(7)
    h = EdgePath([gid(g, i, 0) for i in range(7)], g)
    assert neck_radius(h, 7, AllGeodesics(g)) == 3


def test_neck_not_special_path():
    g = cycle_graph(8)
    with pytest.raises(PreconditionError):
        neck_radius(EdgePath([0, 1, 2, 3, 4, 5], g), 7, AllGeodesics(g))


def _small_graphs():
    rng = random.Random(11)
    out = [cycle_graph(8), cycle_graph(7), grid_graph(3), random_tree(9, 2)]
    while len(out) < 8:
        n = rng.randrange(6, 11)
        edges = {(i, rng.randrange(i)) for i in range(1, n)}
        for _ in range(rng.randrange(1, 5)):
            a, b = rng.sample(range(n), 2)
            edges.add((min(a, b), max(a, b)))
        out.append(MetricGraph(n, sorted(edges)))
    return out


@pytest.mark.parametrize("g", _small_graphs(), ids=lambda g: f"n{g.n}m{g.edge_count}")
def test_neck_matches_line_enumeration(g):
    ps = AllGeodesics(g)
    legs = geodesic_legs(g)
    for (x, y), paths in legs.items():
        for p in paths[:3]:
            for n in (1, 2, 3, 4):
                assert neck_radius(EdgePath(p, g), n, ps) == brute_neck(g, legs, p, n)


def test_neck_monotone_in_n():
    for g in (cycle_graph(8), grid_graph(5)):
        ps = AllGeodesics(g)
        h = lexmin_geodesic(g, 0, g.n - 1 if g.n != 8 else 4)
        vals = [neck_radius(h, n, ps) for n in range(1, 8)]
        assert vals == sorted(vals)


def test_midthin_examples():
    g = regular_tree(2, 4)
    t = _triple(g)
    res = is_midthin(lexmin_geodesic(g, 16, 30), t)
    assert res.midthin and res.neck == 0
    assert not is_midthin(lexmin_geodesic(g, 16, 7), t)
    g = grid_graph(7)
    t = _triple(g)
    h = EdgePath([gid(g, i, 0) for i in range(7)], g)
    res = is_midthin(h, t)
    assert not res and res.neck == 3 and t.K(3) >= 16


def test_anti_contracting_examples():
    g = regular_tree(2, 4)
    t = _triple(g)
    assert is_anti_contracting(EdgePath([0, 1], g), t)
    b = next(v for v in range(g.n) if g.d(15, v) == 4)
    h = lexmin_geodesic(g, 15, b)
    assert h.length == 4 == t.K(0)
    res = is_anti_contracting(h, t)
    assert not res and res.witness == (0, 4)


def test_grid_geodesics_anti_contracting():
    g = grid_graph(11)
    t = _triple(g)
    rng = random.Random(4)
    for _ in range(15):
        a, b = rng.randrange(g.n), rng.randrange(g.n)
        assert is_anti_contracting(lexmin_geodesic(g, a, b), t)


def test_path_graph_space_complete():
    g = path_graph(3)
    space = build_contraction_space(g, _triple(g))
    assert space.diameter() == 1


def test_free_group_space_diameter():
    g = free_group_ball(6)
    space = build_contraction_space(g, _triple(g))
    assert space.diameter() == 4
    D = g.all_pairs()
    H = space.hat.all_pairs()
    assert ((D + 2) // 3 == H).all()
    assert all(g.d(x, y) <= 3 for x, y in space.extra_edges)


def test_grid_space_complete():
    g = grid_graph(11)
    assert build_contraction_space(g, _triple(g)).diameter() == 1


@pytest.mark.parametrize("g", [cycle_graph(8), cycle_graph(9), random_tree(10, 1), grid_graph(3)],
                         ids=["C8", "C9", "tree10", "grid3"])
def test_hat_edges_match_brute_force(g):
    t = _triple(g)
    assert build_contraction_space(g, t).extra_edges == brute_hat_edges(g, t.K, t.n)


def test_lipschitz_and_cliques():
    g = free_group_ball(4)
    t = _triple(g)
    space = build_contraction_space(g, t)
    D, H = g.all_pairs(), space.hat.all_pairs()
    assert (H <= D).all()
    rng = random.Random(0)
    for _ in range(40):
        a, b = rng.randrange(g.n), rng.randrange(g.n)
        h = lexmin_geodesic(g, a, b)
        if is_anti_contracting(h, t):
            vs = h.vertices
            assert all(H[u, v] <= 1 for u in vs for v in vs)
            # every subsegment stays anti-contracting
            for i, j in itertools.combinations(range(len(vs)), 2):
                assert is_anti_contracting(h.window(i, j), t)


def test_equivariance_free_group():
    spec = FamilySpec("free_group_ball", {"radius": 4})
    inst = generate(spec)
    space = build_contraction_space(inst.graph, _triple(inst.graph))
    H = space.hat.all_pairs()
    perms = automorphisms(spec, inst)
    assert len(perms) == 8
    for p in perms:
        assert (H[p][:, p] == H).all()


def test_incomplete_enumeration_is_an_error():
    g = cycle_graph(12)
    with pytest.raises(IncompleteEnumerationError):
        build_contraction_space(g, _triple(g), source_budget=1, pair_budget=1)


def test_space_json_roundtrip():
    g = free_group_ball(3)
    space = build_contraction_space(g, _triple(g))
    base, extra = load_contraction_edges(space.to_json_obj())
    assert base.edges() == g.edges() and extra == space.extra_edges


def test_quasi_geodesic_constants():
    g = free_group_ball(6)
    space = build_contraction_space(g, _triple(g))
    assert image_quasi_geodesic_constant(EdgePath([0, 1], g), space).value == 1
    a, b = 0, 0
    D = g.all_pairs()
    a, b = divmod(int(D.argmax()), g.n)
    res = image_quasi_geodesic_constant(lexmin_geodesic(g, a, b), space)
    assert res.value <= 4 and res.admits(4)


def test_grid_axis_quasi_geodesic_in_complete_space():
    g = grid_graph(11)
    space = build_contraction_space(g, _triple(g))
    h = EdgePath([gid(g, i, 0) for i in range(11)], g)
    res = image_quasi_geodesic_constant(h, space)
    # dhat is 1 off the diagonal, so the binding pair is (10, 1): Q^2 + Q = 10
    assert res.binding == (10, 1)
    assert math.isclose(res.value, (-1 + math.sqrt(41)) / 2)
    assert not res.admits(Fraction(27, 10)) and res.admits(Fraction(271, 100))


def test_weak_dichotomy_bound():
    assert weak_dichotomy_bound(0, 0) == 3
    assert weak_dichotomy_bound(4, Fraction(1, 2)) == 21
    assert weak_dichotomy_bound(2, 5) == weak_dichotomy_bound(5, 2)
    with pytest.raises(InputError):
        weak_dichotomy_bound(-1, 0)


def test_growth_closed_forms():
    line = path_graph(41)
    plane = grid_graph(21)
    tree = free_group_ball(6)
    c = plane.index_of((10, 10))
    for k in range(6):
        assert growth(line, 20, k) == 2 * k + 1
        assert growth(plane, c, k) == 2 * k * k + 2 * k + 1
        assert growth(tree, 0, k) == 2 * 3 ** k - 1
    assert growth_report(tree, 0, 9).truncated
