import itertools
import random
from fractions import Fraction

import networkx as nx
import numpy as np
import pytest

from coarsenav.errors import CapabilityError, InputError, StructuralError
from coarsenav.graph import Ball, MetricGraph
from coarsenav.instances import (FamilySpec, cycle_graph, generate, grid_graph, random_tree,
                                 regular_tree)
from coarsenav.paths import hausdorff, is_geodesic, lexmin_geodesic, rectify
from coarsenav.systems import (AllGeodesics, StoredSet, TreeGeodesics, materialize, push_forward,
                               validate_system)

from conftest import gid, to_nx


def test_tree_has_unique_special_path():
    g = regular_tree(2, 3)
    got, complete = AllGeodesics(g).special_paths(3, 12, 10)
    assert len(got) == 1 and complete


def test_grid_geodesic_count():
    g = grid_graph(3)
    got, complete = AllGeodesics(g).special_paths(gid(g, 0, 0), gid(g, 2, 2), 100)
    assert len(got) == 6 and complete
    ref = {tuple(p) for p in nx.all_shortest_paths(to_nx(g), gid(g, 0, 0), gid(g, 2, 2))}
    assert {p.vertices for p in got} == ref


def test_trivial_path():
    g = grid_graph(3)
    got, _ = AllGeodesics(g).special_paths(4, 4, 1)
    assert got[0].vertices == (4,)


def test_min_leg_examples():
    g = grid_graph(9)
    ps = AllGeodesics(g)
    x, y = gid(g, 0, 4), gid(g, 8, 4)
    assert ps.min_leg_avoiding(x, y, Ball(0, -1)) == 8
    assert ps.min_leg_avoiding(x, y, Ball(gid(g, 4, 4), 0)) is None
    t = regular_tree(2, 2)
    assert AllGeodesics(t).min_leg_avoiding(3, 5, Ball(0, 0)) is None


def _enumerated_min_leg(h, x, y, bad):
    best = None
    for p in nx.all_shortest_paths(h, x, y):
        if not bad.intersection(p):
            best = len(p) - 1
    return best


@pytest.mark.parametrize("g", [cycle_graph(8), grid_graph(3), random_tree(11, 5),
                               MetricGraph(10, [(i, (i + 1) % 10) for i in range(10)] + [(0, 5)])],
                         ids=["C8", "grid3", "tree11", "theta"])
def test_min_leg_matches_enumeration(g):
    ps = AllGeodesics(g)
    h = to_nx(g)
    for c in range(g.n):
        for r in (0, 1):
            bad = {v for v in range(g.n) if g.d(c, v) <= r}
            for x, y in itertools.product(range(g.n), repeat=2):
                if x in bad or y in bad:
                    continue
                assert ps.min_leg_avoiding(x, y, Ball(c, r)) == _enumerated_min_leg(h, x, y, bad)


def test_median_replacement_within_two():
    g = grid_graph(4)
    ps = AllGeodesics(g)
    h = lexmin_geodesic(g, gid(g, 0, 0), gid(g, 3, 3))
    y2 = gid(g, 3, 2)
    rep, bound = ps.bounded_replacement(h, y2)
    assert rep.start == h.start and rep.end == y2 and is_geodesic(g, rep)
    assert hausdorff(g, h, rep) == bound <= 2
    best = min(hausdorff(g, h, p) for p in nx.all_shortest_paths(to_nx(g), h.start, y2))
    assert best <= bound


def test_replacement_trivial_and_tree():
    g = grid_graph(4)
    ps = AllGeodesics(g)
    h = lexmin_geodesic(g, 0, 15)
    assert ps.bounded_replacement(h, 15)[0] == h
    t = regular_tree(2, 3)
    tp = TreeGeodesics(t)
    h = lexmin_geodesic(t, 7, 4)
    rep, hd = tp.bounded_replacement(h, 1)
    assert rep.end == 1 and hd <= 1


def test_replacement_needs_median_graph():
    ps = AllGeodesics(cycle_graph(5))
    with pytest.raises(CapabilityError):
        ps.bounded_replacement(lexmin_geodesic(ps.g, 0, 2), 3)


def test_staircase_formula():
    inst = generate(FamilySpec("staircase_z2", {"N": 4}))
    g, ps = inst.graph, inst.system
    sgn = lambda v: (v > 0) - (v < 0)
    for a, b in itertools.product(range(g.n), repeat=2):
        (xa, ya), (xb, yb) = g.labels[a], g.labels[b]
        z = sgn(ya) * max(0, sgn(ya) * yb)
        line = ps.combing_line(a, b)
        assert line.start == a and line.end == b
        assert {g.index_of((xa, z)), g.index_of((xb, z))} <= set(line.vertices)


def test_staircase_quasi_geodesic_constant():
    # every combing line is geodesic, hence every subpath is, giving lambda = 1 <= 3
    inst = generate(FamilySpec("staircase_z2", {"N": 10}))
    g, ps = inst.graph, inst.system
    D = g.all_pairs()
    assert all(ps.combing_line(a, b).length == D[a, b] for a in range(g.n) for b in range(g.n))
    rep = validate_system(ps, samples=300)
    assert rep.passed and rep.measured_lambda <= 3


def test_validate_all_geodesics():
    rep = validate_system(AllGeodesics(grid_graph(4)), exhaustive=True)
    assert rep.passed and rep.measured_lambda == 1 and rep.measured_kappa == 0


def test_stored_set_missing_subsegment():
    g = grid_graph(3)
    paths = [(v,) for v in range(g.n)] + [(0, 1, 2), (2, 1, 0)]
    with pytest.raises(StructuralError):
        StoredSet(g, paths)
    ss = StoredSet(g, paths, enforce=False)
    rep = validate_system(ss)
    assert not rep.passed and rep.failures[0]["check"] == "closure"


def test_stored_set_json_roundtrip():
    g = cycle_graph(6)
    ss = materialize(AllGeodesics(g))
    back = StoredSet.from_json_obj(g, ss.to_json_obj())
    assert back.store == ss.store
    with pytest.raises(InputError):
        StoredSet.from_json_obj(g, {"config": {}})


def test_push_forward_identity():
    g = grid_graph(3)
    src = AllGeodesics(g)
    pf, _ = push_forward(list(range(g.n)), 0, src, g)
    for x, y in itertools.product(range(g.n), repeat=2):
        assert pf.contains(lexmin_geodesic(g, x, y).vertices)


def test_push_forward_rejects_collapse():
    g = grid_graph(5)
    f = [g.index_of((i, 0)) for i, j in (g.labels[v] for v in range(g.n))]
    with pytest.raises(InputError):
        push_forward(f, 1, AllGeodesics(g), g)


def test_push_forward_halving_hausdorff():
    n = 3
    src, dst = grid_graph(2 * n + 1), grid_graph(n + 1)
    f = [dst.index_of((i // 2, j // 2)) for i, j in (src.labels[v] for v in range(src.n))]
    pf, meta = push_forward(f, 2, AllGeodesics(src), dst)
    assert meta["closed_paths"] == len(pf.store)
    worst = 0
    for x, y in itertools.product(range(src.n), repeat=2):
        h = lexmin_geodesic(src, x, y)
        img = [f[v] for v in h.vertices]
        pushed = rectify(img, dst)
        assert pf.contains(pushed.vertices)
        worst = max(worst, hausdorff(dst, img, pushed))
    assert worst <= 2
    assert pf.store == push_forward(f, 2, AllGeodesics(src), dst)[0].store
