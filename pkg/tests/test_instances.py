import itertools
import random

import networkx as nx
import numpy as np
import pytest

from coarsenav.errors import InputError
from coarsenav.graph import four_point_delta, induced_permutation_ok, is_median_graph
from coarsenav.instances import (FamilySpec, automorphisms, dehn_reduce, free_group_ball,
                                 generate, grid_graph, inner_vertices, path_graph, racg_ball,
                                 sample_free_avoid_instance, surface_equal, surface_group_ball)
from coarsenav.systems import StaircaseCombingZ2

from conftest import to_nx


def test_grid_d1_is_path():
    g = generate(FamilySpec("grid_zd", {"size": 5, "d": 1})).graph
    assert nx.is_isomorphic(to_nx(g), to_nx(path_graph(5)))


def test_free_group_ball_size():
    g = free_group_ball(3)
    assert g.n == 2 * 3 ** 3 - 1 and g.is_tree()


def _tits_ball(radius):
    """Ball in the right-angled Coxeter group of the 4-cycle via its reflection representation."""
    # B(e_s, e_t) = 1 on the diagonal, 0 for commuting letters, -1 for free pairs
    letters = "abcd"
    commute = {frozenset("ab"), frozenset("bc"), frozenset("cd"), frozenset("ad")}
    B = np.array([[1 if s == t else (0 if frozenset((s, t)) in commute else -1)
                   for t in letters] for s in letters])
    gens = []
    for i in range(4):
        M = np.eye(4, dtype=int)
        M[i, :] -= 2 * B[i, :]
        gens.append(M)
    seen = {np.eye(4, dtype=int).tobytes()}
    frontier = [np.eye(4, dtype=int)]
    sizes = [1]
    for _ in range(radius):
        nxt = []
        for M in frontier:
            for S in gens:
                P = M @ S
                key = P.tobytes()
                if key not in seen:
                    seen.add(key)
                    nxt.append(P)
        frontier = nxt
        sizes.append(len(seen))
    return sizes


def test_racg_ball_matches_reflection_representation():
    ref = _tits_ball(4)
    assert [racg_ball(r).n for r in range(5)] == ref
    assert ref[3] == 25
    assert is_median_graph(racg_ball(3)).is_median


def _surface_sphere_sizes(k):
    # series of (1+2t+2t^2+2t^3+t^4) / (1-6t-6t^2-6t^3+t^4), the genus-2 growth function
    num = [1, 2, 2, 2, 1]
    den = [1, -6, -6, -6, 1]
    a = []
    for i in range(k + 1):
        v = num[i] if i < len(num) else 0
        v -= sum(den[j] * a[i - j] for j in range(1, min(i, 4) + 1))
        a.append(v)
    return a


def _greendlinger_ball_size(radius):
    """Reduced words of length <= radius, merged when u v^-1 is a conjugate of the relator.

    In this C'(1/7) presentation a nonempty reduced word of length < 8 is nontrivial, so
    for radius <= 4 the only identifications are halves of cyclic relator conjugates.
    """
    inv = lambda w: "".join(c.swapcase() for c in reversed(w))
    words = [""]
    frontier = [""]
    for _ in range(radius):
        frontier = [w + c for w in frontier for c in "abcdABCD" if not (w and w[-1] == c.swapcase())]
        words += frontier
    rel = "abABcdCD"
    conj = {r[i:] + r[:i] for r in (rel, inv(rel)) for i in range(8)}
    merged = {frozenset((r[:4], inv(r[4:]))) for r in conj} if radius >= 4 else set()
    return len(words) - len(merged)


def test_surface_ball_cross_checks():
    spheres = _surface_sphere_sizes(4)
    balls = list(itertools.accumulate(spheres))
    assert balls == [1, 9, 65, 457, 3193]
    for r in range(5):
        assert surface_group_ball(r).n == balls[r] == _greendlinger_ball_size(r)


def test_dehn_reduction():
    assert dehn_reduce("abABcdCD") == ""
    # five letters of the relator shorten to the inverse of the remaining three
    assert dehn_reduce("abABc") == "dcD"
    assert surface_equal("abAB", "dcDC")
    assert not surface_equal("ab", "ba")


def test_generation_caps_and_errors():
    for bad in [FamilySpec("free_group_ball", {"radius": 10}), FamilySpec("racg_ball", {"radius": 7}),
                FamilySpec("grid_zd", {"size": 302}), FamilySpec("nope", {})]:
        with pytest.raises(InputError):
            generate(bad)


def test_metadata_and_inner_region():
    inst = generate(FamilySpec("free_group_ball", {"radius": 4}))
    md = inst.metadata
    assert md["truncation_radius"] == 4 and md["inner_safe_radius"] == 2
    assert len(inner_vertices(inst)) == 2 * 3 ** 2 - 1
    st = generate(FamilySpec("staircase_z2", {"N": 3}))
    assert isinstance(st.system, StaircaseCombingZ2) and st.graph.n == 49


def test_generation_deterministic():
    a = generate(FamilySpec("tree", {"n": 30}, seed=4)).graph
    b = generate(FamilySpec("tree", {"n": 30}, seed=4)).graph
    c = generate(FamilySpec("tree", {"n": 30}, seed=5)).graph
    assert a.edges() == b.edges() and a.edges() != c.edges()


def test_product_family():
    spec = FamilySpec("product", {"left": {"family": "cycle", "params": {"n": 4}},
                                  "right": {"family": "tree", "params": {"branching": 2, "depth": 1}}})
    g = generate(spec).graph
    assert g.n == 12 and g.edge_count == 4 * 2 + 4 * 3


@pytest.mark.parametrize("spec,count", [
    (FamilySpec("grid_zd", {"size": 5}), 8),
    (FamilySpec("cycle", {"n": 8}), 2),
    (FamilySpec("free_group_ball", {"radius": 3}), 8),
    (FamilySpec("staircase_z2", {"N": 4}), 4),
], ids=["grid", "cycle", "free", "staircase"])
def test_automorphisms(spec, count):
    perms = automorphisms(spec)
    g = generate(spec).graph
    assert len(perms) == count
    assert all(induced_permutation_ok(g, p) for p in perms)


def test_hyperbolic_families_bounded_delta():
    vals = [four_point_delta(free_group_ball(r)).delta for r in (2, 3)]
    assert vals == [0, 0]
    assert four_point_delta(surface_group_ball(2)).delta <= 2


def test_free_avoid_sampler_hypotheses():
    rng = random.Random(0)
    for _ in range(5):
        g, (z1, z2, y, m), words = sample_free_avoid_instance(20, rng)
        assert g.is_tree()
        for z in (z1, z2):
            assert 20 <= g.d(m, z) <= 80
            path = g.tree_path(z, y)
            assert min(g.d(m, v) for v in path) >= 20
