"""Deterministic generators for the example families.

Cayley balls are built by breadth-first search over normal forms, so vertex 0
is always the identity and vertices are numbered in shortlex order.
"""
from __future__ import annotations

import itertools
import random
from collections import deque
from dataclasses import dataclass, field
from typing import Callable

from .errors import CoarseNavError, InputError
from .graph import MetricGraph, induced_permutation_ok
from .systems import AllGeodesics, PathSystem, StaircaseCombingZ2

FAMILIES = ("grid_zd", "free_group_ball", "tree", "cycle", "racg_ball",
            "surface_group_ball", "product", "staircase_z2")
CAPS = {"grid_side": 301, "free_radius": 9, "racg_radius": 6, "surface_radius": 6}


class GenerationError(CoarseNavError):
    exit_code = 4


@dataclass
class FamilySpec:
    family: str
    params: dict = field(default_factory=dict)
    seed: int = 0

    def to_json_obj(self) -> dict:
        return {"family": self.family, "params": self.params, "seed": self.seed}

    @classmethod
    def from_json_obj(cls, obj: dict) -> "FamilySpec":
        return cls(obj["family"], dict(obj.get("params", {})), int(obj.get("seed", 0)))


@dataclass
class Instance:
    graph: MetricGraph
    system: PathSystem
    metadata: dict


# lattices, cycles, trees

def grid_graph(size: int, d: int = 2) -> MetricGraph:
    if size < 1 or d < 1:
        raise InputError("grid needs size >= 1 and d >= 1")
    if size > CAPS["grid_side"]:
        raise InputError(f"grid side capped at {CAPS['grid_side']}")
    coords = list(itertools.product(range(size), repeat=d))
    index = {c: i for i, c in enumerate(coords)}
    edges = []
    for c, i in index.items():
        for k in range(d):
            if c[k] + 1 < size:
                nb = c[:k] + (c[k] + 1,) + c[k + 1:]
                edges.append((i, index[nb]))
    return MetricGraph(len(coords), edges, {i: c for c, i in index.items()})


def box_graph(N: int) -> MetricGraph:
    """The box [-N, N]^2 with vertex (x, y) numbered (x+N)(2N+1) + (y+N)."""
    side = 2 * N + 1
    labels = {}
    edges = []
    for x in range(-N, N + 1):
        for y in range(-N, N + 1):
            v = (x + N) * side + (y + N)
            labels[v] = (x, y)
            if y < N:
                edges.append((v, v + 1))
            if x < N:
                edges.append((v, v + side))
    return MetricGraph(side * side, edges, labels)


def cycle_graph(n: int) -> MetricGraph:
    if n < 3:
        raise InputError("cycle needs n >= 3")
    return MetricGraph(n, [(i, (i + 1) % n) for i in range(n)], {i: i for i in range(n)})


def path_graph(n: int) -> MetricGraph:
    return MetricGraph(n, [(i, i + 1) for i in range(n - 1)], {i: i for i in range(n)})


def regular_tree(branching: int, depth: int) -> MetricGraph:
    """Rooted tree: the root and every internal vertex have ``branching`` children."""
    edges, labels = [], {0: ()}
    frontier = [(0, ())]
    nxt_id = 1
    for _ in range(depth):
        new = []
        for v, lab in frontier:
            for c in range(branching):
                edges.append((v, nxt_id))
                labels[nxt_id] = lab + (c,)
                new.append((nxt_id, lab + (c,)))
                nxt_id += 1
        frontier = new
    return MetricGraph(nxt_id, edges, labels)


def random_tree(n: int, seed: int) -> MetricGraph:
    rng = random.Random(seed)
    edges = [(i, rng.randrange(i)) for i in range(1, n)]
    return MetricGraph(n, edges, {i: i for i in range(n)})


def product_graph(g: MetricGraph, h: MetricGraph) -> MetricGraph:
    labels, edges = {}, []
    for a in range(g.n):
        for b in range(h.n):
            v = a * h.n + b
            labels[v] = (g.labels.get(a, a), h.labels.get(b, b))
            for b2 in h.adjacency[b]:
                if b < b2:
                    edges.append((v, a * h.n + b2))
            for a2 in g.adjacency[a]:
                if a < a2:
                    edges.append((v, a2 * h.n + b))
    return MetricGraph(g.n * h.n, edges, labels)


# Cayley balls

def _ball_from_normal_forms(gens: list[str], mult: Callable[[str, str], str], radius: int,
                            key: Callable[[str], object] | None = None) -> MetricGraph:
    key = key or (lambda w: w)
    ids = {key(""): 0}
    words = [""]
    edges = set()
    frontier = [""]
    for _ in range(radius):
        new = []
        for w in frontier:
            for s in gens:
                u = mult(w, s)
                k = key(u)
                if k not in ids:
                    ids[k] = len(words)
                    words.append(u)
                    new.append(u)
        frontier = new
    for w in words:
        i = ids[key(w)]
        for s in gens:
            k = key(mult(w, s))
            j = ids.get(k)
            if j is not None and j != i:
                edges.add((min(i, j), max(i, j)))
    return MetricGraph(len(words), sorted(edges), {i: w for i, w in enumerate(words)})


def free_letters(k: int) -> list[str]:
    base = "abcdefghij"[:k]
    return [c for x in base for c in (x, x.upper())]


def free_reduce(w: str) -> str:
    out: list[str] = []
    for c in w:
        if out and out[-1] == c.swapcase():
            out.pop()
        else:
            out.append(c)
    return "".join(out)


def free_group_ball(radius: int, k: int = 2) -> MetricGraph:
    if radius > CAPS["free_radius"]:
        raise InputError(f"free-group radius capped at {CAPS['free_radius']}")
    gens = sorted(free_letters(k))
    return _ball_from_normal_forms(gens, lambda w, s: free_reduce(w + s), radius)


def free_group_hull(words: list[str], k: int = 2) -> MetricGraph:
    """Subtree of the free-group Cayley graph spanned by geodesics between given words.

    The subtree is convex, so its path metric agrees with the word metric.
    """
    verts = {""}
    for w in words:
        w = free_reduce(w)
        for i in range(len(w) + 1):
            verts.add(w[:i])
    ordered = sorted(verts, key=lambda w: (len(w), w))
    ids = {w: i for i, w in enumerate(ordered)}
    edges = [(ids[w[:-1]], ids[w]) for w in ordered if w]
    return MetricGraph(len(ordered), edges, {i: w for w, i in ids.items()})


# right-angled Coxeter groups

FOUR_CYCLE = ("abcd", {("a", "b"), ("b", "c"), ("c", "d"), ("a", "d")})


def _commute(x: str, y: str, edges) -> bool:
    return x == y or (x, y) in edges or (y, x) in edges


def racg_normal_form(word: str, edges) -> str:
    """Shortlex normal form: cancel s..s across commuting letters, then sort greedily."""
    w = list(word)
    changed = True
    while changed:
        changed = False
        for i in range(len(w)):
            for j in range(i + 1, len(w)):
                if w[j] == w[i]:
                    if all(_commute(w[i], w[t], edges) for t in range(i + 1, j)):
                        del w[j]
                        del w[i]
                        changed = True
                    break
                if not _commute(w[i], w[j], edges):
                    break
            if changed:
                break
    out = []
    rest = w
    while rest:
        best = None
        for i, c in enumerate(rest):
            if all(_commute(c, rest[t], edges) for t in range(i)):
                if best is None or c < rest[best]:
                    best = i
        out.append(rest.pop(best))
    return "".join(out)


def racg_ball(radius: int, defining=FOUR_CYCLE) -> MetricGraph:
    if radius > CAPS["racg_radius"]:
        raise InputError(f"RACG radius capped at {CAPS['racg_radius']}")
    letters, edges = defining
    return _ball_from_normal_forms(sorted(letters), lambda w, s: racg_normal_form(w + s, edges), radius)


# genus-2 surface group

SURFACE_RELATOR = "abABcdCD"


def _cyclic_relators(rel: str) -> list[str]:
    inv = free_reduce("".join(c.swapcase() for c in reversed(rel)))
    out = set()
    for r in (rel, inv):
        for i in range(len(r)):
            out.add(r[i:] + r[:i])
    return sorted(out)


_SURF_CYC = _cyclic_relators(SURFACE_RELATOR)


def dehn_reduce(word: str, relators=None) -> str:
    """Dehn's algorithm: replace more than half of a relator by the inverse of the rest."""
    relators = relators or _SURF_CYC
    w = free_reduce(word)
    L = len(relators[0])
    half = L // 2
    changed = True
    while changed:
        changed = False
        for r in relators:
            for ln in range(L, half, -1):
                u = r[:ln]
                i = w.find(u)
                if i >= 0:
                    rest = r[ln:]
                    rep = "".join(c.swapcase() for c in reversed(rest))
                    w = free_reduce(w[:i] + rep + w[i + ln:])
                    changed = True
                    break
            if changed:
                break
    return w


def surface_equal(u: str, v: str) -> bool:
    return dehn_reduce(u + "".join(c.swapcase() for c in reversed(v))) == ""


def _surface_hash(w: str) -> tuple:
    # abelianisation plus images in a few permutation quotients, all homomorphisms
    ab = tuple(w.count(c) - w.count(c.upper()) for c in "abcd")
    imgs = []
    for perms in _SURF_PERMS:
        p = list(range(len(perms["a"])))
        for c in w:
            q = perms[c]
            p = [q[x] for x in p]
        imgs.append(tuple(p))
    return (ab, tuple(imgs))


def _make_surface_perms(seed: int = 7, m: int = 9, count: int = 4):
    rng = random.Random(seed)
    reps = []
    for _ in range(count):
        # factor through a surjection onto F2: (a,b,c,d) -> (x,1,y,1) or (1,x,1,y)
        x = list(range(m))
        y = list(range(m))
        rng.shuffle(x)
        rng.shuffle(y)
        ident = list(range(m))
        choice = rng.randrange(2)
        imgs = {"a": x, "b": ident, "c": y, "d": ident} if choice == 0 else \
               {"a": ident, "b": x, "c": ident, "d": y}
        perms = {}
        for c, p in imgs.items():
            inv = [0] * m
            for i, t in enumerate(p):
                inv[t] = i
            perms[c] = p
            perms[c.upper()] = inv
        reps.append(perms)
    return reps


_SURF_PERMS = _make_surface_perms()


def surface_group_ball(radius: int) -> MetricGraph:
    if radius > CAPS["surface_radius"]:
        raise InputError(f"surface-group radius capped at {CAPS['surface_radius']}")
    gens = sorted("abcdABCD")
    buckets: dict[tuple, list[str]] = {}
    words = [""]
    ids = {"": 0}
    buckets.setdefault(_surface_hash(""), []).append("")
    frontier = [""]

    def find(u: str) -> str | None:
        for cand in buckets.get(_surface_hash(u), []):
            if surface_equal(u, cand):
                return cand
        return None

    for _ in range(radius):
        new = []
        for w in frontier:
            for s in gens:
                u = dehn_reduce(w + s)
                if find(u) is None:
                    ids[u] = len(words)
                    words.append(u)
                    buckets.setdefault(_surface_hash(u), []).append(u)
                    new.append(u)
        frontier = new
    edges = set()
    for w in words:
        i = ids[w]
        for s in gens:
            rep = find(dehn_reduce(w + s))
            if rep is not None and ids[rep] != i:
                j = ids[rep]
                edges.add((min(i, j), max(i, j)))
    if any(len(w) > radius for w in words):
        raise GenerationError("Dehn reduction produced a word longer than its ball radius")
    return MetricGraph(len(words), sorted(edges), {i: w for i, w in enumerate(words)})


# dispatcher

def generate(spec: FamilySpec) -> Instance:
    f, p = spec.family, spec.params
    meta: dict = {"family": f, "params": p, "seed": spec.seed}
    if f == "grid_zd":
        size, d = int(p.get("size", 5)), int(p.get("d", 2))
        g = grid_graph(size, d)
        ps: PathSystem = AllGeodesics(g)
        meta.update(center=g.index_of(tuple([size // 2] * d)), truncation_radius=None)
    elif f == "staircase_z2":
        N = int(p.get("N", 5))
        g = box_graph(N)
        ps = StaircaseCombingZ2(g, N)
        meta.update(center=g.index_of((0, 0)), truncation_radius=N)
    elif f == "cycle":
        g = cycle_graph(int(p.get("n", 8)))
        ps = AllGeodesics(g)
        meta.update(center=0, truncation_radius=None)
    elif f == "tree":
        if "n" in p:
            g = random_tree(int(p["n"]), spec.seed)
        else:
            g = regular_tree(int(p.get("branching", 2)), int(p.get("depth", 3)))
        ps = AllGeodesics(g)
        meta.update(center=0, truncation_radius=None)
    elif f == "free_group_ball":
        r = int(p.get("radius", 3))
        g = free_group_ball(r, int(p.get("k", 2)))
        ps = AllGeodesics(g)
        meta.update(center=0, truncation_radius=r)
    elif f == "racg_ball":
        r = int(p.get("radius", 3))
        g = racg_ball(r)
        ps = AllGeodesics(g)
        meta.update(center=0, truncation_radius=r)
    elif f == "surface_group_ball":
        r = int(p.get("radius", 2))
        g = surface_group_ball(r)
        ps = AllGeodesics(g)
        meta.update(center=0, truncation_radius=r)
    elif f == "product":
        a = generate(FamilySpec(**_sub(p["left"]), seed=spec.seed)).graph
        b = generate(FamilySpec(**_sub(p["right"]), seed=spec.seed)).graph
        g = product_graph(a, b)
        ps = AllGeodesics(g)
        meta.update(center=0, truncation_radius=None)
    else:
        raise InputError(f"unknown family {f!r}")
    tr = meta.get("truncation_radius")
    meta["inner_safe_radius"] = tr // 2 if tr is not None else None
    meta["vertices"] = g.n
    meta["edges"] = g.edge_count
    return Instance(g, ps, meta)


def _sub(obj) -> dict:
    if isinstance(obj, FamilySpec):
        return {"family": obj.family, "params": obj.params}
    return {"family": obj["family"], "params": obj.get("params", {})}


def inner_vertices(inst: Instance) -> list[int]:
    """Vertices within the inner-safe radius of the center (all vertices if untruncated)."""
    r = inst.metadata.get("inner_safe_radius")
    g = inst.graph
    if r is None:
        return list(range(g.n))
    row = g.distance_row(inst.metadata["center"])
    return [v for v in range(g.n) if row[v] <= r]


# automorphisms

def _verified(g: MetricGraph, perms) -> list[list[int]]:
    out = []
    for p in perms:
        if induced_permutation_ok(g, p) and p not in out:
            out.append(p)
    return out


def automorphisms(spec: FamilySpec, inst: Instance | None = None) -> list[list[int]]:
    inst = inst or generate(spec)
    g = inst.graph
    f = spec.family
    perms: list[list[int]] = []
    if f == "grid_zd" and int(spec.params.get("d", 2)) == 2:
        s = int(spec.params.get("size", 5)) - 1
        maps = [lambda i, j: (i, j), lambda i, j: (s - i, j), lambda i, j: (i, s - j),
                lambda i, j: (s - i, s - j), lambda i, j: (j, i), lambda i, j: (s - j, i),
                lambda i, j: (j, s - i), lambda i, j: (s - j, s - i)]
        for m in maps:
            perms.append([g.index_of(m(*g.labels[v])) for v in range(g.n)])
    elif f == "staircase_z2":
        for sx, sy in itertools.product((1, -1), repeat=2):
            perms.append([g.index_of((sx * g.labels[v][0], sy * g.labels[v][1])) for v in range(g.n)])
    elif f == "cycle":
        n = g.n
        perms.append([(v + 1) % n for v in range(n)])
        perms.append([(-v) % n for v in range(n)])
    elif f == "free_group_ball":
        k = int(spec.params.get("k", 2))
        base = "abcdefghij"[:k]
        for order in itertools.permutations(base):
            for signs in itertools.product((False, True), repeat=k):
                phi = {}
                for x, y, flip in zip(base, order, signs):
                    phi[x] = y.upper() if flip else y
                    phi[x.upper()] = y if flip else y.upper()
                perms.append([g.index_of("".join(phi[c] for c in g.labels[v])) for v in range(g.n)])
    elif f == "tree" and "n" not in spec.params:
        b = int(spec.params.get("branching", 2))
        if b >= 2:
            swap = {0: 1, 1: 0}
            perms.append([g.index_of(_swap_first(g.labels[v], swap)) for v in range(g.n)])
    else:
        perms.append(list(range(g.n)))
    return _verified(g, perms)


def _swap_first(lab: tuple, swap: dict) -> tuple:
    if not lab:
        return lab
    return (swap.get(lab[0], lab[0]),) + lab[1:]


__all__ = [
    "FamilySpec", "Instance", "generate", "automorphisms", "grid_graph", "box_graph",
    "cycle_graph", "path_graph", "regular_tree", "random_tree", "product_graph",
    "free_group_ball", "free_group_hull", "racg_ball", "racg_normal_form", "surface_group_ball",
    "dehn_reduce", "surface_equal", "free_reduce", "inner_vertices", "FAMILIES", "GenerationError",
    "random_reduced_word", "sample_free_avoid_instance",
]


# sampled avoidance instances in F_k

def random_reduced_word(length: int, rng: random.Random, k: int = 2) -> str:
    letters = free_letters(k)
    out = ""
    while len(out) < length:
        c = rng.choice(letters)
        if out and out[-1] == c.swapcase():
            continue
        out += c
    return out


def _word_dist(u: str, v: str) -> int:
    return len(free_reduce("".join(c.swapcase() for c in reversed(u)) + v))


def sample_free_avoid_instance(R: int, rng: random.Random, k: int = 2, tries: int = 1000):
    """Points (z1, z2, y, m) of F_k with d(m, z_i) <= 4R and both geodesics z_i -> y at
    distance >= R from m, realised inside the convex hull of the points.

    Returns (graph, (z1, z2, y, m) as vertex ids, words).
    """
    for _ in range(tries):
        m = random_reduced_word(rng.randint(0, 2 * R), rng, k)
        # a shared stem keeps both geodesics to y away from m
        stem = free_reduce(m + random_reduced_word(rng.randint(R, 2 * R), rng, k))
        z1 = free_reduce(stem + random_reduced_word(rng.randint(0, 2 * R), rng, k))
        z2 = free_reduce(stem + random_reduced_word(rng.randint(0, 2 * R), rng, k))
        if not all(R <= _word_dist(m, z) <= 4 * R for z in (z1, z2)):
            continue
        y = free_reduce(stem + random_reduced_word(rng.randint(0, 12 * R), rng, k))
        ok = True
        for z in (z1, z2):
            # distance from m to the geodesic [z, y] is a Gromov product
            gp = _word_dist(m, z) + _word_dist(m, y) - _word_dist(z, y)
            if gp < 2 * R:
                ok = False
        if not ok:
            continue
        words = [m, z1, z2, y]
        g = free_group_hull(words, k)
        ids = tuple(g.index_of(w) for w in (z1, z2, y, m))
        return g, ids, {"m": m, "z1": z1, "z2": z2, "y": y}
    return None
