"""Dichotomy experiments: contraction-space diameters against divergence, per family."""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from fractions import Fraction

from .contraction import (ContractionTriple, Gauge, build_contraction_space, default_triple)
from .errors import InputError
from .graph import MetricGraph
from .instances import FamilySpec, generate, inner_vertices
from .morse import ThinnessParams, morse_gauge_oracle, proportionally_thin, weakly_polygonally_morse
from .navigation import INFINITE, divergence_profile
from .paths import lexmin_geodesic

DEFAULT_LINEAR_CAP = 8


@dataclass
class FamilySweep:
    name: str
    family: str
    size_param: str
    sizes: list[int]
    params: dict = field(default_factory=dict)

    def spec(self, size: int, seed: int) -> FamilySpec:
        p = dict(self.params)
        p[self.size_param] = size
        return FamilySpec(self.family, p, seed)

    def to_json_obj(self) -> dict:
        return {"name": self.name, "family": self.family, "size_param": self.size_param,
                "sizes": list(self.sizes), "params": self.params}

    @classmethod
    def from_json_obj(cls, obj: dict) -> "FamilySweep":
        return cls(obj["name"], obj["family"], obj["size_param"], [int(s) for s in obj["sizes"]],
                   dict(obj.get("params", {})))


@dataclass
class ExperimentConfig:
    families: list[FamilySweep]
    triple: str | dict = "validator-default"
    thinness: ThinnessParams = field(default_factory=lambda: ThinnessParams(Fraction(1, 4), 3, 3, 4))
    delta: Fraction = Fraction(1, 2)
    epsilon: Fraction = Fraction(0)
    divergence_exhaustive_max: int = 60
    divergence_samples: int = 300
    linear_cap: int = DEFAULT_LINEAR_CAP
    wpm_max_vertices: int = 200
    output_dir: str | None = None
    seed: int = 0

    def to_json_obj(self) -> dict:
        return {"families": [f.to_json_obj() for f in self.families], "triple": self.triple,
                "thinness": self.thinness.to_json_obj(), "delta": str(self.delta),
                "epsilon": str(self.epsilon),
                "divergence_exhaustive_max": self.divergence_exhaustive_max,
                "divergence_samples": self.divergence_samples, "linear_cap": self.linear_cap,
                "wpm_max_vertices": self.wpm_max_vertices, "output_dir": self.output_dir,
                "seed": self.seed}

    @classmethod
    def from_json_obj(cls, obj: dict) -> "ExperimentConfig":
        try:
            return cls([FamilySweep.from_json_obj(f) for f in obj["families"]],
                       obj.get("triple", "validator-default"),
                       ThinnessParams.from_json_obj(obj["thinness"]) if "thinness" in obj else
                       ThinnessParams(Fraction(1, 4), 3, 3, 4),
                       Fraction(obj.get("delta", "1/2")), Fraction(obj.get("epsilon", "0")),
                       int(obj.get("divergence_exhaustive_max", 60)),
                       int(obj.get("divergence_samples", 300)),
                       int(obj.get("linear_cap", DEFAULT_LINEAR_CAP)),
                       int(obj.get("wpm_max_vertices", 200)), obj.get("output_dir"),
                       int(obj.get("seed", 0)))
        except (KeyError, TypeError, ValueError) as exc:
            raise InputError(f"malformed experiment config: {exc}") from exc


def default_config(quick: bool = False) -> ExperimentConfig:
    if quick:
        fams = [FamilySweep("grid", "grid_zd", "size", [7, 9]),
                FamilySweep("free_group", "free_group_ball", "radius", [4, 5])]
    else:
        fams = [FamilySweep("grid", "grid_zd", "size", list(range(7, 14))),
                FamilySweep("free_group", "free_group_ball", "radius", list(range(4, 9)))]
    return ExperimentConfig(fams)


def _triple_for(cfg: ExperimentConfig, ps) -> ContractionTriple:
    if cfg.triple == "validator-default":
        return default_triple(ps)
    obj = cfg.triple
    return ContractionTriple(Gauge.from_json_obj(obj["K"]), int(obj.get("n", 7)), ps)


def _diameter_class(diams: list[int]) -> str:
    if all(d == 1 for d in diams):
        return "complete"
    if len(set(diams)) == 1:
        return "bounded"
    if diams[-1] > diams[0] and all(b >= a for a, b in zip(diams, diams[1:])):
        return "growing"
    return "irregular"


def _diameter_pair(g: MetricGraph, vertices) -> tuple[int, int]:
    best = (-1, 0, 0)
    vs = list(vertices)
    for a in vs:
        row = g.distance_row(a)
        b = max(vs, key=lambda v: (row[v], -v))
        if row[b] > best[0]:
            best = (int(row[b]), a, b)
    return best[1], best[2]


def run_family(cfg: ExperimentConfig, sweep: FamilySweep, cache: dict | None = None) -> dict:
    sizes_out = []
    diams = []
    worst_coef = 0
    any_inf = False
    all_exhaustive_smallest = None
    wpm_done = None
    for k, size in enumerate(sweep.sizes):
        inst = generate(sweep.spec(size, cfg.seed))
        g, ps, meta = inst.graph, inst.system, inst.metadata
        key = (sweep.family, json.dumps(sweep.spec(size, cfg.seed).params, sort_keys=True))
        space = cache.get(key) if cache is not None else None
        if space is None:
            space = build_contraction_space(g, _triple_for(cfg, ps))
            if cache is not None:
                cache[key] = space
        diam = space.diameter()
        diams.append(diam)
        inner = inner_vertices(inst)
        radius = meta.get("inner_safe_radius")
        # divergence restricted to the inner region when the ball is truncated
        n_max = max(2, min(2 * (radius or size), 24))
        n_values = list(range(1, n_max + 1))
        verts = None if radius is None else inner
        small = len(inner) <= 200
        mode = "exhaustive" if small and (k == 0 or len(inner) <= cfg.divergence_exhaustive_max) else "sampled"
        prof = divergence_profile(g, n_values, cfg.delta, cfg.epsilon, mode=mode,
                                  samples=cfg.divergence_samples, seed=cfg.seed, vertices=verts,
                                  restricted_to=radius)
        coef = prof.linear_coefficient
        inf_here = prof.has_infinite
        any_inf = any_inf or inf_here
        if not inf_here:
            worst_coef = max(worst_coef, coef)
        if k == 0:
            all_exhaustive_smallest = prof.exhaustive
        row = {"size": size, "vertices": g.n, "hat_diameter": diam,
               "hat_edges": space.edge_counts(),
               "divergence": prof.to_json_obj(), "divergence_mode": mode}
        if wpm_done is None and g.n <= cfg.wpm_max_vertices:
            a, b = _diameter_pair(g, inner)
            geo = lexmin_geodesic(g, a, b)
            rep = weakly_polygonally_morse(geo, cfg.thinness, ps)
            wpm_done = {"size": size, "geodesic": [a, b], "length": geo.length,
                        "verdict": rep.verdict, "witness": rep.witness}
        sizes_out.append(row)
    dclass = _diameter_class(diams)
    if any_inf:
        div_class = "infinite"
    elif worst_coef <= cfg.linear_cap:
        div_class = "linear"
    else:
        div_class = "superlinear"
    deviations = []
    if dclass == "complete" and div_class != "linear":
        deviations.append("complete contraction space without linear divergence")
    if dclass == "growing" and div_class == "linear":
        deviations.append("growing contraction space with linear divergence")
    if dclass == "growing" and wpm_done is not None and not wpm_done["verdict"]:
        deviations.append("growing contraction space but the diameter geodesic fails the thinness check")
    if div_class == "linear" and not all_exhaustive_smallest:
        deviations.append("linear verdict lacks exhaustive verification on the smallest member")
    return {"name": sweep.name, "family": sweep.family, "sizes": sizes_out,
            "diameter_class": dclass, "hat_diameters": diams, "divergence_class": div_class,
            "linear_coefficient": _fmt(worst_coef), "wpm": wpm_done, "deviations": deviations}


def staircase_signature(N: int = 12, L: int = 10) -> dict:
    """The staircase row: 2-line thinness holds, 3-line thinness fails, large Morse oracle."""
    inst = generate(FamilySpec("staircase_z2", {"N": N}))
    g, ps = inst.graph, inst.system
    axis = [g.index_of((i, 0)) for i in range(L + 1)]
    thin2 = proportionally_thin(axis, ThinnessParams(Fraction(1, 4), 10, 2), ps)
    thin3 = proportionally_thin(axis, ThinnessParams(Fraction(1, 4), 3, 3), ps)
    oracle = morse_gauge_oracle(axis, 3, 0, g)
    return {"N": N, "segment_length": L, "thin_n2": thin2.verdict, "thin_n3": thin3.verdict,
            "thin_n3_witness": thin3.witness, "morse_oracle_Q3": str(oracle),
            "deviations": [] if thin2.verdict and not thin3.verdict else ["staircase signature not reproduced"]}


def run_dichotomy_experiment(cfg: ExperimentConfig, staircase: bool = True,
                             cache: dict | None = None) -> dict:
    rows = [run_family(cfg, sweep, cache) for sweep in cfg.families]
    report = {"config": cfg.to_json_obj(), "table": rows}
    if staircase:
        report["staircase"] = staircase_signature()
    devs = [d for r in rows for d in r["deviations"]]
    if staircase:
        devs += report["staircase"]["deviations"]
    report["deviations"] = devs
    report["prediction_holds"] = not devs
    return report


def _fmt(x):
    if x == INFINITE:
        return "inf"
    if isinstance(x, float):
        return str(Fraction(x).limit_denominator(10**6))
    return x


def dumps(obj) -> str:
    """Byte-stable JSON."""
    return json.dumps(obj, sort_keys=True, indent=2, default=_json_default) + "\n"


def _json_default(o):
    if isinstance(o, Fraction):
        return str(o)
    if isinstance(o, float) and math.isinf(o):
        return "inf"
    if hasattr(o, "to_json_obj"):
        return o.to_json_obj()
    if hasattr(o, "item"):
        return o.item()
    raise TypeError(f"cannot serialise {type(o).__name__}")


__all__ = ["ExperimentConfig", "FamilySweep", "default_config", "run_dichotomy_experiment",
           "run_family", "staircase_signature", "dumps"]
