"""Command line interface.

Exit codes: 0 success, 2 prediction deviation flagged, 3 input error,
4 internal assertion (a theorem-backed postcondition fired).
"""
from __future__ import annotations

import json
import sys
from fractions import Fraction

import click

from .contraction import (build_contraction_space, default_triple, is_anti_contracting,
                          is_midthin, neck_radius)
from .errors import CoarseNavError, InputError
from .experiment import ExperimentConfig, default_config, dumps, run_dichotomy_experiment
from .graph import Ball, MetricGraph, load_graph
from .instances import FamilySpec, generate
from .morse import (MorseReport, ThinnessParams, proportionally_thin, verify_thinness_witness,
                    weakly_polygonally_morse)
from .navigation import (InfeasibleCertificate, NavigabilityInstance, divergence_profile,
                         navigate_search, profiles_to_csv, slides_navigate, verify_line)
from .paths import EdgePath, PolygonalLine
from .systems import AllGeodesics

EXIT_DEVIATION = 2


def _parse_params(items) -> dict:
    out = {}
    for it in items:
        if "=" not in it:
            raise InputError(f"parameter {it!r} is not key=value")
        k, v = it.split("=", 1)
        try:
            out[k] = json.loads(v)
        except json.JSONDecodeError:
            out[k] = v
    return out


def _ints(text: str) -> list[int]:
    try:
        return [int(t) for t in text.replace(" ", "").split(",") if t]
    except ValueError as exc:
        raise InputError(f"bad vertex list {text!r}") from exc


def _frac(text) -> Fraction:
    try:
        return Fraction(str(text))
    except (ValueError, ZeroDivisionError) as exc:
        raise InputError(f"bad rational {text!r}") from exc


def _load(family, params, graph_file, seed):
    if graph_file:
        g = load_graph(graph_file)
        return g, AllGeodesics(g), {"source": graph_file}
    if not family:
        raise InputError("give --family or --graph")
    inst = generate(FamilySpec(family, _parse_params(params), seed))
    return inst.graph, inst.system, inst.metadata


def _emit(obj, json_out):
    text = dumps(obj)
    if json_out == "-":
        click.echo(text, nl=False)
    elif json_out:
        with open(json_out, "w") as fh:
            fh.write(text)


def instance_options(f):
    f = click.option("--graph", "graph_file", type=click.Path(exists=True), help="graph JSON file")(f)
    f = click.option("--param", "params", multiple=True, help="family parameter key=value")(f)
    f = click.option("--family", help="instance family")(f)
    return f


def common_options(f):
    f = click.option("--seed", type=int, default=0, show_default=True)(f)
    f = click.option("--json-out", default=None, help="write JSON here ('-' for stdout)")(f)
    return f


@click.group()
def cli():
    """Coarse navigation toolkit: path systems, contraction spaces, divergence."""


@cli.command()
@instance_options
@common_options
@click.option("--dot-out", default=None)
def gen(family, params, graph_file, seed, json_out, dot_out):
    """Generate an instance and write graph, system and metadata."""
    g, ps, meta = _load(family, params, graph_file, seed)
    _emit({"graph": g.to_json_obj(), "system": ps.describe(), "metadata": meta}, json_out)
    if dot_out:
        with open(dot_out, "w") as fh:
            fh.write(g.to_dot())
    click.echo(f"vertices={g.n} edges={g.edge_count}")


@cli.command()
@instance_options
@common_options
@click.option("--path", "path_text", required=True, help="comma separated vertex ids")
@click.option("--n", "n_legs", type=int, default=7, show_default=True)
def midthin(family, params, graph_file, seed, json_out, path_text, n_legs):
    """Neck radius and midthin verdict of a special path."""
    g, ps, _ = _load(family, params, graph_file, seed)
    h = EdgePath(_ints(path_text), g)
    triple = default_triple(ps, n=max(n_legs, 7))
    r = neck_radius(h, n_legs, ps)
    res = is_midthin(h, triple)
    _emit({"neck_radius": str(r), "n": n_legs, "midthin": res.midthin, "K_at_neck": str(triple.K(res.neck)),
           "length": h.length}, json_out)
    click.echo(f"neck={r} midthin={res.midthin}")


@cli.command()
@instance_options
@common_options
@click.option("--path", "path_text", required=True)
def anti(family, params, graph_file, seed, json_out, path_text):
    """Anti-contraction verdict with the first midthin window as witness."""
    g, ps, _ = _load(family, params, graph_file, seed)
    res = is_anti_contracting(EdgePath(_ints(path_text), g), default_triple(ps))
    _emit({"anti_contracting": res.anti_contracting, "witness": res.witness,
           "witness_path": res.witness_path}, json_out)
    click.echo(f"anti_contracting={res.anti_contracting}")


@cli.command()
@instance_options
@common_options
@click.option("--dot-out", default=None)
@click.option("--scope", type=click.Choice(["all", "sampled"]), default="all")
def space(family, params, graph_file, seed, json_out, dot_out, scope):
    """Build the contraction space and report its diameter and hyperbolicity."""
    g, ps, _ = _load(family, params, graph_file, seed)
    sp = build_contraction_space(g, default_triple(ps), scope=scope, seed=seed)
    summary = sp.summary(seed=seed)
    obj = sp.to_json_obj()
    obj["summary"] = summary
    _emit(obj, json_out)
    if dot_out:
        with open(dot_out, "w") as fh:
            fh.write(g.to_dot("Xhat", sp.extra_edges))
    click.echo(f"diameter={summary['diameter']} delta_hat={summary['delta_hat']}")


@cli.command()
@instance_options
@common_options
@click.option("--path", "path_text", default=None)
@click.option("--epsilon", default="1/4")
@click.option("--A", "A", default="3")
@click.option("--n", "n_legs", type=int, default=3)
@click.option("--R", "R", default="0")
@click.option("--L", "L", default=None)
@click.option("--witness", "witness_file", type=click.Path(exists=True), default=None,
              help="replay a serialized report instead of checking")
def morse(family, params, graph_file, seed, json_out, path_text, epsilon, A, n_legs, R, L, witness_file):
    """Weakly polygonally Morse check (or replay of a serialized witness)."""
    g, ps, _ = _load(family, params, graph_file, seed)
    p = ThinnessParams(_frac(epsilon), _frac(A), n_legs, _frac(R), None if L is None else _frac(L))
    if witness_file:
        ok = _replay(g, ps, witness_file)
        click.echo(f"witness_valid={ok}")
        if not ok:
            sys.exit(EXIT_DEVIATION)
        return
    if not path_text:
        raise InputError("give --path or --witness")
    rep = weakly_polygonally_morse(_ints(path_text), p, ps)
    obj = rep.to_json_obj()
    obj["params"] = p.to_json_obj()
    _emit(obj, json_out)
    click.echo(f"verdict={rep.verdict}")


def _replay(g, ps, witness_file) -> bool:
    with open(witness_file) as fh:
        obj = json.load(fh)
    if "params" not in obj or not obj.get("witness"):
        raise InputError("witness file must carry params and a witness")
    return verify_thinness_witness(g, ps, obj["witness"], ThinnessParams.from_json_obj(obj["params"]))


@cli.command()
@instance_options
@common_options
@click.option("--m", "m", type=int, required=True)
@click.option("--R", "R", required=True)
@click.option("--alpha", required=True, help="legs as vertex lists separated by ';'")
@click.option("--C", "C", default="28")
@click.option("--k", "k", type=int, default=3)
@click.option("--method", type=click.Choice(["search", "slides"]), default="search")
@click.option("--relax-radius", is_flag=True, help="allow R < C")
def navigate(family, params, graph_file, seed, json_out, m, R, alpha, C, k, method, relax_radius):
    """Find a ball-avoiding polygonal line with controlled length."""
    g, ps, _ = _load(family, params, graph_file, seed)
    legs = [EdgePath(_ints(part), g) for part in alpha.split(";") if part.strip()]
    inst = NavigabilityInstance(m, _frac(R), PolygonalLine(legs), g)
    C = _frac(C)
    if method == "search":
        res = navigate_search(inst, C, k, ps, enforce_radius=not relax_radius)
        if isinstance(res, InfeasibleCertificate):
            _emit(res.to_json_obj(), json_out)
            click.echo("infeasible")
            sys.exit(EXIT_DEVIATION)
        line, measured, log = res, None, []
    else:
        sr = slides_navigate(inst, ps, C, k, enforce_radius=not relax_radius)
        line, measured, log = sr.line, sr.measured_C, sr.log
    chk = verify_line(line, ps, inst.alpha.start, inst.alpha.end,
                      k * inst.n if method == "search" else 2 * k * inst.n,
                      (measured or C) * inst.n * inst.R, Ball(m, inst.R / C))
    _emit({"line": line.to_json_obj(), "length": line.norm, "legs": line.leg_count,
           "verified": chk.ok, "reasons": chk.reasons, "measured_C": measured, "log": log}, json_out)
    click.echo(f"length={line.norm} legs={line.leg_count} verified={chk.ok}")
    if not chk.ok:
        sys.exit(4)


@cli.command()
@instance_options
@common_options
@click.option("--delta", default="1/2")
@click.option("--epsilon", default="0")
@click.option("--n-max", type=int, default=8)
@click.option("--mode", type=click.Choice(["exhaustive", "sampled"]), default="exhaustive")
@click.option("--samples", type=int, default=300)
@click.option("--csv-out", default=None)
def diverge(family, params, graph_file, seed, json_out, delta, epsilon, n_max, mode, samples, csv_out):
    """Divergence profile with a linear-fit coefficient."""
    g, ps, meta = _load(family, params, graph_file, seed)
    prof = divergence_profile(g, list(range(1, n_max + 1)), _frac(delta), _frac(epsilon), mode=mode,
                              samples=samples, seed=seed)
    _emit(prof.to_json_obj(), json_out)
    if csv_out:
        with open(csv_out, "w") as fh:
            fh.write(profiles_to_csv(prof.to_rows(family or "graph", g.n)))
    click.echo(f"linear_coefficient={prof.to_json_obj()['linear_coefficient']} "
               f"lower_bound={prof.is_lower_bound}")


@cli.command()
@common_options
@click.option("--config", "config_file", type=click.Path(exists=True), default=None)
@click.option("--quick", is_flag=True, help="small default sweep")
@click.option("--csv-out", default=None)
def dichotomy(seed, json_out, config_file, quick, csv_out):
    """Run the dichotomy table; exit 2 when a prediction deviates."""
    if config_file:
        with open(config_file) as fh:
            cfg = ExperimentConfig.from_json_obj(json.load(fh))
    else:
        cfg = default_config(quick)
    cfg.seed = seed
    report = run_dichotomy_experiment(cfg)
    _emit(report, json_out)
    if csv_out:
        rows = []
        for fam in report["table"]:
            for srow in fam["sizes"]:
                for e in srow["divergence"]["entries"]:
                    rows.append({"family": fam["name"], "instance_size": srow["size"], "n": e["n"],
                                 "delta": e["delta"], "epsilon": e["epsilon"], "value": e["value"],
                                 "is_lower_bound": srow["divergence"]["is_lower_bound"]})
        with open(csv_out, "w") as fh:
            fh.write(profiles_to_csv(rows))
    for fam in report["table"]:
        click.echo(f"{fam['name']}: diameters={fam['hat_diameters']} class={fam['diameter_class']} "
                   f"divergence={fam['divergence_class']}")
    if report["deviations"]:
        for d in report["deviations"]:
            click.echo(f"DEVIATION: {d}", err=True)
        sys.exit(EXIT_DEVIATION)


@cli.command("verify-witness")
@instance_options
@click.option("--witness", "witness_file", type=click.Path(exists=True), required=True)
def verify_witness(family, params, graph_file, witness_file):
    """Re-verify a serialized thinness violation."""
    g, ps, _ = _load(family, params, graph_file, 0)
    ok = _replay(g, ps, witness_file)
    click.echo(f"witness_valid={ok}")
    if not ok:
        sys.exit(EXIT_DEVIATION)


def main(argv=None):
    try:
        cli.main(args=argv, standalone_mode=False)
    except click.exceptions.Abort:
        sys.exit(3)
    except click.UsageError as exc:
        click.echo(f"usage error: {exc.format_message()}", err=True)
        sys.exit(3)
    except click.ClickException as exc:
        exc.show()
        sys.exit(3)
    except CoarseNavError as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(exc.exit_code)
    except AssertionError as exc:
        click.echo(f"internal assertion: {exc}", err=True)
        sys.exit(4)
    sys.exit(0)


if __name__ == "__main__":
    main()
