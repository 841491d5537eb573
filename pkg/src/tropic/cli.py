"""Command line interface: ``tropic <command> ...``.

Exit codes: 0 when everything passes, 1 on a verification counterexample,
2 on input or usage errors.
"""
from __future__ import annotations

import logging
import os
import sys

import click

from .export import dual_complex_off, dumps, simplicial_off
from .polyhedra import GeometryError, hull, polar_dual
from .problem import BUILTINS, ProblemError, builtin, load
from .rational import Q, fmt_vec, vec

EXIT_OK, EXIT_FAIL, EXIT_INPUT = 0, 1, 2


class InputError(click.ClickException):
    exit_code = EXIT_INPUT


def _problem(input_path, builtin_name):
    if input_path and builtin_name:
        raise click.UsageError("give either --input or --builtin, not both")
    try:
        if input_path:
            return load(input_path)
        return builtin(builtin_name or "quartic-k3")
    except (ProblemError, GeometryError, OSError) as exc:
        raise InputError(str(exc)) from exc


def _parse_vec(text: str):
    try:
        return vec(Q(x.strip()) for x in text.split(","))
    except (ValueError, ZeroDivisionError) as exc:
        raise click.BadParameter(f"expected comma-separated rationals, got {text!r}") from exc


def _emit(text: str, out) -> None:
    if out:
        with open(out, "w") as fh:
            fh.write(text)
    else:
        click.echo(text, nl=False)


def problem_options(f):
    f = click.option("--builtin", "builtin_name", type=click.Choice(BUILTINS), help="Use a built-in instance.")(f)
    f = click.option("--input", "input_path", type=click.Path(dir_okay=False), help="Problem JSON file.")(f)
    return f


@click.group()
@click.option("--threads", type=int, default=None, help="Worker processes (also TROPIC_THREADS).")
@click.option("-v", "--verbose", is_flag=True)
def main(threads, verbose):
    """Exact toric-degeneration combinatorics and their verifiers."""
    logging.basicConfig(level=logging.INFO if verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    if threads is not None:
        os.environ["TROPIC_THREADS"] = str(max(1, threads))


@main.command()
@problem_options
@click.option("--vertices", help="Vertices as 'x,y,z;x,y,z;...' instead of a problem.")
@click.option("--out", type=click.Path(dir_okay=False))
def polar(input_path, builtin_name, vertices, out):
    """Polar dual of Delta (or of the given vertices)."""
    try:
        if vertices:
            p = hull([_parse_vec(v) for v in vertices.split(";")], lattice="M")
        else:
            p = _problem(input_path, builtin_name).delta
        d = polar_dual(p)
    except GeometryError as exc:
        raise InputError(str(exc)) from exc
    _emit(dumps({"polytope": p.to_json(), "polar": d.to_json(), "reflexive": p.is_reflexive()}), out)


@main.command()
@problem_options
def nefcheck(input_path, builtin_name):
    """Validate the nef partition and the subdivision conditions."""
    P = _problem(input_path, builtin_name)
    try:
        nef = P.nef
        cond = P.conditions
    except GeometryError as exc:
        raise InputError(str(exc)) from exc
    body = {
        "r": nef.r,
        "parts": [q.to_json() for q in nef.parts],
        "nablas": [q.to_json() for q in nef.nablas],
        "conditions": cond.to_json(),
    }
    click.echo(dumps(body), nl=False)
    sys.exit(EXIT_OK if cond.ok else EXIT_FAIL)


@main.command()
@problem_options
@click.option("--out", type=click.Path(dir_okay=False))
def dualcomplex(input_path, builtin_name, out):
    """The dual intersection complex B as JSON."""
    P = _problem(input_path, builtin_name)
    _emit(dumps(P.B.to_json()), out)


@main.command()
@problem_options
@click.option("--finite", is_flag=True, help="Only the part in the dense torus orbit.")
@click.option("--out", type=click.Path(dir_okay=False))
def tropci(input_path, builtin_name, finite, out):
    """Pieces of the tropical complete intersection."""
    from .tropical import TropicalCI, nef_polynomials

    P = _problem(input_path, builtin_name)
    X = TropicalCI(nef_polynomials(P.nef.parts, P.h_check), P.sigma_prime, seed=P.seed)
    cx = X.finite_complex() if finite else X.complex
    _emit(dumps({"polynomials": [f.to_json() for f in X.polys], **cx.to_json()}), out)


@main.command()
@problem_options
@click.option("--point", required=True, help="A finite point, e.g. '1/2,1/3,0'.")
def contract(input_path, builtin_name, point):
    """delta(p) and the chart used to compute it."""
    from .contraction import ContractionError, build_atlas
    from .tropical import TropicalCI, TropPoint, nef_polynomials

    P = _problem(input_path, builtin_name)
    x = _parse_vec(point)
    if len(x) != P.rank:
        raise click.BadParameter(f"expected {P.rank} coordinates", param_hint="--point")
    X = TropicalCI(nef_polynomials(P.nef.parts, P.h_check), P.sigma_prime, seed=P.seed)
    atlas = build_atlas(P.B, X)
    p = TropPoint.finite(x)
    try:
        d = atlas.delta(p)
        rep = atlas.chart_of(p)
    except ContractionError as exc:
        raise InputError(str(exc)) from exc
    body = {
        "point": fmt_vec(x),
        "delta": fmt_vec(d),
        "chart": {"cell": rep.tau_prime, "chain": list(rep.chain), "barycentric": fmt_vec(rep.bary)},
    }
    click.echo(dumps(body), nl=False)


@main.command("shuffle-tri")
@click.option("--degree", required=True, help="Block sizes, e.g. '2,1,1'.")
@click.option("--export", "fmt_", type=click.Choice(["json", "off"]), default="json")
@click.option("--verify", is_flag=True, help="Also certify the triangulation.")
@click.option("--out", type=click.Path(dir_okay=False))
def shuffle_tri(degree, fmt_, verify, out):
    """Staircase triangulation of a product of simplices."""
    from .shuffles import product_triangulation, verify_pa_iso

    try:
        deg = tuple(int(x) for x in degree.split(","))
        if any(p < 0 for p in deg) or not deg:
            raise ValueError
    except ValueError as exc:
        raise click.BadParameter("expected comma-separated non-negative integers", param_hint="--degree") from exc
    cx = product_triangulation(deg)
    if fmt_ == "off":
        text = simplicial_off(cx, f"product of simplices of degree {','.join(map(str, deg))}")
    else:
        text = dumps({"degree": list(deg), **cx.to_json()})
    _emit(text, out)
    if verify:
        rep = verify_pa_iso(deg)
        click.echo(dumps(rep), err=True, nl=False)
        sys.exit(EXIT_OK if rep["pass"] else EXIT_FAIL)


@main.command()
@click.argument("stages", nargs=-1, required=True)
@problem_options
@click.option("--samples", type=int, default=100, show_default=True, help="Series points for the commutation check.")
@click.option("--trunc", type=int, default=None, help="Truncation order T (default: the problem's).")
@click.option("--seed", type=int, default=None, help="Sampling seed (default: the problem's).")
@click.option("--timings", is_flag=True, help="Include per-check timings in the JSON report.")
@click.option("--out", type=click.Path(dir_okay=False))
def verify(stages, input_path, builtin_name, samples, trunc, seed, timings, out):
    """Run verifier stages: dualcomplex, tropci, contraction, shuffles, valuation or all."""
    from .pipeline import expand_stages, run_pipeline

    try:
        expand_stages(stages)
    except ValueError as exc:
        raise click.UsageError(str(exc)) from exc
    if trunc is not None and trunc < 4:
        raise click.BadParameter("must be at least 4", param_hint="--trunc")
    P = _problem(input_path, builtin_name)
    opts = {"samples": samples}
    if trunc is not None:
        opts["trunc"] = trunc
    if seed is not None:
        opts["seed"] = seed
    report = run_pipeline(P, stages, **opts)
    _emit(dumps(report.to_json(timings)), out)
    click.echo(report.summary(), err=True)
    sys.exit(EXIT_OK if report.passed else EXIT_FAIL)


@main.command()
@click.argument("obj", type=click.Choice(["B", "triangulation", "problem", "samples"]))
@problem_options
@click.option("--format", "fmt_", type=click.Choice(["json", "off"]), default="json")
@click.option("--samples", type=int, default=10, show_default=True)
@click.option("--out", type=click.Path(dir_okay=False))
def export(obj, input_path, builtin_name, fmt_, samples, out):
    """Export B, its triangulation, the problem or series samples."""
    P = _problem(input_path, builtin_name)
    if obj == "B":
        text = dual_complex_off(P.B, f"B {P.name}") if fmt_ == "off" else dumps(P.B.to_json())
    elif obj == "triangulation":
        from .shuffles import triangulate_B

        tri = triangulate_B(P.B, P.B.default_orders(P.distinguished_vertex))
        text = simplicial_off(tri.complex, f"triangulation of B {P.name}") if fmt_ == "off" else dumps(tri.to_json())
    elif fmt_ == "off":
        raise click.UsageError(f"{obj} has no OFF form")
    elif obj == "problem":
        text = dumps(P.to_json())
    else:
        from .contraction import build_atlas
        from .tropical import TropicalCI, nef_polynomials
        from .valuation import TorusSystem, sample_series_points

        X = TropicalCI(nef_polynomials(P.nef.parts, P.h_check), P.sigma_prime, seed=P.seed)
        atlas = build_atlas(P.B, X)
        ss = sample_series_points(atlas, P.distinguished_vertex, X.polys, TorusSystem.of(X.polys, P.seed), samples, P.seed, P.trunc)
        text = dumps({"points": [p.to_json() for p in ss.points], **ss.summary()})
    _emit(text, out)


if __name__ == "__main__":
    main()
