"""Command-line front end.

Exit codes:

====  ==========================================================
0     success
1     invalid input or any other library error
2     the curve is not equisingular to its quasi-homogeneous part
3     a reduction failed an internal consistency check
4     configuration refused (weight truncation below ``2kn``)
5     ``verify`` found a failing check
64    command-line usage error
====  ==========================================================
"""

from __future__ import annotations

import functools
import json
import logging
import math
import sys
from dataclasses import dataclass, replace

import click

from .branch import (
    TRUNC_ENV,
    BranchParam,
    CurveFile,
    branch_to_dict,
    curve_from_dict,
    puiseux_invariants,
)
from .classify import classify_coords, distinguish
from .conormal import (
    conormal,
    in_strong_generic_position,
    multiplicity_legendrian,
    multiplicity_projection,
    tangent_cone_from_param,
    valuation,
)
from .contact import ContactTx, apply_to_conormal, cauchy_tx
from .errors import LegnError, NotEquisingular, ReductionFailed
from .series import rat, rat_str, parse_poly
from .suites import SUITES, run_suite
from .versal import (
    basis,
    equisingular_reduce,
    microlocal_reduce,
    report_to_dict,
    verify_transport,
)

log = logging.getLogger("legn")

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_NOT_EQUISINGULAR = 2
EXIT_REDUCTION_FAILED = 3
EXIT_CONFIG = 4
EXIT_VERIFY_FAILED = 5
EXIT_USAGE = 64


class ConfigRefused(LegnError, ValueError):
    pass


@dataclass(frozen=True)
class RunConfig:
    """Options shared by all commands; ``n_s``/``n_w`` override the curve file."""

    command: str | None = None
    input: str | None = None
    output: str | None = None
    n_s: int | None = None
    n_w: int | None = None
    verbosity: int = 0
    decimal: bool = False

    def series_trunc(self, curve: CurveFile) -> int:
        return curve.trunc if self.n_s is None else self.n_s

    def weight_trunc(self, curve: CurveFile) -> int:
        return self.series_trunc(curve) if self.n_w is None else self.n_w

    def check_reduction(self, curve: CurveFile) -> None:
        k, n = curve.k, curve.n
        if self.weight_trunc(curve) < 2 * k * n:
            raise ConfigRefused(
                f"weight truncation {self.weight_trunc(curve)} is below 2kn = {2 * k * n}; "
                "reductions need more precision"
            )


def _exit_code(exc: BaseException) -> int:
    if isinstance(exc, NotEquisingular):
        return EXIT_NOT_EQUISINGULAR
    if isinstance(exc, ReductionFailed):
        return EXIT_REDUCTION_FAILED
    if isinstance(exc, ConfigRefused):
        return EXIT_CONFIG
    return EXIT_ERROR


def _guarded(fn):
    """Turn library errors into a message on stderr and a documented exit code."""

    @functools.wraps(fn)
    def wrapper(*args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except (LegnError, ValueError, KeyError, OSError, json.JSONDecodeError) as exc:
            click.echo(f"error: {type(exc).__name__}: {exc}", err=True)
            sys.exit(_exit_code(exc))

    return wrapper


class _Group(click.Group):
    # usage errors get their own exit code so that 2 keeps its meaning
    def make_context(self, *args, **kwargs):
        try:
            return super().make_context(*args, **kwargs)
        except click.UsageError as exc:
            exc.exit_code = EXIT_USAGE
            raise

    def invoke(self, ctx):
        try:
            return super().invoke(ctx)
        except click.UsageError as exc:
            exc.exit_code = EXIT_USAGE
            raise


def _show(value, decimal: bool) -> str:
    q = rat(value)
    if decimal:
        return f"{int(q.p) / int(q.q):.12g}"
    return rat_str(q)


def _emit(data, output: str | None) -> None:
    text = json.dumps(data, indent=2)
    if output:
        with open(output, "w") as fh:
            fh.write(text + "\n")
    else:
        click.echo(text)


def _load(cfg: RunConfig, path: str) -> tuple[CurveFile, dict, BranchParam]:
    with open(path) as fh:
        source = json.load(fh)
    curve = curve_from_dict(source)
    trunc = cfg.series_trunc(curve)
    if trunc != curve.trunc:
        curve = curve_from_dict({**source, "trunc": trunc})
    return curve, source, curve.to_branch()


def _series_json(s) -> list:
    return [{"r": r, "c": rat_str(c)} for r, c in s.items()]


# ---------------------------------------------------------------------------


@click.group(cls=_Group, context_settings={"help_option_names": ["-h", "--help"]})
@click.option("--trunc", "n_s", type=int, default=None, help=f"Series truncation N_s (overrides the file and {TRUNC_ENV}).")
@click.option("--weight-trunc", "n_w", type=int, default=None, help="Weight truncation N_w of transformations (default N_s).")
@click.option("--decimal", is_flag=True, help="Show rationals as decimals in human-readable output.")
@click.option("-v", "--verbose", count=True, help="Increase logging verbosity.")
@click.pass_context
def cli(ctx, n_s, n_w, decimal, verbose):
    """Exact computations with Legendrian curve singularities."""
    logging.basicConfig(level=logging.WARNING - 10 * min(verbose, 2), format="%(levelname)s %(message)s")
    ctx.obj = RunConfig(command=ctx.invoked_subcommand, n_s=n_s, n_w=n_w, verbosity=verbose, decimal=decimal)


@cli.command("basis")
@click.option("--k", "k", type=int, required=True)
@click.option("--n", "n", type=int, required=True)
@click.option("--flavor", type=click.Choice(["B", "C"]), default="B", show_default=True)
@click.pass_obj
@_guarded
def cmd_basis(cfg, k, n, flavor):
    """Table of the deformation monomials x^i y^j."""
    if math.gcd(k, n) != 1:
        raise ValueError(f"gcd(k, n) = {math.gcd(k, n)} != 1")
    B = basis(k, n, flavor)
    click.echo(f"{'(i,j)':>8} {'weight':>7} {'d':>4}")
    for pair in B.pairs:
        click.echo(f"{str(pair).replace(' ', ''):>8} {B.weight(pair):>7} {B.excess(pair):>4}")
    if not B.pairs:
        click.echo("rigid")


@cli.command("parametrize")
@click.argument("input", type=click.Path(exists=True, dir_okay=False))
@click.option("-o", "--output", type=click.Path(dir_okay=False), default=None)
@click.pass_obj
@_guarded
def cmd_parametrize(cfg, input, output):
    """Write the normalized parametrization x = s^k, y = s^n + ... as a curve file."""
    _, _, b = _load(cfg, input)
    _emit(branch_to_dict(b), output)


@cli.command("conormal")
@click.argument("input", type=click.Path(exists=True, dir_okay=False))
@click.option("-o", "--output", type=click.Path(dir_okay=False), default=None)
@click.pass_obj
@_guarded
def cmd_conormal(cfg, input, output):
    """Conormal lift with its multiplicities, tangent cone and Puiseux data."""
    _, _, b = _load(cfg, input)
    L = conormal(b)
    inv = puiseux_invariants(b)
    _emit(
        {
            "k": b.k,
            "n": b.n,
            "trunc": b.trunc,
            "x": _series_json(L.x),
            "y": _series_json(L.y),
            "p": _series_json(L.p),
            "multiplicity_legendrian": multiplicity_legendrian(L),
            "multiplicity_projection": multiplicity_projection(L),
            "strong_generic_position": in_strong_generic_position(L),
            "tangent_cone": str(tangent_cone_from_param(L)),
            "puiseux_pairs": [list(p) for p in inv.pairs],
            "semigroup": list(inv.semigroup_gens),
            "conductor": inv.conductor,
        },
        output,
    )


@cli.command("valuation")
@click.argument("input", type=click.Path(exists=True, dir_okay=False))
@click.option("--f", "expr", required=True, help="Polynomial in x, y, p, e.g. '11*y - 4*x*p'.")
@click.pass_obj
@_guarded
def cmd_valuation(cfg, input, expr):
    """s-order of f on the conormal, or '>=N' when it vanishes on the reliable window."""
    _, _, b = _load(cfg, input)
    click.echo(str(valuation(conormal(b), parse_poly(b.ws, expr))))


@cli.command("transform")
@click.argument("input", type=click.Path(exists=True, dir_okay=False))
@click.option("--alpha", required=True, help="x-displacement as a polynomial in x, y, p.")
@click.option("--beta0", default=None, help="p-free initial value of the y-displacement.")
@click.option("--lambda", "lam", default="1", show_default=True, help="Scaling of x.")
@click.option("--mu", default="1", show_default=True, help="Scaling of y.")
@click.option("-o", "--output", type=click.Path(dir_okay=False), default=None)
@click.option("--with-tx", is_flag=True, help="Also write the certified transformation.")
@click.pass_obj
@_guarded
def cmd_transform(cfg, input, alpha, beta0, lam, mu, output, with_tx):
    """Apply the contact transformation built from alpha (and beta0) to the curve."""
    curve, _, b = _load(cfg, input)
    ws = b.ws
    a = parse_poly(ws, alpha)
    b0 = parse_poly(ws, beta0) if beta0 else None
    j = cauchy_tx(a, b0, cfg.weight_trunc(curve))
    tx = ContactTx.jtype(j.alpha, j.beta, j.gamma, lam=rat(lam), mu=rat(mu))
    moved = apply_to_conormal(tx, conormal(b)).branch
    out = branch_to_dict(moved)
    if with_tx:
        out = {"curve": out, "transformation": tx.to_json()}
    log.info("certificate unit %s", tx.certificate.u.truncate(2 * b.k * b.n))
    _emit(out, output)


@cli.command("reduce")
@click.argument("input", type=click.Path(exists=True, dir_okay=False))
@click.option("--microlocal", is_flag=True, help="Reduce over C using contact transformations.")
@click.option("-o", "--output", type=click.Path(dir_okay=False), default=None)
@click.pass_obj
@_guarded
def cmd_reduce(cfg, input, microlocal, output):
    """Write a reduction report: coordinates, transformation log and transport check."""
    curve, source, b = _load(cfg, input)
    cfg = replace(cfg, input=input, output=output)
    cfg.check_reduction(curve)
    if microlocal:
        coords, rlog = microlocal_reduce(b, weight_trunc=cfg.weight_trunc(curve))
    else:
        coords, rlog = equisingular_reduce(b, exact=True)
    check = verify_transport(rlog, coords, b)
    if not check.ok:
        raise ReductionFailed(f"transported curve does not match the normal form: {check}")
    report = report_to_dict(source, coords, rlog)
    report["transport"] = {
        "on_normal_form": check.on_normal_form,
        "matches_log": check.matches_log,
        "matches_parametrization": check.matches_parametrization,
        "agreement_order": check.agreement_order,
    }
    log.info("coords %s, %d log entries", coords, len(rlog.steps))
    _emit(report, output)


@cli.command("classify")
@click.argument("input", type=click.Path(exists=True, dir_okay=False))
@click.option("--against", type=click.Path(exists=True, dir_okay=False), default=None, help="Second curve to compare with.")
@click.pass_obj
@_guarded
def cmd_classify(cfg, input, against):
    """Normal form of the curve up to contact transformations and scaling."""
    results = []
    for path in filter(None, (input, against)):
        curve, _, b = _load(cfg, path)
        cfg.check_reduction(curve)
        coords, _ = microlocal_reduce(b, weight_trunc=cfg.weight_trunc(curve))
        results.append(classify_coords(coords))
    for nf in results:
        if nf.label is not None:
            click.echo(nf.label)
        else:
            shown = ", ".join(f"t{p}={_show(c, cfg.decimal)}" for p, c in nf.coords.values.items()) or "0"
            click.echo(f"({nf.k},{nf.n}) [{shown}] complete={nf.complete}")
    if against is not None and results[0].label and results[1].label:
        ev = distinguish(*results)
        click.echo(f"{'equal' if ev.equal else 'distinct'}: {ev.reason}")
        for path, w in zip((input, against), ev.witnesses):
            click.echo(f"  {path}: {'no witness in the window' if w is None else w}")


@cli.command("verify")
@click.option("--suite", type=click.Choice(list(SUITES) + ["all"]), default="all", show_default=True)
@click.pass_obj
@_guarded
def cmd_verify(cfg, suite):
    """Run the self-verification suites and print one line per check."""
    results = run_suite(suite)
    for r in results:
        tail = f"  ({r.detail})" if r.detail and (cfg.verbosity or not r.ok) else ""
        click.echo(f"{'PASS' if r.ok else 'FAIL'} [{r.suite}] {r.name}{tail}")
    failed = sum(not r.ok for r in results)
    click.echo(f"{len(results) - failed}/{len(results)} checks passed")
    if failed:
        sys.exit(EXIT_VERIFY_FAILED)


def main(argv=None):
    cli.main(args=argv, prog_name="legn")


__all__ = ["cli", "main", "RunConfig", "ConfigRefused"]
