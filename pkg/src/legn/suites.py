"""Self-checks run by ``legn verify``: each suite returns a list of named results."""

from __future__ import annotations

import math
import random
from dataclasses import dataclass
from typing import Callable

from flint import fmpq

from .branch import (
    BranchParam,
    conductor_of,
    equation,
    implicitize,
    parametrize_equation,
    puiseux_invariants,
)
from .classify import (
    classify_branch,
    example_identity_4_11,
    graded_scaling_identity,
    in_rigid_list,
    representative,
    rigidity_check,
)
from .conormal import (
    conormal,
    in_strong_generic_position,
    multiplicity_legendrian,
    multiplicity_projection,
    smooth_surface_test,
)
from .contact import apply_to_conormal, cauchy_residual, cauchy_tx, solve_cauchy, verify_contact
from .series import TruncSeries3, UniSeries, WeightSystem, uni_reversion, uni_root
from .versal import basis, certify_cleaning, equisingular_reduce, microlocal_reduce, verify_transport


@dataclass(frozen=True)
class CheckResult:
    suite: str
    name: str
    ok: bool
    detail: str = ""


def _run(suite: str, name: str, fn: Callable[[], tuple[bool, str] | bool]) -> CheckResult:
    try:
        out = fn()
    except Exception as exc:  # a crash is a failed check, reported with its cause
        return CheckResult(suite, name, False, f"{type(exc).__name__}: {exc}")
    if isinstance(out, tuple):
        return CheckResult(suite, name, bool(out[0]), out[1])
    return CheckResult(suite, name, bool(out))


def random_alpha(ws: WeightSystem, rng: random.Random, max_weight: int, terms: int = 4) -> TruncSeries3:
    """Random admissible ``alpha``: no constant and no ``x`` term."""
    monos = [m for m in ws.monomials(max_weight, min_weight=1) if m != (1, 0, 0)]
    chosen = rng.sample(monos, min(terms, len(monos)))
    return TruncSeries3(ws, {m: fmpq(rng.randint(-6, 6) or 1, rng.randint(1, 5)) for m in chosen})


def random_beta0(ws: WeightSystem, rng: random.Random, max_weight: int, terms: int = 3) -> TruncSeries3:
    """Random p-free ``beta0`` of weight above ``2k`` without a ``y`` term.

    Excluding ``x^2`` keeps ``d_p gamma`` in the maximal ideal even when
    ``alpha`` has a pure ``p`` term.
    """
    monos = [m for m in ws.monomials(max_weight, min_weight=2 * ws.k + 1, p_free=True) if m != (0, 1, 0)]
    chosen = rng.sample(monos, min(terms, len(monos)))
    return TruncSeries3(ws, {m: fmpq(rng.randint(-6, 6) or 1, rng.randint(1, 5)) for m in chosen})


def suite_series() -> list[CheckResult]:
    s = "series"
    one_plus = UniSeries({0: 1, 1: 1})
    return [
        _run(s, "(1+s)(1-s) = 1-s^2", lambda: one_plus * UniSeries({0: 1, 1: -1}) == UniSeries({0: 1, 2: -1})),
        _run(s, "1/(1-s) at bound 3", lambda: UniSeries({0: 1}).div(UniSeries({0: 1, 1: -1}), 3) == UniSeries([1, 1, 1, 1], 3)),
        _run(s, "sqrt(1+s) squared", lambda: (uni_root(one_plus, 2, 20) ** 2).agrees(one_plus)),
        _run(s, "reversion of s+s^2", lambda: uni_reversion(UniSeries({1: 1, 2: 1}, 3)) == UniSeries({1: 1, 2: -1, 3: 2}, 3)),
    ]


def suite_branch() -> list[CheckResult]:
    s = "branch"
    out = [
        _run(s, "conductor <4,11> = 30", lambda: puiseux_invariants(BranchParam.monomial_curve(4, 11)).conductor == 30),
        _run(
            s,
            "conductor (k-1)(n-1), k<6, n<14",
            lambda: all(
                conductor_of([k, n]) == (k - 1) * (n - 1)
                for k in range(2, 6)
                for n in range(k + 1, 14)
                if math.gcd(k, n) == 1
            ),
        ),
    ]
    f1 = equation(4, 11, {(6, 2): 1})
    out.append(_run(s, "implicitize(parametrize(f1)) = f1", lambda: implicitize(parametrize_equation(f1)).agrees(f1)))
    return out


def suite_conormal() -> list[CheckResult]:
    s = "conormal"

    def mult_range():
        for k in range(2, 7):
            for n in range(k + 1, 16):
                if math.gcd(k, n) != 1:
                    continue
                L = conormal(BranchParam.monomial_curve(k, n, 4 * k * n))
                mL, mP = multiplicity_legendrian(L), multiplicity_projection(L)
                if mL != min(k, n - k) or mP != k or (mL == mP) != in_strong_generic_position(L):
                    return False, f"(k,n)=({k},{n})"
        return True, ""

    L0 = conormal(parametrize_equation(representative("F0")))
    L1 = conormal(parametrize_equation(representative("F1")))
    return [
        _run(s, "multiplicities and generic position, k<=6, n<=15", mult_range),
        _run(s, "11y-4xp on the conormal of y^4-x^11", lambda: str(smooth_surface_test(L0)) == "11*y - 4*x*p"),
        _run(s, "no smooth surface through the conormal of f1", lambda: smooth_surface_test(L1) is None),
    ]


def suite_contact(count: int = 10) -> list[CheckResult]:
    s = "contact"
    ws = WeightSystem(4, 11)
    rng = random.Random(20240611)
    L = conormal(BranchParam.monomial_curve(4, 11))
    out = []
    for idx in range(count):
        alpha = random_alpha(ws, rng, 44)
        beta0 = random_beta0(ws, rng, 44)

        def check(alpha=alpha, beta0=beta0):
            tx = cauchy_tx(alpha, beta0)
            verify_contact(tx)
            resid = cauchy_residual(alpha, solve_cauchy(alpha, bound=132 + 11))
            moved = apply_to_conormal(tx, L)
            pairs = puiseux_invariants(moved.branch).pairs
            return resid.is_zero() and pairs == ((11, 4),), f"alpha = {alpha}"

        out.append(_run(s, f"random transformation {idx}", check))
    return out


def suite_cleaning() -> list[CheckResult]:
    s = "cleaning"
    out = []
    for k, n in ((2, 5), (3, 7), (4, 11)):
        ws = WeightSystem(k, n)
        monos = [m for m in ws.monomials(2 * k * n) if ws.weight(m) > k * n]

        def check(k=k, n=n, monos=monos):
            bad = [m for m in monos if not certify_cleaning(*m, k, n)]
            return not bad, f"{len(monos)} monomials" if not bad else f"failed on {bad[:3]}"

        out.append(_run(s, f"rewrite certificates ({k},{n})", check))
    return out


def suite_versal() -> list[CheckResult]:
    s = "versal"
    out = [
        _run(s, "B(4,11)", lambda: basis(4, 11, "B").pairs == ((6, 2), (9, 1), (7, 2), (8, 2), (9, 2))),
        _run(s, "C(4,11)", lambda: basis(4, 11, "C").pairs == ((6, 2), (7, 2))),
    ]

    def x9y():
        b = parametrize_equation(equation(4, 11, {(9, 1): 1}))
        coords, log = microlocal_reduce(b)
        check = verify_transport(log, coords, b)
        return check.ok, str(coords)

    def idempotent():
        f1 = equation(4, 11, {(6, 2): 1})
        coords, _ = equisingular_reduce(parametrize_equation(f1))
        return coords[(6, 2)] == 1 and len(coords.support()) == 1

    out.append(_run(s, "y^4-x^11+x^9y: transport and match", x9y))
    out.append(_run(s, "equisingular reduction of f1", idempotent))
    return out


def suite_classify() -> list[CheckResult]:
    s = "classify"
    out = [_run(s, "graded scaling identity (4,11)", lambda: graded_scaling_identity(4, 11))]
    for label in ("F0", "F1", "F2"):
        out.append(
            _run(s, f"representative {label}", lambda label=label: classify_branch(parametrize_equation(representative(label)))[0].label == label)
        )

    def identity():
        ic = example_identity_4_11()
        return ic.remainder_order >= 52, f"unit {ic.unit}, remainder order {ic.remainder_order}"

    def rigid_table():
        for k in range(2, 7):
            for n in range(2 * k + 1, 22):
                if math.gcd(k, n) == 1 and rigidity_check(k, n) != in_rigid_list(k, n):
                    return False, f"(k,n)=({k},{n})"
        return True, ""

    out.append(_run(s, "plane change identity, remainder weight >= 52", identity))
    out.append(_run(s, "rigidity table k<=6, n<=21", rigid_table))
    return out


SUITES: dict[str, Callable[[], list[CheckResult]]] = {
    "series": suite_series,
    "branch": suite_branch,
    "conormal": suite_conormal,
    "contact": suite_contact,
    "cleaning": suite_cleaning,
    "versal": suite_versal,
    "classify": suite_classify,
}


def run_suite(name: str) -> list[CheckResult]:
    if name == "all":
        results = []
        for fn in SUITES.values():
            results.extend(fn())
        return results
    if name not in SUITES:
        raise KeyError(f"unknown suite {name!r}; choose from {', '.join(SUITES)} or all")
    return SUITES[name]()


__all__ = ["CheckResult", "SUITES", "run_suite", "random_alpha", "random_beta0"]
