"""Plane branches given by a normalized parametrization ``x = s^k, y = sum a_r s^r``.

Also: Puiseux data and the semigroup, implicit equations of a branch, the
inverse direction (parametrizing an equation by Newton iteration), and the
JSON curve description format.
"""

from __future__ import annotations

import json
import math
import os
from dataclasses import dataclass, field
from typing import Mapping

from flint import fmpq

from .errors import (
    BadOrder,
    LegnError,
    NotPrimitive,
    NotSemiQuasiHomogeneous,
    TruncationTooSmall,
)
from .series import (
    INF,
    TruncSeries3,
    UniSeries,
    WeightSystem,
    rat,
    rat_str,
    substitute,
    uni_reversion,
    uni_root,
)

TRUNC_ENV = "LEGN_TRUNC"


class IrrationalRescaling(LegnError, ValueError):
    """The leading coefficient of ``x(s)`` has no rational k-th root."""


def default_trunc(k: int, n: int) -> int:
    """Default truncation ``3kn``; the ``LEGN_TRUNC`` environment variable overrides it."""
    env = os.environ.get(TRUNC_ENV)
    if env:
        return int(env)
    return 3 * k * n


def _int_root(a: int, k: int) -> int | None:
    """Exact integer k-th root of ``a >= 0`` or ``None``."""
    if a < 2:
        return a
    r = int(round(a ** (1.0 / k))) if a.bit_length() < 1000 else 1 << (a.bit_length() // k)
    # Newton correction, works from any positive start above the root
    r = max(r, 1)
    while True:
        nr = ((k - 1) * r + a // r ** (k - 1)) // k
        if nr >= r:
            break
        r = nr
    for cand in (r - 1, r, r + 1):
        if cand >= 0 and cand**k == a:
            return cand
    return None


def rational_root(c, k: int) -> fmpq | None:
    """Rational ``d`` with ``d^k = c``, or ``None``."""
    c = rat(c)
    if c == 0:
        return fmpq(0)
    sign = 1
    if c < 0:
        if k % 2 == 0:
            return None
        sign = -1
        c = -c
    p, q = _int_root(int(c.p), k), _int_root(int(c.q), k)
    if p is None or q is None:
        return None
    return fmpq(sign * p, q)


# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class BranchParam:
    """``x = s^k``, ``y = sum_r a_r s^r`` (``r >= n``, ``a_n != 0``) known up to ``s^trunc``.

    ``k = 1`` is accepted for smooth branches; everything that needs a
    :class:`WeightSystem` requires ``n > k > 1`` coprime.
    """

    k: int
    n: int
    coeffs: Mapping[int, fmpq]
    trunc: int

    def __post_init__(self):
        if self.k < 1 or self.n <= self.k:
            raise BadOrder(f"need n > k >= 1, got k={self.k}, n={self.n}")
        clean = {int(r): rat(c) for r, c in self.coeffs.items() if rat(c) != 0 and r <= self.trunc}
        if any(r < self.n for r in clean):
            raise BadOrder(f"y has a term below s^{self.n}")
        if clean.get(self.n, 0) == 0:
            raise BadOrder(f"a_{self.n} must be nonzero")
        object.__setattr__(self, "coeffs", dict(sorted(clean.items())))

    @property
    def ws(self) -> WeightSystem:
        return WeightSystem(self.k, self.n)

    @property
    def x(self) -> UniSeries:
        return UniSeries.monomial(self.k)

    @property
    def y(self) -> UniSeries:
        return UniSeries(self.coeffs, self.trunc)

    @property
    def lead(self) -> fmpq:
        return self.coeffs[self.n]

    def with_trunc(self, trunc: int) -> "BranchParam":
        return BranchParam(self.k, self.n, self.coeffs, min(trunc, self.trunc))

    @classmethod
    def monomial_curve(cls, k: int, n: int, trunc: int | None = None) -> "BranchParam":
        return cls(k, n, {n: 1}, default_trunc(k, n) if trunc is None else trunc)

    def __repr__(self):
        terms = " + ".join(f"({c})s^{r}" for r, c in self.coeffs.items())
        return f"BranchParam(x=s^{self.k}, y={terms} + O(s^{self.trunc + 1}))"


def normalize_with_reparam(
    xs: UniSeries, ys: UniSeries, k: int | None = None, trunc: int | None = None
) -> tuple[BranchParam, UniSeries]:
    """Normalized branch and the old parameter ``s`` written as a series in the new one."""
    ok = xs.order()
    if ok > xs.bound or ok < 1:
        raise BadOrder("x-component has no known leading term")
    if k is not None and ok != k:
        raise BadOrder(f"x-component has order {ok}, expected {k}")
    k = ok
    n = ys.order()
    if n > ys.bound:
        raise BadOrder("y-component vanishes to its truncation order")
    if n <= k:
        raise BadOrder(f"y has order {n}, not above the x-order {k}")
    lead = xs[k]
    d = rational_root(lead, k)
    if d is None:
        raise IrrationalRescaling(f"leading coefficient {lead} of x has no rational {k}-th root")
    # y(s(tau)) is known up to min(N_y, N_x - k + n)
    target = min(ys.bound, xs.bound - k + n)
    if trunc is not None:
        target = min(target, trunc)
    if target == INF:
        target = default_trunc(k, n)
    target = int(target)
    unit = xs.shift(-k).scale(1 / lead).truncate(target - n + 1)
    # new parameter tau = d * s * unit^(1/k), so that tau^k = xs
    tau = uni_root(unit, k, target - n + 1).shift(1).scale(d)
    s_of_tau = uni_reversion(tau)
    y_new = ys.compose(s_of_tau).truncate(target)
    branch = BranchParam(k, n, y_new.as_dict(), int(y_new.bound))
    return branch, s_of_tau


def normalize_param(xs: UniSeries, ys: UniSeries, k: int | None = None) -> BranchParam:
    """Reparametrize so that ``x`` is exactly ``tau^k``."""
    return normalize_with_reparam(xs, ys, k)[0]


def rescale_lead(b: BranchParam) -> tuple[BranchParam, fmpq]:
    """Divide ``y`` by ``a_n`` (the plane scaling ``y -> y / a_n``); returns the branch and ``1/a_n``."""
    mu = 1 / b.lead
    return BranchParam(b.k, b.n, {r: a * mu for r, a in b.coeffs.items()}, b.trunc), mu


# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class PuiseuxInvariants:
    k: int
    char_exponents: tuple[int, ...]
    pairs: tuple[tuple[int, int], ...]
    semigroup_gens: tuple[int, ...]
    conductor: int

    @property
    def is_smooth(self) -> bool:
        return not self.pairs


def semigroup_members(gens, limit: int) -> list[bool]:
    """Membership table of the numerical semigroup generated by ``gens`` on ``0..limit``."""
    table = [False] * (limit + 1)
    table[0] = True
    for m in range(1, limit + 1):
        table[m] = any(m >= g and table[m - g] for g in gens)
    return table


def conductor_of(gens) -> int:
    """Least ``c`` with every integer ``>= c`` in the semigroup; brute-force gap scan."""
    gens = sorted(set(gens))
    if math.gcd(*gens) != 1:
        raise NotPrimitive(f"generators {gens} have a common factor")
    g0 = gens[0]
    if g0 == 1:
        return 0
    limit = 4 * g0 * gens[-1]
    while True:
        table = semigroup_members(gens, limit)
        run = 0
        for m in range(limit + 1):
            run = run + 1 if table[m] else 0
            if run == g0:
                # g0 consecutive members: everything beyond is covered too
                return m - g0 + 1
        limit *= 2


def characteristic_exponents(k: int, support) -> tuple[list[int], list[int]]:
    """gcd descent: exponents ``beta_i`` where the gcd drops, and the gcds ``e_i``."""
    betas, gcds = [], []
    e = k
    for r in sorted(support):
        if r % e:
            e = math.gcd(e, r)
            betas.append(r)
            gcds.append(e)
            if e == 1:
                break
    return betas, gcds


def puiseux_invariants(b: BranchParam) -> PuiseuxInvariants:
    k = b.k
    betas, gcds = characteristic_exponents(k, b.coeffs)
    if (gcds[-1] if gcds else k) != 1:
        raise NotPrimitive(f"exponents of x=s^{k}, y share the factor {gcds[-1] if gcds else k}")
    pairs = tuple((beta // e, k // e) for beta, e in zip(betas, gcds))
    gens = [k]
    if betas:
        gens.append(betas[0])
        prev_e = k
        for i in range(1, len(betas)):
            e_prev, e_prevprev = gcds[i - 1], prev_e
            gens.append((e_prevprev // e_prev) * gens[-1] - betas[i - 1] + betas[i])
            prev_e = e_prev
    return PuiseuxInvariants(
        k=k,
        char_exponents=tuple([k] + betas),
        pairs=pairs,
        semigroup_gens=tuple(gens),
        conductor=conductor_of(gens),
    )


def same_topological_type(b1: BranchParam, b2: BranchParam) -> bool:
    return puiseux_invariants(b1).pairs == puiseux_invariants(b2).pairs


# ---------------------------------------------------------------------------


def check_tangent_cone(F: TruncSeries3, k: int, n: int) -> None:
    """Require the weight-``kn`` part of ``F`` to be exactly ``y^k - x^n``."""
    ws = F.ws
    if not F.is_p_free():
        raise NotSemiQuasiHomogeneous("equation depends on p")
    if F.order() < k * n:
        raise NotSemiQuasiHomogeneous(f"F has terms of weight {F.order()} < {k * n}")
    if F.bound != INF and F.bound < k * n:
        raise TruncationTooSmall("equation is truncated below its leading weight")
    lead = F.homogeneous_part(k * n)
    if lead != TruncSeries3(ws, {(0, k, 0): 1, (n, 0, 0): -1}):
        raise NotSemiQuasiHomogeneous(f"leading part is {lead}, expected y^{k} - x^{n}")


def parametrize_equation(F: TruncSeries3, k: int | None = None, n: int | None = None, trunc: int | None = None) -> BranchParam:
    """Branch ``x = s^k, y = s^n + ...`` of ``F = y^k - x^n + (higher weight)``.

    Newton iteration ``y <- y - F/F_y`` along ``x = s^k``; ``F_y`` has order
    exactly ``n(k-1)`` on the branch, so each step doubles the number of
    correct coefficients.
    """
    ws = F.ws
    k = ws.k if k is None else k
    n = ws.n if n is None else n
    if (k, n) != (ws.k, ws.n):
        raise NotSemiQuasiHomogeneous(f"weight system {ws} does not match type ({k},{n})")
    check_tangent_cone(F, k, n)
    target = default_trunc(k, n) if trunc is None else trunc
    shift = n * (k - 1)
    Fy = F.partial("y")
    xs = UniSeries.monomial(k)
    zero = UniSeries.zero()
    y = UniSeries.monomial(n)
    for _ in range(64):
        R = substitute(F, xs, y, zero)
        D = substitute(Fy, xs, y, zero)
        if D.order() != shift:
            raise NotSemiQuasiHomogeneous("F_y does not have the expected order on the branch")
        step = R.shift(-shift).div(D.shift(-shift), bound=target)
        y = (y - step).truncate(target)
        if step.order() > step.bound:
            break
    else:
        raise NotSemiQuasiHomogeneous("Newton iteration did not converge")
    if y.bound < n:
        raise TruncationTooSmall("equation is truncated too low to determine the branch")
    return BranchParam(k, n, y.as_dict(), int(y.bound))


def implicitize(b: BranchParam) -> TruncSeries3:
    """``F = y^k + sum_{j<k} c_j(x) y^j`` vanishing on the branch to the reliable window.

    The coefficient of ``x^a y^j`` is found at weight ``ka + nj``: the residual
    ``F o sigma`` has its lowest nonzero term there and each weight ``m`` is
    reached by exactly one ``(a, j)`` with ``j < k`` once ``m`` is past the
    conductor. Everything below the conductor is forced by ``y^k``.
    """
    ws = b.ws
    k, n = b.k, b.n
    ys = b.y
    ypow = [UniSeries({0: 1})]
    for _ in range(k):
        ypow.append(ypow[-1].mul(ys))
    residual = ypow[k]
    coeffs: dict = {(0, k, 0): fmpq(1)}
    window = residual.bound
    while True:
        window = min(window, residual.bound)
        m = residual.order()
        if m > window:
            break
        j = next((j for j in range(k) if (m - n * j) >= 0 and (m - n * j) % k == 0), None)
        if j is None:
            raise TruncationTooSmall(f"residual of weight {m} is not reachable by x^a y^j, j < {k}")
        a = (m - n * j) // k
        term = ypow[j].shift(k * a)
        c = residual[m] / term[m]
        coeffs[(a, j, 0)] = coeffs.get((a, j, 0), 0) - c
        residual = residual - term.scale(c)
    if window < k * n:
        raise TruncationTooSmall(f"reliable window {window} is below the leading weight {k * n}")
    return TruncSeries3(ws, coeffs, int(window))


# ---------------------------------------------------------------------------
# curve description files


@dataclass
class CurveFile:
    kind: str
    k: int
    n: int
    trunc: int
    equation: TruncSeries3 | None = None
    branch: BranchParam | None = None
    extra: dict = field(default_factory=dict)

    def to_branch(self) -> BranchParam:
        if self.branch is not None:
            return self.branch
        return parametrize_equation(self.equation, self.k, self.n, self.trunc)


def curve_from_dict(data: Mapping) -> CurveFile:
    kind = data["kind"]
    k, n = int(data["k"]), int(data["n"])
    trunc = int(data.get("trunc") or default_trunc(k, n))
    if kind == "equation":
        ws = WeightSystem(k, n)
        terms = {}
        for t in data.get("terms", []):
            mono = (int(t["i"]), int(t["j"]), int(t.get("l", 0)))
            terms[mono] = terms.get(mono, 0) + rat(t["c"])
        return CurveFile(kind, k, n, trunc, equation=TruncSeries3(ws, terms))
    if kind == "parametrization":
        coeffs = {int(t["r"]): rat(t["c"]) for t in data.get("coeffs", [])}
        return CurveFile(kind, k, n, trunc, branch=BranchParam(k, n, coeffs, trunc))
    raise ValueError(f"unknown curve kind {kind!r}")


def load_curve(path) -> CurveFile:
    with open(path) as fh:
        return curve_from_dict(json.load(fh))


def equation_to_dict(F: TruncSeries3, trunc: int | None = None) -> dict:
    ws = F.ws
    return {
        "kind": "equation",
        "k": ws.k,
        "n": ws.n,
        "terms": [{"i": i, "j": j, "c": rat_str(c)} for (i, j, _l), c in F.items()],
        "coeffs": [],
        "trunc": default_trunc(ws.k, ws.n) if trunc is None else trunc,
    }


def branch_to_dict(b: BranchParam) -> dict:
    return {
        "kind": "parametrization",
        "k": b.k,
        "n": b.n,
        "terms": [],
        "coeffs": [{"r": r, "c": rat_str(c)} for r, c in b.coeffs.items()],
        "trunc": b.trunc,
    }


def equation(k: int, n: int, extra: Mapping[tuple[int, int], object] | None = None) -> TruncSeries3:
    """``y^k - x^n + sum c x^i y^j`` as an exact series."""
    terms: dict = {(0, k, 0): 1, (n, 0, 0): -1}
    for (i, j), c in (extra or {}).items():
        terms[(i, j, 0)] = terms.get((i, j, 0), 0) + rat(c)
    return TruncSeries3(WeightSystem(k, n), terms)
