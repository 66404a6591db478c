"""Conormal lifts ``(x(s), y(s), p(s))`` with ``p = y'/x'`` and the valuation they define."""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

from flint import fmpq, fmpq_mat

from .branch import BranchParam
from .errors import TiltedTangentCone
from .series import TruncSeries3, UniSeries, WeightSystem, substitute


@dataclass(frozen=True)
class AtLeast:
    """Valuation beyond the reliable window: no nonzero coefficient up to ``bound``."""

    bound: int

    def __str__(self):
        return f">={self.bound + 1}"


@dataclass(frozen=True)
class ConormalParam:
    branch: BranchParam
    p: UniSeries

    @property
    def k(self) -> int:
        return self.branch.k

    @property
    def n(self) -> int:
        return self.branch.n

    @property
    def ws(self) -> WeightSystem:
        return self.branch.ws

    @property
    def x(self) -> UniSeries:
        return self.branch.x

    @property
    def y(self) -> UniSeries:
        return self.branch.y

    @property
    def trunc(self) -> int:
        return self.branch.trunc

    def sigma(self) -> tuple[UniSeries, UniSeries, UniSeries]:
        return self.x, self.y, self.p


def conormal(b: BranchParam) -> ConormalParam:
    # x' = k s^(k-1) exactly, so the quotient is a shift and a scale
    p = b.y.derivative().shift(-(b.k - 1)).scale(fmpq(1, b.k))
    return ConormalParam(b, p)


def guard_for(L: ConormalParam) -> int:
    return L.k * L.n


def window(L: ConormalParam, guard: int | None = None) -> int:
    """Largest s-order trusted by :func:`valuation`: ``N_s - guard``."""
    return L.trunc - (guard_for(L) if guard is None else guard)


def order_in_window(h: UniSeries, top) -> int | AtLeast:
    top = min(h.bound, top)
    m = h.order()
    if m > top:
        return AtLeast(int(top))
    return m


def valuation(L: ConormalParam | BranchParam, f: TruncSeries3, guard: int | None = None) -> int | AtLeast:
    """s-order of ``f o sigma``, or :class:`AtLeast` when it vanishes on the whole window."""
    if isinstance(L, BranchParam):
        L = conormal(L)
    h = substitute(f, *L.sigma())
    return order_in_window(h, window(L, guard))


def is_at_least(v) -> bool:
    return isinstance(v, AtLeast)


# ---------------------------------------------------------------------------


def multiplicity_legendrian(L: ConormalParam) -> int:
    """Least s-order among the three components."""
    return min(c.order() for c in L.sigma())


def multiplicity_projection(L: ConormalParam) -> int:
    return min(L.x.order(), L.y.order())


@dataclass(frozen=True)
class TangentConeClass:
    kind: str  # "PAxis" | "TiltedLine" | "XAxis"
    slope: fmpq | None = None

    def __str__(self):
        if self.kind == "TiltedLine":
            return f"TiltedLine(y = 0, p = {self.slope} x)"
        return self.kind


def tangent_cone_class(b: BranchParam) -> TangentConeClass:
    """Classification by the first exponent ``delta = n/k``."""
    delta = Fraction(b.n, b.k)
    if delta < 2:
        return TangentConeClass("PAxis")
    if delta > 2:
        return TangentConeClass("XAxis")
    # delta = 2 forces k = 1, n = 2 for a branch written as y = a_2 x^2 + ...
    return TangentConeClass("TiltedLine", 2 * b.coeffs[b.n])


def tangent_direction(L: ConormalParam) -> tuple[fmpq, fmpq, fmpq]:
    """Direction of the tangent cone: lowest-order coefficients of ``(x, y, p)``."""
    m = multiplicity_legendrian(L)
    return tuple(c[m] if c.order() == m else fmpq(0) for c in L.sigma())


def tangent_cone_from_param(L: ConormalParam) -> TangentConeClass:
    dx, dy, dp = tangent_direction(L)
    if dx == 0 and dy == 0:
        return TangentConeClass("PAxis")
    if dp == 0:
        return TangentConeClass("XAxis")
    return TangentConeClass("TiltedLine", dp / dx)


def in_strong_generic_position(L: ConormalParam) -> bool:
    """The tangent cone avoids the kernel of the projection (the p-axis)."""
    dx, dy, _ = tangent_direction(L)
    return dx != 0 or dy != 0


def require_untilted(b: BranchParam) -> None:
    """Inputs are assumed to have tangent cone ``{y = 0}`` in the plane."""
    if tangent_cone_class(b).kind == "TiltedLine":
        raise TiltedTangentCone("conormal tangent cone is tilted; rotate the input first")


# ---------------------------------------------------------------------------


def _primitive(vec: list[fmpq]) -> list[int]:
    den = 1
    for c in vec:
        den = den * int(c.q) // math.gcd(den, int(c.q))
    ints = [int(c * den) for c in vec]
    g = 0
    for v in ints:
        g = math.gcd(g, v)
    return [v // g for v in ints] if g else ints


def smooth_surface_test(L: ConormalParam, cap: int | None = None, guard: int | None = None) -> TruncSeries3 | None:
    """A function with nonzero linear part vanishing on ``L`` within the window, or ``None``.

    Unknowns are the coefficients of all monomials of weight ``<= cap``
    (default ``N_s / 2``); equations are the s-coefficients of ``f o sigma``
    up to the valuation window. ``None`` is a statement about the window only.
    """
    ws = L.ws
    top = window(L, guard)
    cap = L.trunc // 2 if cap is None else cap
    linear = [(1, 0, 0), (0, 1, 0), (0, 0, 1)]
    monos = [m for m in ws.monomials(cap, min_weight=1) if sum(m) > 1]
    # linear columns go last so they end up as free variables
    monos.sort(key=lambda m: -ws.weight(m))
    monos += [m for m in linear if ws.weight(m) <= cap]
    columns = []
    for m in monos:
        h = substitute(TruncSeries3.monomial(ws, m), *L.sigma())
        top = min(top, h.bound)
        columns.append(h)
    if top < 0:
        return None
    rows = int(top) + 1
    ncols = len(columns)
    entries = [columns[c][r] for r in range(rows) for c in range(ncols)]
    rref, rank = fmpq_mat(rows, ncols, entries).rref()
    pivots = {}
    for r in range(rank):
        for c in range(ncols):
            if rref[r, c] != 0:
                pivots[c] = r
                break
    nlin = len(monos) - len([m for m in monos if sum(m) > 1])
    first_linear = ncols - nlin
    for free in range(first_linear, ncols):
        if free in pivots:
            continue
        vec = [fmpq(0)] * ncols
        vec[free] = fmpq(1)
        for c, r in pivots.items():
            vec[c] = -rref[r, free]
        ints = _primitive(vec)
        lead = next(v for v in reversed(ints[first_linear:]) if v != 0)
        sign = 1 if lead > 0 else -1
        terms = {m: sign * v for m, v in zip(monos, ints) if v}
        return TruncSeries3(ws, terms)
    return None
