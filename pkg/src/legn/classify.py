"""Normal forms up to scaling: the three classes of type (4, 11) and the rigidity table."""

from __future__ import annotations

import math
from dataclasses import dataclass

from flint import fmpq

from .branch import BranchParam, equation, parametrize_equation, rational_root
from .conormal import ConormalParam, conormal, smooth_surface_test
from .errors import HypothesisViolated
from .series import INF, TruncSeries3, WeightSystem, compose3, rat
from .versal import VersalCoords, basis, microlocal_reduce


@dataclass(frozen=True)
class ScalingWeights:
    """``d_ij = ki + nj - kn`` for the pairs of the basis ``C``."""

    k: int
    n: int
    d: dict

    @classmethod
    def of(cls, k: int, n: int) -> "ScalingWeights":
        C = basis(k, n, "C")
        d = {p: C.excess(p) for p in C.pairs}
        assert all(v > 0 for v in d.values())
        return cls(k, n, d)


def scaling_action(coords: VersalCoords, tau) -> VersalCoords:
    """``t_ij -> tau^(d_ij) t_ij``: the effect of ``(x, y) -> (tau^k x, tau^n y)``."""
    tau = rat(tau)
    if tau == 0:
        raise ValueError("tau must be nonzero")
    B = coords.basis
    return VersalCoords(B, {p: c * tau ** B.excess(p) for p, c in coords.values.items()})


def graded_scaling_identity(k: int, n: int) -> bool:
    """``G(L^k x, L^n y, t) = L^(kn) G(x, y, L^d t)`` with ``L`` a graded marker.

    Each side is a map ``(i, j, marker exponent, parameter) -> coefficient``;
    parameter ``None`` marks the two fixed terms.
    """
    C = basis(k, n, "C")
    terms = [((0, k), None, 1), ((n, 0), None, -1)] + [(p, p, 1) for p in C.pairs]
    lhs, rhs = {}, {}
    for (i, j), param, c in terms:
        lhs[(i, j, k * i + n * j, param)] = c
        extra = 0 if param is None else C.excess(param)
        rhs[(i, j, k * n + extra, param)] = c
    return lhs == rhs


# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class NormalFormId:
    k: int
    n: int
    coords: VersalCoords
    label: str | None
    complete: bool

    @property
    def pattern(self) -> tuple[bool, ...]:
        return tuple(c != 0 for c in self.coords.vector())

    def __str__(self):
        if self.label is not None:
            return self.label
        return f"({self.k},{self.n}) {self.coords} [complete={self.complete}]"


def classify_4_11(coords: VersalCoords) -> NormalFormId:
    """F0: both zero; F1: ``t2 != 0``; F2: ``t2 = 0, t6 != 0``."""
    C = basis(4, 11, "C")
    coords = coords.restrict(C)
    t2, t6 = coords[(6, 2)], coords[(7, 2)]
    if t2 != 0:
        label = "F1"
    elif t6 != 0:
        label = "F2"
    else:
        label = "F0"
    return NormalFormId(4, 11, coords, label, True)


REPRESENTATIVES_4_11 = {
    "F0": {},
    "F1": {(6, 2): 1},
    "F2": {(7, 2): 1},
}


def representative(label: str) -> TruncSeries3:
    return equation(4, 11, REPRESENTATIVES_4_11[label])


def normalize_by_scaling(coords: VersalCoords) -> VersalCoords:
    """Scale the lowest nonzero coordinate to 1 when a rational ``tau`` allows it."""
    B = coords.basis
    for p in B.pairs:
        t = coords[p]
        if t != 0:
            tau = rational_root(1 / t, B.excess(p))
            return coords if tau is None else scaling_action(coords, tau)
    return coords


def classify_coords(coords: VersalCoords) -> NormalFormId:
    k, n = coords.basis.k, coords.basis.n
    if (k, n) == (4, 11):
        return classify_4_11(coords)
    return NormalFormId(k, n, normalize_by_scaling(coords), None, False)


def classify_branch(b: BranchParam) -> tuple[NormalFormId, VersalCoords]:
    coords, _ = microlocal_reduce(b)
    return classify_coords(coords), coords


# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Evidence:
    equal: bool
    reason: str
    witnesses: tuple = ()


def distinguish(a: NormalFormId, b: NormalFormId, conormals: tuple[ConormalParam, ConormalParam] | None = None) -> Evidence:
    """Machine-checkable reason why two (4, 11) classes differ, or that they coincide."""
    if a.label == b.label:
        return Evidence(True, f"both curves are {a.label}")
    if conormals is None:
        conormals = tuple(conormal(parametrize_equation(representative(x.label))) for x in (a, b))
    if "F0" in (a.label, b.label):
        w = tuple(smooth_surface_test(L) for L in conormals)
        lies = [x is not None for x in w]
        if lies[0] == lies[1]:
            return Evidence(False, "smooth-surface test does not separate the curves", w)
        return Evidence(False, "exactly one curve lies on a smooth surface", w)
    return Evidence(
        False,
        f"distinct zero patterns of the complete normal form: {a.coords} vs {b.coords}",
        (a.coords, b.coords),
    )


def rigidity_check(k: int, n: int) -> bool:
    """True iff the microlocal basis ``C`` is empty."""
    if math.gcd(k, n) != 1 or not n > 2 * k:
        raise HypothesisViolated(f"need n > 2k and gcd(k, n) = 1, got k={k}, n={n}")
    return len(basis(k, n, "C")) == 0


def in_rigid_list(k: int, n: int) -> bool:
    """``y^2 - x^(2m+1)``, ``y^3 - x^7`` and ``y^3 - x^8``."""
    return (k == 2 and n % 2 == 1) or (k, n) in ((3, 7), (3, 8))


# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class IdentityCheck:
    transformed: TruncSeries3
    unit: TruncSeries3
    remainder: TruncSeries3
    remainder_order: int


def _divide_weighted(R: TruncSeries3, lead: TruncSeries3, k: int) -> TruncSeries3 | None:
    """Exact quotient of a weighted-homogeneous ``R`` by ``y^k - x^n``, or ``None``."""
    ws = R.ws
    q = {}
    rest = dict(R.terms)
    while rest:
        (i, j, l) = max(rest, key=lambda m: (m[1], m[0]))
        c = rest[(i, j, l)]
        if j < k:
            return None
        mono = TruncSeries3(ws, {(i, j - k, l): c})
        q[(i, j - k, l)] = c
        for m, v in mono.mul(lead).terms.items():
            rest[m] = rest.get(m, 0) - v
            if rest[m] == 0:
                del rest[m]
    return TruncSeries3(ws, q)


def example_identity_4_11(t6=fmpq(1, 3), target: int = 52) -> IdentityCheck:
    """Plane change ``(x - 2 t6 x^2, y - (11/2) t6 x y)`` on ``G(., ., 1, t6)``.

    Finds the unit ``u`` degree by degree so that ``G o change - u f1`` has no
    term of weight below ``target``.
    """
    t6 = rat(t6)
    ws = WeightSystem(4, 11)
    x, y, p = TruncSeries3.gens(ws)
    G = equation(4, 11, {(6, 2): 1, (7, 2): t6})
    f1 = equation(4, 11, {(6, 2): 1})
    E = compose3(G, x - (x * x).scale(2 * t6), y - (x * y).scale(fmpq(11, 2) * t6), p)
    lead = f1.homogeneous_part(44)
    unit = TruncSeries3(ws, {(0, 0, 0): 1})
    for d in range(45, target):
        R = (E - unit.mul(f1)).homogeneous_part(d)
        if R.is_zero():
            continue
        q = _divide_weighted(R, lead, 4)
        if q is None:
            break
        unit = unit + q
    rem = E - unit.mul(f1)
    return IdentityCheck(E, unit, rem, rem.order() if not rem.is_zero() else INF)
