"""Exact truncated power series.

Two kinds of series live here:

* :class:`UniSeries`, univariate series in the curve parameter ``s``, backed by
  FLINT's ``fmpq_poly`` so that products and compositions run in C;
* :class:`TruncSeries3`, sparse series in ``x, y, p`` truncated by the weight
  ``k*i + n*j + (n-k)*l`` of the monomial ``x^i y^j p^l``.

Every series carries a ``bound``: all coefficients of exponent (or weight)
``<= bound`` are known exactly, nothing is known beyond it. ``bound = INF``
marks an exact polynomial. Products use relative-precision bookkeeping, so
``bound(a*b) = min(bound(a) + ord(b), bound(b) + ord(a))``, which is never
smaller than ``min(bound(a), bound(b))``.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Iterator, Mapping

import flint
from flint import fmpq, fmpq_poly, fmpq_series

from .errors import (
    NonUnitDivisor,
    NotInvertibleOrder,
    NotLocal,
    RootOfNonUnit,
    WeightMismatch,
)

INF = math.inf

Rat = fmpq
Monomial = tuple[int, int, int]


def rat(value) -> fmpq:
    """Coerce ints, Fractions, fmpq and ``"num/den"`` strings to :data:`Rat`."""
    if isinstance(value, fmpq):
        return value
    if isinstance(value, int):
        return fmpq(value)
    if isinstance(value, Fraction):
        return fmpq(value.numerator, value.denominator)
    if isinstance(value, str):
        text = value.strip()
        if "/" in text:
            num, den = text.split("/")
            den_i = int(den)
            if den_i == 0:
                raise ZeroDivisionError(f"zero denominator in {value!r}")
            return fmpq(int(num), den_i)
        return fmpq(int(text))
    if hasattr(value, "numerator") and hasattr(value, "denominator"):
        return fmpq(int(value.numerator), int(value.denominator))
    raise TypeError(f"cannot convert {value!r} to a rational")


def rat_str(value) -> str:
    """Serialize a rational as the exact string ``"num/den"``."""
    q = rat(value)
    return f"{int(q.p)}/{int(q.q)}"


def _ensure_cap(prec: int) -> None:
    # fmpq_series operations are clipped to the global cap; only ever raise it.
    if flint.ctx.cap < prec:
        flint.ctx.cap = prec


@dataclass(frozen=True)
class WeightSystem:
    """Weights ``w(x)=k, w(y)=n, w(p)=n-k`` for coprime ``n > k > 1``."""

    k: int
    n: int

    def __post_init__(self):
        if not (self.n > self.k > 1):
            raise ValueError(f"need n > k > 1, got k={self.k}, n={self.n}")
        if math.gcd(self.k, self.n) != 1:
            raise ValueError(f"k={self.k} and n={self.n} are not coprime")

    @property
    def wx(self) -> int:
        return self.k

    @property
    def wy(self) -> int:
        return self.n

    @property
    def wp(self) -> int:
        return self.n - self.k

    def weight(self, mono: Monomial) -> int:
        i, j, l = mono
        return self.k * i + self.n * j + (self.n - self.k) * l

    def var_weight(self, var: str) -> int:
        return {"x": self.k, "y": self.n, "p": self.n - self.k}[var]

    def monomials(self, max_weight: int, min_weight: int = 0, p_free: bool = False) -> list[Monomial]:
        """All monomials with ``min_weight <= weight <= max_weight``, lexicographic."""
        out = []
        k, n, wp = self.k, self.n, self.n - self.k
        for i in range(max_weight // k + 1):
            for j in range((max_weight - k * i) // n + 1):
                rest = max_weight - k * i - n * j
                lmax = 0 if p_free else rest // wp
                for l in range(lmax + 1):
                    w = k * i + n * j + wp * l
                    if w >= min_weight:
                        out.append((i, j, l))
        return out


# ---------------------------------------------------------------------------
# univariate series


class UniSeries:
    """Series in ``s`` with exact rational coefficients, known up to ``s^bound``."""

    __slots__ = ("_poly", "bound")

    def __init__(self, coeffs=None, bound=INF):
        if bound != INF:
            bound = int(bound)
            if bound < -1:
                bound = -1
        if coeffs is None:
            poly = fmpq_poly()
        elif isinstance(coeffs, fmpq_poly):
            poly = coeffs
        elif isinstance(coeffs, Mapping):
            if coeffs:
                top = max(coeffs)
                if min(coeffs) < 0:
                    raise ValueError("negative exponent in univariate series")
                lst = [fmpq(0)] * (top + 1)
                for r, c in coeffs.items():
                    lst[r] = rat(c)
                poly = fmpq_poly(lst)
            else:
                poly = fmpq_poly()
        else:
            poly = fmpq_poly([rat(c) for c in coeffs])
        if bound != INF and poly.degree() > bound:
            poly = poly.truncate(bound + 1)
        self._poly = poly
        self.bound = bound

    # construction -----------------------------------------------------
    @classmethod
    def monomial(cls, r: int, c=1, bound=INF) -> "UniSeries":
        return cls({r: c}, bound)

    @classmethod
    def zero(cls, bound=INF) -> "UniSeries":
        return cls(None, bound)

    @property
    def poly(self) -> fmpq_poly:
        return self._poly

    # access -----------------------------------------------------------
    def __getitem__(self, r: int) -> fmpq:
        if r > self.bound:
            raise IndexError(f"coefficient s^{r} is beyond the bound {self.bound}")
        if r < 0 or r > self._poly.degree():
            return fmpq(0)
        return self._poly[r]

    def items(self) -> Iterator[tuple[int, fmpq]]:
        for r, c in enumerate(self._poly.coeffs()):
            if c != 0:
                yield r, fmpq(c)

    def as_dict(self) -> dict[int, fmpq]:
        return dict(self.items())

    def order(self):
        """Lowest exponent with a nonzero coefficient; ``bound + 1`` if none is known."""
        for r, c in enumerate(self._poly.coeffs()):
            if c != 0:
                return r
        return self.bound + 1

    def leading(self) -> tuple[int, fmpq]:
        o = self.order()
        if o > self.bound:
            raise ValueError("series has no known nonzero coefficient")
        return o, self[o]

    def is_zero(self) -> bool:
        return self._poly.is_zero()

    def degree(self) -> int:
        return self._poly.degree()

    def truncate(self, bound) -> "UniSeries":
        return UniSeries(self._poly, min(bound, self.bound))

    def agrees(self, other: "UniSeries", upto=None) -> bool:
        """Coefficientwise equality up to the common bound (or ``upto``)."""
        top = min(self.bound, other.bound)
        if upto is not None:
            top = min(top, upto)
        if top == INF:
            return self._poly == other._poly
        diff = (self._poly - other._poly).truncate(int(top) + 1)
        return diff.is_zero()

    def __eq__(self, other):
        if not isinstance(other, UniSeries):
            return NotImplemented
        return self.bound == other.bound and self._poly == other._poly

    def __hash__(self):
        return hash((str(self._poly), self.bound))

    def __repr__(self):
        terms = " + ".join(f"({c})*s^{r}" for r, c in self.items()) or "0"
        tail = "" if self.bound == INF else f" + O(s^{self.bound + 1})"
        return f"UniSeries({terms}{tail})"

    # ring operations --------------------------------------------------
    def _coerce(self, other) -> "UniSeries":
        if isinstance(other, UniSeries):
            return other
        return UniSeries({0: rat(other)})

    def __add__(self, other):
        other = self._coerce(other)
        return UniSeries(self._poly + other._poly, min(self.bound, other.bound))

    __radd__ = __add__

    def __neg__(self):
        return UniSeries(-self._poly, self.bound)

    def __sub__(self, other):
        other = self._coerce(other)
        return UniSeries(self._poly - other._poly, min(self.bound, other.bound))

    def __rsub__(self, other):
        return self._coerce(other) - self

    def scale(self, c) -> "UniSeries":
        c = rat(c)
        if c == 0:
            return UniSeries(None, INF)
        return UniSeries(self._poly * c, self.bound)

    def mul(self, other: "UniSeries", cap=INF) -> "UniSeries":
        """Product with relative-precision bound, optionally capped at ``cap``."""
        oa, ob = self.order(), other.order()
        bound = min(self.bound + ob, other.bound + oa, cap)
        if bound == INF:
            return UniSeries(self._poly * other._poly, INF)
        bound = int(bound)
        if bound < 0:
            return UniSeries(None, bound)
        return UniSeries(self._poly.mul_low(other._poly, bound + 1), bound)

    def __mul__(self, other):
        if not isinstance(other, UniSeries):
            return self.scale(other)
        return self.mul(other)

    __rmul__ = __mul__

    def __pow__(self, e: int) -> "UniSeries":
        if e < 0:
            raise ValueError("negative power; use division by a unit")
        result = UniSeries({0: 1})
        base = self
        while e:
            if e & 1:
                result = result.mul(base)
            e >>= 1
            if e:
                base = base.mul(base)
        return result

    def inverse(self, bound=None) -> "UniSeries":
        """Multiplicative inverse of a unit."""
        if self.bound < 0 or self[0] == 0:
            raise NonUnitDivisor("divisor has no invertible constant term")
        top = self.bound if bound is None else min(bound, self.bound)
        if top == INF:
            if self._poly.degree() == 0:
                return UniSeries({0: 1 / self[0]})
            raise ValueError("inverse of a non-constant polynomial needs an explicit bound")
        top = int(top)
        return UniSeries(_poly_inverse(self._poly, top + 1), top)

    def div(self, other: "UniSeries", bound=INF) -> "UniSeries":
        other = self._coerce(other)
        if other.bound < 0 or other[0] == 0:
            raise NonUnitDivisor("divisor has no invertible constant term")
        oa = self.order()
        top = min(self.bound, other.bound + oa, bound)
        if top == INF:
            if other._poly.degree() == 0:
                return self.scale(1 / other[0])
            raise ValueError("exact division by a non-constant series needs a bound")
        top = int(top)
        inv = _poly_inverse(other._poly, top + 1)
        return UniSeries(self._poly.mul_low(inv, top + 1), top)

    def __truediv__(self, other):
        if not isinstance(other, UniSeries):
            return self.scale(1 / rat(other))
        return self.div(other)

    def shift(self, m: int) -> "UniSeries":
        """Multiply by ``s^m``; negative ``m`` divides and needs ``order >= -m``."""
        if m >= 0:
            return UniSeries(self._poly.left_shift(m), self.bound + m)
        if self.order() < -m:
            raise NonUnitDivisor(f"series of order {self.order()} is not divisible by s^{-m}")
        return UniSeries(self._poly.right_shift(-m), self.bound + m)

    def derivative(self) -> "UniSeries":
        return UniSeries(self._poly.derivative(), self.bound - 1)

    def compose(self, g: "UniSeries") -> "UniSeries":
        """``self(g(s))`` for ``g`` vanishing at 0."""
        og = g.order()
        if og < 1 or (g.bound >= 0 and g[0] != 0):
            raise NotLocal("inner series must vanish at s=0")
        b_tail = INF if self.bound == INF else (self.bound + 1) * og - 1
        rest_order = (self - self[0]).order() if self.bound >= 0 else INF
        if g.bound == INF or rest_order == INF:
            b_inner = INF
        else:
            # f(g + e) - f(g) ~ f'(g) e starts at order Ng + 1 + (ord(f - f(0)) - 1) * og
            b_inner = g.bound + (rest_order - 1) * og
        bound = min(b_tail, b_inner)
        coeffs = self._poly.coeffs()
        if bound == INF:
            return UniSeries(self._poly(g._poly), INF)
        bound = int(bound)
        if bound < 0:
            return UniSeries(None, bound)
        top = min(len(coeffs) - 1, bound // og)
        acc = fmpq_poly()
        gp = g._poly.truncate(bound + 1)
        for r in range(top, -1, -1):
            acc = acc.mul_low(gp, bound + 1) + coeffs[r]
        return UniSeries(acc, bound)

    def __call__(self, g: "UniSeries") -> "UniSeries":
        return self.compose(g)


def _poly_inverse(poly: fmpq_poly, length: int) -> fmpq_poly:
    """Inverse of a unit modulo ``s^length`` by Newton iteration."""
    c0 = poly[0]
    g = fmpq_poly([1 / c0])
    prec = 1
    while prec < length:
        prec = min(2 * prec, length)
        bg = poly.truncate(prec).mul_low(g, prec)
        g = g.mul_low(2 - bg, prec)
    return g.truncate(length)


def uni_root(u: UniSeries, k: int, bound=None) -> UniSeries:
    """``k``-th root of a series ``1 + v`` with ``v(0) = 0``, the one with constant term 1."""
    if k < 1:
        raise ValueError("root index must be positive")
    if u.bound < 0 or u[0] != 1:
        raise RootOfNonUnit("k-th root needs constant term exactly 1")
    top = u.bound if bound is None else min(u.bound, bound)
    if top == INF:
        if u.degree() == 0:
            return UniSeries({0: 1})
        raise ValueError("root of a non-constant polynomial needs an explicit bound")
    top = int(top)
    if k == 1:
        return u.truncate(top)
    _ensure_cap(top + 2)
    ser = fmpq_series(u.poly.truncate(top + 1).coeffs(), prec=top + 1)
    root = (ser.log() / k).exp()
    return UniSeries(list(root.coeffs())[: top + 1], top)


def uni_reversion(f: UniSeries, bound=None) -> UniSeries:
    """Compositional inverse ``g`` with ``g(f(s)) = s`` for ``f`` of order exactly 1."""
    if f.order() != 1 or (f.bound >= 0 and f[0] != 0):
        raise NotInvertibleOrder("compositional inverse needs order exactly 1")
    top = f.bound if bound is None else min(f.bound, bound)
    if top == INF:
        if f.degree() == 1:
            return UniSeries({1: 1 / f[1]})
        raise ValueError("reversion of a non-linear polynomial needs an explicit bound")
    top = int(top)
    _ensure_cap(top + 2)
    ser = fmpq_series(f.poly.truncate(top + 1).coeffs(), prec=top + 1)
    return UniSeries(list(ser.reversion().coeffs())[: top + 1], top)


def uni_root_invert(u: UniSeries, k: int | None = None, bound=None) -> UniSeries:
    """With ``k`` given: k-th root of the unit ``u``. Without: compositional inverse of ``u``."""
    if k is None:
        return uni_reversion(u, bound)
    return uni_root(u, k, bound)


# ---------------------------------------------------------------------------
# trivariate weight-truncated series


class TruncSeries3:
    """Sparse series in ``x, y, p`` truncated by weight.

    ``terms`` maps ``(i, j, l)`` to the coefficient of ``x^i y^j p^l``.
    """

    __slots__ = ("ws", "terms", "bound", "_order")

    def __init__(self, ws: WeightSystem, terms: Mapping[Monomial, object] | None = None, bound=INF):
        if bound != INF:
            bound = int(bound)
        self.ws = ws
        self.bound = bound
        clean: dict[Monomial, fmpq] = {}
        if terms:
            weight = ws.weight
            for mono, c in terms.items():
                c = rat(c)
                if c != 0 and weight(mono) <= bound:
                    if min(mono) < 0:
                        raise ValueError(f"negative exponent in {mono}")
                    clean[tuple(mono)] = c
        self.terms = clean
        self._order = None

    # construction -----------------------------------------------------
    @classmethod
    def _raw(cls, ws, terms, bound) -> "TruncSeries3":
        obj = cls.__new__(cls)
        obj.ws = ws
        obj.terms = terms
        obj.bound = bound
        obj._order = None
        return obj

    @classmethod
    def monomial(cls, ws: WeightSystem, mono: Monomial, c=1, bound=INF) -> "TruncSeries3":
        return cls(ws, {tuple(mono): c}, bound)

    @classmethod
    def constant(cls, ws: WeightSystem, c, bound=INF) -> "TruncSeries3":
        return cls(ws, {(0, 0, 0): c}, bound)

    @classmethod
    def gens(cls, ws: WeightSystem, bound=INF):
        return (
            cls.monomial(ws, (1, 0, 0), 1, bound),
            cls.monomial(ws, (0, 1, 0), 1, bound),
            cls.monomial(ws, (0, 0, 1), 1, bound),
        )

    # access -----------------------------------------------------------
    def __getitem__(self, mono: Monomial) -> fmpq:
        return self.terms.get(tuple(mono), fmpq(0))

    def items(self) -> list[tuple[Monomial, fmpq]]:
        return sorted(self.terms.items())

    def __len__(self):
        return len(self.terms)

    def order(self):
        """Least weight of a nonzero term, ``bound + 1`` if none is known."""
        if self._order is None:
            if self.terms:
                weight = self.ws.weight
                self._order = min(weight(m) for m in self.terms)
            else:
                self._order = self.bound + 1
        return self._order

    def is_zero(self) -> bool:
        return not self.terms

    def is_p_free(self) -> bool:
        return all(m[2] == 0 for m in self.terms)

    def constant_term(self) -> fmpq:
        return self[(0, 0, 0)]

    def in_max_ideal(self) -> bool:
        return self.constant_term() == 0

    def truncate(self, bound) -> "TruncSeries3":
        bound = min(bound, self.bound)
        if bound == self.bound:
            return self
        return TruncSeries3(self.ws, self.terms, bound)

    def homogeneous_part(self, w: int) -> "TruncSeries3":
        weight = self.ws.weight
        return TruncSeries3._raw(self.ws, {m: c for m, c in self.terms.items() if weight(m) == w}, INF)

    def agrees(self, other: "TruncSeries3", upto=None) -> bool:
        self._check(other)
        top = min(self.bound, other.bound)
        if upto is not None:
            top = min(top, upto)
        weight = self.ws.weight
        keys = set(self.terms) | set(other.terms)
        return all(self[m] == other[m] for m in keys if weight(m) <= top)

    def __eq__(self, other):
        if not isinstance(other, TruncSeries3):
            return NotImplemented
        return self.ws == other.ws and self.bound == other.bound and self.terms == other.terms

    def __hash__(self):
        return hash((self.ws, self.bound, frozenset(self.terms.items())))

    def __repr__(self):
        body = format_poly(self.terms)
        tail = "" if self.bound == INF else f" + O(w>{self.bound})"
        return f"TruncSeries3({body}{tail})"

    def __str__(self):
        return format_poly(self.terms)

    # ring operations --------------------------------------------------
    def _check(self, other: "TruncSeries3"):
        if self.ws != other.ws:
            raise WeightMismatch(f"weight systems differ: {self.ws} vs {other.ws}")

    def _coerce(self, other) -> "TruncSeries3":
        if isinstance(other, TruncSeries3):
            self._check(other)
            return other
        return TruncSeries3.constant(self.ws, other)

    def __add__(self, other):
        other = self._coerce(other)
        bound = min(self.bound, other.bound)
        out = dict(self.terms)
        for m, c in other.terms.items():
            v = out.get(m)
            out[m] = c if v is None else v + c
        return TruncSeries3(self.ws, out, bound)

    __radd__ = __add__

    def __neg__(self):
        return TruncSeries3._raw(self.ws, {m: -c for m, c in self.terms.items()}, self.bound)

    def __sub__(self, other):
        return self + (-self._coerce(other))

    def __rsub__(self, other):
        return self._coerce(other) - self

    def scale(self, c) -> "TruncSeries3":
        c = rat(c)
        if c == 0:
            return TruncSeries3(self.ws, None, INF)
        return TruncSeries3._raw(self.ws, {m: c * v for m, v in self.terms.items()}, self.bound)

    def mul(self, other: "TruncSeries3", cap=INF) -> "TruncSeries3":
        self._check(other)
        bound = min(self.bound + other.order(), other.bound + self.order(), cap)
        weight = self.ws.weight
        b_sorted = sorted(((weight(m), m, c) for m, c in other.terms.items()), key=lambda t: t[0])
        out: dict[Monomial, fmpq] = {}
        for ma, ca in self.terms.items():
            wa = weight(ma)
            limit = bound - wa
            ia, ja, la = ma
            for wb, mb, cb in b_sorted:
                if wb > limit:
                    break
                key = (ia + mb[0], ja + mb[1], la + mb[2])
                v = out.get(key)
                out[key] = ca * cb if v is None else v + ca * cb
        return TruncSeries3._raw(self.ws, {m: c for m, c in out.items() if c != 0}, bound)

    def __mul__(self, other):
        if not isinstance(other, TruncSeries3):
            return self.scale(other)
        return self.mul(other)

    __rmul__ = __mul__

    def __pow__(self, e: int) -> "TruncSeries3":
        if e < 0:
            raise ValueError("negative power; use division by a unit")
        result = TruncSeries3.constant(self.ws, 1)
        base = self
        while e:
            if e & 1:
                result = result.mul(base)
            e >>= 1
            if e:
                base = base.mul(base)
        return result

    def div(self, unit: "TruncSeries3", bound=INF) -> "TruncSeries3":
        """Division by a unit (nonzero constant term), by fixed-point iteration."""
        unit = self._coerce(unit)
        c0 = unit.constant_term()
        if c0 == 0:
            raise NonUnitDivisor("divisor has zero constant term")
        inv0 = 1 / c0
        h = (unit.scale(inv0) - 1)
        h = TruncSeries3._raw(self.ws, {m: c for m, c in h.terms.items() if m != (0, 0, 0)}, h.bound)
        top = min(self.bound, unit.bound + self.order(), bound)
        if top == INF:
            if h.is_zero():
                return self.scale(inv0)
            raise ValueError("exact division by a non-constant series needs a bound")
        base = self.scale(inv0).truncate(top)
        if h.is_zero():
            return base
        q = base
        oh = h.order()
        needed = top - self.order()
        steps = 0
        while steps * oh <= needed:
            q = (base - h.mul(q, cap=top)).truncate(top)
            steps += 1
        return q

    def __truediv__(self, other):
        if not isinstance(other, TruncSeries3):
            return self.scale(1 / rat(other))
        return self.div(other)

    def partial(self, var: str) -> "TruncSeries3":
        """Formal partial derivative; the bound drops by the variable's weight."""
        idx = {"x": 0, "y": 1, "p": 2}[var]
        out = {}
        for m, c in self.terms.items():
            e = m[idx]
            if e:
                nm = list(m)
                nm[idx] -= 1
                out[tuple(nm)] = c * e
        return TruncSeries3._raw(self.ws, out, self.bound - self.ws.var_weight(var))

    # p-graded pieces --------------------------------------------------
    def p_slices(self) -> dict[int, "TruncSeries3"]:
        """``{l: f_l}`` with ``f = sum_l f_l(x, y) p^l``; slice bounds are ``bound - l(n-k)``."""
        groups: dict[int, dict] = {}
        for (i, j, l), c in self.terms.items():
            groups.setdefault(l, {})[(i, j, 0)] = c
        wp = self.ws.wp
        return {l: TruncSeries3._raw(self.ws, t, self.bound - l * wp) for l, t in groups.items()}

    def p_slice(self, l: int) -> "TruncSeries3":
        terms = {(i, j, 0): c for (i, j, ll), c in self.terms.items() if ll == l}
        return TruncSeries3._raw(self.ws, terms, self.bound - l * self.ws.wp)

    def times_p(self, l: int) -> "TruncSeries3":
        terms = {(i, j, ll + l): c for (i, j, ll), c in self.terms.items()}
        return TruncSeries3._raw(self.ws, terms, self.bound + l * self.ws.wp)

    # substitution -----------------------------------------------------
    def substitute(self, sx: UniSeries, sy: UniSeries, sp: UniSeries) -> UniSeries:
        return substitute(self, sx, sy, sp)

    def compose(self, X: "TruncSeries3", Y: "TruncSeries3", P: "TruncSeries3") -> "TruncSeries3":
        return compose3(self, X, Y, P)

    def evaluate_poly(self, cap=None):
        """Sympy expression (exact rationals), for display and symbolic checks."""
        import sympy

        x, y, p = sympy.symbols("x y p")
        return sum(
            (sympy.Rational(int(c.p), int(c.q)) * x**i * y**j * p**l for (i, j, l), c in self.items()),
            sympy.Integer(0),
        )

    def to_json(self) -> list:
        return [[list(m), rat_str(c)] for m, c in self.items()]

    @classmethod
    def from_json(cls, ws: WeightSystem, data: Iterable, bound=INF) -> "TruncSeries3":
        return cls(ws, {tuple(m): rat(c) for m, c in data}, bound)


_FACTOR = re.compile(r"^(?:(\d+(?:/\d+)?)|([xyp])(?:(?:\^|\*\*)(\d+))?)$")


def parse_poly(ws: WeightSystem, text: str, bound=INF) -> TruncSeries3:
    """Parse sums of terms like ``3/2*x^2*y*p`` (also ``**`` for powers)."""
    src = text.replace(" ", "").replace("**", "^")
    if not src:
        raise ValueError("empty expression")
    if src[0] not in "+-":
        src = "+" + src
    pieces = re.findall(r"([+-])([^+-]+)", src)
    if "".join(sign + body for sign, body in pieces) != src:
        raise ValueError(f"cannot parse {text!r}")
    terms: dict = {}
    for sign, body in pieces:
        coeff = fmpq(1 if sign == "+" else -1)
        exps = [0, 0, 0]
        for factor in body.split("*"):
            m = _FACTOR.match(factor)
            if m is None:
                raise ValueError(f"cannot parse factor {factor!r} in {text!r}")
            if m.group(1):
                coeff *= rat(m.group(1))
            else:
                exps["xyp".index(m.group(2))] += int(m.group(3) or 1)
        mono = tuple(exps)
        terms[mono] = terms.get(mono, 0) + coeff
    return TruncSeries3(ws, terms, bound)


def format_poly(terms: Mapping[Monomial, fmpq]) -> str:
    if not terms:
        return "0"
    parts = []
    for (i, j, l), c in sorted(terms.items(), key=lambda t: (sum(t[0]), t[0])):
        factors = [f"{v}^{e}" if e > 1 else v for v, e in (("x", i), ("y", j), ("p", l)) if e]
        mono = "*".join(factors)
        if not mono:
            parts.append(str(c))
        elif c == 1:
            parts.append(mono)
        elif c == -1:
            parts.append("-" + mono)
        else:
            parts.append(f"{c}*{mono}")
    text = " + ".join(parts)
    return text.replace("+ -", "- ")


def _weighted_order(mono, orders):
    # skip absent variables: 0 * inf would be nan
    return sum(e * o for e, o in zip(mono, orders) if e)


def _precision_rel(series: UniSeries):
    o = series.order()
    return INF if series.bound == INF else series.bound - o


def substitute(f: TruncSeries3, sx: UniSeries, sy: UniSeries, sp: UniSeries) -> UniSeries:
    """``f(sx(s), sy(s), sp(s))`` with an honest precision bound.

    Terms of ``f`` beyond its weight bound are unknown; when the substituted
    series have orders ``ox, oy, op`` they can only contribute from order
    ``ceil(r * (bound + 1))`` on, ``r = min(ox/k, oy/n, op/(n-k))``.
    """
    ws = f.ws
    comps = (sx, sy, sp)
    orders = []
    for comp in comps:
        if comp.bound >= 0 and comp[0] != 0:
            raise NotLocal("substituted series must vanish at s=0")
        o = comp.order()
        if o < 1:
            raise NotLocal("substituted series must vanish at s=0")
        orders.append(o)
    rels = [_precision_rel(c) for c in comps]
    weights = (ws.wx, ws.wy, ws.wp)

    if f.bound == INF:
        tail = INF
    else:
        ratios = [Fraction(o, w) for o, w in zip(orders, weights) if o != INF]
        if ratios:
            r = min(ratios)
            tail = math.ceil(r * (f.bound + 1)) - 1
        else:
            tail = INF

    bound = tail
    live = {}
    for mono, c in f.terms.items():
        if any(e and o == INF for e, o in zip(mono, orders)):
            continue  # some factor is exactly zero
        so = _weighted_order(mono, orders)
        rel = min((rv for e, rv in zip(mono, rels) if e), default=INF)
        bound = min(bound, so + rel)
        live[mono] = c

    if bound != INF and bound < 0:
        return UniSeries(None, bound)
    cap = bound

    if bound != INF:
        live = {m: c for m, c in live.items() if _weighted_order(m, orders) <= bound}

    def trunc(poly):
        return poly if cap == INF else poly.truncate(int(cap) + 1)

    def mul(a, b):
        return a * b if cap == INF else a.mul_low(b, int(cap) + 1)

    xs, ys, ps = (trunc(c.poly) for c in comps)
    xpow = {0: fmpq_poly([1])}
    ypow = {0: fmpq_poly([1])}
    ppow = {0: fmpq_poly([1])}

    def power(cache, base, e):
        if e not in cache:
            # cache holds consecutive powers built upward
            top = max(cache)
            acc = cache[top]
            for t in range(top + 1, e + 1):
                acc = mul(acc, base)
                cache[t] = acc
        return cache[e]

    groups: dict[tuple[int, int], list] = {}
    for (i, j, l), c in live.items():
        groups.setdefault((j, l), []).append((i, c))

    acc = fmpq_poly()
    for (j, l), xs_terms in sorted(groups.items()):
        qx = fmpq_poly()
        for i, c in xs_terms:
            qx += power(xpow, xs, i) * c
        yp = mul(power(ypow, ys, j), power(ppow, ps, l)) if (j or l) else fmpq_poly([1])
        acc += mul(trunc(qx), yp) if (j or l) else trunc(qx)
    return UniSeries(trunc(acc), bound)


def compose3(f: TruncSeries3, X: TruncSeries3, Y: TruncSeries3, P: TruncSeries3) -> TruncSeries3:
    """``f(X, Y, P)`` for trivariate series ``X, Y, P`` without constant terms."""
    ws = f.ws
    for comp in (X, Y, P):
        ws_check = comp.ws
        if ws_check != ws:
            raise WeightMismatch("weight systems differ")
        if comp.constant_term() != 0:
            raise NotLocal("substituted series must vanish at the origin")
    orders = [X.order(), Y.order(), P.order()]
    weights = (ws.wx, ws.wy, ws.wp)
    if f.bound == INF:
        tail = INF
    else:
        ratios = [Fraction(o, w) for o, w in zip(orders, weights) if o != INF]
        tail = math.ceil(min(ratios) * (f.bound + 1)) - 1 if ratios else INF
    cap = tail
    rels = [INF if c.bound == INF else c.bound - o for c, o in zip((X, Y, P), orders)]
    for mono in f.terms:
        if any(e and o == INF for e, o in zip(mono, orders)):
            continue
        so = _weighted_order(mono, orders)
        rel = min((rv for e, rv in zip(mono, rels) if e), default=INF)
        cap = min(cap, so + rel)

    one = TruncSeries3.constant(ws, 1)
    caches = [{0: one}, {0: one}, {0: one}]

    def power(idx, base, e):
        cache = caches[idx]
        if e not in cache:
            top = max(cache)
            acc = cache[top]
            for t in range(top + 1, e + 1):
                acc = acc.mul(base, cap=cap)
                cache[t] = acc
        return cache[e]

    groups: dict[tuple[int, int], list] = {}
    for (i, j, l), c in f.terms.items():
        if any(e and o == INF for e, o in zip((i, j, l), orders)):
            continue
        groups.setdefault((j, l), []).append((i, c))
    out = TruncSeries3(ws, None, cap)
    for (j, l), xs_terms in sorted(groups.items()):
        qx = TruncSeries3(ws, None, INF)
        for i, c in xs_terms:
            qx = qx + power(0, X, i).scale(c)
        if j or l:
            yp = power(1, Y, j).mul(power(2, P, l), cap=cap)
            out = out + qx.mul(yp, cap=cap)
        else:
            out = out + qx
    return out.truncate(cap) if cap != INF else out
