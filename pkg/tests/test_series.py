from fractions import Fraction

import pytest
from flint import fmpq
from hypothesis import given
from hypothesis import strategies as st

from legn.errors import NonUnitDivisor, NotLocal, WeightMismatch
from legn.series import (
    INF,
    TruncSeries3,
    UniSeries,
    WeightSystem,
    compose3,
    parse_poly,
    rat,
    rat_str,
    substitute,
    uni_reversion,
    uni_root,
)

WS = WeightSystem(4, 11)
x, y, p = TruncSeries3.gens(WS)

small_rat = st.builds(Fraction, st.integers(-9, 9), st.integers(1, 6))


@st.composite
def tri(draw, max_weight=40, bound=INF):
    monos = WS.monomials(max_weight)
    chosen = draw(st.lists(st.sampled_from(monos), max_size=5, unique=True))
    return TruncSeries3(WS, {m: draw(small_rat) for m in chosen}, bound)


@st.composite
def uni(draw, max_deg=8, min_order=0, bound=INF):
    coeffs = draw(st.lists(small_rat, min_size=1, max_size=max_deg))
    return UniSeries({min_order + r: c for r, c in enumerate(coeffs)}, bound)


# --- rationals -------------------------------------------------------------


def test_rat_round_trip():
    assert rat_str(fmpq(-6, 4)) == "-3/2"
    assert rat("-3/2") == fmpq(-3, 2)
    assert rat_str(5) == "5/1"
    assert rat(Fraction(2, 6)) == fmpq(1, 3)


def test_rat_rejects_zero_denominator():
    with pytest.raises(ZeroDivisionError):
        rat("1/0")


# --- worked examples --------------------------------------------------------


def test_difference_of_squares():
    assert UniSeries({0: 1, 1: 1}) * UniSeries({0: 1, 1: -1}) == UniSeries({0: 1, 2: -1})


def test_monomial_product_weight():
    xp = (x * p).truncate(50)
    assert xp.terms == {(1, 0, 1): 1}
    assert WS.weight((1, 0, 1)) == 11


def test_geometric_series():
    q = UniSeries({0: 1}).div(UniSeries({0: 1, 1: -1}), 3)
    assert q == UniSeries([1, 1, 1, 1], 3)


def test_substitute_examples():
    ws = WeightSystem(2, 3)
    s2 = UniSeries({2: 1})
    f = TruncSeries3(ws, {(0, 1, 0): 1, (1, 0, 0): -1})
    assert substitute(f, s2, s2, UniSeries.zero()).is_zero()

    F = y**4 - x**11
    sx, sy = UniSeries({4: 1}, 200), UniSeries({11: 1}, 200)
    sp = UniSeries({7: fmpq(11, 4), 9: 5}, 200)
    out = substitute(F, sx, sy, sp)
    assert out.is_zero() and out.bound >= 132

    out = substitute(p, sx, sy, UniSeries({7: fmpq(11, 4)}, 200))
    assert out.as_dict() == {7: fmpq(11, 4)}


def test_substitute_needs_local_series():
    with pytest.raises(NotLocal):
        substitute(x, UniSeries({0: 1, 1: 1}), UniSeries({1: 1}), UniSeries({1: 1}))


def test_partials():
    assert (y**4 - x**11).partial("y") == (y**3).scale(4)
    assert (x * p * p).partial("p") == (x * p).scale(2)
    assert TruncSeries3.constant(WS, 7).partial("x").is_zero()


def test_square_root_coefficients():
    # binomial(1/2, r), computed independently with Fraction
    expected, c = [], Fraction(1)
    for r in range(6):
        expected.append(c)
        c = c * (Fraction(1, 2) - r) / (r + 1)
    root = uni_root(UniSeries({0: 1, 1: 1}), 2, 5)
    assert [root[r] for r in range(6)] == [rat(e) for e in expected]
    assert expected[:3] == [1, Fraction(1, 2), Fraction(-1, 8)]


def test_reversion_examples():
    s = UniSeries({1: 1}, 6)
    assert uni_reversion(s) == s
    assert uni_reversion(UniSeries({1: 1, 2: 1}, 3)) == UniSeries({1: 1, 2: -1, 3: 2}, 3)
    # signed Catalan numbers
    rev = uni_reversion(UniSeries({1: 1, 2: 1}, 5))
    assert [rev[r] for r in range(1, 6)] == [1, -1, 2, -5, 14]


def test_non_unit_division():
    with pytest.raises(NonUnitDivisor):
        UniSeries({0: 1}).div(UniSeries({1: 1}), 4)
    with pytest.raises(NonUnitDivisor):
        x.div(y, 30)


def test_mixed_weight_systems():
    other = TruncSeries3.gens(WeightSystem(2, 5))[0]
    with pytest.raises(WeightMismatch):
        x + other


def test_weight_system_preconditions():
    with pytest.raises(ValueError):
        WeightSystem(4, 6)


def test_deterministic_monomial_order():
    f = parse_poly(WS, "p + y + x + x*y")
    assert list(f.terms) == sorted(f.terms)


def test_parse_poly():
    assert parse_poly(WS, "11*y - 4*x*p") == y.scale(11) - (x * p).scale(4)
    assert parse_poly(WS, "-3/2*x^2*y**3") == (x**2 * y**3).scale(fmpq(-3, 2))
    with pytest.raises(ValueError):
        parse_poly(WS, "2x")


def test_truncation_is_tracked():
    f = TruncSeries3(WS, {(1, 0, 0): 1}, 20) * TruncSeries3(WS, {(0, 1, 0): 1}, 30)
    # relative precision: min(20 + w(y), 30 + w(x))
    assert f.bound == 31
    assert f.terms == {(1, 1, 0): 1}


# --- properties -------------------------------------------------------------


@given(tri(), tri(), tri())
def test_ring_laws(a, b, c):
    assert (a + b) + c == a + (b + c)
    assert a * (b + c) == a * b + a * c
    assert a * b == b * a


@given(tri(bound=60), tri(bound=60), tri(bound=60))
def test_ring_laws_truncated(a, b, c):
    assert ((a + b) + c).agrees(a + (b + c))
    assert (a * (b + c)).agrees(a * b + a * c)


@given(tri(), tri(), st.sampled_from("xyp"))
def test_leibniz(f, g, var):
    assert (f * g).partial(var) == f.partial(var) * g + f * g.partial(var)


@given(tri(bound=60), tri(bound=60), st.sampled_from("xyp"))
def test_leibniz_truncated(f, g, var):
    assert (f * g).partial(var).agrees(f.partial(var) * g + f * g.partial(var))


@given(tri(), tri(), uni(min_order=1, bound=40), uni(min_order=1, bound=40), uni(min_order=1, bound=40))
def test_substitute_is_a_homomorphism(f, g, sx, sy, sp):
    lhs = substitute(f * g, sx, sy, sp)
    rhs = substitute(f, sx, sy, sp) * substitute(g, sx, sy, sp)
    assert lhs.agrees(rhs)
    assert substitute(f + g, sx, sy, sp).agrees(substitute(f, sx, sy, sp) + substitute(g, sx, sy, sp))


@given(uni(min_order=1, bound=20), st.integers(1, 5))
def test_root_round_trip(v, k):
    u = UniSeries({0: 1}) + v
    root = uni_root(u, k, 20)
    assert (root**k).agrees(u)


@given(uni(min_order=2, bound=15), small_rat.filter(lambda c: c != 0))
def test_reversion_round_trip(tail, lead):
    f = UniSeries({1: lead}, 15) + tail
    g = uni_reversion(f)
    assert g.compose(f).agrees(UniSeries({1: 1}))
    assert f.compose(g).agrees(UniSeries({1: 1}))


@given(tri(max_weight=30), tri(max_weight=20), tri(max_weight=20), tri(max_weight=20))
def test_compose3_matches_substitution(f, a, b, c):
    # composing then evaluating on a curve = evaluating the pieces on the curve
    X, Y, P = x + a * x, y + b * x, p + c * x
    sx, sy, sp = UniSeries({4: 1}, 60), UniSeries({11: 1, 13: 2}, 60), UniSeries({7: fmpq(11, 4)}, 60)
    lhs = substitute(compose3(f, X, Y, P), sx, sy, sp)
    rhs = substitute(f, substitute(X, sx, sy, sp), substitute(Y, sx, sy, sp), substitute(P, sx, sy, sp))
    assert lhs.agrees(rhs)


@given(tri())
def test_json_round_trip(f):
    assert TruncSeries3.from_json(WS, f.to_json()) == f


def test_substitute_zero_component_with_bounded_series():
    # an identically zero p-component must not drop the p-free terms
    f = TruncSeries3(WS, {(0, 3, 0): 4}, 154)
    out = substitute(f, UniSeries({4: 1}), UniSeries({11: 1}), UniSeries.zero())
    assert out.as_dict() == {33: 4} and out.bound == 154
    g = compose3(f, x, y, TruncSeries3(WS))
    assert g.terms == {(0, 3, 0): 4}
