import json
import math
import random

import pytest
from flint import fmpq
from hypothesis import given, settings
from hypothesis import strategies as st

from legn.branch import BranchParam, equation, parametrize_equation
from legn.conormal import AtLeast, conormal, is_at_least, valuation
from legn.errors import BelowConductor, BelowConductorRegion, HypothesisViolated, NotSemiQuasiHomogeneous
from legn.series import TruncSeries3, WeightSystem, parse_poly
from legn.versal import (
    VersalCoords,
    basis,
    certify_cleaning,
    clean_monomial,
    closed_form_lambda,
    coords_from_report,
    determinacy_bound,
    equisingular_reduce,
    jacobian_divide,
    log_from_report,
    microlocal_reduce,
    inverted_ratio_lambda,
    reduce_to_xy,
    report_to_dict,
    unique_xy,
    verify_transport,
)

WS = WeightSystem(4, 11)


def brute_force_basis(k, n, microlocal):
    out = []
    for i in range(3 * n):
        for j in range(3 * k):
            if k * i + n * j > k * n and i <= n - 2 and j <= k - 2 and (not microlocal or i + j <= n - 2):
                out.append((i, j))
    return sorted(out, key=lambda q: k * q[0] + n * q[1])


# --- bases ------------------------------------------------------------------


def test_basis_4_11():
    B = basis(4, 11, "B")
    assert B.pairs == ((6, 2), (9, 1), (7, 2), (8, 2), (9, 2))
    assert B.weights == (46, 47, 50, 54, 58)
    assert basis(4, 11, "C").pairs == ((6, 2), (7, 2))
    assert determinacy_bound(4, 11) == 58 == max(B.weights)


def test_rigid_bases():
    assert len(basis(3, 7, "C")) == 0 and len(basis(3, 8, "C")) == 0
    for m in range(2, 11):
        assert len(basis(2, 2 * m + 1, "C")) == 0


@pytest.mark.parametrize("k,n", [(k, n) for k in range(2, 7) for n in range(k + 1, 20) if math.gcd(k, n) == 1])
def test_basis_matches_brute_force(k, n):
    assert list(basis(k, n, "B").pairs) == brute_force_basis(k, n, False)
    if n > 2 * k:
        assert list(basis(k, n, "C").pairs) == brute_force_basis(k, n, True)


def test_basis_preconditions():
    with pytest.raises(HypothesisViolated):
        basis(4, 7, "C")
    with pytest.raises(ValueError):
        basis(4, 6)


def test_coords_reject_foreign_pairs():
    with pytest.raises(ValueError):
        VersalCoords(basis(4, 11, "C"), {(9, 1): 1})


# --- cleaning ---------------------------------------------------------------


def test_clean_examples():
    assert clean_monomial(0, 0, 4, 4, 11, strict=False) == (7, 0, fmpq(11, 4) ** 4)
    assert clean_monomial(1, 0, 1, 4, 11, strict=False) == (0, 1, fmpq(11, 4))
    a, b = 9, 1
    assert clean_monomial(10, a + b - 10, 10 - a, 4, 11) == (9, 1, fmpq(11, 4))
    assert certify_cleaning(0, 0, 4, 4, 11, strict=False)
    assert certify_cleaning(1, 0, 1, 4, 11, strict=False)


def test_clean_precondition():
    with pytest.raises(BelowConductorRegion):
        clean_monomial(1, 0, 1, 4, 11)
    with pytest.raises(BelowConductorRegion):
        clean_monomial(0, 0, 1, 4, 11, strict=False)


@given(st.sampled_from([(2, 5), (3, 7), (4, 11)]), st.integers(0, 12), st.integers(0, 5), st.integers(0, 12))
def test_cleaning_property(kn, i, j, l):
    k, n = kn
    w = k * i + n * j + (n - k) * l
    if w <= k * n or w > 2 * k * n:
        return
    a, b, coef = clean_monomial(i, j, l, k, n)
    assert k * a + n * b == w and 0 <= b < k and coef == fmpq(n, k) ** l
    assert certify_cleaning(i, j, l, k, n)


def test_unique_xy():
    assert unique_xy(47, 4, 11) == (9, 1)
    assert unique_xy(7, 4, 11) is None


# --- reduction to the plane -------------------------------------------------


def test_reduce_to_xy_examples(L0):
    u = parse_poly(WS, "x^3*y + y^3")
    assert reduce_to_xy(u, L0) is u
    v = reduce_to_xy(parse_poly(WS, "p^4*x^4"), L0)
    assert v.is_p_free() and v[(11, 0, 0)] == fmpq(11, 4) ** 4
    assert is_at_least(valuation(L0, parse_poly(WS, "p^4*x^4") - v))
    assert reduce_to_xy(parse_poly(WS, "11*y - 4*x*p"), L0).is_zero()


def test_reduce_to_xy_below_conductor(L0):
    with pytest.raises(BelowConductor):
        reduce_to_xy(parse_poly(WS, "p*x"), L0)


@given(st.integers(0, 10**6))
@settings(max_examples=10)
def test_reduce_to_xy_random(seed):
    rng = random.Random(seed)
    L = conormal(parametrize_equation(equation(4, 11, {(6, 2): 1})))
    monos = [m for m in WS.monomials(70, min_weight=30) if m[2]]
    u = TruncSeries3(WS, {m: fmpq(rng.randint(-5, 5) or 1, rng.randint(1, 4)) for m in rng.sample(monos, 4)})
    v = reduce_to_xy(u, L)
    assert v.is_p_free()
    assert isinstance(valuation(L, u - v), AtLeast)


def test_jacobian_divide_examples():
    A, Bq, R = jacobian_divide(parse_poly(WS, "11*x^10"), 4, 11)
    assert A == TruncSeries3.constant(WS, 1) and Bq.is_zero() and R.is_zero()
    A, Bq, R = jacobian_divide(parse_poly(WS, "x^6*y^2"), 4, 11)
    assert A.is_zero() and Bq.is_zero() and R == parse_poly(WS, "x^6*y^2")
    g = parse_poly(WS, "x^10*y + x*y^3")
    A, Bq, R = jacobian_divide(g, 4, 11)
    assert A == parse_poly(WS, "1/11*y") and Bq == parse_poly(WS, "1/4*x") and R.is_zero()


@given(st.dictionaries(st.tuples(st.integers(0, 14), st.integers(0, 6), st.just(0)), st.integers(-5, 5), max_size=6))
def test_jacobian_divide_reassembles(terms):
    g = TruncSeries3(WS, terms)
    A, Bq, R = jacobian_divide(g, 4, 11)
    x, y, _ = TruncSeries3.gens(WS)
    assert A * (x**10).scale(11) + Bq * (y**3).scale(4) + R == g
    assert all(i <= 9 and j <= 2 for (i, j, _) in R.terms)


# --- equisingular reduction -------------------------------------------------


def test_equisingular_examples(f1_branch):
    coords, log = equisingular_reduce(parametrize_equation(equation(4, 11)))
    assert coords.values == {} and not log.transformations()
    coords, _ = equisingular_reduce(f1_branch)
    assert coords.values == {(6, 2): 1}


def test_equisingular_removes_x10y():
    b = parametrize_equation(equation(4, 11, {(10, 1): 1}))
    coords, log = equisingular_reduce(b, exact=True)
    assert coords.values == {(9, 2): fmpq(5, 11)}
    assert all(basis(4, 11).weight(q) > 51 for q in coords.support())
    assert log.steps[0].kind == "plane" and log.steps[0].weight == 51
    assert verify_transport(log, coords, b).ok


def test_equisingular_stops_at_determinacy_bound():
    b = parametrize_equation(equation(4, 11, {(10, 1): 1}))
    _, log = equisingular_reduce(b)
    assert max(s.weight for s in log.steps) <= determinacy_bound(4, 11)


def test_equisingular_rescales_leading_coefficient():
    b = BranchParam(4, 11, {11: fmpq(3, 2), 13: 1}, 132)
    coords, log = equisingular_reduce(b, exact=True)
    assert log.steps[0].kind == "scale"
    assert verify_transport(log, coords, b).ok


def test_equisingular_rejects_other_types():
    with pytest.raises(NotSemiQuasiHomogeneous):
        equisingular_reduce(BranchParam(4, 6, {6: 1, 7: 1}, 60))


@given(st.dictionaries(st.sampled_from([(12, 0), (9, 1), (10, 1), (6, 2), (7, 2), (4, 3), (13, 0)]), st.integers(-3, 3), max_size=3))
@settings(max_examples=6)
def test_equisingular_transport_property(extra):
    b = parametrize_equation(equation(4, 11, extra))
    coords, log = equisingular_reduce(b, exact=True)
    assert log.weights_increase()
    assert verify_transport(log, coords, b).ok


# --- microlocal reduction ---------------------------------------------------


def test_microlocal_f1(f1_branch):
    coords, log = microlocal_reduce(f1_branch)
    assert coords.values == {(6, 2): 1} and coords.basis.flavor == "C"
    assert not [s for s in log.steps if s.kind == "contact"]


def test_microlocal_x9y():
    b = parametrize_equation(equation(4, 11, {(9, 1): 1}))
    coords, log = microlocal_reduce(b)
    assert coords.values == {(7, 2): fmpq(39, 88)}
    contact = [s for s in log.steps if s.kind == "contact"]
    assert len(contact) == 1 and contact[0].coefficient == fmpq(-8, 121)
    assert log.weights_increase()
    check = verify_transport(log, coords, b)
    assert check.ok and check.agreement_order >= 55


def test_contact_multiplier():
    # the solved multiplier is minus the closed form with ratio k/n
    b = parametrize_equation(equation(4, 11, {(10, 1): 1}))
    _, log = microlocal_reduce(b)
    step = next(s for s in log.steps if s.kind == "contact")
    assert step.monomial == (9, 2)
    assert step.coefficient == -closed_form_lambda(fmpq(5, 11), 9, 4, 11) == fmpq(-40, 1331)
    assert step.coefficient != -inverted_ratio_lambda(fmpq(5, 11), 9, 4, 11)


def test_microlocal_needs_n_above_2k():
    with pytest.raises(HypothesisViolated):
        microlocal_reduce(BranchParam.monomial_curve(3, 5))


def test_report_round_trip(tmp_path):
    b = parametrize_equation(equation(4, 11, {(9, 1): 1}))
    coords, log = microlocal_reduce(b)
    source = {"kind": "equation", "k": 4, "n": 11, "terms": [], "trunc": 132}
    data = json.loads(json.dumps(report_to_dict(source, coords, log)))
    assert data["basis"] == "C" and data["determinacy_bound"] == 58
    assert data["coords"] == [{"i": 7, "j": 2, "c": "39/88"}]
    back = log_from_report(data)
    assert coords_from_report(data) == coords
    assert [s.kind for s in back.steps] == [s.kind for s in log.steps]
    assert report_to_dict(source, coords_from_report(data), back) == data
