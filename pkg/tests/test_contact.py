import random

import pytest
from flint import fmpq
from hypothesis import given
from hypothesis import strategies as st

from legn.branch import BranchParam, puiseux_invariants
from legn.conormal import AtLeast, conormal, valuation
from legn.contact import (
    ContactTx,
    apply_to_branch,
    apply_to_conormal,
    cauchy_residual,
    cauchy_tx,
    check_membership,
    compose,
    conjugate,
    invert,
    plane_lift,
    solve_cauchy,
    solve_gamma,
    verify_contact,
)
from legn.errors import NotContact, NotInGroupJ
from legn.series import TruncSeries3, WeightSystem, parse_poly
from legn.suites import random_alpha, random_beta0

WS = WeightSystem(4, 11)
x, y, p = TruncSeries3.gens(WS)


def eq2_residual(alpha, beta):
    """``beta_p (1 + alpha_x + p alpha_y) - alpha_p (p + beta_x + p beta_y)``, written out directly."""
    U = alpha.partial("x") + p * alpha.partial("y") + 1
    V = p + beta.partial("x") + p * beta.partial("y")
    return beta.partial("p") * U - alpha.partial("p") * V


# --- Cauchy problem -----------------------------------------------------------


def test_zero_forcing():
    assert solve_cauchy(TruncSeries3(WS), bound=60).is_zero()


def test_linear_in_p():
    # alpha = 3p: beta = 3/2 p^2 exactly
    beta = solve_cauchy(p.scale(3), bound=60)
    assert beta.terms == {(0, 0, 2): fmpq(3, 2)}


def test_first_p_coefficient_vanishes():
    rng = random.Random(7)
    for _ in range(5):
        beta = solve_cauchy(random_alpha(WS, rng, 44), bound=80)
        assert beta.p_slice(1).is_zero()


@pytest.mark.parametrize("a,b", [(1, 1), (2, 3), (3, 6)])
def test_leading_term_and_remainder(a, b):
    lam = fmpq(-5, 3)
    alpha = TruncSeries3.monomial(WS, (0, a, b), lam)
    bound_w = WS.weight((0, 2 * a - 1, 2 * b + 2))
    beta = solve_cauchy(alpha, bound=bound_w + 44)
    lead = TruncSeries3.monomial(WS, (0, a, b + 1), lam * b / (b + 1))
    eps = beta - lead
    assert eps.order() >= bound_w
    # measured on the reference conormal as well
    L = conormal(BranchParam.monomial_curve(4, 11, bound_w + 88))
    v = valuation(L, eps)
    assert isinstance(v, AtLeast) or v >= bound_w


def test_residual_vanishes_to_bound():
    rng = random.Random(11)
    alpha = random_alpha(WS, rng, 44)
    beta = solve_cauchy(alpha, bound=132 + 11)
    r = eq2_residual(alpha, beta)
    assert r.is_zero() and r.bound >= 132
    assert cauchy_residual(alpha, beta).is_zero()


def test_beta0_must_be_p_free():
    with pytest.raises(NotInGroupJ):
        solve_cauchy(x * y, beta0=p * x)


def test_alpha_must_be_admissible():
    with pytest.raises(NotInGroupJ):
        solve_cauchy(x)


# --- gamma and certificates -------------------------------------------------


def test_gamma_examples():
    zero = TruncSeries3(WS)
    assert solve_gamma(zero, zero).is_zero()
    assert solve_gamma(zero, (x * x).scale(5)) == x.scale(10)


def test_certificates_of_simple_maps():
    assert verify_contact(ContactTx.identity(WS)).u == TruncSeries3.constant(WS, 1)
    assert verify_contact(ContactTx.scaling(WS, 2, fmpq(3, 5))).u == TruncSeries3.constant(WS, fmpq(3, 5))


def test_certificate_of_single_monomial_map():
    tx = cauchy_tx(TruncSeries3.monomial(WS, (0, 2, 3), fmpq(2, 7)), bound=100)
    cert = verify_contact(tx)
    assert cert.u.constant_term() == 1


def test_wrong_gamma_is_rejected():
    alpha, beta = TruncSeries3(WS), (x * x).scale(5)
    tx = ContactTx(WS, fmpq(1), fmpq(1), alpha, beta, x.scale(9))
    with pytest.raises(NotContact):
        verify_contact(tx)


def test_membership():
    z = TruncSeries3(WS)
    with pytest.raises(NotInGroupJ):
        check_membership(x, z, z)
    with pytest.raises(NotInGroupJ):
        check_membership(z, y.scale(2), z)
    with pytest.raises(NotInGroupJ):
        check_membership(z, z, p)
    with pytest.raises(NotInGroupJ):
        check_membership(z + 1, z, z)
    check_membership(x * y, y * y, p * p)


def test_plane_lift_is_contact():
    tx = plane_lift(parse_poly(WS, "x*y + y^2"), parse_poly(WS, "x^3 - 2*x*y"), 80)
    assert tx.kind == "jtype"
    with pytest.raises(NotInGroupJ):
        plane_lift(p * x, TruncSeries3(WS), 40)


def test_json_round_trip():
    tx = cauchy_tx(parse_poly(WS, "x*y + p^2"), parse_poly(WS, "x^2"), 60)
    back = ContactTx.from_json(WS, tx.to_json())
    assert (back.alpha, back.beta, back.gamma) == (tx.alpha, tx.beta, tx.gamma)
    s = ContactTx.scaling(WS, 2, 3)
    assert ContactTx.from_json(WS, s.to_json()).mu == 3


# --- action on conormals ----------------------------------------------------


def test_identity_action(L0):
    assert apply_to_conormal(ContactTx.identity(WS), L0).branch == L0.branch


def test_scaling_action():
    b = BranchParam(4, 11, {11: 1, 13: 2}, 60)
    moved = apply_to_branch(ContactTx.scaling(WS, 1, fmpq(3, 2)), b)
    assert moved.coeffs == {11: fmpq(3, 2), 13: 3}


def test_jtype_preserves_pairs(L0):
    tx = cauchy_tx(parse_poly(WS, "x*y + 2*p^3"), parse_poly(WS, "x^3 + y^2"), 88)
    moved = apply_to_conormal(tx, L0)
    assert puiseux_invariants(moved.branch).pairs == ((11, 4),)


def test_compose_matches_sequential_action():
    L = conormal(BranchParam(4, 11, {11: 1, 13: 1}, 70))
    t1 = cauchy_tx(parse_poly(WS, "x*y"), parse_poly(WS, "x^3"), 70)
    t2 = cauchy_tx(parse_poly(WS, "p^2"), None, 70)
    s = ContactTx.scaling(WS, fmpq(1, 16), 3)
    both = compose(t1, compose(s, t2))
    step = apply_to_conormal(t1, apply_to_conormal(s, apply_to_conormal(t2, L)))
    direct = apply_to_conormal(both, L)
    assert direct.y.agrees(step.y, upto=min(direct.trunc, step.trunc) - 11)


def test_inverse():
    L = conormal(BranchParam(4, 11, {11: 1, 15: 2}, 70))
    tx = compose(ContactTx.scaling(WS, 16, 5), cauchy_tx(parse_poly(WS, "x*y - y*p"), parse_poly(WS, "x^2"), 70))
    back = apply_to_conormal(invert(tx), apply_to_conormal(tx, L))
    assert back.y.agrees(L.y, upto=back.trunc - 11)


def test_conjugation_formula():
    L = conormal(BranchParam(4, 11, {11: 1, 14: 1}, 70))
    j = cauchy_tx(parse_poly(WS, "x*y + p^2"), None, 70)
    lam, mu = fmpq(16), fmpq(-3, 2)
    s, s_inv = ContactTx.scaling(WS, lam, mu), ContactTx.scaling(WS, 1 / lam, 1 / mu)
    conj = conjugate(j, lam, mu)
    seq = apply_to_conormal(s_inv, apply_to_conormal(j, apply_to_conormal(s, L)))
    direct = apply_to_conormal(conj, L)
    assert direct.y.agrees(seq.y, upto=min(direct.trunc, seq.trunc) - 11)


# --- properties -------------------------------------------------------------


@given(st.integers(0, 10**6))
def test_random_alpha_is_certified(seed):
    rng = random.Random(seed)
    alpha = random_alpha(WS, rng, 44)
    beta0 = random_beta0(WS, rng, 44)
    tx = cauchy_tx(alpha, beta0, 70)
    assert tx.certificate is not None
    assert solve_cauchy(alpha, beta0, 70).p_slice(0) == beta0.truncate(70)
