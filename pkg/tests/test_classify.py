import math
import random

import pytest
from flint import fmpq
from hypothesis import given
from hypothesis import strategies as st

from legn.branch import equation, parametrize_equation
from legn.classify import (
    ScalingWeights,
    classify_4_11,
    classify_branch,
    classify_coords,
    distinguish,
    example_identity_4_11,
    graded_scaling_identity,
    in_rigid_list,
    normalize_by_scaling,
    representative,
    rigidity_check,
    scaling_action,
)
from legn.conormal import conormal, is_at_least, valuation
from legn.contact import apply_to_branch, cauchy_tx
from legn.errors import HypothesisViolated
from legn.series import WeightSystem, parse_poly
from legn.suites import random_alpha, random_beta0
from legn.versal import VersalCoords, basis

WS = WeightSystem(4, 11)
C = basis(4, 11, "C")
nonzero = st.fractions(min_value=-6, max_value=6, max_denominator=7).filter(lambda c: c != 0)


def coords(t2, t6):
    return VersalCoords(C, {(6, 2): t2, (7, 2): t6})


# --- scaling ----------------------------------------------------------------


def test_scaling_weights():
    assert ScalingWeights.of(4, 11).d == {(6, 2): 2, (7, 2): 6}


def test_scaling_examples():
    assert scaling_action(coords(1, 1), 1) == coords(1, 1)
    assert scaling_action(coords(1, 1), 2) == coords(4, 64)
    with pytest.raises(ValueError):
        scaling_action(coords(1, 1), 0)


@given(nonzero, nonzero, nonzero)
def test_scaling_is_a_group_action(t2, t6, tau):
    c = coords(t2, t6)
    assert scaling_action(scaling_action(c, tau), 1 / tau) == c
    assert scaling_action(scaling_action(c, tau), 2) == scaling_action(c, 2 * tau)


def test_graded_scaling_identity():
    assert graded_scaling_identity(4, 11)
    assert graded_scaling_identity(3, 10) and graded_scaling_identity(5, 13)


def test_normalize_by_scaling():
    assert normalize_by_scaling(coords(fmpq(1, 4), 3)) == coords(1, 3 * 64)
    # 1/2 has no rational square root, so nothing changes
    assert normalize_by_scaling(coords(2, 1)) == coords(2, 1)


# --- classification ---------------------------------------------------------


def test_classify_examples():
    assert classify_4_11(coords(0, 0)).label == "F0"
    assert classify_4_11(coords(1, fmpq(1, 3))).label == "F1"
    assert classify_4_11(coords(0, 7)).label == "F2"


@given(nonzero, st.fractions(min_value=-6, max_value=6, max_denominator=7), nonzero)
def test_label_is_scaling_invariant(t2, t6, tau):
    c = coords(t2, t6)
    assert classify_4_11(c).label == classify_4_11(scaling_action(c, tau)).label == "F1"


def test_other_types_are_not_labelled():
    nf = classify_coords(VersalCoords(basis(5, 13, "C"), {}))
    assert nf.label is None and not nf.complete


@pytest.mark.parametrize("label", ["F0", "F1", "F2"])
def test_representatives_classify_to_themselves(label):
    nf, _ = classify_branch(parametrize_equation(representative(label)))
    assert nf.label == label


@pytest.mark.parametrize("seed", range(3))
def test_classification_survives_contact_maps(seed):
    rng = random.Random(seed)
    for label in ("F0", "F1", "F2"):
        b = parametrize_equation(representative(label))
        tx = cauchy_tx(random_alpha(WS, rng, 30), random_beta0(WS, rng, 30), b.trunc)
        nf, _ = classify_branch(apply_to_branch(tx, b))
        assert nf.label == label


# --- distinguishing ---------------------------------------------------------


def test_distinguish_f0_f1():
    ev = distinguish(classify_4_11(coords(0, 0)), classify_4_11(coords(1, 0)))
    assert not ev.equal
    w0, w1 = ev.witnesses
    assert w0 == parse_poly(WS, "11*y - 4*x*p") and w1 is None
    L0 = conormal(parametrize_equation(representative("F0")))
    assert is_at_least(valuation(L0, w0))


def test_distinguish_f1_f2():
    ev = distinguish(classify_4_11(coords(1, 0)), classify_4_11(coords(0, 1)))
    assert not ev.equal and ev.witnesses == (coords(1, 0), coords(0, 1))


def test_distinguish_equal_classes():
    assert distinguish(classify_4_11(coords(0, 0)), classify_4_11(coords(0, 0))).equal


# --- rigidity ---------------------------------------------------------------


def test_rigidity_examples():
    assert rigidity_check(3, 7) and rigidity_check(2, 9)
    assert not rigidity_check(4, 11)
    with pytest.raises(HypothesisViolated):
        rigidity_check(3, 5)


def test_rigidity_table_matches_list():
    for k in range(2, 8):
        for n in range(2 * k + 1, 40):
            if math.gcd(k, n) == 1:
                assert rigidity_check(k, n) == in_rigid_list(k, n), (k, n)


# --- the worked identity ----------------------------------------------------


def test_example_identity():
    check = example_identity_4_11(fmpq(1, 3))
    assert check.unit == parse_poly(WS, "1 - 22/3*x")
    assert check.remainder_order >= 52


def test_example_identity_other_parameter():
    check = example_identity_4_11(fmpq(-2, 5))
    assert check.unit.constant_term() == 1 and check.remainder_order >= 52
    f2 = equation(4, 11, {(6, 2): 1, (7, 2): fmpq(-2, 5)})
    assert check.transformed.homogeneous_part(44) == f2.homogeneous_part(44)
