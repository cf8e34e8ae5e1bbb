from __future__ import annotations

from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from sympy.ntheory.continued_fraction import continued_fraction_periodic

from qfunctor.nctorus import (
    ContinuedFraction,
    NotACounterexample,
    NotQuadraticError,
    QuadraticIrrational,
    cf_value,
    continued_fraction,
    counterexample_report,
    find_witness,
    gl2z_equivalent,
    parse_quadratic,
)
from qfunctor.suites import random_quadratic

Q = QuadraticIrrational.make
SQRT2 = Q(0, 1, 1, 2)
GOLDEN = Q(1, 1, 2, 5)


def sympy_cf(t: QuadraticIrrational) -> ContinuedFraction:
    """Independent expansion from sympy, normalised to (preperiod, minimal period)."""
    out = continued_fraction_periodic(t.a, t.c, t.b * t.b * t.d, 1 if t.b > 0 else -1)
    period = out[-1]
    pre = out[:-1]
    return ContinuedFraction(tuple(pre), tuple(period))


def minimal(cf: ContinuedFraction) -> ContinuedFraction:
    p = list(cf.period)
    for k in range(1, len(p) + 1):
        if len(p) % k == 0 and p == p[:k] * (len(p) // k):
            p = p[:k]
            break
    pre = list(cf.preperiod)
    while pre and pre[-1] == p[-1]:
        pre.pop()
        p = [p[-1]] + p[:-1]
    return ContinuedFraction(tuple(pre), tuple(p))


def tails_match(x: ContinuedFraction, y: ContinuedFraction) -> bool:
    """Oracle: common tail iff the minimal periods are cyclic rotations of each other."""
    a, b = minimal(x).period, minimal(y).period
    return len(a) == len(b) and any(b == a[k:] + a[:k] for k in range(len(a)))


quadratics = st.builds(
    lambda d, a, b, c: (a, b, c, d),
    st.sampled_from([2, 3, 5, 6, 7, 10, 11, 13]),
    st.integers(-6, 6),
    st.integers(-3, 3).filter(bool),
    st.integers(1, 6),
).map(lambda t: Q(*t))


# -- representation -----------------------------------------------------------------

def test_canonical_form():
    t = Q(2, 4, -6, 8)  # (2 + 8 sqrt 2) / -6 = (-1 - 4 sqrt 2)/3
    assert (t.a, t.b, t.c, t.d) == (-1, -4, 3, 2)
    with pytest.raises(NotQuadraticError):
        Q(1, 1, 1, 4)
    with pytest.raises(NotQuadraticError):
        Q(1, 0, 1, 2)


def test_parse_round_trip():
    assert parse_quadratic("(0+1*sqrt(2))/1") == SQRT2
    assert parse_quadratic("(1+1*sqrt(5))/2") == GOLDEN
    assert parse_quadratic(str(Q(-3, -2, 7, 13))) == Q(-3, -2, 7, 13)
    with pytest.raises(ValueError):
        parse_quadratic("sqrt(2)+")


@settings(max_examples=100, deadline=None)
@given(quadratics)
def test_floor_matches_float(t):
    assert t.floor() == int(np.floor(float(t)))


# -- continued fractions ------------------------------------------------------------

def test_cf_examples():
    assert continued_fraction(SQRT2) == ContinuedFraction((1,), (2,))
    assert continued_fraction(GOLDEN) == ContinuedFraction((), (1,))
    t = Q(1, 1, 1, 2)
    assert continued_fraction(t) == ContinuedFraction((), (2,))
    assert cf_value(continued_fraction(t), 2) == t


@settings(max_examples=100, deadline=None)
@given(quadratics)
def test_cf_matches_sympy_and_reconstructs(t):
    cf = continued_fraction(t)
    assert cf == minimal(sympy_cf(t))
    assert all(x >= 1 for x in cf.period)
    assert cf_value(cf, t.d) == t


# -- GL(2,Z) equivalence ---------------------------------------------------------------

def test_equivalence_examples():
    assert not gl2z_equivalent(SQRT2, GOLDEN)
    for t in (SQRT2, GOLDEN, Q(3, -2, 7, 13)):
        assert gl2z_equivalent(t, t + 1)
        assert gl2z_equivalent(t, t.reciprocal())


@settings(max_examples=100, deadline=None)
@given(quadratics, quadratics)
def test_equivalence_matches_tail_oracle(s, t):
    assert gl2z_equivalent(s, t) == (s.d == t.d and tails_match(sympy_cf(s), sympy_cf(t)))


@settings(max_examples=60, deadline=None)
@given(quadratics, quadratics, quadratics)
def test_equivalence_relation(s, t, u):
    assert gl2z_equivalent(s, s)
    assert gl2z_equivalent(s, t) == gl2z_equivalent(t, s)
    if gl2z_equivalent(s, t) and gl2z_equivalent(t, u):
        assert gl2z_equivalent(s, u)


@settings(max_examples=40, deadline=None)
@given(quadratics, st.lists(st.sampled_from([((1, 1), (0, 1)), ((1, -1), (0, 1)), ((0, 1), (1, 0))]), max_size=6))
def test_moebius_images_are_equivalent_with_witness(t, word):
    u = t
    for g in word:
        u = u.mobius(g)
    assert gl2z_equivalent(t, u)
    w = find_witness(t, u, max_len=12)
    assert w is not None
    (p, q), (r, s) = w.matrix
    assert abs(p * s - q * r) == 1
    assert t.mobius(w.matrix) == u


def test_no_witness_for_inequivalent():
    assert find_witness(SQRT2, Q(0, 1, 1, 3), 8) is None
    assert find_witness(Q(0, 1, 1, 3), Q(1, 1, 1, 3).reciprocal() + 5, 6) is not None
    assert find_witness(Q(0, 1, 1, 6), Q(0, 2, 1, 6) + 1, 8) is None  # sqrt 6 ~ [2; 2, 4], 2 sqrt 6 ~ [4; 1, 8]


def test_witness_word_replays():
    gens = {"T": ((1, 1), (0, 1)), "T^-1": ((1, -1), (0, 1)), "S": ((0, 1), (1, 0))}
    t = Q(3, 2, 7, 13)
    u = (t + 3).reciprocal() - 2
    w = find_witness(t, u)
    x = t
    for name in w.word:
        x = x.mobius(gens[name])
    assert x == u


def test_random_quadratic_generator_is_seeded():
    a = [random_quadratic(np.random.default_rng(5)) for _ in range(3)]
    b = [random_quadratic(np.random.default_rng(5)) for _ in range(3)]
    assert a == b


# -- report --------------------------------------------------------------------------------

def test_counterexample_report():
    rep = counterexample_report(SQRT2, GOLDEN)
    assert rep.quantum_morita is False
    assert rep.cf1.period == (2,) and rep.cf2.period == (1,)
    assert "cited" in rep.classical_morita
    with pytest.raises(NotACounterexample):
        counterexample_report(SQRT2, Q(1, 1, 1, 2))
    with pytest.raises(NotACounterexample):
        counterexample_report(GOLDEN, GOLDEN)


def test_fraction_parts():
    assert GOLDEN.parts == (Fraction(1, 2), Fraction(1, 2))
