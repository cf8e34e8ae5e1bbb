from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qfunctor.strictfield import (
    MAX_Q,
    StrictField,
    TrigPoly,
    decay_slope,
    dirac_defect,
    fuzzy_rep,
    norm_section,
    operator_norm,
    parse_trig,
    random_trig,
    sup_norm,
    torus_bracket,
    usc_check,
)

e = TrigPoly.mode


def mode_oracle(q: int, m: int, n: int) -> np.ndarray:
    """Phase times explicit matrix powers of the clock and shift."""
    R = fuzzy_rep(q)
    Um = np.linalg.matrix_power(R.U, m) if m >= 0 else np.linalg.matrix_power(R.U.conj().T, -m)
    Vn = np.linalg.matrix_power(R.V, n) if n >= 0 else np.linalg.matrix_power(R.V.conj().T, -n)
    return np.exp(-1j * np.pi * m * n / q) * Um @ Vn


# -- fuzzy representation ------------------------------------------------------------

def test_q2_pauli_pair():
    R = fuzzy_rep(2)
    assert np.allclose(R.U @ R.V, -R.V @ R.U, atol=1e-15)


@pytest.mark.parametrize("q", [2, 3, 7, 64, 199])
def test_clock_shift_relations(q):
    R = fuzzy_rep(q)
    I = np.eye(q)
    assert np.allclose(np.linalg.matrix_power(R.U, q), I, atol=1e-10)
    assert np.allclose(np.linalg.matrix_power(R.V, q), I, atol=1e-12)
    assert np.allclose(R.U.conj().T @ R.U, I) and np.allclose(R.V.conj().T @ R.V, I)
    assert R.relation_defect() < 1e-12
    assert np.allclose(R.quantize(e(0, 0)), I)


@settings(max_examples=40, deadline=None)
@given(st.integers(2, 40), st.integers(-5, 5), st.integers(-5, 5))
def test_mode_matches_matrix_powers(q, m, n):
    assert np.allclose(fuzzy_rep(q).mode(m, n), mode_oracle(q, m, n), atol=1e-10)


@settings(max_examples=40, deadline=None)
@given(st.integers(2, 60), st.integers(0, 2**32 - 1))
def test_star_preserving_and_linear(q, seed):
    rng = np.random.default_rng(seed)
    f, g = random_trig(rng), random_trig(rng)
    R = fuzzy_rep(q)
    assert np.allclose(R.quantize(f.conj()), R.quantize(f).conj().T, atol=1e-12)
    c = complex(rng.normal(), rng.normal())
    assert np.allclose(R.quantize(f + g.scale(c)), R.quantize(f) + c * R.quantize(g), atol=1e-12)


def test_q_range_limits():
    with pytest.raises(ValueError):
        fuzzy_rep(1)
    with pytest.raises(ValueError):
        fuzzy_rep(MAX_Q + 1)


# -- symbols -----------------------------------------------------------------------------

def test_bracket_normalisation():
    b = torus_bracket(e(1, 0), e(0, 1))
    assert b.terms == {(1, 1): pytest.approx(-2 * np.pi)}
    assert torus_bracket(e(2, 1), e(2, 1)).terms == {}


def test_trig_product_and_reality():
    c = e(1, 0) + e(-1, 0)
    assert c.is_real() and not e(1, 0).is_real()
    assert (c * c).terms == {(2, 0): 1, (0, 0): 2, (-2, 0): 1}
    assert random_trig(np.random.default_rng(1), real=True).is_real()


def test_parse_trig():
    f = parse_trig("2*e(1,0) - (0.5+1j)*e(-1,2) + e(0,0)")
    assert f.terms == {(1, 0): 2, (-1, 2): -(0.5 + 1j), (0, 0): 1}
    with pytest.raises(ValueError):
        parse_trig("e(1)")


# -- Dirac defect ------------------------------------------------------------------------

def test_defect_of_symbol_with_itself():
    f = random_trig(np.random.default_rng(4))
    assert dirac_defect(f, f, 31) < 1e-12


@pytest.mark.parametrize("q", [2, 11, 50, 199, 512])
def test_closed_form_defect(q):
    want = abs(2 * q * np.sin(np.pi / q) - 2 * np.pi)
    assert abs(dirac_defect(e(1, 0), e(0, 1), q) - want) <= 1e-12


def test_defect_direct_oracle():
    rng = np.random.default_rng(8)
    f, g = random_trig(rng), random_trig(rng)
    q = 23
    Qf = sum(c * mode_oracle(q, m, n) for (m, n), c in f.terms.items())
    Qg = sum(c * mode_oracle(q, m, n) for (m, n), c in g.terms.items())
    Qb = sum(c * mode_oracle(q, m, n) for (m, n), c in torus_bracket(f, g).terms.items())
    D = 1j * q * (Qf @ Qg - Qg @ Qf) - Qb
    assert dirac_defect(f, g, q) == pytest.approx(np.linalg.norm(D, 2), abs=1e-9)


def test_defect_decays():
    rng = np.random.default_rng(2)
    qs = list(range(11, 200, 8))
    for _ in range(3):
        s, d = decay_slope(random_trig(rng), random_trig(rng), qs)
        assert s >= 0.9
        assert d[-1] < d[0]


# -- norms -------------------------------------------------------------------------------

def test_unitary_symbol_norms():
    rows = norm_section(e(1, 0), [3, 10, 51])
    assert all(v == pytest.approx(1.0, abs=1e-12) for _, v in rows)
    assert rows[-1][0] == 0.0


def test_cosine_norms_against_spectrum():
    f = e(1, 0) + e(-1, 0)
    for q in (5, 12, 33):
        eigs = 2 * np.cos(2 * np.pi * np.arange(q) / q)
        assert operator_norm(fuzzy_rep(q).quantize(f)) == pytest.approx(np.abs(eigs).max(), abs=1e-12)
    assert sup_norm(f) == pytest.approx(2.0, abs=1e-6)


def test_sup_norm_against_dense_grid():
    rng = np.random.default_rng(12)
    for _ in range(3):
        f = random_trig(rng)
        xs = np.linspace(0, 1, 801)
        X, Y = np.meshgrid(xs, xs)
        dense = float(np.abs(f(X, Y)).max())
        assert dense - 1e-9 <= sup_norm(f) <= dense + 1e-3


def test_real_symbol_norm_gap_decreasing():
    f = random_trig(np.random.default_rng(6), max_mode=1, real=True)
    rows = norm_section(f, [11, 41, 161])
    sup = rows[-1][1]
    gaps = [abs(v - sup) for _, v in rows[:-1]]
    assert gaps[0] > gaps[1] > gaps[2]


@pytest.mark.parametrize("seed", [0, 1, 2])
def test_norm_gap_scales_like_one_over_q(seed):
    rng = np.random.default_rng(seed)
    f = random_trig(rng, max_mode=1, real=True).scale(float(rng.uniform(0.5, 8.0)))
    rows = norm_section(f, [50, 100, 200, 400])
    sup = rows[-1][1]
    scaled = [q * abs(v - sup) for q, (_, v) in zip([50, 100, 200, 400], rows[:-1])]
    assert max(scaled) / min(scaled) < 1.1
    # the gap is linear in the symbol
    rows2 = norm_section(f.scale(3.0), [100])
    assert abs(rows2[0][1] - rows2[-1][1]) == pytest.approx(3 * abs(rows[1][1] - sup), rel=1e-4)


def test_norm_family_unit_scale():
    from qfunctor.suites import norm_test_family

    fam = norm_test_family(np.random.default_rng(0))
    assert all(sup_norm(f) == pytest.approx(1.0, abs=1e-6) for f in fam[3:])


# -- upper semicontinuity surrogate ---------------------------------------------------------

QS = list(range(11, 60, 4))


def test_constant_field_passes():
    assert usc_check(StrictField.build(e(0, 0, 3.0), QS), 1.0).ok


def test_level_set_contains_zero():
    f = e(1, 0) + e(-1, 0)
    rep = usc_check(StrictField.build(f, QS), 1.0)
    assert rep.ok and 0.0 in rep.level_set


def test_truncated_fibre_flagged():
    f = e(1, 0) + e(-1, 0)
    sf = StrictField.build(f, QS).override(31, np.zeros((31, 31)))
    rep = usc_check(sf, 1.0)
    assert not rep.ok and rep.witnesses[0]["kind"] == "isolated drop"


def test_escape_to_zero_flagged():
    sf = StrictField.build(e(1, 0), QS)
    sf = StrictField(sf.symbol, sf.qs, sf.fibers, 0.0)
    rep = usc_check(sf, 0.5)
    assert not rep.ok and rep.witnesses[0]["kind"] == "escape to 0"
