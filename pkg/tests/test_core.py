import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from lambda_cpt.core import (
    Basis,
    DensityMatrix,
    SystemParams,
    diag_state,
    observables,
    rhs,
    rhs_array,
    robust_state,
    weak_state,
)
from lambda_cpt.errors import BasisMismatchError, ValidationError

rate = st.floats(min_value=0.0, max_value=10.0, allow_nan=False)
alignment = st.floats(min_value=-1.0, max_value=1.0, allow_nan=False)
detuning = st.floats(min_value=-5.0, max_value=5.0, allow_nan=False)
params_st = st.builds(SystemParams, r1=rate, r2=rate, gamma1=rate, gamma2=rate, p=alignment, delta=detuning)


@st.composite
def hermitian_unit_trace(draw):
    vals = draw(st.lists(st.floats(min_value=-1, max_value=1, allow_nan=False), min_size=8, max_size=8))
    m = np.zeros((3, 3), dtype=complex)
    m[1, 1], m[2, 2] = vals[0], vals[1]
    m[0, 0] = 1.0 - vals[0] - vals[1]
    m[0, 1] = complex(vals[2], vals[3])
    m[0, 2] = complex(vals[4], vals[5])
    m[1, 2] = complex(vals[6], vals[7])
    m[1, 0], m[2, 0], m[2, 1] = np.conj(m[0, 1]), np.conj(m[0, 2]), np.conj(m[1, 2])
    return m


class TestSystemParams:
    def test_defaults_are_valid(self):
        p = SystemParams()
        assert p.p == 1.0 and p.delta == 0.0

    @pytest.mark.parametrize("field", ["r1", "r2", "gamma1", "gamma2"])
    def test_negative_rates_rejected(self, field):
        with pytest.raises(ValidationError, match="non-negative"):
            SystemParams(**{field: -0.1})

    @pytest.mark.parametrize("p", [1.5, -1.01])
    def test_p_out_of_range(self, p):
        with pytest.raises(ValidationError, match=r"p ∈ \[−1,1\]"):
            SystemParams(p=p)

    def test_non_finite_rejected(self):
        with pytest.raises(ValidationError):
            SystemParams(r1=math.inf)
        with pytest.raises(ValidationError):
            SystemParams(delta=math.nan)

    def test_time_unit_fallbacks(self):
        assert SystemParams(gamma1=2.0, r1=5.0).time_unit() == 0.5
        assert SystemParams(r1=4.0, gamma2=1.0).time_unit() == 0.25
        assert SystemParams().time_unit() == 1.0

    def test_degenerate_regime(self):
        assert SystemParams(2, 2, 1, 1).is_degenerate()
        assert not SystemParams(2, 2, 1, 1, p=0.9).is_degenerate()
        assert not SystemParams(2, 1, 1, 1).is_degenerate()


class TestDensityMatrix:
    def test_rejects_non_hermitian(self):
        m = np.diag([1.0, 0, 0]).astype(complex)
        m[0, 1] = 0.1
        with pytest.raises(ValidationError, match="Hermitian"):
            DensityMatrix(m)

    def test_rejects_bad_trace(self):
        with pytest.raises(ValidationError, match="unit trace"):
            diag_state(0.5, 0.2, 0.2)

    def test_rejects_non_finite(self):
        with pytest.raises(ValidationError):
            DensityMatrix(np.full((3, 3), np.nan))

    def test_immutable(self):
        rho = robust_state()
        with pytest.raises(ValueError):
            rho.data[0, 0] = 1.0
        with pytest.raises(AttributeError):
            rho.basis = Basis.DRESSED

    def test_entry_labels(self):
        rho = robust_state()
        assert rho.entry("b", "c") == -0.5
        assert rho.entry("c", "b") == -0.5
        assert rho.c0() == -1.0

    def test_psd_is_recorded_not_enforced(self):
        # trace 1 and Hermitian but an eigenvalue below zero
        rho = DensityMatrix.from_entries(aa=0.0, bb=0.5, cc=0.5, bc=0.8)
        assert rho.min_eigenvalue == pytest.approx(-0.3)


class TestRhs:
    def test_robust_state_is_fixed_point(self):
        for r, g in [(1.0, 1.0), (2.5, 1.0), (0.3, 4.0)]:
            d = rhs(SystemParams(r, r, g, g), robust_state())
            assert d.max_norm() == 0.0

    def test_zero_generator(self, rng):
        from oracles import random_density

        rho = DensityMatrix(random_density(rng))
        assert rhs(SystemParams(), rho).max_norm() == 0.0

    def test_hand_evaluated_population_start(self):
        # r1=1, r2=2, γ1=0.5, γ2=1.5, p=1 from |b⟩, each printed equation evaluated by hand
        d = rhs(SystemParams(1, 2, 0.5, 1.5), diag_state(0, 1, 0))
        expected = np.zeros((3, 3), dtype=complex)
        expected[0, 0] = 1.0
        expected[1, 1] = -1.0
        expected[1, 2] = expected[2, 1] = -math.sqrt(2) / 2
        np.testing.assert_allclose(d.data, expected, atol=1e-15)

    def test_hand_evaluated_general_state(self):
        # r1=1, r2=4, γ1=2, γ2=0.5, p=1, Δ=0.3; hand evaluation of all six equations
        params = SystemParams(1, 4, 2, 0.5, 1.0, 0.3)
        rho = DensityMatrix.from_entries(aa=0.2, bb=0.5, cc=0.3, ab=0.1, ac=0.05j, bc=0.1 + 0.05j)
        d = rhs(params, rho)
        assert d.entry("a", "a") == pytest.approx(0.6, abs=1e-15)
        assert d.entry("c", "c") == pytest.approx(-0.5, abs=1e-15)
        assert d.entry("b", "b") == pytest.approx(-0.1, abs=1e-15)
        assert d.entry("a", "b") == pytest.approx(-0.425 - 0.05j, abs=1e-15)
        assert d.entry("a", "c") == pytest.approx(-0.1 - 0.2875j, abs=1e-15)
        assert d.entry("b", "c") == pytest.approx(-0.465 - 0.095j, abs=1e-15)
        assert d.entry("c", "b") == pytest.approx(-0.465 + 0.095j, abs=1e-15)

    def test_rejects_dressed_basis(self):
        rho = DensityMatrix(np.diag([0, 1.0, 0]), Basis.DRESSED)
        with pytest.raises(BasisMismatchError):
            rhs(SystemParams(1, 1, 1, 1), rho)

    def test_no_cross_decay_term_in_upper_coherences(self):
        # ρ_ab/ρ_ac couple only through p√(r1 r2), never through p√(γ1 γ2)
        params = SystemParams(0, 0, 1, 4)
        rho = DensityMatrix.from_entries(aa=0.5, bb=0.5, ac=0.1)
        assert rhs(params, rho).entry("a", "b") == 0


@settings(max_examples=200, deadline=None)
@given(params_st, hermitian_unit_trace())
def test_rhs_traceless(params, m):
    d = rhs_array(params, m)
    assert abs(np.trace(d)) <= 1e-14 * max(1.0, np.max(np.abs(d)))


@settings(max_examples=200, deadline=None)
@given(params_st, hermitian_unit_trace())
def test_rhs_commutes_with_conjugation(params, m):
    d = rhs_array(params, m)
    d_conj = rhs_array(params, m.conj().T)
    np.testing.assert_allclose(d.conj().T, d_conj, atol=1e-12)
    np.testing.assert_allclose(d, d.conj().T, atol=1e-12)


@settings(max_examples=200, deadline=None)
@given(params_st, hermitian_unit_trace(), hermitian_unit_trace(), st.floats(0, 1))
def test_rhs_linear(params, m1, m2, alpha):
    lhs = rhs_array(params, alpha * m1 + (1 - alpha) * m2)
    rhs_ = alpha * rhs_array(params, m1) + (1 - alpha) * rhs_array(params, m2)
    scale = max(1.0, np.max(np.abs(m1)), np.max(np.abs(m2))) * max(1.0, *params.rates, abs(params.delta))
    np.testing.assert_allclose(lhs, rhs_, atol=1e-12 * scale)


@settings(max_examples=200, deadline=None)
@given(st.floats(0, 10), st.floats(0, 10), hermitian_unit_trace())
def test_nondecaying_combination(r, g, m):
    d = rhs_array(SystemParams(r, r, g, g), m)
    combo = d[0, 0] + d[1, 2] + d[2, 1]
    assert abs(combo) <= 1e-14 * max(1.0, r, g) * max(1.0, np.max(np.abs(m)))


class TestObservables:
    def test_robust(self):
        o = observables(robust_state())
        assert (o.inv_ab, o.inv_ac) == (-0.5, -0.5)
        assert o.re_rho_bc == -0.5

    def test_excited(self):
        o = observables(diag_state(1, 0, 0))
        assert (o.inv_ab, o.inv_ac, o.re_rho_bc) == (1.0, 1.0, 0.0)

    def test_dark_state_values(self):
        rho = DensityMatrix.from_entries(bb=0.75, cc=0.25, bc=-math.sqrt(3) / 4)
        o = observables(rho)
        assert o.inv_ab == pytest.approx(-0.75)
        assert o.inv_ac == pytest.approx(-0.25)
        assert o.re_rho_bc == pytest.approx(-0.4330127, abs=1e-7)

    def test_weak(self):
        o = observables(weak_state())
        assert o.re_rho_bc == 0.5 and o.im_rho_bc == 0.0


def test_density_matrix_pickles():
    import pickle

    rho = DensityMatrix.from_entries(aa=0.2, bb=0.5, cc=0.3, bc=0.1j)
    back = pickle.loads(pickle.dumps(rho))
    assert np.array_equal(back.data, rho.data) and back.basis is Basis.BARE
    with pytest.raises(ValueError):
        back.data[0, 0] = 0.0
