import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import cn_state, dn_lump_energy, uniform_energy
from ring_crystal.analytic import (
    RingProblem,
    asymptotic_delta_energy,
    best_uniform_energy,
    canonical_alpha,
    critical_coupling,
    half_flux_record,
    half_flux_state,
    modulus_residual,
    solve_modulus,
    uniform_branch_energy,
    wilczek_rotating_energy,
)
from ring_crystal.fields import TWISTED

LAMBDAS = [0.05, 0.5, 1.0, 2.0, 5.0, 8.0, 12.0, 20.0]


@pytest.mark.parametrize("lam", LAMBDAS)
def test_modulus_equation_residual(lam):
    assert abs(modulus_residual(solve_modulus(lam), lam)) <= 1e-12


@pytest.mark.parametrize("lam", [0.5, 1.0, 2.0, 5.0, 8.0, 12.0])
def test_half_flux_record_matches_mpmath_quadrature(lam):
    rec = half_flux_record(lam)
    ref = cn_state(lam)
    assert rec.modulus.kc == pytest.approx(float((1 - ref["k"] ** 2) ** 0.5), rel=1e-10)
    assert rec.mu == pytest.approx(float(ref["mu"]), rel=1e-13, abs=1e-14)
    assert rec.eps == pytest.approx(float(ref["eps"]), rel=1e-13, abs=1e-14)


def test_energy_formula_across_the_k2_half_crossing():
    # mu changes sign at k^2 = 1/2; the energy formula must stay smooth there
    lams = np.linspace(0.3, 0.7, 9)
    eps = [half_flux_record(l).eps for l in lams]
    assert np.all(np.diff(eps) < 0)
    assert np.all(np.abs(np.diff(eps, 2)) < 1e-3)


def test_weak_coupling_limit():
    # first-order perturbation of the degenerate pair cos(phi/2): 1/8 - 3 lam/(8 pi)
    for lam in (1e-4, 1e-3):
        rec = half_flux_record(lam)
        assert rec.eps == pytest.approx(0.125 - 3 * lam / (8 * math.pi), abs=5 * lam**2)


def test_degenerate_modulus_reports_limit():
    rec = half_flux_record(1e-13)
    assert rec.degenerate and rec.eps == 0.125


@pytest.mark.parametrize("lam", [0.5, 2.0, 5.0, 12.0])
def test_sampled_state_norm_and_reflection(lam):
    rec, f = half_flux_state(lam, 256)
    assert f.frame == TWISTED and f.alpha == 0.5
    assert f.norm() == pytest.approx(1.0, abs=1e-10)
    # cn(2K - u) = -cn(u), so psi(2 pi - phi) = -psi(phi)
    a = f.amplitudes
    np.testing.assert_allclose(a[:0:-1], -a[1:], atol=1e-13 * abs(a[0]))


@pytest.mark.parametrize("lam", [0.5, 1.0, 2.0, 5.0, 8.0, 12.0])
def test_energy_mu_identity(lam):
    rec, f = half_flux_state(lam, 512)
    quartic = f.grid.integrate(f.density**2)
    assert rec.eps == pytest.approx(rec.mu + 0.5 * lam * quartic, abs=1e-8)


def test_bad_coupling():
    with pytest.raises(ValueError):
        solve_modulus(0.0)
    with pytest.raises(ValueError):
        RingProblem(-1.0)
    with pytest.raises(ValueError):
        RingProblem(1.0, float("inf"))


@settings(max_examples=200, deadline=None)
@given(a=st.floats(min_value=-50, max_value=50, allow_nan=False))
def test_canonical_alpha_range_and_periodicity(a):
    c = canonical_alpha(a)
    assert -0.5 < c <= 0.5
    assert abs(c - canonical_alpha(a + 1.0)) < 1e-12


def test_canonical_alpha_half_integers():
    assert canonical_alpha(0.5) == 0.5
    assert canonical_alpha(-0.5) == 0.5
    assert canonical_alpha(1.5) == 0.5
    assert RingProblem(1.0, 1.25).canonical_alpha == 0.25
    assert RingProblem(1.0, 1.25).alpha == 1.25


@settings(max_examples=100, deadline=None)
@given(lam=st.floats(0.01, 20), a=st.floats(-2, 2), n=st.integers(-3, 3))
def test_uniform_branch_matches_oracle(lam, a, n):
    assert uniform_branch_energy(lam, a, n) == pytest.approx(uniform_energy(lam, a, n), abs=1e-15)
    best = best_uniform_energy(lam, a)
    assert best <= uniform_branch_energy(lam, a, n) + 1e-15
    assert best == pytest.approx(0.5 * canonical_alpha(a) ** 2 - lam / (4 * math.pi), abs=1e-12)


@pytest.mark.parametrize("alpha", [0.0, 0.25, 0.5, 1.25, -0.5])
def test_wilczek_branch_is_alpha_squared_over_two(alpha):
    c = canonical_alpha(alpha)
    assert wilczek_rotating_energy(-1.0, alpha) - (-1.0) == 0.5 * c * c


def test_asymptotic_formula_is_the_closed_form():
    assert asymptotic_delta_energy(6.0, 0.0) == 0.0
    assert asymptotic_delta_energy(6.0, 0.5) == -6 * 36 * math.exp(-6 * math.pi)
    assert asymptotic_delta_energy(6.0, 0.25) == pytest.approx(-3 * 36 * math.exp(-6 * math.pi), rel=1e-15)


def test_critical_coupling():
    assert critical_coupling() == math.pi / 2


@pytest.mark.parametrize("lam", [2.0, 3.0, 5.0, 8.0])
def test_half_flux_lies_above_zero_flux_lump(lam):
    # |psi| lowers the kinetic energy of any psi, so eps(1/2) >= eps(0)
    assert half_flux_record(lam).eps > dn_lump_energy(lam)


@pytest.mark.parametrize("lam", [5.0, 6.0, 7.0, 8.0])
def test_strong_coupling_gap_is_two_lambda_squared_exp(lam):
    gap = half_flux_record(lam).eps - dn_lump_energy(lam)
    assert gap / (lam**2 * math.exp(-math.pi * lam)) == pytest.approx(2.0, rel=0.02)


def test_half_flux_below_wilczek_at_strong_coupling():
    for lam in (3.0, 5.0, 8.0):
        assert half_flux_record(lam).eps < wilczek_rotating_energy(dn_lump_energy(lam), 0.5) - 0.1
