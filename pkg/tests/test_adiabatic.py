import math
from dataclasses import replace

import numpy as np
import pytest

from rabicat import adiabatic as ad
from rabicat import fock, models, spectra
from rabicat import renormalization as rn
from rabicat.adiabatic import ApproximantFamily
from rabicat.exceptions import FamilyParamMismatch, SolveFailure
from rabicat.models import CouplingPolicy, ModelParams

LIN = CouplingPolicy.linear(1.0)
P4 = ModelParams(1.0, 1.0, 0.3, 4.0, coupling=LIN)
GRID = (2.0, 4.0, 8.0, 16.0)


def test_polaron_unitary_basics():
    assert np.allclose(ad.polaron_unitary(0.0, 20).matrix, np.eye(42))
    u = ad.polaron_unitary(0.9, 60)
    assert np.abs(u.dag().matrix - ad.polaron_unitary(-0.9, 60).matrix).max() < 1e-14
    assert fock.unitarity_residual(u) < 1e-8


def test_polaron_blocks():
    u = ad.polaron_unitary(0.5, 30).matrix
    assert np.allclose(u[:31, :31], fock.displacement(0.5, 30).matrix)
    assert np.allclose(u[31:, 31:], fock.displacement(-0.5, 30).matrix)
    assert np.all(u[:31, 31:] == 0)


@pytest.mark.parametrize("omega,g", [(1.0, 1.0), (1.3, 1.9), (math.sqrt(65), 4 * 65**-0.25)])
def test_polaron_conjugation_identity(omega, g):
    n = 120
    p = ModelParams(1.0, 0.8, 0.3, 1.0)
    u = ad.polaron_unitary(g / omega, n)
    lhs = u @ (models.build_gqr(p, n, omega, g) + g * g / omega) @ u.dag()
    rhs = ad.polaron_frame_hamiltonian(p, n, omega, g)
    assert np.abs(lhs.block(n // 2) - rhs.block(n // 2)).max() < 1e-8


def test_family_validation():
    with pytest.raises(ValueError):
        ApproximantFamily("other", "zero")
    with pytest.raises(ValueError):
        ApproximantFamily(ad.GQR_NO_A2, "zero", n=-1)
    with pytest.raises(FamilyParamMismatch):
        ad.approximant(ApproximantFamily(ad.GQR_NO_A2, ad.ZERO), replace(P4, epsilon=0.2), 40)
    with pytest.raises(FamilyParamMismatch):
        ad.approximant(ApproximantFamily(ad.GQR_NO_A2, ad.NONZERO), replace(P4, epsilon=0.0), 40)


def test_cat_state_form():
    p = ModelParams(1.0, 1.0, 0.0, 2.0)
    a = ad.approximant(ApproximantFamily(ad.GQR_NO_A2, ad.ZERO, ad.MINUS, 1), p, 60)
    c = a.state.spin_components()
    d = fock.fock_state(1, 60)
    assert np.allclose(c[0], (fock.displacement(-2.0, 60) @ d).amplitudes / math.sqrt(2))
    assert np.allclose(c[1], -(fock.displacement(2.0, 60) @ d).amplitudes / math.sqrt(2))
    assert a.energy == pytest.approx(1.5 - 4.0)


def test_no_a2_zero_bias_branches_degenerate():
    p = ModelParams(1.0, 1.0, 0.0, 3.0)
    e = [ad.approximant_energy(ApproximantFamily(ad.GQR_NO_A2, ad.ZERO, b, 0), p) for b in (ad.PLUS, ad.MINUS)]
    assert e[0] == e[1] == pytest.approx(0.5 - 9.0)


@pytest.mark.parametrize("eps", [0.4, -0.4])
def test_no_a2_biased_product_states(eps):
    p = ModelParams(1.0, 1.0, eps, 3.0)
    plus = ad.approximant(ApproximantFamily(ad.GQR_NO_A2, ad.NONZERO, ad.PLUS, 0), p, 80)
    minus = ad.approximant(ApproximantFamily(ad.GQR_NO_A2, ad.NONZERO, ad.MINUS, 0), p, 80)
    assert minus.energy - plus.energy == pytest.approx(0.4)
    assert spectra.entanglement_entropy(plus.state) == pytest.approx(0.0, abs=1e-12)
    up_weight = np.linalg.norm(plus.state.spin_components()[0]) ** 2
    assert up_weight == pytest.approx(1.0 if eps > 0 else 0.0)


def test_a2_energies_closed_form():
    s = math.sqrt(1.09)
    base = math.sqrt(65) / 2 - 16 / 65
    for branch, sign in ((ad.PLUS, -1), (ad.MINUS, 1)):
        a = ad.approximant(ApproximantFamily(ad.A2_RENORMALIZED, ad.NONZERO, branch, 0), P4, 60)
        assert a.energy == pytest.approx(base + sign * s / 2, rel=1e-14)
    n2 = ad.approximant_energy(ApproximantFamily(ad.A2_RENORMALIZED, ad.NONZERO, ad.PLUS, 2), P4)
    # level spacing is hbar omega_g
    assert n2 - (base - s / 2) == pytest.approx(2 * math.sqrt(65), rel=1e-14)


def test_normalization_constant():
    p = ModelParams(1.0, 1.0, 0.5, 4.0, coupling=LIN)
    assert ad.normalization_inverse_square(p, ad.PLUS) == pytest.approx(1.381966, abs=1e-6)
    for branch in (ad.PLUS, ad.MINUS):
        a = ad.approximant(ApproximantFamily(ad.A2_RENORMALIZED, ad.NONZERO, branch, 0), p, 60)
        assert a.normalization_c**-2 == pytest.approx(ad.normalization_inverse_square(p, branch), rel=1e-12)
        assert a.state.norm() == pytest.approx(1.0, abs=1e-10)


def test_biased_pair_orthogonal_and_gap():
    p = replace(P4, epsilon=-0.7)
    for n in (0, 3):
        plus = ad.approximant(ApproximantFamily(ad.A2_RENORMALIZED, ad.NONZERO, ad.PLUS, n), p, 80)
        minus = ad.approximant(ApproximantFamily(ad.A2_RENORMALIZED, ad.NONZERO, ad.MINUS, n), p, 80)
        assert abs(plus.state.inner(minus.state)) < 1e-10
        assert minus.energy - plus.energy == pytest.approx(math.hypot(1.0, 0.7), rel=1e-14)


def test_spin_vector_is_lower_eigenvector():
    p = replace(P4, epsilon=0.3)
    for branch, sign in ((ad.PLUS, -1), (ad.MINUS, 1)):
        v, _ = ad._spin_vector(p, branch)
        m = -0.5 * (p.omega_a * fock.SIGMA_X + p.epsilon * fock.SIGMA_Z)
        assert np.allclose(m @ v, sign * p.splitting / 2 * v)


@pytest.mark.parametrize("branch", [ad.PLUS, ad.MINUS])
def test_biased_family_continuous_at_zero_bias(branch):
    p0 = replace(P4, epsilon=0.0)
    pe = replace(P4, epsilon=1e-8)
    z = ad.approximant(ApproximantFamily(ad.A2_RENORMALIZED, ad.ZERO, branch, 1), p0, 60)
    b = ad.approximant(ApproximantFamily(ad.A2_RENORMALIZED, ad.NONZERO, branch, 1), pe, 60)
    assert spectra.fidelity(z.state, b.state) >= 1 - 1e-10


def test_physical_reductions_no_a2():
    n = 80
    p = ModelParams(1.0, 1.0, 0.0, 2.5)
    u = ad.bare_to_physical_unitary(p, n)
    for k in (0, 1, 3):
        for branch, sign in ((ad.PLUS, 1), (ad.MINUS, -1)):
            a = ad.approximant(ApproximantFamily(ad.GQR_NO_A2, ad.ZERO, branch, k), p, n)
            target = fock.product_state(np.array([1, sign]) / math.sqrt(2), fock.fock_state(k, n))
            assert spectra.fidelity(u.dag() @ a.state, target) >= 1 - 1e-10
    pb = replace(p, epsilon=-0.3)
    a = ad.approximant(ApproximantFamily(ad.GQR_NO_A2, ad.NONZERO, ad.PLUS, 2), pb, n)
    target = fock.product_state(fock.SPIN_DOWN, fock.fock_state(2, n))
    assert spectra.fidelity(u.dag() @ a.state, target) >= 1 - 1e-10


def test_xi_operators():
    for G in (0.0, 0.1, 0.6):
        xi0, xi1 = ad.xi_operators(G, 60)
        assert np.allclose((xi0 + xi1).matrix, fock.spin_only(fock.SIGMA_X, 60).matrix, rtol=0, atol=1e-15)
        assert xi1.op_norm() <= 2 + 1e-12
    xi0, _ = ad.xi_operators(0.0, 10)
    assert np.allclose(xi0.matrix, fock.spin_only(fock.SIGMA_X, 10).matrix)


def test_effective_hamiltonians_limit_and_free_spectrum():
    n = 40
    h, h0 = ad.effective_hamiltonians(P4, n, counter_frequency=0.9, polaron_G=0.0)
    expect = (
        np.kron(fock.SIGMA_0, np.diag(0.9 * np.arange(n + 1.0)))
        - 0.15 * np.kron(fock.SIGMA_Z, np.eye(n + 1))
        - 0.5 * np.kron(fock.SIGMA_X, np.eye(n + 1))
    )
    assert np.allclose(h.matrix, expect)
    s = math.hypot(1.0, 0.3)
    ref = np.sort([k + sg * s / 2 for k in range(n + 1) for sg in (-1, 1)])
    assert np.allclose(h0.eigvalsh(), ref, atol=1e-12)


def test_effective_hamiltonian_hermitian():
    h, h0 = ad.effective_hamiltonians(P4, 60)
    assert h.hermitian and h0.hermitian


def test_resolvent_gap_vanishes_in_limit():
    assert ad.resolvent_gap(P4, 50, counter_frequency=1.0, polaron_G=0.0) < 1e-14


def test_resolvent_gap_decreasing_on_grid():
    gaps = [ad.resolvent_gap(replace(P4, g=g), 160) for g in GRID]
    assert all(b < a for a, b in zip(gaps, gaps[1:]))


def test_proof_diagnostics_all_hold():
    rows = ad.proof_diagnostics(P4, 120)
    names = {r.name for r in rows}
    assert {"I1", "I2", "I3", "I4", "I5", "I6", "resolvent_free", "free_times_resolvent", "counter_term"} <= names
    assert all(r.ok for r in rows), [r for r in rows if not r.ok]
    by = {r.name: r for r in rows}
    assert by["decomposition_residual"].value < 1e-12
    assert by["gap_vs_sum"].value <= by["gap_vs_sum"].bound


def test_solve_failure(monkeypatch):
    def broken(*_a, **_k):
        raise np.linalg.LinAlgError("singular")

    monkeypatch.setattr(np.linalg, "solve", broken)
    with pytest.raises(SolveFailure):
        ad.resolvent_gap(P4, 20)


def test_approximant_residual_improves_with_coupling():
    rel = []
    for g in GRID:
        p = replace(P4, g=g)
        rp = rn.renormalize(p)
        h = models.build_gqr(p, 100, rp.omega_g, rp.g_tilde)
        a = ad.approximant(ApproximantFamily(ad.A2_RENORMALIZED, ad.NONZERO, ad.PLUS, 0), p, 100)
        w = h.eigvalsh()
        rel.append((h @ a.state - a.energy * a.state).norm() / (w[1] - w[0]))
    assert all(b < a for a, b in zip(rel, rel[1:]))
