import math
from dataclasses import replace

import numpy as np
import pytest

from rabicat import adiabatic as ad
from rabicat import fock, models, spectra
from rabicat.exceptions import BasisMismatch, NotHermitian, TruncationCeiling
from rabicat.fock import LinearOperator, Truncation
from rabicat.models import CouplingPolicy, ModelParams

LIN = CouplingPolicy.linear(1.0)


def test_diagonalize_oscillator():
    dec = spectra.diagonalize(fock.number(30), 5)
    assert np.allclose(dec.eigenvalues, np.arange(5.0), atol=1e-12)
    assert dec.all_converged and len(dec) == 5
    for k, v in enumerate(dec.eigenvectors):
        assert spectra.fidelity(v, fock.fock_state(k, 30)) == pytest.approx(1.0, abs=1e-12)


def test_diagonalize_auto_grow_stable():
    p = ModelParams(1.0, 1.0, 0.0, 3.0)
    dec = spectra.diagonalize(lambda t: models.build_gqr(p, t), 6, Truncation(64, auto_grow=True, n_ceiling=512))
    assert dec.all_converged
    assert dec.trunc_used.n_max >= 64
    fixed = [models.build_gqr(p, n).eigvalsh()[:6] for n in (200, 260)]
    assert np.abs(fixed[0] - fixed[1]).max() < 1e-9
    assert np.abs(dec.eigenvalues - fixed[1]).max() < 1e-8


def test_diagonalize_not_hermitian():
    m = fock.annihilation(6).matrix
    with pytest.raises(NotHermitian):
        spectra.diagonalize(LinearOperator(m, fock.photon_basis(6)), 2)


def test_diagonalize_ceiling():
    p = ModelParams(1.0, 1.0, 0.0, 3.0)
    with pytest.raises(TruncationCeiling):
        spectra.diagonalize(lambda t: models.build_gqr(p, t), 4, Truncation(20, auto_grow=True, n_ceiling=30))


def test_diagonalize_fixed_reports_unconverged():
    p = ModelParams(1.0, 1.0, 0.0, 3.0)
    dec = spectra.diagonalize(lambda t: models.build_gqr(p, t), 4, Truncation(20))
    assert not dec.all_converged
    assert dec.trunc_used.n_max == 20


def test_diagonalize_truncation_mismatch():
    with pytest.raises(BasisMismatch):
        spectra.diagonalize(fock.number(10), 2, Truncation(12))


def test_coherent_state_observables():
    n, beta = 80, 1.7
    v = fock.displacement(beta, n) @ fock.fock_state(0, n)
    assert spectra.photon_number_expectation(v) == pytest.approx(beta**2, abs=1e-10)
    # coherent states saturate the vacuum fluctuation 1 / (2 omega)
    assert spectra.field_fluctuation(v, 2.0) == pytest.approx(0.25, abs=1e-10)


@pytest.mark.parametrize("g", [0.5, 1.5, 3.0])
def test_field_fluctuation_bound(g):
    p = ModelParams(1.0, 1.0, 0.2, g)
    ground = spectra.diagonalize(models.build_gqr(p, 120), 1).eigenvectors[0]
    n0 = spectra.photon_number_expectation(ground)
    assert spectra.field_fluctuation(ground, 1.0) <= 2 * n0 + 1 + 1e-12


def test_fidelity_and_subspace():
    a, b = fock.fock_state(0, 5), fock.fock_state(1, 5)
    plus = (a + b) * (1 / math.sqrt(2))
    assert spectra.fidelity(plus, a) == pytest.approx(0.5)
    assert spectra.subspace_fidelity(plus, [a, b]) == pytest.approx(1.0)
    assert spectra.subspace_fidelity(plus, [a, a]) == pytest.approx(0.5)
    assert spectra.subspace_fidelity(plus, []) == 0.0


def test_entropy_product_and_cat():
    n = 80
    prod = fock.product_state(fock.SPIN_UP, fock.displacement(1.0, n) @ fock.fock_state(0, n))
    assert spectra.entanglement_entropy(prod) == pytest.approx(0.0, abs=1e-12)
    cat = (
        fock.product_state(fock.SPIN_UP, fock.displacement(-3.0, n) @ fock.fock_state(0, n))
        + fock.product_state(fock.SPIN_DOWN, fock.displacement(3.0, n) @ fock.fock_state(0, n))
    ).normalized()
    # overlap <-3|3> = e^{-18} leaves the spin maximally mixed
    assert spectra.entanglement_entropy(cat) == pytest.approx(math.log(2), abs=1e-12)
    with pytest.raises(BasisMismatch):
        spectra.entanglement_entropy(fock.fock_state(0, 4))


def test_approximant_entropy_matches_spin_mixing():
    p = ModelParams(1.0, 1.0, 0.0, 3.0)
    a = ad.approximant(ad.ApproximantFamily(ad.GQR_NO_A2, ad.ZERO, ad.PLUS, 0), p, 80)
    assert spectra.entanglement_entropy(a.state) == pytest.approx(math.log(2), abs=1e-12)


def test_parity_expectation_on_eigenstates():
    p = ModelParams(1.0, 1.0, 0.0, 1.2)
    dec = spectra.diagonalize(models.build_gqr(p, 80), 6)
    vals = [spectra.parity_expectation(v) for v in dec.eigenvectors]
    assert np.allclose(np.abs(vals), 1.0, atol=1e-8)


def test_match_level_skips_used():
    e = np.array([0.0, 1.0, 1.0 + 1e-12, 2.0])
    states = [fock.fock_state(k, 4) for k in range(4)]
    assert spectra.match_level(1.0, states[2], e, states) == 2
    assert spectra.match_level(1.0, states[2], e, states, used=[2]) == 1


def test_branch_fidelities_a2():
    n = 400
    p = ModelParams(1.0, 1.0, 0.3, 8.0, coupling=LIN)
    dec = spectra.diagonalize(models.build_a2(p, n), 4)
    fids = spectra.branch_fidelities(spectra.A2, p, dec)
    assert [f.level for f in fids] == [0, 1]
    assert all(f.fidelity > 0.999 for f in fids)


def test_bias_scan_gaps():
    p = ModelParams(1.0, 1.0, 0.0, 8.0, coupling=LIN)
    grid = np.linspace(-1.0, 1.0, 9)
    rows = spectra.bias_scan(p, grid, spectra.A2, 200)
    assert [r.epsilon for r in rows] == list(grid)
    exact = np.array([r.exact_gap for r in rows])
    app = np.array([r.approximant_gap for r in rows])
    assert np.allclose(app, np.hypot(1.0, grid), rtol=1e-12)
    assert grid[np.argmin(exact)] == 0.0
    assert abs(exact.min() - 1.0) < 0.1
    assert np.allclose(exact, exact[::-1], atol=1e-9)


def test_bias_scan_no_a2_gap_is_bias():
    p = ModelParams(1.0, 1.0, 0.0, 8.0)
    grid = [-0.5, 0.0, 0.25]
    assert [spectra.approximant_gap(spectra.GQR, replace(p, epsilon=e)) for e in grid] == pytest.approx([0.5, 0.0, 0.25])


def test_bias_scan_threads_match_serial():
    p = ModelParams(1.0, 1.0, 0.0, 2.0, coupling=LIN)
    grid = [-0.4, 0.0, 0.4]
    assert spectra.bias_scan(p, grid, spectra.A2, 80, threads=1) == spectra.bias_scan(p, grid, spectra.A2, 80, threads=3)


def test_threshold_example():
    p = ModelParams(1.0, 1.0, 0.0, 4.0, coupling=LIN)
    res = spectra.dressed_photon_threshold(p)
    assert res.n0_app == pytest.approx(16 / 65**1.5, rel=1e-12)
    assert res.lhs == pytest.approx(0.334350263, abs=1e-9)
    assert res.verdict == "<"
    assert res.c_g == 4.0


def test_threshold_vanishing_coupling_limit():
    p = ModelParams(1.0, 1.0, 0.0, 2.0, coupling=CouplingPolicy.custom([(0.0, 0.0), (10.0, 0.0)]))
    res = spectra.dressed_photon_threshold(p)
    assert res.n0_app == pytest.approx(4.0, rel=1e-14)
    assert res.verdict == ">"


def test_sweep_empty_grid():
    assert spectra.coupling_sweep(ModelParams(1.0, 1.0, coupling=LIN), []) == []


def test_sweep_a2_rows():
    p = ModelParams(1.0, 1.0, 0.0, 1.0, coupling=LIN)
    rows = spectra.coupling_sweep(p, [2.0, 4.0, 8.0, 16.0], spectra.A2, resolvent_n=0)
    assert [r.g for r in rows] == [2.0, 4.0, 8.0, 16.0]
    for r in rows:
        assert r.status == "ok", r.status
        assert r.N0_exact <= r.N0_app + 1e-8
        assert r.fluct_phi_sq <= (2 * r.N0_exact + 1) / r.omega_g + 1e-10
        assert abs(abs(r.parity_0) - 1) < 1e-8
        assert r.E0 <= r.E1 <= r.E2
    fp = [r.fidelity_plus for r in rows]
    assert all(b >= a for a, b in zip(fp, fp[1:]))


def test_sweep_qr_row_and_determinism():
    p = ModelParams(1.0, 1.0, 0.0, 0.0)
    a = spectra.coupling_sweep(p, [3.0], spectra.QR)
    b = spectra.coupling_sweep(p, [3.0], spectra.QR, threads=2)
    assert a == b
    r = a[0]
    assert r.status == "ok"
    assert math.isnan(r.omega_g) and math.isnan(r.resolvent_gap)
    assert r.N0_app == 9.0
    assert r.fidelity_plus > 0.99
    assert 0.95 <= r.N0_exact / 9.0 <= 1.05


def test_sweep_records_failures_in_status():
    p = ModelParams(1.0, 1.0, 0.0, 0.0, coupling=LIN)
    (row,) = spectra.coupling_sweep(p, [3.0], spectra.A2, Truncation(20, auto_grow=True, n_ceiling=20), resolvent_n=0)
    assert row.status != "ok"
    assert row.omega_g == pytest.approx(math.sqrt(1 + 36))


def test_sweep_columns_match_row():
    assert spectra.SWEEP_COLUMNS[0] == "g" and spectra.SWEEP_COLUMNS[-1] == "status"
    assert len(spectra.SweepRow(1.0, 0.0).values()) == len(spectra.SWEEP_COLUMNS)


def test_catness_table():
    p = ModelParams(1.0, 1.0, 0.0, 3.0)
    rows = spectra.catness_table(spectra.QR, p, Truncation(120), 4)
    assert [r.level for r in rows] == [0, 1, 2, 3]
    for r in rows:
        assert r.entropy == pytest.approx(math.log(2), abs=1e-3)
        assert r.fidelity > 0.49
    with pytest.raises(ValueError):
        spectra.catness_table(spectra.VAN_HOVE, p, 60)
