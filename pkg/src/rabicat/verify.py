"""End-to-end invariant suite behind ``rabicat verify``.

Each check runs at a desk-scale parameter point where the truncation is
known to support the identity being tested, and returns (value, limit).
A check passes when value <= limit.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, replace
from typing import Callable

import numpy as np

from . import adiabatic as ad
from . import fock, models, spectra
from . import renormalization as rn
from .models import CouplingPolicy, ModelParams

QR_PARAMS = ModelParams(omega_c=1.0, omega_a=1.0, epsilon=0.0, g=3.0)
A2_PARAMS = ModelParams(omega_c=1.0, omega_a=1.0, epsilon=0.3, g=4.0, coupling=CouplingPolicy.linear(1.0))
G_GRID = (2.0, 4.0, 8.0, 16.0)


@dataclass(frozen=True)
class CheckResult:
    module: str
    name: str
    value: float
    limit: float
    seconds: float

    @property
    def passed(self) -> bool:
        return bool(self.value <= self.limit)


CHECKS: list[tuple[str, str, Callable[[], tuple[float, float]]]] = []


def check(module: str, name: str):
    def deco(fn):
        CHECKS.append((module, name, fn))
        return fn

    return deco


def _maxabs(a) -> float:
    return float(np.abs(np.asarray(a)).max(initial=0.0))


# ---------------------------------------------------------------- fock


@check("fock", "number spectrum is 0..N")
def _():
    n = 37
    return _maxabs(np.sort(fock.number(n).eigvalsh()) - np.arange(n + 1)), 0.0


@check("fock", "truncated CCR: identity except (N,N) = -N")
def _():
    a = fock.annihilation(10)
    c = a.commutator(a.dag()).matrix
    expect = np.eye(11)
    expect[10, 10] = -10
    return _maxabs(c - expect), 1e-14


@check("fock", "displacement unitarity on 80% block")
def _():
    return fock.unitarity_residual(fock.displacement(2.0, 60)), 1e-8


@check("fock", "displacement composition D(b1)D(b2) = D(b1+b2)")
def _():
    n = 80
    d = fock.displacement(1.1, n) @ fock.displacement(0.7, n)
    return _maxabs(d.block() - fock.displacement(1.8, n).block()), 1e-8


@check("fock", "coherent-state amplitudes of D(1.2)|0>")
def _():
    beta = 1.2
    col = fock.displacement(beta, 60).matrix[:6, 0]
    ref = [math.exp(-beta * beta / 2) * beta**k / math.sqrt(math.factorial(k)) for k in range(6)]
    return _maxabs(col - ref), 1e-12


@check("fock", "squeeze unitarity and S a S^dagger on the supported block")
def _():
    n, r = 120, 0.5
    s = fock.squeeze(r, n)
    a = fock.annihilation(n)
    lhs = (s @ a @ s.dag()).block(24)
    rhs = (math.cosh(r) * a + math.sinh(r) * a.dag()).block(24)
    return max(_maxabs(lhs - rhs), fock.unitarity_residual(s)), 1e-8


@check("fock", "squeezed vacuum photon number sinh^2 r")
def _():
    r = 0.8
    v = fock.squeeze(r, 120) @ fock.fock_state(0, 120)
    return abs(spectra.photon_number_expectation(v) - math.sinh(r) ** 2), 1e-10


@check("fock", "matrix-valued CCR for sz (x) a")
def _():
    n = 30
    alpha = fock.tensor(fock.SIGMA_Z, fock.annihilation(n))
    c = alpha.commutator(alpha.dag())
    return _maxabs(c.block(n) - np.eye(2 * n)), 1e-14


@check("fock", "dump/load round trip is exact")
def _():
    op = models.build_gqr(replace(QR_PARAMS, epsilon=0.2), 6)
    st = fock.product_state(fock.SPIN_UP, fock.displacement(0.5, 6) @ fock.fock_state(1, 6))
    back_op, back_st = fock.loads(fock.dumps(op)), fock.loads(fock.dumps(st))
    return max(_maxabs(back_op.matrix - op.matrix), _maxabs(back_st.amplitudes - st.amplitudes)), 0.0


# ---------------------------------------------------------------- models


@check("models", "free spectrum +/- sqrt(1.25)/2 + (n + 1/2)")
def _():
    p = ModelParams(1.0, 1.0, 0.5, 0.0)
    w = models.build_gqr(p, 60).eigvalsh()[:10]
    s = math.sqrt(1.25) / 2
    ref = np.sort([n + 0.5 + sign * s for n in range(10) for sign in (-1, 1)])[:10]
    return _maxabs(w - ref), 1e-9


@check("models", "U_xz maps the sx-coupled form onto the sz-coupled form")
def _():
    p = ModelParams(1.0, 0.7, 0.4, 1.3)
    u = models.u_xz(40)
    lhs = u @ models.build_gqr_sigma_x(p, 40) @ u.dag()
    return _maxabs(lhs.matrix - models.build_gqr(p, 40).matrix), 1e-12


@check("models", "sx and sz forms share the spectrum")
def _():
    p = ModelParams(1.0, 0.8, -0.3, 1.7)
    return _maxabs(models.build_gqr_sigma_x(p, 50).eigvalsh() - models.build_gqr(p, 50).eigvalsh()), 1e-10


@check("models", "spectrum invariant under g -> -g")
def _():
    p = ModelParams(1.0, 1.0, 0.4, 1.2)
    w1 = models.build_gqr(p, 60).eigvalsh()
    w2 = models.build_gqr(p, 60, g=-1.2).eigvalsh()
    return _maxabs(w1 - w2), 1e-10


@check("models", "parity commutes with both unbiased forms")
def _():
    worst = 0.0
    for g in (0.0, 1.0, 3.0):
        p = replace(QR_PARAMS, g=g)
        h = models.build_gqr(p, 60)
        worst = max(worst, _maxabs(h.commutator(models.parity_operator(60)).matrix))
        hx = models.build_gqr_sigma_x(p, 60)
        worst = max(worst, _maxabs(hx.commutator(models.sigma_z_parity(60)).matrix))
    return worst, 1e-12


@check("models", "every builder is hermitian")
def _():
    p = replace(A2_PARAMS, epsilon=-0.6)
    ops = [
        models.build_gqr(p, 40),
        models.build_gqr_sigma_x(p, 40),
        models.build_a2(p, 40),
        models.build_van_hove("+", p, 40),
        models.build_van_hove("-", p, 40),
        models.parity_operator(40),
    ]
    return max(o.hermiticity_residual() / max(1.0, _maxabs(o.matrix)) for o in ops), 1e-12


@check("models", "van Hove spectrum hbar omega_c (n + 1/2) - hbar g^2 / omega_c")
def _():
    p = ModelParams(1.0, 1.0, 0.0, 1.5)
    worst = 0.0
    for sign in ("+", "-"):
        w = models.build_van_hove(sign, p, 80).eigvalsh()[:8]
        worst = max(worst, _maxabs(w - (np.arange(8) + 0.5 - 2.25)))
    return worst, 1e-6


@check("models", "A^2 ground energy converged between N=160 and N=200")
def _():
    p = ModelParams(1.0, 1.0, 0.0, 2.0, coupling=CouplingPolicy.custom([(0.0, 2.0), (10.0, 2.0)]))
    return abs(models.build_a2(p, 160).eigvalsh()[0] - models.build_a2(p, 200).eigvalsh()[0]), 1e-8


# ---------------------------------------------------------------- renormalization


@check("renormalization", "closed-form parameters at g=4, C_g=4")
def _():
    rp = rn.renormalize(A2_PARAMS)
    errs = [
        rp.omega_g - math.sqrt(65),
        rp.g_tilde - 4 * 65**-0.25,
        rp.delta_g - 7.0,
        rp.self_energy - 16 / 65,
    ]
    return _maxabs(errs), 1e-12


@check("renormalization", "|omega_c - (omega_g - Delta_g)| <= delta_g omega_c and delta_g decreasing")
def _():
    prev, worst = math.inf, -math.inf
    for g in (4.0, 6.0, 8.0, 12.0, 16.0, 32.0):
        rp = rn.renormalize(replace(A2_PARAMS, g=g))
        worst = max(worst, abs(1.0 - rp.counter_frequency) - rp.small_delta_g)
        if not rp.small_delta_g < prev:
            return 1.0, 0.0
        prev = rp.small_delta_g
    return worst, 0.0


@check("renormalization", "polaron_G decreasing, self-energy rising toward hbar/(4 C_inf)")
def _():
    rps = [rn.renormalize(replace(A2_PARAMS, g=g)) for g in (4.0, 8.0, 16.0, 32.0)]
    G = [r.polaron_G for r in rps]
    se = [r.self_energy for r in rps]
    ok = all(b < a for a, b in zip(G, G[1:])) and all(b > a for a, b in zip(se, se[1:])) and se[-1] < 0.25
    return (0.0 if ok else 1.0), 0.0


@check("renormalization", "linear policy growth assumptions on the grid")
def _():
    flags = rn.linear_policy_assumptions(A2_PARAMS, (1, 2, 4, 8, 16, 32, 64))
    return float(sum(not v for v in flags.values())), 0.0


@check("renormalization", "U_HB^dagger H_A2 U_HB = H_gqr(omega_g, g_tilde) on 20 levels, N=400")
def _():
    n = 400
    u = rn.hopfield_bogoliubov(A2_PARAMS, n)
    rp = rn.renormalize(A2_PARAMS)
    lhs = (u.dag() @ models.build_a2(A2_PARAMS, n) @ u).block(20)
    rhs = models.build_gqr(A2_PARAMS, n, rp.omega_g, rp.g_tilde).block(20)
    return _maxabs(lhs - rhs) / _maxabs(rhs), 1e-6


@check("renormalization", "lowest 10 levels of H_A2 and H_gqr(omega_g, g_tilde) agree, shrinking with N")
def _():
    rp = rn.renormalize(A2_PARAMS)
    diffs = []
    for n in (160, 240):
        w1 = models.build_a2(A2_PARAMS, n).eigvalsh()[:10]
        w2 = models.build_gqr(A2_PARAMS, n, rp.omega_g, rp.g_tilde).eigvalsh()[:10]
        diffs.append(_maxabs(w1 - w2))
    return (diffs[1] if diffs[1] <= diffs[0] else 1.0), 1e-8


@check("renormalization", "van Hove physical states are Fock states")
def _():
    p = ModelParams(1.0, 1.0, 0.0, 1.5)
    worst = 0.0
    for sign in ("+", "-"):
        dec = spectra.diagonalize(models.build_van_hove(sign, p, 80), 3)
        u = rn.van_hove_unitary(sign, p, 80)
        for k in range(3):
            phys = u.dag() @ dec.eigenvectors[k]
            worst = max(worst, 1 - spectra.fidelity(phys, fock.fock_state(k, 80)))
    return worst, 1e-8


# ---------------------------------------------------------------- adiabatic


@check("adiabatic", "polaron conjugation identity, bare and renormalized parameters")
def _():
    n = 120
    worst = 0.0
    p = ModelParams(1.0, 1.0, 0.3, 1.0)
    rp = rn.renormalize(A2_PARAMS)
    for omega, g in ((1.0, 1.0), (rp.omega_g, rp.g_tilde)):
        u = ad.polaron_unitary(g / omega, n)
        h = models.build_gqr(p, n, omega, g) + p.hbar * g * g / omega
        rhs = ad.polaron_frame_hamiltonian(p, n, omega, g)
        worst = max(worst, _maxabs((u @ h @ u.dag()).block(n // 2) - rhs.block(n // 2)))
    return worst, 1e-8


@check("adiabatic", "U(G)^dagger = U(-G)")
def _():
    return _maxabs(ad.polaron_unitary(0.8, 60).dag().matrix - ad.polaron_unitary(-0.8, 60).matrix), 1e-14


@check("adiabatic", "Xi_0 + Xi_1 = sx and ||Xi_1|| <= 2")
def _():
    worst = 0.0
    for G in (0.05, 0.2, 0.7):
        xi0, xi1 = ad.xi_operators(G, 80)
        sx = fock.spin_only(fock.SIGMA_X, 80)
        worst = max(worst, _maxabs((xi0 + xi1 - sx).matrix), xi1.op_norm() - 2.0)
    return worst, 1e-12


@check("adiabatic", "biased A^2 approximants: orthogonal, normalized, 1/c^2 formula")
def _():
    p = replace(A2_PARAMS, epsilon=0.5)
    fams = [ad.ApproximantFamily(ad.A2_RENORMALIZED, ad.NONZERO, b, 1) for b in (ad.PLUS, ad.MINUS)]
    s = [ad.approximant(f, p, 80) for f in fams]
    errs = [abs(s[0].state.inner(s[1].state)), abs(s[0].state.norm() - 1), abs(s[1].state.norm() - 1)]
    for st in s:
        errs.append(abs(st.normalization_c**-2 - ad.normalization_inverse_square(p, st.family.branch)))
    errs.append(abs(ad.normalization_inverse_square(p, ad.PLUS) - 2 * (1.25 - 0.5 * math.sqrt(1.25))))
    return max(errs), 1e-10


@check("adiabatic", "U_GQR^dagger maps approximants to (|up> +/- |down>)|n> / sqrt 2 and |up>|n>")
def _():
    n = 80
    p = ModelParams(1.0, 1.0, 0.0, 2.0)
    u = ad.bare_to_physical_unitary(p, n)
    worst = 0.0
    for k in (0, 2):
        for branch, sign in ((ad.PLUS, 1), (ad.MINUS, -1)):
            a = ad.approximant(ad.ApproximantFamily(ad.GQR_NO_A2, ad.ZERO, branch, k), p, n)
            target = fock.product_state(np.array([1, sign]) / math.sqrt(2), fock.fock_state(k, n))
            worst = max(worst, 1 - spectra.fidelity(u.dag() @ a.state, target))
    pb = replace(p, epsilon=0.4)
    a = ad.approximant(ad.ApproximantFamily(ad.GQR_NO_A2, ad.NONZERO, ad.PLUS, 1), pb, n)
    worst = max(worst, 1 - spectra.fidelity(u.dag() @ a.state, fock.product_state(fock.SPIN_UP, fock.fock_state(1, n))))
    return worst, 1e-10


@check("adiabatic", "approximant residual relative to gap falls along the g grid")
def _():
    rel = []
    for g in G_GRID:
        p = replace(A2_PARAMS, g=g)
        rp = rn.renormalize(p)
        h = models.build_gqr(p, 120, rp.omega_g, rp.g_tilde)
        a = ad.approximant(ad.ApproximantFamily(ad.A2_RENORMALIZED, ad.NONZERO, ad.PLUS, 0), p, 120)
        r = h @ a.state - a.energy * a.state
        w = h.eigvalsh()
        rel.append(r.norm() / (w[1] - w[0]))
    ok = all(b < a for a, b in zip(rel, rel[1:]))
    return (rel[-1] if ok else math.inf), 1.0


@check("adiabatic", "resolvent estimates and bounds at g=4, N=160")
def _():
    rows = ad.proof_diagnostics(A2_PARAMS, 160)
    return float(sum(not r.ok for r in rows)), 0.0


@check("adiabatic", "resolvent gap strictly decreasing on the g grid, N=160")
def _():
    gaps = [ad.resolvent_gap(replace(A2_PARAMS, g=g), 160) for g in G_GRID]
    return (0.0 if all(b < a for a, b in zip(gaps, gaps[1:])) else 1.0), 0.0


@check("adiabatic", "limit G=0, omega_g - Delta_g = omega_c gives zero resolvent gap")
def _():
    return ad.resolvent_gap(A2_PARAMS, 60, counter_frequency=1.0, polaron_G=0.0), 1e-14


# ---------------------------------------------------------------- spectra


def _qr_decomposition():
    return spectra.diagonalize(models.build_gqr(QR_PARAMS, 260), 40, 260)


@check("spectra", "eigen-residuals of converged levels <= 1e-9")
def _():
    dec = _qr_decomposition()
    return float(np.max(dec.residuals[dec.converged], initial=0.0)), spectra.RESIDUAL_TOL


@check("spectra", "converged unbiased eigenstates carry parity +/- 1")
def _():
    dec = _qr_decomposition()
    par = models.parity_operator(260)
    devs = [abs(abs(spectra.parity_expectation(v, par)) - 1) for v, ok in zip(dec.eigenvectors, dec.converged) if ok]
    return max(devs), 1e-8


@check("spectra", "cat pair subspace fidelity >= 0.99 and N0 ~ g^2 at g=3")
def _():
    dec = _qr_decomposition()
    a = ad.approximant(ad.ApproximantFamily(ad.GQR_NO_A2, ad.ZERO, ad.PLUS, 0), QR_PARAMS, 260)
    f = spectra.subspace_fidelity(a.state, dec.eigenvectors[:2])
    ratio = spectra.photon_number_expectation(dec.eigenvectors[0]) / 9.0
    return max(0.99 - f, abs(ratio - 1) - 0.05), 0.0


@check("spectra", "(Delta Phi)^2 <= (2 N0 + 1) / omega_c for the ground state")
def _():
    v = _qr_decomposition().eigenvectors[0]
    n0 = spectra.photon_number_expectation(v)
    return spectra.field_fluctuation(v, 1.0) - (2 * n0 + 1), 0.0


@check("spectra", "closed-form N0_app equals the approximant expectation")
def _():
    worst = 0.0
    for g in G_GRID:
        p = replace(A2_PARAMS, g=g)
        a = ad.approximant(ad.ApproximantFamily(ad.A2_RENORMALIZED, ad.NONZERO, ad.PLUS, 0), p, 80)
        worst = max(worst, abs(spectra.photon_number_expectation(a.state) - spectra.dressed_photon_threshold(p).n0_app))
    return worst, 1e-8


@check("spectra", "approximant (Delta Phi_ren)^2 decreases along the g grid")
def _():
    vals = []
    for g in G_GRID:
        p = replace(A2_PARAMS, g=g)
        omega_g, _ = rn.renormalized_frequency(p.omega_c, p.g, p.c_g)
        a = ad.approximant(ad.ApproximantFamily(ad.A2_RENORMALIZED, ad.NONZERO, ad.PLUS, 0), p, 80)
        vals.append(spectra.field_fluctuation(a.state, omega_g))
    return (0.0 if all(b < a for a, b in zip(vals, vals[1:])) else 1.0), 0.0


@check("spectra", "sweep rows: N0_ren <= N0_app, fidelity_plus nondecreasing, N0_app -> 0")
def _():
    rows = spectra.coupling_sweep(A2_PARAMS, G_GRID, spectra.A2, resolvent_n=None)
    bad = sum(r.status != "ok" for r in rows)
    bad += sum(not r.N0_exact <= r.N0_app for r in rows)
    bad += sum(not r.N0_exact <= r.g_tilde**2 / A2_PARAMS.omega_a**2 for r in rows)
    f = [r.fidelity_plus for r in rows]
    bad += sum(not b >= a for a, b in zip(f, f[1:]))
    n0 = [r.N0_app for r in rows]
    bad += sum(not b < a for a, b in zip(n0, n0[1:]))
    return float(bad), 0.0


@check("spectra", "threshold verdict agrees with the C_g comparison")
def _():
    bad = 0
    for g in (0.5, 1.0, 4.0, 50.0, 1e4, 1e6):
        for C in (1e-6, 1e-3, 1.0):
            t = spectra.dressed_photon_threshold(ModelParams(1.0, 1.0, 0.0, g, coupling=CouplingPolicy.linear(C)))
            alt = ">" if t.lhs > t.c_g else "<"
            bad += t.verdict != alt
    return float(bad), 0.0


@check("spectra", "bias scan: approximant gaps |eps| and sqrt(omega_a^2 + eps^2)")
def _():
    grid = np.linspace(-1, 1, 11)
    p = replace(A2_PARAMS, g=8.0)
    a2 = [spectra.approximant_gap(spectra.A2, replace(p, epsilon=e)) for e in grid]
    no = [spectra.approximant_gap(spectra.GQR, replace(p, epsilon=e)) for e in grid]
    return max(_maxabs(np.array(a2) - np.hypot(1.0, grid)), _maxabs(np.array(no) - np.abs(grid))), 1e-12


@check("spectra", "entropy of the separated cat with beta=3 is ln 2")
def _():
    n = 80
    cat = fock.spin_state(fock.displacement(-3.0, n) @ fock.fock_state(0, n), fock.displacement(3.0, n) @ fock.fock_state(0, n))
    return abs(spectra.entanglement_entropy(cat * (1 / math.sqrt(2))) - math.log(2)), 1e-6


# ---------------------------------------------------------------- harness


@check("cli", "sweep CSV is byte-identical across runs")
def _():
    from .cli import sweep_csv

    grid = (2.0, 4.0)
    a = sweep_csv(spectra.coupling_sweep(A2_PARAMS, grid, spectra.A2, resolvent_n=None))
    b = sweep_csv(spectra.coupling_sweep(A2_PARAMS, grid, spectra.A2, resolvent_n=None, threads=2))
    return (0.0 if a == b else 1.0), 0.0


def run_checks(log=print) -> list[CheckResult]:
    results = []
    for module, name, fn in CHECKS:
        t0 = time.perf_counter()
        try:
            value, limit = fn()
        except Exception as exc:  # a crashing check is a failing check
            log(f"ERROR {module}: {name}: {type(exc).__name__}: {exc}")
            value, limit = math.inf, 0.0
        res = CheckResult(module, name, float(value), float(limit), time.perf_counter() - t0)
        results.append(res)
        tag = "PASS" if res.passed else "FAIL"
        log(f"{tag} {module}: {name} ({res.value:.3e} <= {res.limit:.1e}, {res.seconds:.1f}s)")
    passed = sum(r.passed for r in results)
    log(f"invariants: {passed}/{len(results)}")
    return results
