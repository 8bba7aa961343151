"""Adiabatic (displaced-oscillator) approximants and resolvent diagnostics.

Conventions
-----------
``polaron_unitary(G)`` is |up><up| (x) D(G) + |down><down| (x) D(-G).  It
removes the linear coupling of the sz-coupled model:

    U(G) (H_gqr + hbar g^2/omega) U(G)^dagger
        = hbar omega (a^dagger a + 1/2) - (hbar/2) eps sz
          - (hbar/2) omega_a (s+ D(G)^2 + s- D(-G)^2),   G = g / omega.

The bare-to-physical map of the no-A^2 model is U(g/omega_c) applied to
states, so that the cat approximants reduce to (|up> +/- |down>)|n>/sqrt(2).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import fock
from .exceptions import FamilyParamMismatch, SolveFailure
from .fock import (
    PROJ_DOWN,
    PROJ_UP,
    SIGMA_0,
    SIGMA_MINUS,
    SIGMA_PLUS,
    SIGMA_X,
    SIGMA_Z,
    LinearOperator,
    StateVector,
    as_truncation,
)
from .models import ModelParams, atom_hamiltonian, photon_hamiltonian
from .renormalization import renormalize, renormalized_frequency

GQR_NO_A2 = "gqr_no_a2"
A2_RENORMALIZED = "a2_renormalized"
ZERO = "zero"
NONZERO = "nonzero"
PLUS = "plus"
MINUS = "minus"

BOUND_SLACK = 1e-8


@dataclass(frozen=True)
class ApproximantFamily:
    model: str
    bias: str
    branch: str = PLUS
    n: int = 0

    def __post_init__(self):
        if self.model not in (GQR_NO_A2, A2_RENORMALIZED):
            raise ValueError(f"unknown approximant model {self.model!r}")
        if self.bias not in (ZERO, NONZERO):
            raise ValueError(f"bias must be 'zero' or 'nonzero', got {self.bias!r}")
        if self.branch not in (PLUS, MINUS):
            raise ValueError(f"branch must be 'plus' or 'minus', got {self.branch!r}")
        if int(self.n) != self.n or self.n < 0:
            raise ValueError("photon index n must be a non-negative integer")

    @classmethod
    def for_params(cls, model: str, p: ModelParams, branch: str = PLUS, n: int = 0) -> "ApproximantFamily":
        return cls(model, ZERO if p.epsilon == 0 else NONZERO, branch, n)


@dataclass(frozen=True)
class ApproximantState:
    state: StateVector
    energy: float
    family: ApproximantFamily
    normalization_c: float


def polaron_unitary(G: float, trunc) -> LinearOperator:
    """|up><up| (x) D(G) + |down><down| (x) D(-G); its adjoint is polaron_unitary(-G)."""
    d = fock.displacement(G, trunc)
    # the displacement may have grown the basis; build the partner on the same one
    d_minus = fock.displacement(-G, d.basis.n_max)
    m = np.kron(PROJ_UP, d.matrix) + np.kron(PROJ_DOWN, d_minus.matrix)
    return LinearOperator(m, fock.Basis(fock.SPIN_PHOTON, d.basis.n_max))


def bare_to_physical_unitary(p: ModelParams, trunc) -> LinearOperator:
    """U_GQR for the no-A^2 model; physical states are U_GQR^dagger |bare>."""
    return polaron_unitary(-p.g / p.omega_c, trunc)


def _coupling_frame(model: str, p: ModelParams) -> tuple[float, float]:
    """(omega, g) seen by the displaced oscillators of ``model``."""
    if model == GQR_NO_A2:
        return p.omega_c, p.g
    return renormalized_frequency(p.omega_c, p.g, p.c_g)


def _spin_vector(p: ModelParams, branch: str) -> tuple[np.ndarray, float]:
    """Spin coefficients c(-omega_a, eps -/+ s) and c for the biased A^2 family."""
    wa, eps = p.omega_a, p.epsilon
    s = math.hypot(wa, eps)
    if wa == 0:
        lower_up = eps > 0
        up = lower_up if branch == PLUS else not lower_up
        return (np.array([1.0, 0.0]) if up else np.array([0.0, 1.0])), 1.0
    if branch == PLUS:
        # eps - s without cancellation when eps > 0
        second = -wa * wa / (eps + s) if eps > 0 else eps - s
    else:
        second = wa * wa / (s - eps) if eps < 0 else eps + s
    v = np.array([-wa, second])
    c = 1.0 / np.linalg.norm(v)
    return c * v, c


def _check_family(family: ApproximantFamily, p: ModelParams) -> None:
    if (family.bias == ZERO) != (p.epsilon == 0):
        raise FamilyParamMismatch(f"bias={family.bias} but epsilon={p.epsilon}")


def _lower_is_up(p: ModelParams, branch: str) -> bool:
    """For the biased no-A^2 family: does ``branch`` sit on spin up?"""
    lower_up = p.epsilon > 0
    return lower_up if branch == PLUS else not lower_up


def approximant_energy(family: ApproximantFamily, p: ModelParams) -> float:
    """Adiabatic energy of ``family`` without building the state."""
    _check_family(family, p)
    omega, g = _coupling_frame(family.model, p)
    hb = p.hbar
    base = hb * omega * (family.n + 0.5) - hb * g * g / omega
    sign = -1.0 if family.branch == PLUS else 1.0
    if family.model == GQR_NO_A2:
        if family.bias == ZERO:
            return base
        return base + (-1.0 if _lower_is_up(p, family.branch) else 1.0) * hb * p.epsilon / 2
    return base + sign * hb * p.splitting / 2


def approximant(family: ApproximantFamily, p: ModelParams, trunc) -> ApproximantState:
    """Displaced-Fock approximant and its adiabatic energy.

    ``plus`` is always the lower-energy branch.  At zero bias ``plus`` is
    the symmetric cat (|up>D(-G)|n> + |down>D(G)|n>)/sqrt(2).
    """
    energy = approximant_energy(family, p)
    omega, g = _coupling_frame(family.model, p)
    G = g / omega
    d_minus = fock.displacement(-G, trunc)
    d_plus = fock.displacement(G, d_minus.basis.n_max)
    ket = fock.fock_state(family.n, d_minus.basis.n_max)
    up_part = d_minus @ ket  # photon state attached to spin up
    down_part = d_plus @ ket

    if family.bias == ZERO:
        sign = 1.0 if family.branch == PLUS else -1.0
        state = fock.spin_state(up_part, sign * down_part) * (1 / math.sqrt(2))
        return ApproximantState(state, energy, family, 1 / math.sqrt(2))

    if family.model == GQR_NO_A2:
        zero = 0.0 * up_part
        if _lower_is_up(p, family.branch):
            state = fock.spin_state(up_part, zero)
        else:
            state = fock.spin_state(zero, down_part)
        return ApproximantState(state, energy, family, 1.0)

    v, c = _spin_vector(p, family.branch)
    state = fock.spin_state(v[0] * up_part, v[1] * down_part)
    return ApproximantState(state, energy, family, c)


def normalization_inverse_square(p: ModelParams, branch: str) -> float:
    """1/c^2 = 2(omega_a^2 + eps^2 -/+ eps sqrt(omega_a^2 + eps^2))."""
    s = p.splitting
    sign = -1.0 if branch == PLUS else 1.0
    return 2.0 * (p.omega_a**2 + p.epsilon**2 + sign * p.epsilon * s)


def xi_operators(G: float, trunc) -> tuple[LinearOperator, LinearOperator]:
    """(Xi_0, Xi_1) with Xi_0 = s+ D(G)^2 + s- D(-G)^2 and Xi_0 + Xi_1 = sx."""
    d2 = fock.displacement(2.0 * G, trunc)  # D(G)^2 = D(2G) for a shared generator
    basis = fock.Basis(fock.SPIN_PHOTON, d2.basis.n_max)
    xi0 = np.kron(SIGMA_PLUS, d2.matrix) + np.kron(SIGMA_MINUS, d2.matrix.conj().T)
    xi1 = np.kron(SIGMA_X, np.eye(d2.dim)) - xi0
    return LinearOperator(xi0, basis, hermitian=True), LinearOperator(xi1, basis, hermitian=True)


def polaron_frame_hamiltonian(p: ModelParams, trunc, omega: float | None = None, g: float | None = None) -> LinearOperator:
    """Right-hand side of the polaron conjugation identity at (omega, g)."""
    t = as_truncation(trunc)
    omega = p.omega_c if omega is None else omega
    g = p.g if g is None else g
    xi0, _ = xi_operators(g / omega, t)
    t = t.with_n_max(xi0.basis.n_max)
    m = (
        np.kron(SIGMA_0, photon_hamiltonian(omega, t, p.hbar).matrix)
        - 0.5 * p.hbar * p.epsilon * np.kron(SIGMA_Z, np.eye(t.n_max + 1))
        - 0.5 * p.hbar * p.omega_a * xi0.matrix
    )
    return LinearOperator(m, xi0.basis, hermitian=True)


def effective_hamiltonians(
    p: ModelParams,
    trunc,
    *,
    counter_frequency: float | None = None,
    polaron_G: float | None = None,
) -> tuple[LinearOperator, LinearOperator]:
    """(H_tilde(g), H_tilde_0) with zero-point energies subtracted.

    H_tilde(g) = hbar (omega_g - Delta_g) a^dagger a - (hbar/2) eps sz - (hbar/2) omega_a Xi_0
    H_tilde_0  = atom term + hbar omega_c a^dagger a

    ``counter_frequency`` and ``polaron_G`` override omega_g - Delta_g and
    g_tilde / omega_g, which is how the limiting cases are probed.
    """
    t = as_truncation(trunc)
    if counter_frequency is None or polaron_G is None:
        rp = renormalize(p)
        counter_frequency = rp.counter_frequency if counter_frequency is None else counter_frequency
        polaron_G = rp.polaron_G if polaron_G is None else polaron_G
    xi0, _ = xi_operators(polaron_G, t)
    t = t.with_n_max(xi0.basis.n_max)
    eye = np.eye(t.n_max + 1)
    h = (
        np.kron(SIGMA_0, photon_hamiltonian(counter_frequency, t, p.hbar, zero_point=False).matrix)
        - 0.5 * p.hbar * p.epsilon * np.kron(SIGMA_Z, eye)
        - 0.5 * p.hbar * p.omega_a * xi0.matrix
    )
    h0 = atom_hamiltonian(p, t).matrix + np.kron(
        SIGMA_0, photon_hamiltonian(p.omega_c, t, p.hbar, zero_point=False).matrix
    )
    basis = fock.spin_photon_basis(t)
    return LinearOperator(h, basis, hermitian=True), LinearOperator(h0, basis, hermitian=True)


def shifted_resolvent(h: LinearOperator, hbar: float) -> np.ndarray:
    """(H - i hbar)^{-1} as a dense matrix."""
    a = h.matrix - 1j * hbar * np.eye(h.dim)
    try:
        r = np.linalg.solve(a, np.eye(h.dim, dtype=complex))
    except np.linalg.LinAlgError as exc:
        raise SolveFailure(str(exc)) from exc
    if not np.all(np.isfinite(r)):
        raise SolveFailure("non-finite entries in shifted resolvent")
    return r


def _norm(m: np.ndarray) -> float:
    return float(np.linalg.norm(m, 2))


def resolvent_gap(p: ModelParams, trunc, **overrides) -> float:
    """Operator norm of (H_tilde(g) - i hbar)^{-1} - (H_tilde_0 - i hbar)^{-1}."""
    h, h0 = effective_hamiltonians(p, trunc, **overrides)
    return _norm(shifted_resolvent(h, p.hbar) - shifted_resolvent(h0, p.hbar))


@dataclass(frozen=True)
class DiagnosticRow:
    name: str
    value: float
    bound: float
    ok: bool


def resolvent_pieces(p: ModelParams, trunc) -> dict[str, np.ndarray]:
    """R and its six-term expansion I_1..I_6 (dense matrices)."""
    t = as_truncation(trunc)
    rp = renormalize(p)
    h, h0 = effective_hamiltonians(p, t)
    t = t.with_n_max(h.basis.n_max)
    _, xi1 = xi_operators(rp.polaron_G, t)
    hb = p.hbar
    r0 = shifted_resolvent(h0, hb)
    rg = shifted_resolvent(h, hb)
    dh = np.kron(SIGMA_0, photon_hamiltonian(p.omega_c - rp.counter_frequency, t, hb, zero_point=False).matrix)
    x1 = xi1.matrix
    k = -0.5 * hb * p.omega_a
    dh_r0 = dh @ r0
    x1_r0 = x1 @ r0
    return {
        "R": rg - r0,
        "R0": r0,
        "Rg": rg,
        "dH": dh,
        "Xi1": x1,
        "H0": h0.matrix,
        "I1": r0 @ dh_r0,
        "I2": k * (r0 @ x1_r0),
        "I3": rg @ dh_r0 @ dh_r0,
        "I4": k * (rg @ dh_r0 @ x1_r0),
        "I5": k * (rg @ x1_r0 @ dh_r0),
        "I6": k * k * (rg @ x1_r0 @ x1_r0),
    }


def proof_diagnostics(p: ModelParams, trunc) -> list[DiagnosticRow]:
    """Numerical norms of every resolvent estimate next to its analytic bound."""
    rp = renormalize(p)
    hb = p.hbar
    s = p.splitting
    d = rp.small_delta_g
    pieces = resolvent_pieces(p, trunc)
    r0 = pieces["R0"]
    kfac = _norm(r0 @ pieces["Xi1"] @ r0)
    lead = 1.0 + 0.5 * s
    bounds = {
        "I1": d / hb * lead,
        "I2": hb * p.omega_a / 2 * kfac,
        "I3": d * d / hb * lead**2,
        "I4": p.omega_a * d / hb * lead,
        "I5": p.omega_a * d / hb * lead,
        "I6": hb * p.omega_a**2 / 2 * kfac,
    }
    rows = []

    def add(name, value, bound, slack):
        rows.append(DiagnosticRow(name, value, bound, bool(value <= bound + slack)))

    add("resolvent_free", _norm(r0), 1.0 / hb, 1e-10)
    add("free_times_resolvent", _norm(pieces["H0"] @ r0), 1.0, 1e-10)
    add("counter_term", _norm(pieces["dH"] @ r0), d * lead, BOUND_SLACK)
    add("frequency_counter", abs(p.omega_c - rp.counter_frequency), d * p.omega_c, 1e-12)
    add("xi1_norm", _norm(pieces["Xi1"]), 2.0, BOUND_SLACK)
    norms = {}
    for j in range(1, 7):
        key = f"I{j}"
        norms[key] = _norm(pieces[key])
        add(key, norms[key], bounds[key], BOUND_SLACK)
    total = sum(pieces[f"I{j}"] for j in range(1, 7))
    add("decomposition_residual", float(np.abs(pieces["R"] - total).max()), 0.0, 1e-10)
    add("gap_vs_sum", _norm(pieces["R"]), sum(norms.values()), BOUND_SLACK)
    return rows
