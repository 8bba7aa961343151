"""Exact diagonalization, observables and parameter scans."""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, fields, replace
from typing import Callable, Iterable, Sequence

import numpy as np
from scipy.linalg import orth

from . import adiabatic as ad
from . import fock, models
from .exceptions import (
    BasisMismatch,
    NotHermitian,
    PolicyMissing,
    RabicatError,
    TruncationCeiling,
)
from .fock import HERMITIAN_RTOL, LinearOperator, StateVector, Truncation, as_truncation
from .models import ModelParams
from .renormalization import hopfield_bogoliubov, renormalize, renormalized_frequency, squeeze_parameter

RESIDUAL_TOL = 1e-9
DEGENERACY_RTOL = 1e-9

QR, GQR, A2, VAN_HOVE = "qr", "gqr", "a2", "van_hove"
MODELS = (QR, GQR, A2, VAN_HOVE)


@dataclass(frozen=True)
class SpectralDecomposition:
    eigenvalues: np.ndarray
    eigenvectors: list[StateVector]
    trunc_used: Truncation
    converged: np.ndarray
    tail_mass: np.ndarray
    residuals: np.ndarray

    @property
    def all_converged(self) -> bool:
        return bool(np.all(self.converged))

    def __len__(self) -> int:
        return len(self.eigenvalues)


def _check_hermitian(h: LinearOperator) -> None:
    scale = max(1.0, float(np.abs(h.matrix).max(initial=0.0)))
    res = h.hermiticity_residual()
    if res > HERMITIAN_RTOL * scale:
        raise NotHermitian(f"hermiticity residual {res:.3e}")


def _rotate_clusters(w: np.ndarray, v: np.ndarray, sym: np.ndarray) -> np.ndarray:
    """Diagonalize ``sym`` inside every cluster of (near) degenerate eigenvalues."""
    v = v.copy()
    start = 0
    k = len(w)
    while start < k:
        stop = start + 1
        while stop < k and w[stop] - w[stop - 1] <= DEGENERACY_RTOL * max(1.0, abs(w[stop])):
            stop += 1
        if stop - start > 1:
            block = v[:, start:stop]
            s = block.conj().T @ sym @ block
            _, rot = np.linalg.eigh(0.5 * (s + s.conj().T))
            v[:, start:stop] = block @ rot
        start = stop
    return v


def _decompose(h: LinearOperator, k: int, t: Truncation, symmetry: LinearOperator | None) -> SpectralDecomposition:
    _check_hermitian(h)
    m = 0.5 * (h.matrix + h.matrix.conj().T)
    w, v = np.linalg.eigh(m)
    k = min(k, len(w))
    w, v = w[:k], v[:, :k]
    if symmetry is not None:
        if symmetry.basis != h.basis:
            raise BasisMismatch("symmetry operator must share the Hamiltonian basis")
        v = _rotate_clusters(w, v, symmetry.matrix)
    tails = np.array([t.tail_mass(v[:, j]) for j in range(k)])
    hv = h.matrix @ v
    residuals = np.linalg.norm(hv - v * w, axis=0) / np.maximum(1.0, np.abs(w))
    converged = (tails <= t.tail_tol) & (residuals <= RESIDUAL_TOL)
    vectors = [StateVector(v[:, j], h.basis) for j in range(k)]
    return SpectralDecomposition(w, vectors, t, converged, tails, residuals)


def diagonalize(
    h: LinearOperator | Callable[[Truncation], LinearOperator],
    k: int,
    trunc=None,
    symmetry: LinearOperator | Callable[[Truncation], LinearOperator] | None = None,
) -> SpectralDecomposition:
    """Lowest ``k`` eigenpairs of a hermitian operator.

    Pass a builder ``trunc -> LinearOperator`` to let an ``auto_grow``
    truncation rebuild the operator at larger cutoffs until every requested
    level carries at most ``tail_tol`` on the top 10% of Fock levels.
    """
    if isinstance(h, LinearOperator):
        t = as_truncation(trunc) if trunc is not None else Truncation(h.basis.n_max)
        if t.n_max != h.basis.n_max:
            raise BasisMismatch(f"truncation n_max={t.n_max} but operator is {h.basis.tag}")
        sym = symmetry(t) if callable(symmetry) else symmetry
        return _decompose(h, k, t, sym)

    t = as_truncation(trunc)
    while True:
        op = h(t)
        t_used = t.with_n_max(op.basis.n_max) if op.basis.n_max != t.n_max else t
        sym = symmetry(t_used) if callable(symmetry) else symmetry
        dec = _decompose(op, k, t_used, sym)
        if dec.all_converged or not t.auto_grow:
            return dec
        if t_used.n_max >= t.n_ceiling:
            raise TruncationCeiling(
                f"levels {np.flatnonzero(~dec.converged).tolist()} unconverged at n_ceiling={t.n_ceiling}"
            )
        t = t_used.grown()


# --------------------------------------------------------------------------
# observables


def _photon_weights(state: StateVector) -> np.ndarray:
    return state.photon_distribution()


def photon_number_expectation(state: StateVector) -> float:
    """<a^dagger a>."""
    p = _photon_weights(state)
    return float(np.dot(np.arange(p.size), p))


def _photon_op(state: StateVector, photon_matrix: np.ndarray) -> np.ndarray:
    if state.basis.kind == fock.PHOTON:
        return photon_matrix
    return np.kron(fock.SIGMA_0, photon_matrix)


def field_fluctuation(state: StateVector, omega: float) -> float:
    """(Delta Phi)^2 with Phi = (a + a^dagger) / sqrt(2 omega)."""
    n = state.basis.n_max
    x = _photon_op(state, fock.quadrature(n).matrix)
    x2 = _photon_op(state, fock.quadrature_squared(n).matrix)
    v = state.amplitudes
    mean = np.vdot(v, x @ v).real
    second = np.vdot(v, x2 @ v).real
    return float(max(0.0, (second - mean * mean) / (2.0 * omega)))


def fidelity(a: StateVector, b: StateVector) -> float:
    """|<a|b>|^2 for normalized states, clipped to [0, 1]."""
    return float(min(1.0, max(0.0, abs(a.inner(b)) ** 2)))


def subspace_fidelity(a: StateVector, span: Sequence[StateVector]) -> float:
    """Squared norm of the projection of ``a`` onto span(``span``)."""
    if not span:
        return 0.0
    for s in span:
        if s.basis != a.basis:
            raise BasisMismatch(f"{a.basis.tag} vs {s.basis.tag}")
    q = orth(np.column_stack([s.amplitudes for s in span]))
    return float(min(1.0, max(0.0, np.linalg.norm(q.conj().T @ a.amplitudes) ** 2)))


def reduced_spin_density(state: StateVector) -> np.ndarray:
    c = state.spin_components()
    return c @ c.conj().T


def entanglement_entropy(state: StateVector) -> float:
    """Von Neumann entropy (nats) of the reduced spin density matrix."""
    if state.basis.kind != fock.SPIN_PHOTON:
        raise BasisMismatch("entanglement entropy needs a spin_photon state")
    p = np.clip(np.linalg.eigvalsh(reduced_spin_density(state)), 0.0, 1.0)
    p = p[p > 0]
    return float(min(math.log(2.0), max(0.0, -np.sum(p * np.log(p)))))


def parity_expectation(state: StateVector, parity: LinearOperator | None = None) -> float:
    if parity is None:
        parity = models.parity_operator(state.basis.n_max)
    return float(state.expectation(parity).real)


# --------------------------------------------------------------------------
# model plumbing shared by scans and the CLI


def hamiltonian_builder(model: str, p: ModelParams) -> Callable[[Truncation], LinearOperator]:
    if model in (QR, GQR):
        return lambda t: models.build_gqr(p, t)
    if model == A2:
        if not p.coupling.present:
            raise PolicyMissing("model a2 needs a coupling policy")
        return lambda t: models.build_a2(p, t)
    if model == VAN_HOVE:
        return lambda t: models.build_van_hove("+", p, t)
    raise ValueError(f"unknown model {model!r}")


def starting_cutoff(model: str, p: ModelParams) -> int:
    """max(64, ceil(8 beta^2) + ceil(8 e^{2r})) for the largest displacement beta and squeeze r."""
    if model == A2:
        omega_g, g_tilde = renormalized_frequency(p.omega_c, p.g, p.c_g)
        beta, r = g_tilde / omega_g, squeeze_parameter(p)
    else:
        beta, r = p.g / p.omega_c, 0.0
    return max(64, math.ceil(8 * beta * beta) + math.ceil(8 * math.exp(2 * abs(r))))


def auto_truncation(model: str, p: ModelParams, tail_tol: float = 1e-8, n_ceiling: int = 512) -> Truncation:
    n0 = min(starting_cutoff(model, p), n_ceiling)
    return Truncation(n0, tail_tol, auto_grow=True, n_ceiling=max(n0, n_ceiling))


def resolve_truncation(model: str, p: ModelParams, trunc) -> Truncation:
    """Fixed truncations pass through; auto truncations restart from the model's starting cutoff."""
    t = as_truncation(trunc)
    if t.auto_grow:
        return auto_truncation(model, p, t.tail_tol, t.n_ceiling)
    return t


def physical_states(model: str, p: ModelParams, dec: SpectralDecomposition) -> list[StateVector]:
    """Eigenvectors in the frame the approximants describe (U_HB^dagger for A^2, bare otherwise)."""
    if model != A2:
        return list(dec.eigenvectors)
    u = hopfield_bogoliubov(p, dec.trunc_used.n_max)
    return [(u.dag() @ v).normalized() for v in dec.eigenvectors]


def approximant_model(model: str) -> str:
    return ad.A2_RENORMALIZED if model == A2 else ad.GQR_NO_A2


# --------------------------------------------------------------------------
# level matching


def match_level(
    target_energy: float,
    target: StateVector | None,
    energies: np.ndarray,
    states: Sequence[StateVector],
    used: Iterable[int] = (),
) -> int:
    """Nearest-energy level not in ``used``; ties broken by higher fidelity."""
    used = set(used)
    best, best_key = -1, None
    for j, e in enumerate(energies):
        if j in used:
            continue
        dist = abs(e - target_energy)
        fid = fidelity(target, states[j]) if target is not None else 0.0
        key = (round(dist, 9), -fid)
        if best_key is None or key < best_key:
            best, best_key = j, key
    return best


@dataclass(frozen=True)
class BranchFidelity:
    branch: str
    level: int
    fidelity: float
    approximant_energy: float


def branch_fidelities(model: str, p: ModelParams, dec: SpectralDecomposition, n: int = 0) -> list[BranchFidelity]:
    """Fidelity of the (n, plus) and (n, minus) approximants with their matched exact levels.

    The quasi-degenerate no-A^2 cats at zero bias are compared with the span
    of the matched pair instead of a single level.
    """
    states = physical_states(model, p, dec)
    am = approximant_model(model)
    fams = [ad.ApproximantFamily.for_params(am, p, b, n) for b in (ad.PLUS, ad.MINUS)]
    app_objs = [ad.approximant(f, p, dec.trunc_used.n_max) for f in fams]
    app_states = [_fit_basis(a.state, states[0]) for a in app_objs]
    used: list[int] = []
    out = []
    paired = am == ad.GQR_NO_A2 and p.epsilon == 0
    for s, a in zip(app_states, app_objs):
        j = match_level(a.energy, s, dec.eigenvalues, states, used)
        used.append(j)
        out.append((s, a, j))
    if paired:
        span = [states[j] for _, _, j in out]
        return [BranchFidelity(a.family.branch, j, subspace_fidelity(s, span), a.energy) for s, a, j in out]
    return [BranchFidelity(a.family.branch, j, fidelity(s, states[j]), a.energy) for s, a, j in out]


def _fit_basis(state: StateVector, like: StateVector) -> StateVector:
    """Zero-pad or cut ``state`` onto the basis of ``like`` (approximants may sit on a grown basis)."""
    if state.basis == like.basis:
        return state
    src = state.amplitudes.reshape(-1, state.basis.n_photon)
    dst = np.zeros((src.shape[0], like.basis.n_photon), dtype=complex)
    m = min(src.shape[1], dst.shape[1])
    dst[:, :m] = src[:, :m]
    return StateVector(dst.reshape(-1), like.basis)


# --------------------------------------------------------------------------
# scans


@dataclass(frozen=True)
class BiasRow:
    epsilon: float
    exact_gap: float
    approximant_gap: float
    status: str = "ok"


def approximant_gap(model: str, p: ModelParams) -> float:
    am = approximant_model(model)
    lo = ad.approximant_energy(ad.ApproximantFamily.for_params(am, p, ad.PLUS), p)
    hi = ad.approximant_energy(ad.ApproximantFamily.for_params(am, p, ad.MINUS), p)
    return hi - lo


def default_epsilon_grid(p: ModelParams, points: int = 81) -> np.ndarray:
    return np.linspace(-1.0, 1.0, points) * p.omega_a


def _thread_count(threads: int | None) -> int:
    if threads is not None:
        return max(1, int(threads))
    try:
        return max(1, int(os.environ.get("RABICAT_THREADS", "1")))
    except ValueError:
        return 1


def _ordered_map(fn, items: Sequence, threads: int | None) -> list:
    n = _thread_count(threads)
    if n == 1 or len(items) < 2:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=n) as pool:
        return list(pool.map(fn, items))


def bias_scan(
    p: ModelParams,
    epsilon_grid: Sequence[float] | None = None,
    model: str = A2,
    trunc=None,
    threads: int | None = None,
) -> list[BiasRow]:
    """Exact E1 - E0 and the adiabatic gap along an energy-bias grid."""
    grid = default_epsilon_grid(p) if epsilon_grid is None else list(epsilon_grid)
    base_trunc = Truncation(512, auto_grow=True, n_ceiling=512) if trunc is None else as_truncation(trunc)

    def point(eps: float) -> BiasRow:
        q = replace(p, epsilon=float(eps))
        app = approximant_gap(model, q)
        try:
            t = resolve_truncation(model, q, base_trunc)
            dec = diagonalize(hamiltonian_builder(model, q), 2, t)
            return BiasRow(float(eps), float(dec.eigenvalues[1] - dec.eigenvalues[0]), app)
        except RabicatError as exc:
            return BiasRow(float(eps), math.nan, app, _status(exc))

    return _ordered_map(point, grid, threads)


@dataclass(frozen=True)
class ThresholdResult:
    n0_app: float
    verdict: str
    lhs: float
    c_g: float


def _compare(x: float, y: float, rtol: float = 1e-12) -> str:
    if abs(x - y) <= rtol * max(abs(x), abs(y), 1e-300):
        return "="
    return ">" if x > y else "<"


def dressed_photon_threshold(p: ModelParams) -> ThresholdResult:
    """N0_app = g_tilde^2 / omega_g^2 and its comparison with 1.

    The verdict is cross-checked against the equivalent comparison of
    (1/4)(g/omega_c)^{-1}((g/omega_c)^{4/3} - 1) with C_g.
    """
    c_g = p.c_g
    omega_g, g_tilde = renormalized_frequency(p.omega_c, p.g, c_g)
    n0 = (g_tilde / omega_g) ** 2
    x = p.g / p.omega_c
    lhs = 0.25 / x * (x ** (4.0 / 3.0) - 1.0) if x > 0 else -math.inf
    verdict = _compare(n0, 1.0)
    alt = _compare(lhs, c_g)
    if verdict != alt and "=" not in (verdict, alt):
        raise RabicatError(f"threshold verdicts disagree: N0_app {verdict} 1 but lhs {alt} C_g")
    return ThresholdResult(n0, verdict, lhs, c_g)


SWEEP_COLUMNS = (
    "g", "epsilon", "omega_g", "g_tilde", "delta_g", "small_delta_g",
    "E0", "E1", "E2", "E3", "E4", "E5", "gap01",
    "N0_exact", "N0_app", "fluct_phi_sq", "fidelity_plus", "fidelity_minus",
    "entropy_0", "parity_0", "resolvent_gap", "status",
)  # fmt: skip


@dataclass(frozen=True)
class SweepRow:
    g: float
    epsilon: float
    omega_g: float = math.nan
    g_tilde: float = math.nan
    delta_g: float = math.nan
    small_delta_g: float = math.nan
    E0: float = math.nan
    E1: float = math.nan
    E2: float = math.nan
    E3: float = math.nan
    E4: float = math.nan
    E5: float = math.nan
    gap01: float = math.nan
    N0_exact: float = math.nan
    N0_app: float = math.nan
    fluct_phi_sq: float = math.nan
    fidelity_plus: float = math.nan
    fidelity_minus: float = math.nan
    entropy_0: float = math.nan
    parity_0: float = math.nan
    resolvent_gap: float = math.nan
    status: str = "ok"

    def values(self) -> tuple:
        return tuple(getattr(self, f.name) for f in fields(self))


assert tuple(f.name for f in fields(SweepRow)) == SWEEP_COLUMNS


def _status(exc: Exception) -> str:
    return f"{type(exc).__name__}: {exc}".replace(",", ";").replace("\n", " ")


def sweep_point(
    model: str,
    p: ModelParams,
    trunc,
    resolvent_n: int | None = 300,
) -> SweepRow:
    """All sweep observables at one coupling; failures land in ``status``."""
    row: dict = {"g": p.g, "epsilon": p.epsilon}
    notes = []
    try:
        if model == A2:
            omega_g, g_tilde = renormalized_frequency(p.omega_c, p.g, p.c_g)
            row.update(omega_g=omega_g, g_tilde=g_tilde, N0_app=(g_tilde / omega_g) ** 2)
            try:
                rp = renormalize(p)
                row.update(delta_g=rp.delta_g, small_delta_g=rp.small_delta_g)
            except RabicatError as exc:
                notes.append(_status(exc))
            omega_phys = omega_g
        else:
            row["N0_app"] = (p.g / p.omega_c) ** 2
            omega_phys = p.omega_c

        t = resolve_truncation(model, p, trunc)
        dec = diagonalize(hamiltonian_builder(model, p), 6, t)
        for j, e in enumerate(dec.eigenvalues[:6]):
            row[f"E{j}"] = float(e)
        row["gap01"] = float(dec.eigenvalues[1] - dec.eigenvalues[0])

        if model == VAN_HOVE:
            ground = dec.eigenvectors[0]
            coherent = fock.displacement(-p.g / p.omega_c, ground.basis.n_max) @ fock.fock_state(0, ground.basis.n_max)
            row.update(
                N0_exact=photon_number_expectation(ground),
                fluct_phi_sq=field_fluctuation(ground, omega_phys),
                fidelity_plus=fidelity(coherent, ground),
            )
        else:
            states = physical_states(model, p, dec)
            ground = states[0]
            fids = branch_fidelities(model, p, dec)
            row.update(
                N0_exact=photon_number_expectation(ground),
                fluct_phi_sq=field_fluctuation(ground, omega_phys),
                fidelity_plus=fids[0].fidelity,
                fidelity_minus=fids[1].fidelity,
                entropy_0=entanglement_entropy(ground),
                parity_0=parity_expectation(ground),
            )
        if model == A2 and resolvent_n and "delta_g" in row:
            row["resolvent_gap"] = ad.resolvent_gap(p, resolvent_n)
        if not dec.all_converged:
            notes.append("unconverged")
    except (RabicatError, ValueError) as exc:
        notes.append(_status(exc))
    row["status"] = "; ".join(notes) if notes else "ok"
    return SweepRow(**row)


def coupling_sweep(
    p: ModelParams,
    g_grid: Sequence[float],
    model: str = A2,
    trunc=None,
    resolvent_n: int | None = 300,
    threads: int | None = None,
) -> list[SweepRow]:
    """One ``SweepRow`` per coupling, in grid order."""
    base = Truncation(512, auto_grow=True, n_ceiling=512) if trunc is None else as_truncation(trunc)
    return _ordered_map(lambda g: sweep_point(model, replace(p, g=float(g)), base, resolvent_n), list(g_grid), threads)


@dataclass(frozen=True)
class CatnessRow:
    level: int
    energy: float
    entropy: float
    parity: float
    photon_number: float
    best_n: int
    best_branch: str
    approximant_energy: float
    fidelity: float


def catness_table(model: str, p: ModelParams, trunc, levels: int = 6) -> list[CatnessRow]:
    """Per-level entropy, parity and best-matching approximant fidelity."""
    if model == VAN_HOVE:
        raise ValueError("catness needs a spin model")
    t = resolve_truncation(model, p, trunc)
    dec = diagonalize(hamiltonian_builder(model, p), levels, t)
    states = physical_states(model, p, dec)
    am = approximant_model(model)
    n_max_fam = levels // 2 + 1
    cands = []
    for n in range(n_max_fam + 1):
        for b in (ad.PLUS, ad.MINUS):
            a = ad.approximant(ad.ApproximantFamily.for_params(am, p, b, n), p, dec.trunc_used.n_max)
            cands.append(replace(a, state=_fit_basis(a.state, states[0])))
    parity = models.parity_operator(dec.trunc_used.n_max)
    rows = []
    for j, (e, s) in enumerate(zip(dec.eigenvalues, states)):
        best = max(cands, key=lambda a: fidelity(a.state, s))
        rows.append(
            CatnessRow(
                j, float(e), entanglement_entropy(s), parity_expectation(s, parity),
                photon_number_expectation(s), best.family.n, best.family.branch,
                best.energy, fidelity(best.state, s),
            )
        )  # fmt: skip
    return rows
