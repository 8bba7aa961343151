"""Hamiltonian builders for the generalized quantum Rabi family.

Two unitarily equivalent forms of the model are provided:

* ``build_gqr``: atom term -(hbar/2)(omega_a sx + eps sz), coupling hbar g sz (a + a^dagger)
* ``build_gqr_sigma_x``: atom term (hbar/2)(omega_a sz - eps sx), coupling hbar g sx (a + a^dagger)

related by ``u_xz``.  ``build_a2`` adds hbar g C_g (a + a^dagger)^2 and the
van Hove models are the photon-only displaced oscillators.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import fock
from .exceptions import PolicyMissing
from .fock import (
    PROJ_DOWN,
    PROJ_UP,
    SIGMA_0,
    SIGMA_X,
    SIGMA_Z,
    LinearOperator,
    as_truncation,
    spin_only,
    tensor,
)

NONE = "none"
LINEAR = "linear"
CUSTOM = "custom"


@dataclass(frozen=True)
class CouplingPolicy:
    """Coefficient C_g of the A^2 term as a function of the coupling g.

    ``linear`` means C_g = C * g; ``custom`` linearly interpolates a table
    of (g, C_g) pairs and refuses to extrapolate.
    """

    kind: str = NONE
    C: float = 0.0
    table: tuple[tuple[float, float], ...] = field(default=())

    def __post_init__(self):
        if self.kind not in (NONE, LINEAR, CUSTOM):
            raise ValueError(f"unknown coupling policy {self.kind!r}")
        if self.kind == LINEAR and not self.C > 0:
            raise ValueError("linear policy needs C > 0")
        if self.kind == CUSTOM:
            tab = tuple((float(g), float(c)) for g, c in self.table)
            if not tab:
                raise ValueError("custom policy needs at least one (g, C_g) pair")
            gs = [g for g, _ in tab]
            if any(b <= a for a, b in zip(gs, gs[1:])):
                raise ValueError("custom table g values must be strictly increasing")
            if any(c < 0 for _, c in tab):
                raise ValueError("custom C_g values must be non-negative")
            object.__setattr__(self, "table", tab)

    @classmethod
    def none(cls) -> "CouplingPolicy":
        return cls(NONE)

    @classmethod
    def linear(cls, C: float) -> "CouplingPolicy":
        return cls(LINEAR, C=float(C))

    @classmethod
    def custom(cls, pairs: Sequence[tuple[float, float]]) -> "CouplingPolicy":
        return cls(CUSTOM, table=tuple(pairs))

    @classmethod
    def constant(cls, c_g: float, g: float) -> "CouplingPolicy":
        """Custom policy pinned to a single point, handy for fixed-C_g studies."""
        return cls(CUSTOM, table=((float(g), float(c_g)),))

    @property
    def present(self) -> bool:
        return self.kind != NONE

    @property
    def c_infinity(self) -> float | None:
        return self.C if self.kind == LINEAR else None

    def c_g(self, g: float) -> float:
        if self.kind == NONE:
            raise PolicyMissing("coupling policy is 'none'")
        if self.kind == LINEAR:
            return self.C * g
        gs = np.array([x for x, _ in self.table])
        cs = np.array([c for _, c in self.table])
        if not gs[0] - 1e-12 <= g <= gs[-1] + 1e-12:
            raise ValueError(f"g={g} outside custom table range [{gs[0]}, {gs[-1]}]")
        return float(np.interp(g, gs, cs))


@dataclass(frozen=True)
class ModelParams:
    omega_c: float
    omega_a: float
    epsilon: float = 0.0
    g: float = 0.0
    hbar: float = 1.0
    coupling: CouplingPolicy = field(default_factory=CouplingPolicy.none)

    def __post_init__(self):
        if not self.omega_c > 0:
            raise ValueError("omega_c must be positive")
        if not self.omega_a >= 0:
            raise ValueError("omega_a must be non-negative")
        if not self.hbar > 0:
            raise ValueError("hbar must be positive")
        if not self.g >= 0:
            raise ValueError("g must be non-negative")
        for name in ("omega_c", "omega_a", "epsilon", "g", "hbar"):
            if not math.isfinite(getattr(self, name)):
                raise ValueError(f"{name} must be finite")

    @property
    def c_g(self) -> float:
        return self.coupling.c_g(self.g)

    @property
    def splitting(self) -> float:
        """sqrt(omega_a^2 + eps^2)."""
        return math.hypot(self.omega_a, self.epsilon)


def atom_hamiltonian(p: ModelParams, trunc, epsilon: float | None = None) -> LinearOperator:
    """-(hbar/2)(omega_a sx + eps sz) (x) 1."""
    eps = p.epsilon if epsilon is None else epsilon
    s = -0.5 * p.hbar * (p.omega_a * SIGMA_X + eps * SIGMA_Z)
    return spin_only(s, trunc)


def photon_hamiltonian(omega: float, trunc, hbar: float = 1.0, zero_point: bool = True) -> LinearOperator:
    """hbar omega (a^dagger a + 1/2) on the photon space; drop the 1/2 with zero_point=False."""
    t = as_truncation(trunc)
    n = np.arange(t.n_max + 1.0) + (0.5 if zero_point else 0.0)
    return LinearOperator(np.diag(hbar * omega * n), fock.photon_basis(t), hermitian=True)


def build_gqr(
    p: ModelParams,
    trunc,
    omega: float | None = None,
    g: float | None = None,
    *,
    zero_point: bool = True,
) -> LinearOperator:
    """sz-coupled generalized Rabi Hamiltonian at frequency ``omega`` and coupling ``g``.

    Defaults to (omega_c, p.g).  Renormalized variants pass (omega_g, g_tilde).
    """
    t = as_truncation(trunc)
    omega = p.omega_c if omega is None else omega
    g = p.g if g is None else g
    h = (
        atom_hamiltonian(p, t).matrix
        + np.kron(SIGMA_0, photon_hamiltonian(omega, t, p.hbar, zero_point).matrix)
        + p.hbar * g * np.kron(SIGMA_Z, fock.quadrature(t).matrix)
    )
    return LinearOperator(h, fock.spin_photon_basis(t), hermitian=True)


def build_gqr_sigma_x(
    p: ModelParams,
    trunc,
    omega: float | None = None,
    g: float | None = None,
) -> LinearOperator:
    """sx-coupled form; u_xz maps it onto ``build_gqr``."""
    t = as_truncation(trunc)
    omega = p.omega_c if omega is None else omega
    g = p.g if g is None else g
    atom = 0.5 * p.hbar * (p.omega_a * SIGMA_Z - p.epsilon * SIGMA_X)
    h = (
        spin_only(atom, t).matrix
        + np.kron(SIGMA_0, photon_hamiltonian(omega, t, p.hbar).matrix)
        + p.hbar * g * np.kron(SIGMA_X, fock.quadrature(t).matrix)
    )
    return LinearOperator(h, fock.spin_photon_basis(t), hermitian=True)


def build_a2(p: ModelParams, trunc) -> LinearOperator:
    """build_gqr(omega_c, g) + hbar g C_g (a + a^dagger)^2."""
    if not p.coupling.present:
        raise PolicyMissing("A^2 model needs a coupling policy")
    t = as_truncation(trunc)
    extra = p.hbar * p.g * p.c_g * np.kron(SIGMA_0, fock.quadrature_squared(t).matrix)
    return LinearOperator(build_gqr(p, t).matrix + extra, fock.spin_photon_basis(t), hermitian=True)


def build_van_hove(sign: int | str, p: ModelParams, trunc) -> LinearOperator:
    """hbar omega_c (a^dagger a + 1/2) +/- hbar g (a + a^dagger) on the photon space."""
    s = parse_sign(sign)
    t = as_truncation(trunc)
    h = photon_hamiltonian(p.omega_c, t, p.hbar).matrix + s * p.hbar * p.g * fock.quadrature(t).matrix
    return LinearOperator(h, fock.photon_basis(t), hermitian=True)


def parse_sign(sign) -> int:
    if sign in (1, "+", "plus"):
        return 1
    if sign in (-1, "-", "minus"):
        return -1
    raise ValueError(f"sign must be + or -, got {sign!r}")


def parity_operator(trunc) -> LinearOperator:
    """-(-1)^{a^dagger a} sx, the parity of the sz-coupled model at eps = 0."""
    return tensor(-SIGMA_X, fock.photon_parity(trunc))


def sigma_z_parity(trunc) -> LinearOperator:
    """(-1)^{a^dagger a} sz, the parity of the sx-coupled model at eps = 0."""
    return tensor(SIGMA_Z, fock.photon_parity(trunc))


U_XZ = np.array([[1, 1], [-1, 1]], dtype=complex) / math.sqrt(2)
U_XZ.setflags(write=False)


def u_xz(trunc) -> LinearOperator:
    """Spin rotation with U sz U^dagger = -sx and U sx U^dagger = sz."""
    return spin_only(U_XZ, trunc)


def spin_projectors(trunc) -> tuple[LinearOperator, LinearOperator]:
    """(|up><up|, |down><down|) (x) 1."""
    return spin_only(PROJ_UP, trunc), spin_only(PROJ_DOWN, trunc)
