"""Pair-theory renormalization of the A^2 term.

The quadratic photon sector hbar omega_c (a^dagger a + 1/2) + hbar g C_g (a + a^dagger)^2
is a free oscillator at omega_g = sqrt(omega_c^2 + 4 omega_c g C_g) once
squeezed by r = ln(omega_g / omega_c) / 2, and the linear coupling shrinks to
g_tilde = g sqrt(omega_c / omega_g).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import fock
from .exceptions import DegenerateDelta, NegativeRadicand
from .fock import LinearOperator, StateVector, as_truncation, tensor
from .models import ModelParams, parse_sign

DEGENERATE_TOL = 1e-12


@dataclass(frozen=True)
class RenormalizedParams:
    omega_g: float
    g_tilde: float
    delta_g: float
    small_delta_g: float
    self_energy: float
    c_infinity: float | None
    polaron_G: float

    @property
    def counter_frequency(self) -> float:
        """omega_g - Delta_g, the frequency that tends to omega_c."""
        return self.omega_g - self.delta_g


def renormalized_frequency(omega_c: float, g: float, c_g: float) -> tuple[float, float]:
    """(omega_g, g_tilde); valid for C_g >= 0, including C_g = 0."""
    omega_g = math.sqrt(omega_c * omega_c + 4.0 * omega_c * g * c_g)
    return omega_g, g * math.sqrt(omega_c / omega_g)


def squeeze_parameter(p: ModelParams) -> float:
    omega_g, _ = renormalized_frequency(p.omega_c, p.g, p.c_g)
    return 0.5 * math.log(omega_g / p.omega_c)


def bogoliubov_coefficients(p: ModelParams) -> tuple[float, float]:
    """(c1, c2) = (sqrt(omega_g/omega_c), sqrt(omega_c/omega_g)); b = (c1+c2)/2 a + (c1-c2)/2 a^dagger."""
    omega_g, _ = renormalized_frequency(p.omega_c, p.g, p.c_g)
    c1 = math.sqrt(omega_g / p.omega_c)
    return c1, 1.0 / c1


def small_delta(omega_c: float, g: float, c_g: float) -> float:
    """delta_g = max(|1 - 1/|1 - q||, |1 - 1/sqrt(1 + q^2)|), q = sqrt(omega_c / (4 g C_g))."""
    q = math.sqrt(omega_c / (4.0 * g * c_g))
    return max(abs(1.0 - 1.0 / abs(1.0 - q)), abs(1.0 - 1.0 / math.sqrt(1.0 + q * q)))


def renormalize(p: ModelParams) -> RenormalizedParams:
    c_g = p.c_g
    if not (p.g > 0 and c_g > 0):
        raise ValueError("renormalize needs g > 0 and C_g > 0")
    if abs(math.sqrt(p.omega_c / (p.g * c_g)) - 2.0) <= DEGENERATE_TOL:
        raise DegenerateDelta("sqrt(omega_c / (g C_g)) = 2: Delta_g undefined")
    omega_g, g_tilde = renormalized_frequency(p.omega_c, p.g, c_g)
    radicand = omega_g**2 - 4.0 * p.omega_c * math.sqrt(p.g * c_g * p.omega_c)
    if radicand < 0:
        raise NegativeRadicand(f"omega_g^2 - 4 omega_c sqrt(g C_g omega_c) = {radicand:.3e}")
    return RenormalizedParams(
        omega_g=omega_g,
        g_tilde=g_tilde,
        delta_g=math.sqrt(radicand),
        small_delta_g=small_delta(p.omega_c, p.g, c_g),
        self_energy=p.hbar * g_tilde**2 / omega_g,
        c_infinity=p.coupling.c_infinity,
        polaron_G=g_tilde / omega_g,
    )


def hopfield_bogoliubov(p: ModelParams, trunc) -> LinearOperator:
    """U_HB = 1 (x) S(r) with U_HB a U_HB^dagger = cosh(r) a + sinh(r) a^dagger.

    Conjugating the A^2 Hamiltonian as U_HB^dagger H U_HB gives the
    sz-coupled model at (omega_g, g_tilde).
    """
    t = as_truncation(trunc)
    return tensor(fock.SIGMA_0, fock.squeeze(squeeze_parameter(p), t))


def physical_state(bare: StateVector, p: ModelParams, trunc=None, unitary: LinearOperator | None = None) -> StateVector:
    """U_HB^dagger |bare>, normalized."""
    if unitary is None:
        unitary = hopfield_bogoliubov(p, trunc if trunc is not None else bare.basis.n_max)
    return (unitary.dag() @ bare).normalized()


def van_hove_unitary(sign, p: ModelParams, trunc) -> LinearOperator:
    """U_{+/-vH} = D(-/+ g / omega_c); U^dagger maps van Hove eigenstates onto Fock states."""
    return fock.displacement(-parse_sign(sign) * p.g / p.omega_c, trunc)


def linear_policy_assumptions(p: ModelParams, g_grid) -> dict[str, bool]:
    """Finite-grid proxies for the growth assumptions on C_g.

    g C_g and g^{-1/3} C_g must increase along the grid and g^{-1} C_g must
    equal the limit constant.
    """
    g = np.asarray(sorted(g_grid), dtype=float)
    c = np.array([p.coupling.c_g(x) for x in g])
    c_inf = p.coupling.c_infinity
    return {
        "g_c_increasing": bool(np.all(np.diff(g * c) > 0)),
        "cube_root_increasing": bool(np.all(np.diff(g ** (-1.0 / 3.0) * c) > 0)),
        "ratio_constant": c_inf is not None and bool(np.allclose(c / g, c_inf, rtol=1e-12, atol=0)),
    }
