"""Truncated boson and spin-1/2 operator algebra.

Photon operators act on ``span{|0>, ..., |n_max>}``; composite operators act
on ``C^2 (x) photon`` with index ``s * (n_max + 1) + n`` where ``s = 0`` is
spin up and ``s = 1`` spin down.  Every builder returns the *projection* of
the infinite-dimensional operator (``P X P``) except ``displacement`` and
``squeeze``, which exponentiate the projected generator so that the result
stays exactly unitary on the retained space.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Iterable

import numpy as np
from scipy.linalg import expm

from .exceptions import BasisMismatch, NotHermitian, TruncationCeiling, TruncationTooSmall

PHOTON = "photon"
SPIN_PHOTON = "spin_photon"

HERMITIAN_RTOL = 1e-12
BLOCK_FRACTION = 0.8


def _frozen(a):
    a = np.array(a, dtype=complex)
    a.setflags(write=False)
    return a


SIGMA_0 = _frozen([[1, 0], [0, 1]])
SIGMA_X = _frozen([[0, 1], [1, 0]])
SIGMA_Y = _frozen([[0, -1j], [1j, 0]])
SIGMA_Z = _frozen([[1, 0], [0, -1]])
# sigma_+ sigma_- = |up><up|, sigma_- sigma_+ = |down><down|
SIGMA_PLUS = _frozen([[0, 1], [0, 0]])
SIGMA_MINUS = _frozen([[0, 0], [1, 0]])
PROJ_UP = _frozen([[1, 0], [0, 0]])
PROJ_DOWN = _frozen([[0, 0], [0, 1]])
SPIN_UP = _frozen([1, 0])
SPIN_DOWN = _frozen([0, 1])


@dataclass(frozen=True)
class Truncation:
    """Fock cutoff plus the convergence policy attached to it.

    ``tail_tol`` bounds the probability allowed on the top 10% of Fock
    levels for a state to count as converged.  With ``auto_grow`` the
    cutoff may be raised (x1.5 per step) up to ``n_ceiling``.
    """

    n_max: int
    tail_tol: float = 1e-8
    auto_grow: bool = False
    n_ceiling: int | None = None

    def __post_init__(self):
        if self.n_ceiling is None:
            object.__setattr__(self, "n_ceiling", self.n_max)
        if int(self.n_max) != self.n_max or self.n_max < 2:
            raise ValueError(f"n_max must be an integer >= 2, got {self.n_max}")
        if not self.tail_tol > 0:
            raise ValueError("tail_tol must be positive")
        if self.n_ceiling < self.n_max:
            raise ValueError("n_ceiling must be >= n_max")

    def with_n_max(self, n_max: int) -> "Truncation":
        return replace(self, n_max=int(n_max), n_ceiling=max(self.n_ceiling, int(n_max)))

    def grown(self, factor: float = 1.5) -> "Truncation":
        if self.n_max >= self.n_ceiling:
            raise TruncationCeiling(f"n_ceiling={self.n_ceiling} reached")
        return replace(self, n_max=min(self.n_ceiling, math.ceil(self.n_max * factor)))

    def require(self, n_needed: int, what: str) -> int:
        """Return a cutoff >= ``n_needed`` (growing if allowed) or raise."""
        n = self.n_max
        if n >= n_needed:
            return n
        if self.auto_grow:
            while n < n_needed and n < self.n_ceiling:
                n = min(self.n_ceiling, math.ceil(n * 1.5))
            if n >= n_needed:
                return n
        raise TruncationTooSmall(
            f"{what} needs n_max >= {n_needed}, have {self.n_max}"
            + (f" (ceiling {self.n_ceiling})" if self.auto_grow else "")
        )

    def tail_mass(self, amplitudes) -> float:
        """Probability on photon levels n > 0.9 * n_max (all spin sectors)."""
        c = np.asarray(amplitudes).reshape(-1, self.n_max + 1)
        start = int(math.floor(0.9 * self.n_max)) + 1
        return float(np.sum(np.abs(c[:, start:]) ** 2))


def as_truncation(trunc) -> Truncation:
    if isinstance(trunc, Truncation):
        return trunc
    return Truncation(int(trunc))


@dataclass(frozen=True)
class Basis:
    kind: str
    n_max: int

    def __post_init__(self):
        if self.kind not in (PHOTON, SPIN_PHOTON):
            raise ValueError(f"unknown basis kind {self.kind!r}")

    @property
    def n_photon(self) -> int:
        return self.n_max + 1

    @property
    def dim(self) -> int:
        return self.n_photon * (1 if self.kind == PHOTON else 2)

    @property
    def tag(self) -> str:
        return f"{self.kind}({self.n_max})"

    @classmethod
    def parse(cls, tag: str) -> "Basis":
        m = re.fullmatch(r"(photon|spin_photon)\((\d+)\)", tag.strip())
        if m is None:
            raise ValueError(f"bad basis tag {tag!r}")
        return cls(m.group(1), int(m.group(2)))

    def low_indices(self, m: int) -> np.ndarray:
        """Indices of photon levels ``n < m`` in every spin sector."""
        m = min(int(m), self.n_photon)
        sectors = 1 if self.kind == PHOTON else 2
        return np.concatenate([s * self.n_photon + np.arange(m) for s in range(sectors)])

    def block_size(self, fraction: float = BLOCK_FRACTION) -> int:
        return max(1, int(math.floor(fraction * self.n_photon)))


def photon_basis(trunc) -> Basis:
    return Basis(PHOTON, as_truncation(trunc).n_max)


def spin_photon_basis(trunc) -> Basis:
    return Basis(SPIN_PHOTON, as_truncation(trunc).n_max)


class LinearOperator:
    """Immutable dense complex matrix tagged with its basis.

    Pass ``hermitian=True`` to have the flag verified on construction.
    """

    __slots__ = ("matrix", "basis", "hermitian")

    def __init__(self, matrix, basis: Basis, hermitian: bool = False):
        m = np.array(matrix, dtype=complex)
        if m.shape != (basis.dim, basis.dim):
            raise BasisMismatch(f"matrix shape {m.shape} does not fit basis {basis.tag}")
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)
        object.__setattr__(self, "basis", basis)
        object.__setattr__(self, "hermitian", False)
        if hermitian:
            res = self.hermiticity_residual()
            if res > HERMITIAN_RTOL * max(1.0, float(np.abs(m).max(initial=0.0))):
                raise NotHermitian(f"hermiticity residual {res:.3e}")
            object.__setattr__(self, "hermitian", True)

    def __setattr__(self, name, value):
        raise AttributeError("LinearOperator is immutable")

    def __repr__(self):
        return f"LinearOperator(basis={self.basis.tag}, hermitian={self.hermitian})"

    @property
    def dim(self) -> int:
        return self.basis.dim

    def _check(self, other):
        if other.basis != self.basis:
            raise BasisMismatch(f"{self.basis.tag} vs {other.basis.tag}")

    def __matmul__(self, other):
        if isinstance(other, StateVector):
            self._check(other)
            return StateVector(self.matrix @ other.amplitudes, self.basis)
        if isinstance(other, LinearOperator):
            self._check(other)
            return LinearOperator(self.matrix @ other.matrix, self.basis)
        return NotImplemented

    def __add__(self, other):
        if isinstance(other, LinearOperator):
            self._check(other)
            return LinearOperator(
                self.matrix + other.matrix, self.basis, self.hermitian and other.hermitian
            )
        if np.isscalar(other):
            return LinearOperator(
                self.matrix + other * np.eye(self.dim),
                self.basis,
                self.hermitian and np.isreal(other),
            )
        return NotImplemented

    __radd__ = __add__

    def __neg__(self):
        return LinearOperator(-self.matrix, self.basis, self.hermitian)

    def __sub__(self, other):
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, scalar):
        if not np.isscalar(scalar):
            return NotImplemented
        return LinearOperator(scalar * self.matrix, self.basis, self.hermitian and np.isreal(scalar))

    __rmul__ = __mul__

    def dag(self) -> "LinearOperator":
        return LinearOperator(self.matrix.conj().T, self.basis, self.hermitian)

    def commutator(self, other: "LinearOperator") -> "LinearOperator":
        return self @ other - other @ self

    def hermiticity_residual(self) -> float:
        return float(np.abs(self.matrix - self.matrix.conj().T).max(initial=0.0))

    def block(self, m: int | None = None, fraction: float = BLOCK_FRACTION) -> np.ndarray:
        """Sub-matrix on photon levels ``n < m`` (default: lowest ``fraction``)."""
        if m is None:
            m = self.basis.block_size(fraction)
        idx = self.basis.low_indices(m)
        return self.matrix[np.ix_(idx, idx)]

    def op_norm(self) -> float:
        return float(np.linalg.norm(self.matrix, 2))

    def eigvalsh(self) -> np.ndarray:
        return np.linalg.eigvalsh(self.matrix)


class StateVector:
    """Immutable ket in a tagged basis."""

    __slots__ = ("amplitudes", "basis")

    def __init__(self, amplitudes, basis: Basis):
        v = np.array(amplitudes, dtype=complex).reshape(-1)
        if v.shape != (basis.dim,):
            raise BasisMismatch(f"vector length {v.size} does not fit basis {basis.tag}")
        v.setflags(write=False)
        object.__setattr__(self, "amplitudes", v)
        object.__setattr__(self, "basis", basis)

    def __setattr__(self, name, value):
        raise AttributeError("StateVector is immutable")

    def __repr__(self):
        return f"StateVector(basis={self.basis.tag}, norm={self.norm():.6g})"

    @property
    def dim(self) -> int:
        return self.basis.dim

    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def normalized(self) -> "StateVector":
        n = self.norm()
        if n == 0:
            raise ValueError("cannot normalize the zero vector")
        return StateVector(self.amplitudes / n, self.basis)

    def inner(self, other: "StateVector") -> complex:
        """<self|other>."""
        if other.basis != self.basis:
            raise BasisMismatch(f"{self.basis.tag} vs {other.basis.tag}")
        return complex(np.vdot(self.amplitudes, other.amplitudes))

    def expectation(self, op: LinearOperator) -> complex:
        return self.inner(op @ self)

    def __add__(self, other):
        if other.basis != self.basis:
            raise BasisMismatch(f"{self.basis.tag} vs {other.basis.tag}")
        return StateVector(self.amplitudes + other.amplitudes, self.basis)

    def __sub__(self, other):
        return self + (-1.0) * other

    def __mul__(self, scalar):
        if not np.isscalar(scalar):
            return NotImplemented
        return StateVector(scalar * self.amplitudes, self.basis)

    __rmul__ = __mul__

    def spin_components(self) -> np.ndarray:
        """Amplitudes reshaped to ``(2, n_max + 1)``; rows are up, down."""
        if self.basis.kind != SPIN_PHOTON:
            raise BasisMismatch("spin components need a spin_photon state")
        return self.amplitudes.reshape(2, self.basis.n_photon)

    def photon_distribution(self) -> np.ndarray:
        return np.sum(np.abs(self.amplitudes.reshape(-1, self.basis.n_photon)) ** 2, axis=0)


# --------------------------------------------------------------------------
# photon operators


def annihilation(trunc) -> LinearOperator:
    t = as_truncation(trunc)
    return LinearOperator(np.diag(np.sqrt(np.arange(1, t.n_max + 1)), 1), photon_basis(t))


def creation(trunc) -> LinearOperator:
    return annihilation(trunc).dag()


def number(trunc) -> LinearOperator:
    t = as_truncation(trunc)
    return LinearOperator(np.diag(np.arange(t.n_max + 1.0)), photon_basis(t), hermitian=True)


def identity(basis: Basis) -> LinearOperator:
    return LinearOperator(np.eye(basis.dim), basis, hermitian=True)


def quadrature(trunc) -> LinearOperator:
    """a + a^dagger."""
    a = annihilation(trunc)
    return LinearOperator(a.matrix + a.matrix.T, a.basis, hermitian=True)


def quadrature_squared(trunc) -> LinearOperator:
    """(a + a^dagger)^2 expanded as a^2 + a^dagger^2 + 2 a^dagger a + 1.

    Squaring the truncated quadrature would get the top-right corner wrong;
    the expansion gives the exact projection.
    """
    t = as_truncation(trunc)
    n = np.arange(t.n_max + 1.0)
    off = np.sqrt(n[1:-1] * n[2:])
    m = np.diag(2 * n + 1) + np.diag(off, 2) + np.diag(off, -2)
    return LinearOperator(m, photon_basis(t), hermitian=True)


def photon_parity(trunc) -> LinearOperator:
    """(-1)^{a^dagger a}."""
    t = as_truncation(trunc)
    return LinearOperator(np.diag((-1.0) ** np.arange(t.n_max + 1)), photon_basis(t), hermitian=True)


def fock_state(n: int, trunc) -> StateVector:
    t = as_truncation(trunc)
    if not 0 <= n <= t.n_max:
        raise ValueError(f"Fock index {n} outside 0..{t.n_max}")
    v = np.zeros(t.n_max + 1)
    v[n] = 1.0
    return StateVector(v, photon_basis(t))


def displacement(beta: float, trunc) -> LinearOperator:
    """D(beta) = exp[beta (a^dagger - a)] for real ``beta``.

    Guard: ``beta**2 <= 0.5 * n_max``.  With ``auto_grow`` the cutoff is
    raised to satisfy the guard and the returned operator lives on the
    larger basis.
    """
    t = as_truncation(trunc)
    n = t.require(math.ceil(2.0 * beta * beta), f"displacement({beta:g})")
    if beta == 0:
        return identity(Basis(PHOTON, n))
    a = np.diag(np.sqrt(np.arange(1.0, n + 1)), 1)
    return LinearOperator(expm(beta * (a.T - a)), Basis(PHOTON, n))


def squeeze(r: float, trunc) -> LinearOperator:
    """S(r) = exp[(r/2)(a^2 - a^dagger^2)], so S a S^dagger = cosh(r) a + sinh(r) a^dagger.

    Guard: ``exp(2|r|) <= n_max / 8``.
    """
    t = as_truncation(trunc)
    n = t.require(math.ceil(8.0 * math.exp(2.0 * abs(r))), f"squeeze({r:g})")
    if r == 0:
        return identity(Basis(PHOTON, n))
    a = np.diag(np.sqrt(np.arange(1.0, n + 1)), 1)
    a2 = a @ a
    return LinearOperator(expm(0.5 * r * (a2 - a2.T)), Basis(PHOTON, n))


# --------------------------------------------------------------------------
# composite space


def tensor(spin_op, photon_op: LinearOperator) -> LinearOperator:
    """spin_op (x) photon_op in the spin_photon basis."""
    s = np.asarray(spin_op, dtype=complex)
    if s.shape != (2, 2):
        raise BasisMismatch(f"spin operand must be 2x2, got {s.shape}")
    if photon_op.basis.kind != PHOTON:
        raise BasisMismatch("photon operand must be in the photon basis")
    herm = photon_op.hermitian and np.allclose(s, s.conj().T, atol=0)
    return LinearOperator(np.kron(s, photon_op.matrix), Basis(SPIN_PHOTON, photon_op.basis.n_max), herm)


def spin_only(spin_op, trunc) -> LinearOperator:
    """spin_op (x) identity."""
    t = as_truncation(trunc)
    return tensor(spin_op, identity(photon_basis(t)))


def photon_only(photon_op: LinearOperator) -> LinearOperator:
    return tensor(SIGMA_0, photon_op)


def product_state(spin, photon: StateVector) -> StateVector:
    if photon.basis.kind != PHOTON:
        raise BasisMismatch("photon factor must be in the photon basis")
    s = np.asarray(spin, dtype=complex).reshape(2)
    return StateVector(np.kron(s, photon.amplitudes), Basis(SPIN_PHOTON, photon.basis.n_max))


def spin_state(up: StateVector, down: StateVector) -> StateVector:
    """|up>(x)up + |down>(x)down from two photon-space vectors."""
    if up.basis != down.basis or up.basis.kind != PHOTON:
        raise BasisMismatch("both components must share one photon basis")
    return StateVector(np.concatenate([up.amplitudes, down.amplitudes]), Basis(SPIN_PHOTON, up.basis.n_max))


def unitarity_residual(u: LinearOperator, fraction: float = BLOCK_FRACTION) -> float:
    """max |U^dagger U - I| on the lowest ``fraction`` of photon levels."""
    m = u.basis.block_size(fraction)
    idx = u.basis.low_indices(m)
    g = u.matrix.conj().T @ u.matrix
    return float(np.abs(g[np.ix_(idx, idx)] - np.eye(idx.size)).max())


# --------------------------------------------------------------------------
# plain-text dump format: "basis=<tag> dim=<d>" then one row per line of "re im" pairs


def _header(basis: Basis) -> str:
    return f"basis={basis.tag} dim={basis.dim}"


def dumps(obj: LinearOperator | StateVector) -> str:
    lines = [_header(obj.basis)]
    if isinstance(obj, LinearOperator):
        rows = obj.matrix
    else:
        rows = obj.amplitudes.reshape(-1, 1)
    for row in rows:
        lines.append(" ".join(f"{z.real:.17e} {z.imag:.17e}" for z in row))
    return "\n".join(lines) + "\n"


def loads(text: str) -> LinearOperator | StateVector:
    lines = [ln for ln in text.splitlines() if ln.strip()]
    m = re.fullmatch(r"basis=(\S+) dim=(\d+)", lines[0].strip())
    if m is None:
        raise ValueError(f"bad header {lines[0]!r}")
    basis = Basis.parse(m.group(1))
    dim = int(m.group(2))
    if dim != basis.dim:
        raise BasisMismatch(f"dim={dim} inconsistent with {basis.tag}")
    data = np.array([[float(x) for x in ln.split()] for ln in lines[1:]])
    if data.shape[0] != dim:
        raise ValueError(f"expected {dim} rows, got {data.shape[0]}")
    values = data[:, 0::2] + 1j * data[:, 1::2]
    if values.shape[1] == 1 and dim > 1:
        return StateVector(values[:, 0], basis)
    return LinearOperator(values, basis)


def dump(obj, path) -> None:
    Path(path).write_text(dumps(obj))


def load(path):
    return loads(Path(path).read_text())


def block_max_deviation(a: np.ndarray, b: np.ndarray) -> float:
    return float(np.abs(np.asarray(a) - np.asarray(b)).max())


def photon_states(vectors: Iterable[np.ndarray], trunc) -> list[StateVector]:
    basis = photon_basis(trunc)
    return [StateVector(v, basis) for v in vectors]
