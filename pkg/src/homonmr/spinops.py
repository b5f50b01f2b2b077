"""Spin-1/2 operator algebra for small registers.

Operators act on the 2**n dimensional product space of n spin-1/2
nuclei.  Basis states are ordered |00>, |01>, |10>, |11> for n = 2,
with the first (leftmost) spin as the most significant tensor factor.
Single-spin operators are one half the Pauli matrices, so Iz has
eigenvalues +1/2 (|0>, spin up) and -1/2 (|1>, spin down).

All matrices are dense complex numpy arrays; for the two-spin problems
targeted here the dimension is 4 and dense eigendecompositions are both
exact enough and fast enough.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

HERMITICITY_TOL = 1e-10
UNITARITY_TOL = 1e-10
TRACE_TOL = 1e-10
EIGENVALUE_TOL = 1e-9

_PAULI = {
    "i": np.eye(2, dtype=complex),
    "x": np.array([[0.0, 1.0], [1.0, 0.0]], dtype=complex),
    "y": np.array([[0.0, -1.0j], [1.0j, 0.0]], dtype=complex),
    "z": np.array([[1.0, 0.0], [0.0, -1.0]], dtype=complex),
}

_RAISING = np.array([[0.0, 1.0], [0.0, 0.0]], dtype=complex)


def spin_op(n_spins: int, site: int, axis: str) -> np.ndarray:
    """Embedded single-spin operator on an n-spin register.

    Args:
        n_spins: number of spin-1/2 sites in the register.
        site: zero-based index of the addressed spin; site 0 is the
            leftmost (most significant) tensor factor.
        axis: one of "x", "y", "z" for I_axis = sigma_axis / 2, "+" or
            "-" for the raising/lowering operator, or "i" for identity.

    Returns:
        The (2**n_spins, 2**n_spins) complex matrix I ⊗ ... ⊗ op ⊗ ... ⊗ I.
    """
    if not 0 <= site < n_spins:
        raise ValueError(f"site {site} out of range for {n_spins} spins")
    if axis == "+":
        op = _RAISING
    elif axis == "-":
        op = _RAISING.conj().T
    elif axis in _PAULI:
        op = _PAULI[axis] if axis == "i" else 0.5 * _PAULI[axis]
    else:
        raise ValueError(f"unknown axis {axis!r}")
    out = np.eye(1, dtype=complex)
    for k in range(n_spins):
        out = np.kron(out, op if k == site else _PAULI["i"])
    return out


def require_hermitian(m: np.ndarray, tol: float = HERMITICITY_TOL) -> np.ndarray:
    m = np.asarray(m, dtype=complex)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {m.shape}")
    dev = np.linalg.norm(m - m.conj().T)
    if dev > tol * max(1.0, np.linalg.norm(m)):
        raise ValueError(f"matrix is not Hermitian (deviation {dev:.3e})")
    return m


def frobenius_distance(a: np.ndarray, b: np.ndarray) -> float:
    """Frobenius distance sqrt(tr[(A-B)^dagger (A-B)]) between two matrices."""
    a = np.asarray(a, dtype=complex)
    b = np.asarray(b, dtype=complex)
    if a.shape != b.shape:
        raise ValueError(f"shape mismatch {a.shape} vs {b.shape}")
    return float(np.linalg.norm(a - b))


@dataclass(frozen=True)
class UnitaryOp:
    """A validated unitary matrix.

    The constructor rejects matrices whose deviation from unitarity
    exceeds UNITARITY_TOL times the dimension, so downstream propagation
    can compose UnitaryOp values without re-checking.
    """

    matrix: np.ndarray

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=complex)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise ValueError(f"expected a square matrix, got shape {m.shape}")
        dev = np.linalg.norm(m.conj().T @ m - np.eye(m.shape[0]))
        if dev > UNITARITY_TOL * m.shape[0]:
            raise ValueError(f"matrix is not unitary (deviation {dev:.3e})")
        object.__setattr__(self, "matrix", m)

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    def __matmul__(self, other: "UnitaryOp") -> "UnitaryOp":
        return UnitaryOp(self.matrix @ other.matrix)

    def dagger(self) -> "UnitaryOp":
        return UnitaryOp(self.matrix.conj().T)

    def apply(self, state: "DensityState") -> "DensityState":
        return DensityState(self.matrix @ state.matrix @ self.matrix.conj().T,
                            convention=state.convention)


def expm_hermitian(h: np.ndarray, t: float = 1.0) -> UnitaryOp:
    """exp(-i H t) for Hermitian H via eigendecomposition.

    Eigendecomposition keeps the result exactly unitary up to floating
    point roundoff, which matters for the long unitary products formed
    during piecewise-constant propagation.
    """
    h = require_hermitian(h)
    evals, vecs = np.linalg.eigh(h)
    phases = np.exp(-1.0j * evals * t)
    return UnitaryOp((vecs * phases) @ vecs.conj().T)


def gate_fidelity(u: np.ndarray | UnitaryOp, v: np.ndarray | UnitaryOp) -> float:
    """Global-phase-insensitive gate overlap |tr(U^dagger V)| / dim."""
    um = u.matrix if isinstance(u, UnitaryOp) else np.asarray(u, dtype=complex)
    vm = v.matrix if isinstance(v, UnitaryOp) else np.asarray(v, dtype=complex)
    return float(abs(np.trace(um.conj().T @ vm)) / um.shape[0])


@dataclass
class DensityState:
    """Density matrix or traceless deviation matrix.

    convention is "true" for a proper density matrix (unit trace,
    positive semidefinite) or "deviation" for the traceless deviation
    part used throughout liquid-state NMR, where the dominant identity
    component carries no signal.  The flag is explicit because the two
    conventions obey different invariants and silently mixing them is a
    classic source of sign errors.
    """

    matrix: np.ndarray
    convention: str = "deviation"
    _validated: bool = field(default=False, repr=False)

    def __post_init__(self):
        m = require_hermitian(self.matrix)
        scale = max(1.0, float(np.linalg.norm(m)))
        if self.convention == "true":
            if abs(np.trace(m).real - 1.0) > TRACE_TOL * scale:
                raise ValueError(f"true state trace {np.trace(m).real} != 1")
            if np.linalg.eigvalsh(m).min() < -EIGENVALUE_TOL:
                raise ValueError("true state has a negative eigenvalue")
        elif self.convention == "deviation":
            if abs(np.trace(m)) > TRACE_TOL * scale:
                raise ValueError(f"deviation state trace {np.trace(m)} != 0")
        else:
            raise ValueError(f"unknown convention {self.convention!r}")
        self.matrix = 0.5 * (m + m.conj().T)
        self._validated = True

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    def populations(self) -> np.ndarray:
        """Diagonal of the matrix in the computational basis (real)."""
        return np.real(np.diag(self.matrix)).copy()

    def expect(self, op: np.ndarray) -> complex:
        return complex(np.trace(self.matrix @ np.asarray(op, dtype=complex)))

    def copy(self) -> "DensityState":
        return DensityState(self.matrix.copy(), convention=self.convention)


def state_fidelity(a: DensityState, b: DensityState) -> float:
    """Normalized Hilbert-Schmidt overlap tr(AB) / sqrt(tr A^2 tr B^2).

    For deviation matrices this is the natural scale-free agreement
    measure (+1 identical, -1 inverted); for pure true states it reduces
    to the usual squared overlap.
    """
    num = np.trace(a.matrix @ b.matrix).real
    den = np.sqrt(np.trace(a.matrix @ a.matrix).real *
                  np.trace(b.matrix @ b.matrix).real)
    if den == 0.0:
        raise ValueError("fidelity undefined for a zero matrix")
    return float(num / den)
