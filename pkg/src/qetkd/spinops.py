"""Dense spin-operator algebra on up to 12 qubits.

Operators, pure states and density matrices are plain complex numpy
arrays; the validators below enforce the class invariants (Hermiticity,
unitarity, unit trace, positivity) wherever a value crosses a public
boundary.  Everything here is a pure function on immutable inputs.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ImaginaryResidueError
from .tolerances import TOL

MAX_SITES = 12  # dense 4096x4096 complex is the largest system we allow

AXES = ("X", "Y", "Z")

PAULI = {
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "Z": np.array([[1, 0], [0, -1]], dtype=complex),
}

_ID2 = np.eye(2, dtype=complex)


# ---------------------------------------------------------------------------
# validators
# ---------------------------------------------------------------------------

def require_hermitian(a: np.ndarray, tol: float = TOL.hermitian) -> np.ndarray:
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {a.shape}")
    if np.max(np.abs(a - a.conj().T)) > tol:
        raise ValueError("matrix is not Hermitian within tolerance")
    return a


def require_unitary(u: np.ndarray, tol: float = TOL.unitary) -> np.ndarray:
    if np.linalg.norm(u @ u.conj().T - np.eye(u.shape[0])) > tol:
        raise ValueError("matrix is not unitary within tolerance")
    return u


def require_unit_vector(v: np.ndarray, tol: float = TOL.unit_norm) -> np.ndarray:
    if abs(np.linalg.norm(v) - 1.0) > tol:
        raise ValueError("vector is not normalized within tolerance")
    return v


def require_density_matrix(rho: np.ndarray) -> np.ndarray:
    require_hermitian(rho)
    if abs(np.trace(rho).real - 1.0) > TOL.trace_one:
        raise ValueError("density matrix trace differs from 1")
    if np.linalg.eigvalsh(rho)[0] < -TOL.psd:
        raise ValueError("density matrix has a negative eigenvalue")
    return rho


def pure_density(psi: np.ndarray) -> np.ndarray:
    """|psi><psi| for a normalized state vector."""
    require_unit_vector(psi)
    return np.outer(psi, psi.conj())


# ---------------------------------------------------------------------------
# Pauli terms and operator assembly
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class PauliTerm:
    """coefficient * product of single-site Paulis, e.g. 2k X_0 X_1."""

    coefficient: float
    factors: tuple[tuple[int, str], ...]

    def __post_init__(self):
        sites = [site for site, _ in self.factors]
        if len(set(sites)) != len(sites):
            raise ValueError(f"repeated site in term factors {self.factors}")
        for site, axis in self.factors:
            if axis not in AXES:
                raise ValueError(f"unknown Pauli axis {axis!r}")
            if site < 0:
                raise ValueError(f"negative site index {site}")

    def max_site(self) -> int:
        return max((site for site, _ in self.factors), default=-1)


def term(coefficient: float, *factors: tuple[int, str]) -> PauliTerm:
    """Shorthand constructor: term(2.0, (0, "X"), (1, "X"))."""
    return PauliTerm(float(coefficient), tuple(factors))


def pauli_on_site(axis: str, site: int, n_sites: int) -> np.ndarray:
    """Single-site Pauli embedded in the n-site register by Kronecker products."""
    if axis not in AXES:
        raise ValueError(f"unknown Pauli axis {axis!r}")
    if not 1 <= n_sites <= MAX_SITES:
        raise ValueError(f"n_sites must be in [1, {MAX_SITES}], got {n_sites}")
    if not 0 <= site < n_sites:
        raise ValueError(f"site {site} out of range for {n_sites} sites")
    out = np.array([[1.0 + 0j]])
    for k in range(n_sites):
        out = np.kron(out, PAULI[axis] if k == site else _ID2)
    return out


def vector_observable(vector: np.ndarray, site: int, n_sites: int) -> np.ndarray:
    """n . sigma at one site, for a real unit 3-vector n."""
    v = np.asarray(vector, dtype=float)
    require_unit_vector(v)
    return sum(v[i] * pauli_on_site(AXES[i], site, n_sites) for i in range(3))


def assemble(terms: list[PauliTerm] | tuple[PauliTerm, ...], n_sites: int) -> np.ndarray:
    """Coefficient-weighted sum of Pauli products; empty input gives the zero operator."""
    if not 1 <= n_sites <= MAX_SITES:
        raise ValueError(f"n_sites must be in [1, {MAX_SITES}], got {n_sites}")
    dim = 2 ** n_sites
    out = np.zeros((dim, dim), dtype=complex)
    for t in terms:
        if not isinstance(t, PauliTerm):
            raise TypeError(f"expected PauliTerm, got {type(t).__name__}")
        if t.max_site() >= n_sites:
            raise ValueError(f"term {t} does not fit {n_sites} sites")
        prod = np.eye(dim, dtype=complex)
        for site, axis in t.factors:
            prod = prod @ pauli_on_site(axis, site, n_sites)
        out += t.coefficient * prod
    return out


# ---------------------------------------------------------------------------
# spectra and expectations
# ---------------------------------------------------------------------------

def eigendecompose(h: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Eigenvalues (ascending) and orthonormal eigenvectors of a Hermitian matrix.

    Degenerate clusters come back in an arbitrary orthonormal gauge;
    callers must not rely on the gauge inside a cluster.
    """
    require_hermitian(h)
    evals, evecs = np.linalg.eigh(h)
    return evals, evecs


def expectation(state: np.ndarray, a: np.ndarray) -> float:
    """<A> in a pure state (1-d array) or density matrix (2-d array).

    The imaginary residue must stay below tolerance; anything larger
    signals a non-Hermitian observable or a corrupted state.
    """
    if state.ndim == 1:
        val = complex(state.conj() @ a @ state)
    elif state.ndim == 2:
        val = complex(np.trace(state @ a))
    else:
        raise ValueError(f"state must be a vector or matrix, got ndim={state.ndim}")
    if abs(val.imag) > TOL.imaginary_residue:
        raise ImaginaryResidueError(
            f"expectation has imaginary residue {val.imag:.3e}"
        )
    return val.real


def commutator(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    return a @ b - b @ a


def frobenius(a: np.ndarray) -> float:
    return float(np.linalg.norm(a))


def trace_distance(a: np.ndarray, b: np.ndarray) -> float:
    """(1/2) ||a - b||_1 for Hermitian a, b."""
    return 0.5 * float(np.sum(np.abs(np.linalg.eigvalsh(a - b))))
