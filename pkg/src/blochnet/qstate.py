"""Density matrices, Bloch vectors and fidelity measures for small qubit systems.

States live on n = 1, 2 or 3 qubits. A density matrix is a 2^n x 2^n complex
Hermitian, unit-trace, positive semidefinite array; its Bloch vector is the
real coefficient vector in the traceless multi-qubit Pauli basis, of length
4^n - 1. All functions here are pure and operate on plain numpy arrays.
"""

from __future__ import annotations

from functools import lru_cache

import numpy as np

SUPPORTED_QUBITS = (1, 2, 3)

# Structural tolerance (Hermiticity, trace, round trips).
TOL_STRUCT = 1e-10
# Numerical cross-check tolerance.
TOL_NUM = 1e-8

_I2 = np.eye(2, dtype=complex)
_X = np.array([[0, 1], [1, 0]], dtype=complex)
_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
_Z = np.array([[1, 0], [0, -1]], dtype=complex)

PAULI_1Q = {"I": _I2, "X": _X, "Y": _Y, "Z": _Z}


def num_qubits_from_dim(dim):
    """Qubit count n with 2^n = dim, or raise for non-supported dimensions."""
    n = int(round(np.log2(dim)))
    if 2**n != dim or n not in SUPPORTED_QUBITS:
        raise ValueError("unsupported qubit count")
    return n


def num_qubits_from_bloch_len(length):
    """Qubit count n with 4^n - 1 = length."""
    for n in SUPPORTED_QUBITS:
        if 4**n - 1 == length:
            return n
    raise ValueError("unsupported qubit count")


@lru_cache(maxsize=None)
def _pauli_basis_cached(n):
    if n not in SUPPORTED_QUBITS:
        raise ValueError("unsupported qubit count")
    symbols = "IXYZ"
    basis = []
    # Lexicographic order over symbol tuples with I < X < Y < Z,
    # identity string excluded.
    from itertools import product

    for combo in product(symbols, repeat=n):
        if all(c == "I" for c in combo):
            continue
        mat = PAULI_1Q[combo[0]]
        for c in combo[1:]:
            mat = np.kron(mat, PAULI_1Q[c])
        basis.append(mat)
    return tuple(m.copy() for m in basis)


def pauli_basis(n):
    """All 4^n - 1 non-identity Pauli strings on n qubits, lexicographic order."""
    return [m.copy() for m in _pauli_basis_cached(n)]


def _pauli_stack(n):
    return np.stack(_pauli_basis_cached(n))


def check_density(rho, tol=TOL_STRUCT):
    """Validate Hermiticity, unit trace and positivity of a density matrix."""
    rho = np.asarray(rho, dtype=complex)
    if rho.ndim != 2 or rho.shape[0] != rho.shape[1]:
        raise ValueError("density matrix must be square")
    num_qubits_from_dim(rho.shape[0])
    if np.max(np.abs(rho - rho.conj().T)) > tol:
        raise ValueError("density matrix is not Hermitian")
    if abs(np.trace(rho).real - 1.0) > tol or abs(np.trace(rho).imag) > tol:
        raise ValueError("density matrix trace differs from 1")
    if np.min(np.linalg.eigvalsh(rho)) < -tol:
        raise ValueError("density matrix has negative eigenvalues")
    return rho


def bloch_from_density(rho):
    """Bloch components r_i = Tr[rho P_i] in pauli_basis order."""
    rho = np.asarray(rho, dtype=complex)
    n = num_qubits_from_dim(rho.shape[0])
    stack = _pauli_stack(n)
    # Tr[rho P] = sum over elementwise product with P transposed.
    r = np.einsum("kij,ji->k", stack, rho)
    return r.real.copy()


def density_from_bloch(r):
    """Density matrix (1/2^n)(I + sum_i r_i P_i) for a Bloch vector r.

    Only the pure-state norm bound is checked; positivity is the caller's
    concern (slightly unphysical vectors appear during network training).
    """
    r = np.asarray(r, dtype=float)
    n = num_qubits_from_bloch_len(r.shape[0])
    norm_sq = float(r @ r)
    if norm_sq > 2**n - 1 + 1e-8:
        raise ValueError("unphysical Bloch vector")
    dim = 2**n
    stack = _pauli_stack(n)
    rho = (np.eye(dim, dtype=complex) + np.tensordot(r, stack, axes=1)) / dim
    return rho


def purity(rho):
    """Tr[rho^2]; equals (1 + ||r||^2) / 2^n in Bloch form."""
    rho = np.asarray(rho, dtype=complex)
    num_qubits_from_dim(rho.shape[0])
    return float(np.trace(rho @ rho).real)


def purity_from_bloch(r):
    """Purity computed from a Bloch vector: (1 + ||r||^2) / 2^n."""
    r = np.asarray(r, dtype=float)
    n = num_qubits_from_bloch_len(r.shape[0])
    return (1.0 + float(r @ r)) / 2**n


def hermitian_sqrt(mat, tol=1e-9):
    """Principal square root of a Hermitian PSD matrix via eigendecomposition.

    Eigenvalues below zero (floating-point noise) are clipped to 0.
    """
    mat = np.asarray(mat, dtype=complex)
    if np.max(np.abs(mat - mat.conj().T)) > tol:
        raise ValueError("hermitian_sqrt requires a Hermitian matrix")
    vals, vecs = np.linalg.eigh(mat)
    vals = np.clip(vals, 0.0, None)
    return (vecs * np.sqrt(vals)) @ vecs.conj().T


def fidelity_general(rho, sigma):
    """Uhlmann fidelity Tr[sqrt(sqrt(rho) sigma sqrt(rho))]^2, clipped to [0, 1]."""
    rho = np.asarray(rho, dtype=complex)
    sigma = np.asarray(sigma, dtype=complex)
    if rho.shape != sigma.shape:
        raise ValueError("dimension mismatch")
    sq = hermitian_sqrt(rho)
    inner = sq @ sigma @ sq
    vals = np.linalg.eigvalsh((inner + inner.conj().T) / 2)
    f = float(np.sum(np.sqrt(np.clip(vals, 0.0, None))) ** 2)
    return min(max(f, 0.0), 1.0)


def fidelity_pure(rho, sigma, tol=1e-6):
    """Overlap Tr[rho sigma], valid only when both states are pure."""
    rho = np.asarray(rho, dtype=complex)
    sigma = np.asarray(sigma, dtype=complex)
    if rho.shape != sigma.shape:
        raise ValueError("dimension mismatch")
    if abs(purity(rho) - 1.0) > tol or abs(purity(sigma) - 1.0) > tol:
        raise ValueError("pure-state fidelity requires pure states")
    return float(np.trace(rho @ sigma).real)


def fidelity_mixed_alt(rho, sigma):
    """Normalized overlap |Tr[rho sigma]| / sqrt(Tr[rho^2] Tr[sigma^2])."""
    rho = np.asarray(rho, dtype=complex)
    sigma = np.asarray(sigma, dtype=complex)
    if rho.shape != sigma.shape:
        raise ValueError("dimension mismatch")
    overlap = abs(np.trace(rho @ sigma).real)
    return float(overlap / np.sqrt(purity(rho) * purity(sigma)))


def fidelity_bloch_1q(r, s):
    """Single-qubit fidelity from Bloch vectors.

    F = (1 + r.s + sqrt((1 - ||r||^2)(1 - ||s||^2))) / 2, with each
    square-root argument clipped at 0 to absorb floating-point noise.
    """
    r = np.asarray(r, dtype=float)
    s = np.asarray(s, dtype=float)
    if r.shape != (3,) or s.shape != (3,):
        raise ValueError("fidelity_bloch_1q requires single-qubit Bloch vectors")
    rr = max(0.0, 1.0 - float(r @ r))
    ss = max(0.0, 1.0 - float(s @ s))
    f = 0.5 * (1.0 + float(r @ s) + np.sqrt(rr * ss))
    return min(max(f, 0.0), 1.0)
