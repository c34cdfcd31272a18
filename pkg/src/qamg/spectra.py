"""Acceptance operators and Hermitian spectra.

The acceptance operator of a verifier circuit A on m message qubits with k
workspace qubits is Q[i,j] = <0|A(j)* P1 A(i)|0> restricted to the message
register: its eigenvalues are the acceptance probabilities of the optimal
witnesses.  Eigenproblems are solved by cyclic-by-rows complex Jacobi
rotations; deterministic and dependency-free, adequate for desk-scale dims.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence, Union

import numpy as np

from .circuits import Circuit, StateVector, apply_circuit, output_qubit_projector
from .exact import ExactScalar

JACOBI_MAX_SWEEPS = 64
JACOBI_REL_TOL = 1e-12
_EIG_DIM_CAP = 1 << 14

MESSAGE_FIRST = "message_first"
WORK_FIRST = "work_first"


class ConvergenceError(RuntimeError):
    pass


@dataclass(frozen=True)
class SpectralDecomposition:
    """Eigenvalues in descending order; vectors[:, i] pairs with eigenvalues[i]."""

    eigenvalues: np.ndarray
    vectors: np.ndarray

    def reconstruct(self) -> np.ndarray:
        return (self.vectors * self.eigenvalues) @ self.vectors.conj().T


def eig_hermitian(matrix: Union[np.ndarray, Sequence[Sequence[complex]]]) -> SpectralDecomposition:
    """Full eigensystem of a Hermitian matrix by cyclic complex Jacobi sweeps."""
    h = np.array(matrix, dtype=np.complex128)
    if h.ndim != 2 or h.shape[0] != h.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {h.shape}")
    n = h.shape[0]
    if n > _EIG_DIM_CAP:
        raise ValueError(f"dimension {n} exceeds cap {_EIG_DIM_CAP}")
    scale = max(1.0, float(np.abs(h).max(initial=0.0)))
    if float(np.abs(h - h.conj().T).max(initial=0.0)) > 1e-10 * scale:
        raise ValueError("matrix is not Hermitian within tolerance")
    h = 0.5 * (h + h.conj().T)
    vectors = np.eye(n, dtype=np.complex128)
    threshold = JACOBI_REL_TOL * max(np.linalg.norm(h), 1e-300)

    def off_norm() -> float:
        off = h - np.diag(np.diag(h))
        return float(np.linalg.norm(off))

    sweeps = 0
    while off_norm() > threshold:
        if sweeps >= JACOBI_MAX_SWEEPS:
            raise ConvergenceError(f"Jacobi did not converge in {JACOBI_MAX_SWEEPS} sweeps")
        for p in range(n - 1):
            for q in range(p + 1, n):
                hpq = h[p, q]
                mag = abs(hpq)
                if mag <= threshold / max(n, 1):
                    continue
                phase = hpq / mag
                tau = (h[p, p].real - h[q, q].real) / (2.0 * mag)
                if tau >= 0:
                    t = 1.0 / (tau + np.sqrt(1.0 + tau * tau))
                else:
                    t = -1.0 / (-tau + np.sqrt(1.0 + tau * tau))
                c = 1.0 / np.sqrt(1.0 + t * t)
                s = t * c
                rot = np.array([[c, -s * phase], [s * np.conj(phase), c]])
                h[[p, q], :] = rot.conj().T @ h[[p, q], :]
                h[:, [p, q]] = h[:, [p, q]] @ rot
                vectors[:, [p, q]] = vectors[:, [p, q]] @ rot
        sweeps += 1

    values = np.real(np.diag(h))
    order = np.argsort(-values, kind="stable")
    return SpectralDecomposition(values[order].copy(), vectors[:, order].copy())


def top_eigenpair(
    matrix_or_apply: Union[np.ndarray, Callable[[np.ndarray], np.ndarray]],
    dim: int,
    seed: int = 0,
    tol: float = 1e-12,
    max_iters: int = 20000,
) -> tuple[float, np.ndarray]:
    """Largest eigenpair of a PSD Hermitian operator by power iteration.

    Used where only the top of the spectrum is needed and dims outgrow the
    dense Jacobi path; deterministic for a fixed seed.
    """
    apply_op = matrix_or_apply if callable(matrix_or_apply) else (lambda v: matrix_or_apply @ v)
    rng = np.random.Generator(np.random.Philox(key=seed))
    v = rng.normal(size=dim) + 1j * rng.normal(size=dim)
    v /= np.linalg.norm(v)
    value = 0.0
    for _ in range(max_iters):
        w = apply_op(v)
        value = float(np.real(np.vdot(v, w)))
        residual = np.linalg.norm(w - value * v)
        if residual <= tol * max(1.0, abs(value)):
            break
        norm = np.linalg.norm(w)
        if norm == 0.0:
            return 0.0, v
        v = w / norm
    return value, v


def _message_basis_index(j: int, m: int, k: int, layout: str) -> int:
    if layout == MESSAGE_FIRST:
        return j << k
    if layout == WORK_FIRST:
        return j
    raise ValueError(f"unknown layout {layout!r}")


def _gram_operator(verifier: Circuit, m: int, k: int, layout: str, outcome: int) -> np.ndarray:
    _check_arities(verifier, m, k)
    dim = 1 << m
    mask = output_qubit_projector(0).outcome_one_mask(verifier.width)
    if outcome == 0:
        mask = ~mask
    cols = np.empty((1 << verifier.width, dim), dtype=np.complex128)
    for j in range(dim):
        st = StateVector.basis(verifier.width, _message_basis_index(j, m, k, layout))
        cols[:, j] = apply_circuit(st, verifier).vec
    cols[~mask, :] = 0.0
    q = cols.conj().T @ cols
    return 0.5 * (q + q.conj().T)


def _gram_operator_exact(
    verifier: Circuit, m: int, k: int, layout: str, outcome: int
) -> list[list[ExactScalar]]:
    _check_arities(verifier, m, k)
    dim = 1 << m
    mask = output_qubit_projector(0).outcome_one_mask(verifier.width)
    if outcome == 0:
        mask = ~mask
    cols = []
    for j in range(dim):
        st = StateVector.basis(verifier.width, _message_basis_index(j, m, k, layout), exact=True)
        cols.append(apply_circuit(st, verifier).project(mask))
    return [[cols[i].inner(cols[j]) for j in range(dim)] for i in range(dim)]


def acceptance_operator(
    verifier: Circuit, m: int, k: int, layout: str = MESSAGE_FIRST
) -> np.ndarray:
    """Float acceptance operator on the 2^m message space."""
    return _gram_operator(verifier, m, k, layout, 1)


def acceptance_operator_exact(
    verifier: Circuit, m: int, k: int, layout: str = MESSAGE_FIRST
) -> list[list[ExactScalar]]:
    """Exact acceptance operator; entry [i][j] is <col_i, col_j>."""
    return _gram_operator_exact(verifier, m, k, layout, 1)


def rejection_operator(
    verifier: Circuit, m: int, k: int, layout: str = MESSAGE_FIRST
) -> np.ndarray:
    """Complementary operator; acceptance + rejection = identity."""
    return _gram_operator(verifier, m, k, layout, 0)


def rejection_operator_exact(
    verifier: Circuit, m: int, k: int, layout: str = MESSAGE_FIRST
) -> list[list[ExactScalar]]:
    return _gram_operator_exact(verifier, m, k, layout, 0)


def _check_arities(verifier: Circuit, m: int, k: int) -> None:
    if m < 0 or k < 0 or m + k != verifier.width:
        raise ValueError(
            f"message/workspace arities ({m},{k}) do not fit circuit width {verifier.width}"
        )


def max_acceptance(q: np.ndarray, clamp_tol: float = 1e-9) -> tuple[float, np.ndarray]:
    """Top acceptance probability and an optimal witness for an acceptance operator."""
    decomp = eig_hermitian(q)
    p1 = float(decomp.eigenvalues[0])
    if p1 < -clamp_tol or p1 > 1.0 + clamp_tol:
        raise ValueError(f"top eigenvalue {p1} outside [0,1] beyond tolerance")
    return min(1.0, max(0.0, p1)), decomp.vectors[:, 0].copy()


def acceptance_spectrum(q: np.ndarray, clamp_tol: float = 1e-9) -> SpectralDecomposition:
    """Full spectrum of an acceptance operator, eigenvalues clamped to [0,1]."""
    decomp = eig_hermitian(q)
    vals = decomp.eigenvalues
    if vals.size and (vals[-1] < -clamp_tol or vals[0] > 1.0 + clamp_tol):
        raise ValueError(f"eigenvalues {vals} outside [0,1] beyond tolerance")
    return SpectralDecomposition(np.clip(vals, 0.0, 1.0), decomp.vectors)


def partial_trace(
    state_or_density: np.ndarray, keep: Sequence[int], dims: Sequence[int]
) -> np.ndarray:
    """Reduced density matrix over `keep` (ascending original order)."""
    dims = list(dims)
    total = int(np.prod(dims))
    arr = np.asarray(state_or_density, dtype=np.complex128)
    if arr.ndim == 1:
        if arr.shape[0] != total:
            raise ValueError(f"state length {arr.shape[0]} != prod(dims) {total}")
        rho = np.outer(arr, arr.conj())
    elif arr.ndim == 2 and arr.shape == (total, total):
        rho = arr
    else:
        raise ValueError(f"bad shape {arr.shape} for dims {dims}")
    keep = sorted(set(keep))
    if any(i < 0 or i >= len(dims) for i in keep):
        raise ValueError(f"keep indices {keep} out of range for {len(dims)} subsystems")
    n = len(dims)
    rho = rho.reshape(dims + dims)
    # trace out complements pairwise, highest axis first to keep indices stable
    for i in reversed(range(n)):
        if i not in keep:
            rho = np.trace(rho, axis1=i, axis2=i + (rho.ndim // 2))
    kept_dim = int(np.prod([dims[i] for i in keep])) if keep else 1
    return rho.reshape(kept_dim, kept_dim)


def assert_density(rho: np.ndarray, atol: float = 1e-9) -> None:
    """Validate Hermiticity, unit trace, and positive semidefiniteness."""
    if rho.ndim != 2 or rho.shape[0] != rho.shape[1]:
        raise ValueError(f"density matrix must be square, got {rho.shape}")
    if float(np.abs(rho - rho.conj().T).max(initial=0.0)) > atol:
        raise ValueError("density matrix is not Hermitian within tolerance")
    if abs(float(np.trace(rho).real) - 1.0) > atol:
        raise ValueError(f"density matrix trace {np.trace(rho)} != 1")
    vals = eig_hermitian(rho).eigenvalues
    if vals.size and vals[-1] < -atol:
        raise ValueError(f"density matrix has negative eigenvalue {vals[-1]}")
