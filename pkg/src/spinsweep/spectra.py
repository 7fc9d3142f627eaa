"""Selected eigenpairs and spectral gaps of symmetric tridiagonal operators.

Only extreme eigenvalues are ever needed, at dimensions reaching ~1e6, so
eigenvalues are isolated by Sturm-sequence bisection and eigenvectors by
inverse iteration (LAPACK stebz/stein through scipy).  Every returned pair
is gated on its residual; an independent Sturm counter is provided for
self-consistency checks.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numba import njit
from scipy.linalg import eigh_tridiagonal, eigvalsh_tridiagonal

from .errors import EigensolverError
from .hilbert import ModelParams, StateVector, TridiagonalOperator, build_hamiltonian

_DENSE_FALLBACK_DIM = 2000
_RESIDUAL_REL = 1e-8


@dataclass(frozen=True)
class EigenPair:
    """Eigenvalue with residual-gated eigenvector (unit norm, complex dtype)."""

    value: float
    vector: StateVector


@dataclass(frozen=True)
class GapResult:
    """Two adjacent extreme eigenvalues and their difference."""

    e0: float
    e1: float
    gap: float


def spectral_scale(op: TridiagonalOperator) -> float:
    """Crude spectral-width scale ||diag||_inf + 2 ||offdiag||_inf."""
    scale = float(np.max(np.abs(op.diag)))
    if op.dim > 1:
        scale += 2.0 * float(np.max(np.abs(op.offdiag)))
    return scale


def _residuals(op: TridiagonalOperator, vals: np.ndarray, vecs: np.ndarray) -> np.ndarray:
    res = np.empty(vals.shape[0])
    for j in range(vals.shape[0]):
        v = vecs[:, j]
        res[j] = np.linalg.norm(op.matvec(v) - vals[j] * v)
    return res


def extreme_eigenpairs(op: TridiagonalOperator, which: str = "lowest", count: int = 1) -> list[EigenPair]:
    """`count` algebraically smallest or largest eigenpairs, ascending order.

    Eigenvalues come from bisection at machine tolerance; eigenvectors from
    inverse iteration (near-degenerate clusters are returned as an
    orthonormal basis of the cluster, LAPACK's default behaviour).  Raises
    EigensolverError with the worst residual if no driver meets the gate
    ||H v - w v|| <= 1e-8 * (||diag||_inf + 2 ||offdiag||_inf).
    """
    if which not in ("lowest", "highest"):
        raise ValueError(f"which must be 'lowest' or 'highest', got {which!r}")
    if count < 1:
        raise ValueError("count must be >= 1")
    if count > op.dim:
        raise ValueError(f"count {count} exceeds operator dimension {op.dim}")

    if op.dim == 1:
        vec = np.ones(1, dtype=np.complex128)
        return [EigenPair(float(op.diag[0]), vec)]

    if which == "lowest":
        select = (0, count - 1)
    else:
        select = (op.dim - count, op.dim - 1)

    gate = _RESIDUAL_REL * spectral_scale(op)
    worst = np.inf
    for driver in ("stebz", "stemr"):
        try:
            vals, vecs = eigh_tridiagonal(
                op.diag, op.offdiag, select="i", select_range=select,
                check_finite=False, lapack_driver=driver,
            )
        except np.linalg.LinAlgError:
            continue
        res = _residuals(op, vals, vecs)
        worst = min(worst, float(np.max(res)))
        if np.all(res <= gate):
            return [
                EigenPair(float(vals[j]), np.ascontiguousarray(vecs[:, j], dtype=np.complex128))
                for j in range(vals.shape[0])
            ]
    if op.dim <= _DENSE_FALLBACK_DIM:
        vals, vecs = np.linalg.eigh(op.dense())
        vals, vecs = vals[select[0]:select[1] + 1], vecs[:, select[0]:select[1] + 1]
        res = _residuals(op, vals, vecs)
        worst = min(worst, float(np.max(res)))
        if np.all(res <= gate):
            return [
                EigenPair(float(vals[j]), np.ascontiguousarray(vecs[:, j], dtype=np.complex128))
                for j in range(vals.shape[0])
            ]
    raise EigensolverError(
        f"inverse iteration stagnated: best residual {worst:.3e} exceeds gate {gate:.3e} "
        f"(dim={op.dim}, which={which}, count={count})"
    )


def extreme_eigenvalues(op: TridiagonalOperator, which: str = "lowest", count: int = 1) -> np.ndarray:
    """Eigenvalues only (no inverse iteration), ascending."""
    if count > op.dim:
        raise ValueError(f"count {count} exceeds operator dimension {op.dim}")
    if op.dim == 1:
        return op.diag.astype(np.float64)
    select = (0, count - 1) if which == "lowest" else (op.dim - count, op.dim - 1)
    return eigvalsh_tridiagonal(
        op.diag, op.offdiag, select="i", select_range=select,
        check_finite=False, lapack_driver="stebz",
    )


def gap(params: ModelParams) -> GapResult:
    """Energy gap of the tracked branch.

    Ferromagnetic (c1 < 0): difference of the two lowest eigenvalues of H.
    Antiferromagnetic (c1 > 0): difference of the two highest, i.e. the gap
    of the ground branch of -H.
    """
    op = build_hamiltonian(params)
    if op.dim < 2:
        raise ValueError(f"gap undefined for a {op.dim}-dimensional sector (N={params.n_atoms})")
    which = "lowest" if params.c1 < 0 else "highest"
    vals = extreme_eigenvalues(op, which, 2)
    return GapResult(e0=float(vals[0]), e1=float(vals[1]), gap=float(vals[1] - vals[0]))


@njit(cache=True)
def _sturm_count_kernel(diag, offdiag, shift):
    # LDL^T negcount: number of eigenvalues strictly below `shift`
    tiny = 1e-300
    count = 0
    t = diag[0] - shift
    if t < 0.0:
        count += 1
    for j in range(1, diag.shape[0]):
        if t == 0.0:
            t = tiny
        t = diag[j] - shift - offdiag[j - 1] * offdiag[j - 1] / t
        if t < 0.0:
            count += 1
    return count


def sturm_count(op: TridiagonalOperator, shift: float) -> int:
    """Number of eigenvalues of `op` below `shift` (Sturm sequence count)."""
    if op.dim == 1:
        return int(op.diag[0] < shift)
    return int(_sturm_count_kernel(op.diag, op.offdiag, float(shift)))
