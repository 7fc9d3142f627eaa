"""Zero-magnetization sector basis and tridiagonal operators.

A spin-1 condensate with all spin components sharing one spatial mode is a
three-mode boson problem.  Starting from every atom in m=0 the magnetization
Lz = n1 - n(-1) is conserved, so the dynamics stays in the Lz=0 sector
spanned by the pair states

    |k> = |n1=k, n0=N-2k, n-1=k>,      k = 0 .. floor(N/2).

In this basis the total-spin operator L^2 and the Hamiltonian

    H = (c1/N) L^2 - q n0

are real symmetric tridiagonal.  The closed-form matrix elements used here
are validated entrywise against the brute-force construction in
:mod:`spinsweep.oracle` (see tests).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

# A sector state is a complex amplitude vector over |k>, unit 2-norm.
StateVector = np.ndarray


@dataclass(frozen=True)
class SectorBasis:
    """Fock basis of the Lz=0 sector for N spin-1 atoms."""

    n_atoms: int

    def __post_init__(self):
        if self.n_atoms < 1:
            raise ValueError(f"n_atoms must be >= 1, got {self.n_atoms}")

    @property
    def dim(self) -> int:
        return self.n_atoms // 2 + 1

    def pair_counts(self) -> np.ndarray:
        """Number of (m=+1, m=-1) pairs k for each basis state."""
        return np.arange(self.dim)

    def n0_values(self) -> np.ndarray:
        """m=0 occupation N-2k for each basis state."""
        return self.n_atoms - 2.0 * np.arange(self.dim)


@dataclass(frozen=True)
class ModelParams:
    """Hamiltonian parameters: atom number, spin coupling c1, Zeeman q.

    c1 < 0 is ferromagnetic, c1 > 0 antiferromagnetic.  Energies are in the
    same (arbitrary) units as c1; the canonical convention is |c1| = 1 with
    q, time and sweep speed measured in |c1|, 1/|c1| and |c1|^2 (hbar = 1).
    """

    n_atoms: int
    c1: float
    q: float

    def __post_init__(self):
        if self.n_atoms < 1:
            raise ValueError(f"n_atoms must be >= 1, got {self.n_atoms}")
        if not math.isfinite(self.c1) or self.c1 == 0.0:
            raise ValueError(f"c1 must be finite and nonzero, got {self.c1}")
        if not math.isfinite(self.q):
            raise ValueError(f"q must be finite, got {self.q}")

    @property
    def basis(self) -> SectorBasis:
        return SectorBasis(self.n_atoms)


def canonicalize(params: ModelParams) -> ModelParams:
    """Rescale energies by 1/|c1| so that c1 becomes +-1."""
    scale = abs(params.c1)
    return ModelParams(params.n_atoms, math.copysign(1.0, params.c1), params.q / scale)


@dataclass(frozen=True)
class TridiagonalOperator:
    """Real symmetric tridiagonal operator on the sector basis.

    Only the diagonal and one off-diagonal are stored; symmetry is
    structural.  Arrays are frozen after construction.
    """

    diag: np.ndarray
    offdiag: np.ndarray

    def __post_init__(self):
        diag = np.asarray(self.diag, dtype=np.float64)
        offdiag = np.asarray(self.offdiag, dtype=np.float64)
        if diag.ndim != 1 or offdiag.ndim != 1:
            raise ValueError("diag and offdiag must be one-dimensional")
        if offdiag.shape[0] != max(diag.shape[0] - 1, 0):
            raise ValueError(
                f"offdiag length {offdiag.shape[0]} does not match diag length {diag.shape[0]}"
            )
        if not (np.all(np.isfinite(diag)) and np.all(np.isfinite(offdiag))):
            raise ValueError("operator entries must be finite")
        diag.setflags(write=False)
        offdiag.setflags(write=False)
        object.__setattr__(self, "diag", diag)
        object.__setattr__(self, "offdiag", offdiag)

    @property
    def dim(self) -> int:
        return self.diag.shape[0]

    def matvec(self, x: np.ndarray) -> np.ndarray:
        """Apply the operator to a vector."""
        y = self.diag * x
        if self.dim > 1:
            y[:-1] += self.offdiag * x[1:]
            y[1:] += self.offdiag * x[:-1]
        return y

    def expectation(self, state: StateVector) -> float:
        """<state|A|state> for a normalized state (real by symmetry)."""
        return float(np.real(np.vdot(state, self.matvec(state))))

    def dense(self) -> np.ndarray:
        """Dense matrix form; intended for small dimensions only."""
        a = np.diag(self.diag)
        if self.dim > 1:
            a += np.diag(self.offdiag, 1) + np.diag(self.offdiag, -1)
        return a

    def gershgorin_bounds(self) -> tuple[float, float]:
        """Interval [lo, hi] guaranteed to contain the whole spectrum."""
        radius = np.zeros(self.dim)
        if self.dim > 1:
            abs_e = np.abs(self.offdiag)
            radius[:-1] += abs_e
            radius[1:] += abs_e
        return float(np.min(self.diag - radius)), float(np.max(self.diag + radius))


def build_l2(basis: SectorBasis) -> TridiagonalOperator:
    """Total-spin operator L^2 restricted to the Lz=0 sector.

    Matrix elements (k = pair count, n0 = N-2k):

        <k|L^2|k>     = 2[(2k+1) n0 + k]
        <k+1|L^2|k>   = 2(k+1) sqrt(n0 (n0-1))

    following from L^2 = (L+L- + L-L+)/2 + Lz^2 with bosonic ladder action.
    """
    n = basis.n_atoms
    k = np.arange(basis.dim, dtype=np.float64)
    n0 = n - 2.0 * k
    diag = 2.0 * ((2.0 * k + 1.0) * n0 + k)
    kc = k[:-1]
    n0c = n0[:-1]
    offdiag = 2.0 * (kc + 1.0) * np.sqrt(n0c * (n0c - 1.0))
    return TridiagonalOperator(diag, offdiag)


def n0_diagonal(basis: SectorBasis) -> np.ndarray:
    """Diagonal of the m=0 number operator in the sector basis."""
    return basis.n0_values()


def build_hamiltonian(params: ModelParams) -> TridiagonalOperator:
    """H = (c1/N) L^2 - q n0 on the Lz=0 sector."""
    basis = params.basis
    l2 = build_l2(basis)
    scale = params.c1 / params.n_atoms
    diag = scale * l2.diag - params.q * n0_diagonal(basis)
    return TridiagonalOperator(diag, scale * l2.offdiag)


def product_state_m0(basis: SectorBasis) -> StateVector:
    """All atoms in m=0: unit amplitude on the k=0 basis state."""
    psi = np.zeros(basis.dim, dtype=np.complex128)
    psi[0] = 1.0
    return psi
