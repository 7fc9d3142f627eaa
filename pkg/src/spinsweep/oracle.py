"""Brute-force reference on the full three-mode Fock space (small N only).

Builds dense collective-spin and occupation operators from the elementary
ladder action of a_m^dag a_n on Fock states |n1, n0, n-1>, then projects
commuting observables onto the Lz=0 sector.  Used exclusively by tests to
validate the closed-form tridiagonal construction in :mod:`spinsweep.hilbert`
and the solvers built on it.  Deliberately slow and dense; capped at N <= 12.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

_MAX_ATOMS = 12
_MODES = (1, 0, -1)  # magnetic quantum numbers, index order within tuples


@dataclass(frozen=True)
class FullFockBasis:
    """All occupation tuples (n1, n0, n-1) with n1 + n0 + n-1 = N."""

    n_atoms: int
    states: tuple

    @property
    def dim(self) -> int:
        return len(self.states)

    def index(self, state) -> int:
        return self.states.index(tuple(state))


def full_fock_basis(n_atoms: int) -> FullFockBasis:
    """Enumerate the full Fock space, lexicographic in (n1, n0)."""
    if n_atoms < 1:
        raise ValueError("n_atoms must be >= 1")
    if n_atoms > _MAX_ATOMS:
        raise ValueError(f"oracle is capped at N <= {_MAX_ATOMS}, got {n_atoms}")
    states = []
    for n1 in range(n_atoms + 1):
        for n0 in range(n_atoms - n1 + 1):
            states.append((n1, n0, n_atoms - n1 - n0))
    return FullFockBasis(n_atoms, tuple(states))


def _hopping(basis: FullFockBasis, m: int, n: int) -> np.ndarray:
    """Dense matrix of a_m^dag a_n."""
    im, jn = _MODES.index(m), _MODES.index(n)
    dim = basis.dim
    out = np.zeros((dim, dim))
    lookup = {s: i for i, s in enumerate(basis.states)}
    for col, state in enumerate(basis.states):
        occ_n = state[jn]
        if occ_n == 0:
            continue
        new = list(state)
        new[jn] -= 1
        amp = np.sqrt(occ_n)
        new[im] += 1
        amp *= np.sqrt(new[im])
        out[lookup[tuple(new)], col] = amp
    return out


def build_full_operators(n_atoms: int) -> dict:
    """Dense Lx, Ly, Lz, L2 and n0 on the full Fock space.

    The collective spin is assembled from L_mu = sum a_m^dag (f_mu)_mn a_n
    with the spin-1 matrices f_mu; equivalently below via the ladder
    combinations L+ = sqrt(2)(a1^dag a0 + a0^dag a-1).
    """
    basis = full_fock_basis(n_atoms)
    lp = np.sqrt(2.0) * (_hopping(basis, 1, 0) + _hopping(basis, 0, -1))
    lm = lp.T
    lx = 0.5 * (lp + lm)
    ly = -0.5j * (lp - lm)
    lz = _hopping(basis, 1, 1) - _hopping(basis, -1, -1)
    # ly is imaginary antisymmetric, so ly@ly is real; keep L2 a real array
    l2 = lx @ lx + np.real(ly @ ly) + lz @ lz
    n0 = _hopping(basis, 0, 0)
    return {
        "basis": basis,
        "Lx": lx,
        "Ly": ly,
        "Lz": lz,
        "L2": l2,
        "n0": n0,
    }


def lz0_indices(basis: FullFockBasis) -> np.ndarray:
    """Indices of the Lz=0 states ordered by pair count k = n1."""
    sel = [(s[0], i) for i, s in enumerate(basis.states) if s[0] == s[2]]
    sel.sort()
    return np.array([i for _, i in sel], dtype=np.intp)


def project_lz0(matrix: np.ndarray, basis: FullFockBasis, atol: float = 1e-10) -> np.ndarray:
    """Restrict a dense operator to the Lz=0 sector.

    Requires the operator to commute with Lz (checked); the restriction is
    then exact, with rows/columns ordered by pair count to match
    :class:`spinsweep.hilbert.SectorBasis`.
    """
    lz = _hopping(basis, 1, 1) - _hopping(basis, -1, -1)
    comm = matrix @ lz - lz @ matrix
    worst = np.max(np.abs(comm))
    if worst > atol * max(1.0, np.max(np.abs(matrix))):
        raise ValueError(f"operator does not commute with Lz (max |[A,Lz]| = {worst:.3e})")
    ix = lz0_indices(basis)
    return matrix[np.ix_(ix, ix)]


def sector_state_to_full(amplitudes: np.ndarray, basis: FullFockBasis) -> np.ndarray:
    """Embed a sector state into the full Fock space."""
    out = np.zeros(basis.dim, dtype=np.complex128)
    out[lz0_indices(basis)] = amplitudes
    return out
