"""Time-dependent Schroedinger propagation along a linear Zeeman sweep.

The sweep q(t) runs a straight line from q_start to q_end at speed v
(units |c1|^2, hbar = 1).  Time stepping is a fourth-order commutator-free
split: each step applies two constant-Hamiltonian exponentials built at
Gauss-node combinations of q.  Each exponential is a Chebyshev expansion
with Bessel-function coefficients truncated at machine precision; the
normalization interval comes from Gershgorin bounds refreshed in blocks of
the ramp (H is affine in q, so the bounds over any q interval are attained
at its end points).  Nothing is renormalized, so the reported norm drift is
a genuine accuracy diagnostic.

The ferromagnetic protocol (c1 < 0) tracks the ground state; the
antiferromagnetic one (c1 > 0) tracks the highest eigenstate, i.e. the
ground state of -H, with the sweep approaching from negative q.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np
from numba import njit
from scipy.special import jv

from . import observables
from .errors import PropagationError, ScheduleMismatchError, StepConvergenceError
from .hilbert import ModelParams, StateVector, build_hamiltonian, build_l2, n0_diagonal
from .spectra import extreme_eigenpairs

_NORM_TOL = 1e-8
_COEFF_CUTOFF = 1e-16
_BLOCK_DQ = 0.3


@dataclass(frozen=True)
class SweepSchedule:
    """Linear ramp of q at constant speed, tracking one spectral branch."""

    q_start: float
    q_end: float
    speed: float
    branch: str = "ground"

    def __post_init__(self):
        if not (math.isfinite(self.speed) and self.speed > 0.0):
            raise ValueError(f"speed must be positive and finite, got {self.speed}")
        if self.q_start == self.q_end:
            raise ValueError("q_start and q_end must differ (sweep duration would be zero)")
        if self.branch not in ("ground", "highest"):
            raise ValueError(f"branch must be 'ground' or 'highest', got {self.branch!r}")

    @property
    def duration(self) -> float:
        return abs(self.q_start - self.q_end) / self.speed

    def q_at(self, t: float) -> float:
        frac = min(max(t / self.duration, 0.0), 1.0)
        return self.q_start + (self.q_end - self.q_start) * frac


@dataclass(frozen=True)
class StepControl:
    """Step-size policy: at most dq_max of ramp and dt_max of time per step.

    With target_tol set, the propagation is repeated with halved steps until
    the final xi/N, Pe and N0/N all move by less than target_tol.
    """

    dq_max: float = 0.02
    dt_max: float = 0.05
    target_tol: float | None = None
    max_refinements: int = 8

    def __post_init__(self):
        if self.dq_max <= 0.0:
            raise ValueError("dq_max must be positive")
        if self.dt_max <= 0.0:
            raise ValueError("dt_max must be positive")

    def halved(self) -> "StepControl":
        return replace(self, dq_max=self.dq_max / 2.0, dt_max=self.dt_max / 2.0)


@dataclass(frozen=True)
class TrajectorySample:
    t: float
    q: float
    xi: float
    n0_fraction: float
    norm_error: float
    state: StateVector | None = None


@dataclass(frozen=True)
class PropagationResult:
    final_state: StateVector
    trajectory: list | None
    norm_drift: float
    steps_taken: int


@njit(cache=True, nogil=True, fastmath=True)
def _cheb_step(d, e, psi, coeffs, phase):
    # phase * sum_k coeffs[k] T_k(A) psi for tridiagonal A = (diag d, offdiag e)
    n = d.shape[0]
    order = coeffs.shape[0] - 1
    tp = psi.copy()
    tc = np.empty_like(psi)
    out = np.empty_like(psi)
    if n == 1:
        tc[0] = d[0] * psi[0]
    else:
        tc[0] = d[0] * psi[0] + e[0] * psi[1]
        for i in range(1, n - 1):
            tc[i] = d[i] * psi[i] + e[i - 1] * psi[i - 1] + e[i] * psi[i + 1]
        tc[n - 1] = d[n - 1] * psi[n - 1] + e[n - 2] * psi[n - 2]
    c0 = coeffs[0]
    c1 = coeffs[1] if order >= 1 else 0.0 * 1j
    for i in range(n):
        out[i] = c0 * tp[i] + c1 * tc[i]
    tn = np.empty_like(psi)
    for k in range(2, order + 1):
        if n == 1:
            tn[0] = 2.0 * d[0] * tc[0] - tp[0]
        else:
            tn[0] = 2.0 * (d[0] * tc[0] + e[0] * tc[1]) - tp[0]
            for i in range(1, n - 1):
                tn[i] = 2.0 * (d[i] * tc[i] + e[i - 1] * tc[i - 1] + e[i] * tc[i + 1]) - tp[i]
            tn[n - 1] = 2.0 * (d[n - 1] * tc[n - 1] + e[n - 2] * tc[n - 2]) - tp[n - 1]
        ck = coeffs[k]
        for i in range(n):
            out[i] += ck * tn[i]
        swap = tp
        tp = tc
        tc = tn
        tn = swap
    for i in range(n):
        out[i] = phase * out[i]
    return out


def _cheb_order(tau: float) -> int:
    # smallest K with the Bessel tail (e tau / 2K)^K / sqrt(2 pi K) below cutoff
    target = math.log(1e-17)
    k = int(tau) + 8
    while k * (1.0 + math.log(tau / 2.0) - math.log(k)) - 0.5 * math.log(2.0 * math.pi * k) > target:
        k += 8
    return k


def _cheb_coeffs(tau: float) -> np.ndarray:
    """Expansion coefficients (2 - delta_k0) (-i)^k J_k(tau), truncated."""
    if tau <= 0.0:
        return np.array([1.0 + 0.0j])
    bessel = jv(np.arange(_cheb_order(tau) + 1), tau)
    big = np.nonzero(np.abs(bessel) > _COEFF_CUTOFF)[0]
    order = max(int(big[-1]), 1) if big.size else 1
    coeffs = 2.0 * ((-1j) ** np.arange(order + 1)) * bessel[: order + 1]
    coeffs[0] *= 0.5
    return np.ascontiguousarray(coeffs, dtype=np.complex128)


def _check_branch(params: ModelParams, schedule: SweepSchedule) -> None:
    if schedule.branch == "ground" and params.c1 > 0:
        raise ScheduleMismatchError("branch='ground' requires ferromagnetic coupling c1 < 0")
    if schedule.branch == "highest" and params.c1 < 0:
        raise ScheduleMismatchError("branch='highest' requires antiferromagnetic coupling c1 > 0")


def evolve_sweep(
    params: ModelParams,
    schedule: SweepSchedule,
    initial: StateVector,
    control: StepControl | None = None,
    record_every: int | None = None,
    record_states: bool = False,
) -> PropagationResult:
    """Propagate `initial` through the sweep; returns the final state.

    `record_every` samples the trajectory every that many steps (plus the
    endpoints) at observable level; `record_states` additionally stores
    state snapshots.  With `control.target_tol` set, steps are refined until
    the final observables are converged to that tolerance (raises
    StepConvergenceError, carrying the achieved tolerance, if
    max_refinements is not enough).
    """
    control = control if control is not None else StepControl()
    _check_branch(params, schedule)
    norm0 = np.linalg.norm(initial)
    if abs(norm0 - 1.0) > 1e-8:
        raise ValueError(f"initial state is not normalized: ||psi|| = {norm0}")

    if control.target_tol is None:
        return _evolve_fixed(params, schedule, initial, control, record_every, record_states)

    tol = control.target_tol
    params_end = ModelParams(params.n_atoms, params.c1, schedule.q_end)
    base = replace(control, target_tol=None)
    prev = _evolve_fixed(params, schedule, initial, base, record_every, record_states)
    prev_obs = _final_observables(params_end, prev.final_state)
    achieved = math.inf
    for _ in range(control.max_refinements):
        base = base.halved()
        cur = _evolve_fixed(params, schedule, initial, base, record_every, record_states)
        cur_obs = _final_observables(params_end, cur.final_state)
        achieved = max(abs(a - b) for a, b in zip(cur_obs, prev_obs))
        if achieved < tol:
            return cur
        prev, prev_obs = cur, cur_obs
    raise StepConvergenceError(
        f"step refinement stalled at observable shift {achieved:.3e} (target {tol:.3e})",
        achieved_tol=achieved,
    )


def _final_observables(params: ModelParams, state: StateVector) -> tuple:
    basis = params.basis
    xi_n = observables.entanglement_depth(basis, state).xi / params.n_atoms
    return (
        xi_n,
        excitation_probability(params, state),
        observables.n0_fraction(basis, state),
    )


# Gauss nodes and weights of the fourth-order commutator-free split
_NODE_LO = 0.5 - math.sqrt(3.0) / 6.0
_NODE_HI = 0.5 + math.sqrt(3.0) / 6.0
_W_MINUS = (3.0 - 2.0 * math.sqrt(3.0)) / 6.0
_W_PLUS = (3.0 + 2.0 * math.sqrt(3.0)) / 6.0


def _evolve_fixed(params, schedule, initial, control, record_every, record_states):
    basis = params.basis
    n = params.n_atoms
    l2 = build_l2(basis)
    scale = params.c1 / n
    h_l2_diag = scale * l2.diag
    h_off = np.ascontiguousarray(scale * l2.offdiag)
    n0 = n0_diagonal(basis)

    radius = np.zeros(basis.dim)
    if basis.dim > 1:
        abs_e = np.abs(h_off)
        radius[:-1] += abs_e
        radius[1:] += abs_e

    duration = schedule.duration
    n_steps = max(
        1,
        math.ceil(abs(schedule.q_start - schedule.q_end) / control.dq_max),
        math.ceil(duration / control.dt_max) if math.isfinite(control.dt_max) else 1,
    )
    dt = duration / n_steps
    dq_step = abs(schedule.q_start - schedule.q_end) / n_steps
    steps_per_block = max(1, int(_BLOCK_DQ / dq_step)) if dq_step > 0 else n_steps

    psi = initial.astype(np.complex128, copy=True)
    trajectory = [] if record_every is not None else None
    if trajectory is not None:
        trajectory.append(_sample(basis, n, psi, 0.0, schedule.q_start, 0.0, record_states))

    # block state: one normalization/coefficient set per q block
    coeffs = None
    phase = 0.0j
    dnorm_base = dnorm_slope = enorm = None

    max_drift = 0.0
    for step in range(n_steps):
        if step % steps_per_block == 0:
            first = step * dt
            last = min((step + steps_per_block) * dt, duration)
            # pad covers the fourth-order split's overshoot past the nodes
            pad = 0.1 * dq_step
            qs = (schedule.q_at(first), schedule.q_at(last))
            q_lo, q_hi = min(qs) - pad, max(qs) + pad
            lo = math.inf
            hi = -math.inf
            for q in (q_lo, q_hi):
                diag_q = h_l2_diag - q * n0
                lo = min(lo, float(np.min(diag_q - radius)))
                hi = max(hi, float(np.max(diag_q + radius)))
            center = 0.5 * (hi + lo)
            half_width = 0.5 * (hi - lo)
            coeffs = _cheb_coeffs(half_width * dt / 2.0)
            phase = complex(np.exp(-1j * center * dt / 2.0))
            if half_width > 0.0:
                dnorm_base = np.ascontiguousarray((h_l2_diag - center) / half_width)
                dnorm_slope = np.ascontiguousarray(n0 / half_width)
                enorm = np.ascontiguousarray(h_off / half_width)
            else:
                dnorm_base = np.zeros(basis.dim)
                dnorm_slope = np.zeros(basis.dim)
                enorm = h_off

        t0 = step * dt
        qa = schedule.q_at(t0 + _NODE_LO * dt)
        qb = schedule.q_at(t0 + _NODE_HI * dt)
        psi = _cheb_step(dnorm_base - (_W_PLUS * qa + _W_MINUS * qb) * dnorm_slope,
                         enorm, psi, coeffs, phase)
        psi = _cheb_step(dnorm_base - (_W_MINUS * qa + _W_PLUS * qb) * dnorm_slope,
                         enorm, psi, coeffs, phase)
        drift = abs(1.0 - float(np.linalg.norm(psi)))
        max_drift = max(max_drift, drift)
        if drift > _NORM_TOL:
            raise PropagationError(
                f"norm drift {drift:.3e} exceeded {_NORM_TOL:.1e} at step {step + 1}/{n_steps}"
            )
        if trajectory is not None:
            t_now = (step + 1) * dt
            is_last = step == n_steps - 1
            if is_last or (step + 1) % record_every == 0:
                trajectory.append(
                    _sample(basis, n, psi, t_now, schedule.q_at(t_now), drift, record_states)
                )

    return PropagationResult(
        final_state=psi,
        trajectory=trajectory,
        norm_drift=max_drift,
        steps_taken=n_steps,
    )


def _sample(basis, n_atoms, psi, t, q, drift, keep_state):
    return TrajectorySample(
        t=t,
        q=q,
        xi=observables.l2_expectation(basis, psi) / n_atoms,
        n0_fraction=observables.n0_fraction(basis, psi),
        norm_error=drift,
        state=psi.copy() if keep_state else None,
    )


def excitation_probability(params: ModelParams, state: StateVector) -> float:
    """Probability of not being in the tracked extreme eigenstate of H(params)."""
    which = "lowest" if params.c1 < 0 else "highest"
    pair = extreme_eigenpairs(build_hamiltonian(params), which, 1)[0]
    overlap = abs(np.vdot(pair.vector, state)) ** 2
    return float(min(max(1.0 - overlap, 0.0), 1.0))
