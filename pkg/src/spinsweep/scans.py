"""Parameter scans: phase diagram, gap scaling, sweep-speed and sweep-time.

Every scan returns a ScanTable whose metadata is sufficient to reproduce it
bit for bit.  Grid points are independent; with workers > 1 they are
evaluated on a thread pool (LAPACK and the propagation kernel release the
GIL) and reassembled in grid order, so results do not depend on the worker
count.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import __version__
from .dynamics import StepControl, SweepSchedule, evolve_sweep, excitation_probability
from .errors import EigensolverError, TransitionCountError
from .hilbert import ModelParams, SectorBasis, build_hamiltonian, product_state_m0
from .observables import entanglement_depth, n0_fraction, order_parameter
from .spectra import extreme_eigenpairs, gap


@dataclass(frozen=True)
class ScanTable:
    """Named columnar scan result plus reproduction metadata."""

    name: str
    columns: dict
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        lengths = {k: len(v) for k, v in self.columns.items()}
        if len(set(lengths.values())) > 1:
            raise ValueError(f"columns must have equal length, got {lengths}")
        frozen = {}
        for k, v in self.columns.items():
            arr = np.asarray(v, dtype=np.float64)
            arr.setflags(write=False)
            frozen[k] = arr
        object.__setattr__(self, "columns", frozen)

    @property
    def n_rows(self) -> int:
        return len(next(iter(self.columns.values()))) if self.columns else 0


@dataclass(frozen=True)
class PowerLawFit:
    """Least-squares fit of y = prefactor * x**exponent on (log x, log y)."""

    prefactor: float
    exponent: float
    residual: float


def fit_power_law(x, y) -> PowerLawFit:
    """Fit y = a x^b by linear least squares in log-log space."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.size < 2:
        raise ValueError("need at least two points for a power-law fit")
    if np.any(x <= 0) or np.any(y <= 0):
        raise ValueError("power-law fit requires positive x and y")
    slope, intercept = np.polyfit(np.log(x), np.log(y), 1)
    resid = np.log(y) - (slope * np.log(x) + intercept)
    return PowerLawFit(
        prefactor=float(np.exp(intercept)),
        exponent=float(slope),
        residual=float(np.sqrt(np.mean(resid**2))),
    )


def _workers(workers: int | None) -> int:
    if workers is not None:
        return max(1, workers)
    return max(1, int(os.environ.get("SPINSWEEP_WORKERS", "1")))


def _map_ordered(fn, items, workers):
    count = _workers(workers)
    if count <= 1 or len(items) <= 1:
        return [fn(item) for item in items]
    with ThreadPoolExecutor(max_workers=count) as pool:
        return list(pool.map(fn, items))


def phase_scan(n_atoms: int, c1: float, q_grid, workers: int | None = None) -> ScanTable:
    """Tracked-branch state properties on a grid of q.

    Columns: q, n0_fraction, order_parameter, ground_energy (the energy of
    the tracked branch: the ground state for c1 < 0, the highest state for
    c1 > 0, i.e. the ground state of -H).  Solver failures leave NaN rows
    and are listed in metadata["failures"].
    """
    q_grid = np.asarray(q_grid, dtype=np.float64)
    if q_grid.ndim != 1 or q_grid.size == 0:
        raise ValueError("q_grid must be a nonempty 1-d array")
    if np.any(np.diff(q_grid) <= 0):
        raise ValueError("q_grid must be strictly increasing")
    basis = SectorBasis(n_atoms)
    which = "lowest" if c1 < 0 else "highest"

    failures = []

    def point(q):
        params = ModelParams(n_atoms, c1, float(q))
        try:
            pair = extreme_eigenpairs(build_hamiltonian(params), which, 1)[0]
        except EigensolverError as exc:
            return (float(q), math.nan, math.nan, math.nan, str(exc))
        frac = n0_fraction(basis, pair.vector)
        return (float(q), frac, order_parameter(basis, pair.vector), pair.value, None)

    rows = _map_ordered(point, list(q_grid), workers)
    for q, *_rest, err in rows:
        if err is not None:
            failures.append({"q": q, "error": err})
    return ScanTable(
        name="phase_scan",
        columns={
            "q": [r[0] for r in rows],
            "n0_fraction": [r[1] for r in rows],
            "order_parameter": [r[2] for r in rows],
            "ground_energy": [r[3] for r in rows],
        },
        metadata={
            "scan": "phase_scan",
            "n_atoms": n_atoms,
            "c1": c1,
            "q_grid": {"start": float(q_grid[0]), "stop": float(q_grid[-1]), "count": int(q_grid.size)},
            "failures": failures,
            "version": __version__,
        },
    )


def locate_transitions(table: ScanTable, min_separation: float = 1.0) -> list:
    """Transition estimates from the two dominant curvature peaks.

    Peaks of |second finite difference| of n0_fraction vs q, refined by an
    amplitude-weighted centroid over the peak neighborhood; the resolution
    is one grid step.  Raises TransitionCountError when fewer than two
    sufficiently separated peaks exist.
    """
    q = table.columns["q"]
    f = table.columns["n0_fraction"]
    if q.size < 5:
        raise ValueError("need at least 5 grid points to locate transitions")
    h_l = q[1:-1] - q[:-2]
    h_r = q[2:] - q[1:-1]
    d2 = 2.0 * (
        f[:-2] / (h_l * (h_l + h_r))
        - f[1:-1] / (h_l * h_r)
        + f[2:] / (h_r * (h_l + h_r))
    )
    mag = np.abs(d2)

    peaks = [
        i for i in range(1, mag.size - 1)
        if mag[i] >= mag[i - 1] and mag[i] >= mag[i + 1] and mag[i] > 0
    ]
    peaks.sort(key=lambda i: mag[i], reverse=True)
    chosen = []
    for i in peaks:
        if all(abs(q[i + 1] - q[j + 1]) >= min_separation for j in chosen):
            chosen.append(i)
        if len(chosen) == 2:
            break
    if len(chosen) < 2:
        found = [float(q[i + 1]) for i in chosen]
        raise TransitionCountError(
            f"found {len(chosen)} transition peak(s), expected 2", found
        )

    estimates = []
    for i in chosen:
        sel = slice(max(i - 1, 0), min(i + 2, mag.size))
        w = mag[sel]
        estimates.append(float(np.sum(w * q[1:-1][sel]) / np.sum(w)))
    return sorted(estimates)


def _golden_minimize(fn, lo: float, hi: float, xtol: float):
    """Golden-section minimum of a unimodal scalar function on [lo, hi]."""
    invphi = (math.sqrt(5.0) - 1.0) / 2.0
    a, b = float(lo), float(hi)
    c = b - invphi * (b - a)
    d = a + invphi * (b - a)
    fc, fd = fn(c), fn(d)
    while (b - a) > xtol:
        if fc < fd:
            b, d, fd = d, c, fc
            c = b - invphi * (b - a)
            fc = fn(c)
        else:
            a, c, fc = c, d, fd
            d = a + invphi * (b - a)
            fd = fn(d)
    return (c, fc) if fc <= fd else (d, fd)


def gap_curve(n_atoms: int, c1: float, q_grid, workers: int | None = None) -> ScanTable:
    """Tracked-branch energy gap on a grid of q (columns q, gap, e0, e1)."""
    q_grid = np.asarray(q_grid, dtype=np.float64)

    def point(q):
        res = gap(ModelParams(n_atoms, c1, float(q)))
        return (float(q), res.gap, res.e0, res.e1)

    rows = _map_ordered(point, list(q_grid), workers)
    return ScanTable(
        name="gap_curve",
        columns={
            "q": [r[0] for r in rows],
            "gap": [r[1] for r in rows],
            "e0": [r[2] for r in rows],
            "e1": [r[3] for r in rows],
        },
        metadata={
            "scan": "gap_curve",
            "n_atoms": n_atoms,
            "c1": c1,
            "q_grid": {"start": float(q_grid[0]), "stop": float(q_grid[-1]), "count": int(q_grid.size)},
            "version": __version__,
        },
    )


def gap_scan(
    n_list,
    c1: float,
    q_window: tuple | None = None,
    xtol: float = 1e-5,
    workers: int | None = None,
):
    """Minimum gap near the transition for each N, with a power-law fit.

    The minimum of gap(q) is found by golden-section search inside
    q_window (default [3.5, 4.5]|c1| on the side of the tracked
    transition).  Returns (ScanTable with columns n_atoms, q_min, min_gap,
    PowerLawFit of min_gap vs N).
    """
    n_list = [int(n) for n in n_list]
    if len(n_list) < 2:
        raise ValueError("gap_scan needs at least two atom numbers")
    if q_window is None:
        q_window = (3.5, 4.5) if c1 < 0 else (-4.5, -3.5)

    def point(n):
        def gap_at(q):
            return gap(ModelParams(n, c1, q)).gap

        q_min, g_min = _golden_minimize(gap_at, q_window[0], q_window[1], xtol)
        return (float(n), q_min, g_min)

    rows = _map_ordered(point, n_list, workers)
    table = ScanTable(
        name="gap_scan",
        columns={
            "n_atoms": [r[0] for r in rows],
            "q_min": [r[1] for r in rows],
            "min_gap": [r[2] for r in rows],
        },
        metadata={
            "scan": "gap_scan",
            "n_list": n_list,
            "c1": c1,
            "q_window": [float(q_window[0]), float(q_window[1])],
            "xtol": xtol,
            "version": __version__,
        },
    )
    fit = fit_power_law(table.columns["n_atoms"], table.columns["min_gap"])
    return table, fit


def _default_schedule(c1: float, speed: float) -> SweepSchedule:
    if c1 < 0:
        return SweepSchedule(6.0, 0.0, speed, "ground")
    return SweepSchedule(-6.0, 0.0, speed, "highest")


def speed_scan(
    n_atoms: int,
    c1: float,
    v_grid,
    schedule_base: SweepSchedule | None = None,
    control: StepControl | None = None,
    workers: int | None = None,
) -> ScanTable:
    """Final entanglement depth and excitation probability versus speed.

    Columns: v, xi_over_N, Pe.  Each point sweeps the default protocol
    (q: 6 -> 0 on the ground branch, mirrored for c1 > 0) from the product
    state at the given speed.
    """
    v_grid = np.asarray(v_grid, dtype=np.float64)
    if np.any(v_grid <= 0):
        raise ValueError("speeds must be positive")
    basis = SectorBasis(n_atoms)
    psi0 = product_state_m0(basis)
    control = control if control is not None else StepControl()

    def point(v):
        if schedule_base is None:
            sched = _default_schedule(c1, float(v))
        else:
            sched = SweepSchedule(schedule_base.q_start, schedule_base.q_end, float(v), schedule_base.branch)
        params = ModelParams(n_atoms, c1, sched.q_end)
        res = evolve_sweep(params, sched, psi0, control=control)
        xi = entanglement_depth(basis, res.final_state).xi
        pe = excitation_probability(params, res.final_state)
        return (float(v), xi / n_atoms, pe, res.norm_drift, res.steps_taken)

    rows = _map_ordered(point, list(v_grid), workers)
    sched0 = schedule_base if schedule_base is not None else _default_schedule(c1, 1.0)
    return ScanTable(
        name="speed_scan",
        columns={
            "v": [r[0] for r in rows],
            "xi_over_N": [r[1] for r in rows],
            "Pe": [r[2] for r in rows],
        },
        metadata={
            "scan": "speed_scan",
            "n_atoms": n_atoms,
            "c1": c1,
            "q_start": sched0.q_start,
            "q_end": sched0.q_end,
            "branch": sched0.branch,
            "dq_max": control.dq_max,
            "dt_max": control.dt_max,
            "max_norm_drift": max(r[3] for r in rows),
            "total_steps": int(sum(r[4] for r in rows)),
            "version": __version__,
        },
    )


def required_sweep_time(
    n_atoms: int,
    c1: float,
    xi_target_fraction: float,
    v_start: float = 1.0,
    t_rtol: float = 0.01,
    control: StepControl | None = None,
    max_expansions: int = 12,
    return_evaluations: bool = False,
):
    """Sweep duration T needed to reach a final depth xi >= fraction * N.

    Bisects (in log v) for the largest speed whose final xi meets the
    target, assuming xi(v) is monotone non-increasing; the bracket is
    widened (and the failure reported) if that assumption breaks.  Returns
    T = |q_start - q_end| / v at 1% relative tolerance, in units 1/|c1|.
    """
    if not 0.0 < xi_target_fraction < 1.0 + 1.0 / n_atoms:
        raise ValueError("xi_target_fraction must lie in (0, 1]")
    basis = SectorBasis(n_atoms)
    psi0 = product_state_m0(basis)
    control = control if control is not None else StepControl()
    target = xi_target_fraction * n_atoms
    evaluations = []

    def xi_at(v):
        sched = _default_schedule(c1, v)
        params = ModelParams(n_atoms, c1, sched.q_end)
        res = evolve_sweep(params, sched, psi0, control=control)
        xi = entanglement_depth(basis, res.final_state).xi
        evaluations.append({"v": v, "xi": xi, "norm_drift": res.norm_drift})
        return xi

    delta_q = abs(_default_schedule(c1, 1.0).q_start - _default_schedule(c1, 1.0).q_end)

    v = float(v_start)
    xi0 = xi_at(v)
    if xi0 >= target:
        v_lo, v_hi = v, None
        for _ in range(max_expansions):
            v *= 4.0
            if xi_at(v) < target:
                v_hi = v
                break
            v_lo = v
        if v_hi is None:
            raise RuntimeError(
                f"target depth still reached at v={v:g} after widening "
                f"{max_expansions} times; bracket not found"
            )
    else:
        v_hi, v_lo = v, None
        for _ in range(max_expansions):
            v /= 4.0
            if xi_at(v) >= target:
                v_lo = v
                break
            v_hi = v
        if v_lo is None:
            raise RuntimeError(
                f"target depth not reached even at v={v:g} after widening "
                f"{max_expansions} times; xi(v) may be non-monotone or the "
                f"target unreachable"
            )

    while v_hi / v_lo > 1.0 + t_rtol:
        v_mid = math.sqrt(v_lo * v_hi)
        if xi_at(v_mid) >= target:
            v_lo = v_mid
        else:
            v_hi = v_mid

    duration = delta_q / v_lo
    if return_evaluations:
        return duration, evaluations
    return duration
