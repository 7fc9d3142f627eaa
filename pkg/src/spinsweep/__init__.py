"""Exact diagonalization and adiabatic sweeps for a spin-1 condensate.

The model is the zero-magnetization sector of N spin-1 bosons in one
spatial mode: H = (c1/N) L^2 - q n0, with the quadratic Zeeman coefficient
q ramped across the polar phase transitions to turn a product state into a
massively entangled state near |L=N, Lz=0>.  Energies are measured in
|c1|, times in 1/|c1| and sweep speeds in |c1|^2 (hbar = 1).
"""

__version__ = "0.1.0"

from .errors import (
    EigensolverError,
    PropagationError,
    ScheduleMismatchError,
    SpinsweepError,
    StepConvergenceError,
    TransitionCountError,
)
from .hilbert import (
    ModelParams,
    SectorBasis,
    StateVector,
    TridiagonalOperator,
    build_hamiltonian,
    build_l2,
    canonicalize,
    n0_diagonal,
    product_state_m0,
)
from .spectra import EigenPair, GapResult, extreme_eigenpairs, extreme_eigenvalues, gap, sturm_count
from .observables import (
    DepthReport,
    LossModel,
    entanglement_depth,
    l2_expectation,
    loss_variance,
    loss_xi_estimate,
    n0_fraction,
    order_parameter,
)
from .dynamics import (
    PropagationResult,
    StepControl,
    SweepSchedule,
    TrajectorySample,
    evolve_sweep,
    excitation_probability,
)
from .scans import (
    PowerLawFit,
    ScanTable,
    fit_power_law,
    gap_curve,
    gap_scan,
    locate_transitions,
    phase_scan,
    required_sweep_time,
    speed_scan,
)

__all__ = [
    "__version__",
    "DepthReport",
    "EigenPair",
    "EigensolverError",
    "GapResult",
    "LossModel",
    "ModelParams",
    "PowerLawFit",
    "PropagationError",
    "PropagationResult",
    "ScanTable",
    "ScheduleMismatchError",
    "SectorBasis",
    "SpinsweepError",
    "StateVector",
    "StepControl",
    "StepConvergenceError",
    "SweepSchedule",
    "TrajectorySample",
    "TransitionCountError",
    "TridiagonalOperator",
    "build_hamiltonian",
    "build_l2",
    "canonicalize",
    "entanglement_depth",
    "evolve_sweep",
    "excitation_probability",
    "extreme_eigenpairs",
    "extreme_eigenvalues",
    "fit_power_law",
    "gap",
    "gap_curve",
    "gap_scan",
    "l2_expectation",
    "locate_transitions",
    "loss_variance",
    "loss_xi_estimate",
    "n0_diagonal",
    "n0_fraction",
    "order_parameter",
    "phase_scan",
    "product_state_m0",
    "required_sweep_time",
    "speed_scan",
    "sturm_count",
]
