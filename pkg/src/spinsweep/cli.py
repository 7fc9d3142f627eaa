"""Command-line front end: config parsing, unit conversion, CSV/plot output.

Commands mirror the scan library: phase-scan, gap-scan, sweep, speed-scan,
time-scaling, depth-report.  A run can be configured by a JSON file
(--config) with command-line flags overriding file values; every run
writes a metadata sidecar (<name>.meta.json) that parse_config accepts
back, reproducing the run exactly.  Scan-grid parallelism is controlled by
the SPINSWEEP_WORKERS environment variable.

Exit codes: 0 success, 2 malformed grid or value, 3 contradictory
branch/sign, 4 unknown config key, 5 I/O failure, 6 solver failure.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import sys
from dataclasses import asdict, dataclass, fields, replace
from pathlib import Path

import numpy as np

from . import __version__, observables, scans
from .dynamics import StepControl, SweepSchedule, evolve_sweep, excitation_probability
from .errors import SpinsweepError
from .hilbert import ModelParams, SectorBasis, build_hamiltonian, product_state_m0
from .spectra import extreme_eigenpairs

EXIT_OK = 0
EXIT_BAD_GRID = 2
EXIT_BRANCH_CONFLICT = 3
EXIT_UNKNOWN_KEY = 4
EXIT_IO = 5
EXIT_SOLVER = 6

COMMANDS = ("phase-scan", "gap-scan", "sweep", "speed-scan", "time-scaling", "depth-report")


class ConfigError(Exception):
    def __init__(self, message, exit_code):
        super().__init__(message)
        self.exit_code = exit_code


@dataclass(frozen=True)
class SpeciesPreset:
    """Named atom species with its spin-coupling frequency c1/(2 pi hbar)."""

    name: str
    c1_hz: float  # signed; c1'/hbar = 2*pi*c1_hz rad/s

    def __post_init__(self):
        if self.c1_hz == 0.0:
            raise ValueError("species preset needs a nonzero coupling frequency")


PRESETS = {
    "Rb87": SpeciesPreset("Rb87", -7.0),
    "Na23": SpeciesPreset("Na23", +50.0),
}


def convert_units(value: float, kind: str, preset: SpeciesPreset) -> float:
    """Convert a value in coupling units to physical units for a species.

    kind='time': 1/|c1| -> seconds; kind='rate': |c1| -> Hz (frequency);
    kind='speed': |c1|^2 -> Hz^2 equivalents are not needed, so only the
    first two are supported.
    """
    omega = 2.0 * math.pi * abs(preset.c1_hz)
    if kind == "time":
        return value / omega
    if kind == "rate":
        return value * omega / (2.0 * math.pi)
    raise ValueError(f"unknown unit kind {kind!r}")


# configuration keys accepted in a JSON config file; aliases map to fields
_ALIASES = {"N": "n_atoms", "v": "speed", "format": "formats"}


@dataclass(frozen=True)
class RunConfig:
    command: str
    n_atoms: int | None = None
    c1: float | None = None
    species: str | None = None
    q_start: float | None = None
    q_end: float | None = None
    speed: float | None = None
    branch: str | None = None
    grid: object = None
    n_list: object = None
    target: float = 0.5
    loss_rate: float | None = None
    q: float = 0.0
    out_dir: str = "."
    formats: object = ("csv",)
    dq_max: float | None = None
    dt_max: float | None = None
    record_every: int | None = None

    def resolved(self) -> "RunConfig":
        """Validate and fill defaults; raises ConfigError with an exit code."""
        if self.command not in COMMANDS:
            raise ConfigError(f"unknown command {self.command!r}", EXIT_BAD_GRID)

        c1 = self.c1
        if self.species is not None:
            if self.species not in PRESETS:
                raise ConfigError(f"unknown species {self.species!r}", EXIT_BAD_GRID)
            sign = math.copysign(1.0, PRESETS[self.species].c1_hz)
            if c1 is not None and math.copysign(1.0, c1) != sign:
                raise ConfigError(
                    f"c1={c1} contradicts species {self.species} "
                    f"(coupling sign {sign:+.0f})", EXIT_BRANCH_CONFLICT,
                )
            c1 = sign if c1 is None else c1
        if c1 is None:
            c1 = -1.0
        if c1 == 0.0 or not math.isfinite(c1):
            raise ConfigError("c1 must be finite and nonzero", EXIT_BAD_GRID)

        branch = self.branch
        if branch is None:
            branch = "ground" if c1 < 0 else "highest"
        if branch not in ("ground", "highest"):
            raise ConfigError(f"branch must be ground|highest, got {branch!r}", EXIT_BAD_GRID)
        if (branch == "ground") != (c1 < 0):
            raise ConfigError(
                f"branch={branch!r} contradicts the sign of c1={c1}", EXIT_BRANCH_CONFLICT
            )

        q_start = self.q_start
        if q_start is None:
            q_start = 6.0 if c1 < 0 else -6.0
        q_end = 0.0 if self.q_end is None else self.q_end

        formats = self.formats
        if isinstance(formats, str):
            formats = tuple(part.strip() for part in formats.split(",") if part.strip())
        formats = tuple(formats)
        for fmt in formats:
            if fmt not in ("csv", "gnuplot"):
                raise ConfigError(f"unknown output format {fmt!r}", EXIT_BAD_GRID)

        n_list = self.n_list
        if isinstance(n_list, str):
            try:
                n_list = [int(part) for part in n_list.split(",") if part.strip()]
            except ValueError as exc:
                raise ConfigError(f"malformed n_list: {exc}", EXIT_BAD_GRID) from None
        if n_list is not None:
            n_list = [int(n) for n in n_list]

        needs_atoms = self.command in ("phase-scan", "sweep", "speed-scan", "depth-report")
        if needs_atoms:
            if self.n_atoms is None or self.n_atoms < 1:
                raise ConfigError(
                    f"command {self.command} needs a positive n_atoms", EXIT_BAD_GRID
                )
        if self.command in ("gap-scan", "time-scaling") and not n_list:
            raise ConfigError(f"command {self.command} needs n_list", EXIT_BAD_GRID)
        if self.command == "sweep" and (self.speed is None or self.speed <= 0):
            raise ConfigError("command sweep needs a positive speed", EXIT_BAD_GRID)
        if not 0.0 < self.target < 1.0 + 1e-9:
            raise ConfigError("target fraction must lie in (0, 1]", EXIT_BAD_GRID)
        if self.loss_rate is not None and not 0.0 <= self.loss_rate < 1.0:
            raise ConfigError("loss_rate must lie in [0, 1)", EXIT_BAD_GRID)

        return replace(
            self, c1=c1, branch=branch, q_start=q_start, q_end=q_end,
            formats=formats, n_list=n_list,
        )

    def step_control(self) -> StepControl:
        kwargs = {}
        if self.dq_max is not None:
            kwargs["dq_max"] = self.dq_max
        if self.dt_max is not None:
            kwargs["dt_max"] = self.dt_max
        return StepControl(**kwargs)

    def to_dict(self) -> dict:
        out = asdict(self)
        out["formats"] = list(self.formats) if self.formats is not None else None
        return out


def parse_config(source=None, overrides=None) -> RunConfig:
    """Build a validated RunConfig from a JSON file and/or override values.

    `source` may be a path to a config file or a metadata sidecar written
    by a previous run (the "config" section is then used).  `overrides`
    is a mapping of field names to values taking precedence over the file.
    Unknown keys raise ConfigError (exit code 4).
    """
    merged = {}
    if source is not None:
        try:
            raw = json.loads(Path(source).read_text())
        except OSError as exc:
            raise ConfigError(f"cannot read config {source}: {exc}", EXIT_IO) from None
        except json.JSONDecodeError as exc:
            raise ConfigError(f"malformed JSON in {source}: {exc}", EXIT_BAD_GRID) from None
        if not isinstance(raw, dict):
            raise ConfigError(f"config {source} must hold a JSON object", EXIT_BAD_GRID)
        if "config" in raw and isinstance(raw["config"], dict):
            raw = raw["config"]
        merged.update(raw)
    if overrides:
        merged.update({k: v for k, v in overrides.items() if v is not None})

    known = {f.name for f in fields(RunConfig)}
    cleaned = {}
    for key, value in merged.items():
        name = _ALIASES.get(key, key)
        if name not in known:
            raise ConfigError(f"unknown config key {key!r}", EXIT_UNKNOWN_KEY)
        cleaned[name] = value
    if "command" not in cleaned:
        raise ConfigError("config needs a command", EXIT_BAD_GRID)
    try:
        config = RunConfig(**cleaned)
    except TypeError as exc:
        raise ConfigError(f"bad config value: {exc}", EXIT_BAD_GRID) from None
    return config.resolved()


def parse_grid(spec, default=None) -> np.ndarray:
    """Grid specification: 'lo:hi:step', 'log:lo:hi:count', or a list."""
    if spec is None:
        if default is None:
            raise ConfigError("missing grid specification", EXIT_BAD_GRID)
        spec = default
    if isinstance(spec, (list, tuple, np.ndarray)):
        grid = np.asarray(spec, dtype=np.float64)
        if grid.size == 0:
            raise ConfigError("empty grid", EXIT_BAD_GRID)
        return grid
    try:
        parts = str(spec).split(":")
        if parts[0] == "log":
            lo, hi, count = float(parts[1]), float(parts[2]), int(parts[3])
            if lo <= 0 or hi <= 0 or count < 2:
                raise ValueError("log grid needs positive bounds and count >= 2")
            return np.geomspace(lo, hi, count)
        lo, hi, step = float(parts[0]), float(parts[1]), float(parts[2])
        if step <= 0 or hi <= lo:
            raise ValueError("linear grid needs hi > lo and step > 0")
        count = int(round((hi - lo) / step)) + 1
        return lo + step * np.arange(count)
    except (ValueError, IndexError) as exc:
        raise ConfigError(f"malformed grid {spec!r}: {exc}", EXIT_BAD_GRID) from None


def _format_float(x: float) -> str:
    return f"{x:.17g}"


def emit_outputs(table: scans.ScanTable, config: RunConfig, extra_json=None) -> list:
    """Write <name>.csv, <name>.meta.json and optional gnuplot scripts.

    Returns the list of paths written.  CSV: header row, RFC-4180 quoting,
    floats at 17 significant digits, so re-running an identical config is
    byte-identical.
    """
    out_dir = Path(config.out_dir)
    try:
        out_dir.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise ConfigError(f"cannot create output directory {out_dir}: {exc}", EXIT_IO) from None

    written = []
    csv_path = out_dir / f"{table.name}.csv"
    try:
        with csv_path.open("w", newline="") as fh:
            writer = csv.writer(fh)
            names = list(table.columns)
            writer.writerow(names)
            cols = [table.columns[name] for name in names]
            for row in zip(*cols):
                writer.writerow([_format_float(v) for v in row])
    except OSError as exc:
        raise ConfigError(f"cannot write {csv_path}: {exc}", EXIT_IO) from None
    written.append(csv_path)

    meta_path = out_dir / f"{table.name}.meta.json"
    sidecar = {
        "config": config.to_dict(),
        "table": {"name": table.name, "metadata": table.metadata},
        "version": __version__,
    }
    meta_path.write_text(json.dumps(sidecar, sort_keys=True, indent=2) + "\n")
    written.append(meta_path)

    if extra_json:
        for name, payload in extra_json.items():
            path = out_dir / name
            path.write_text(json.dumps(payload, sort_keys=True, indent=2) + "\n")
            written.append(path)

    if "gnuplot" in config.formats:
        script = _gnuplot_script(table)
        if script is not None:
            gp_path = out_dir / f"{table.name}.gp"
            gp_path.write_text(script)
            written.append(gp_path)
    return written


def _gnuplot_script(table: scans.ScanTable) -> str | None:
    head = (
        "set datafile separator ','\n"
        "set key autotitle columnhead\n"
        f"set output '{table.name}.png'\n"
        "set terminal pngcairo size 900,600\n"
    )
    if table.name == "phase_scan":
        return head + (
            "set xlabel 'q / |c1|'\nset ylabel 'sqrt(N0/N)'\n"
            f"plot '{table.name}.csv' using 1:3 with lines\n"
        )
    if table.name == "gap_curve":
        return head + (
            "set xlabel 'q / |c1|'\nset ylabel 'gap / |c1|'\n"
            f"plot '{table.name}.csv' using 1:2 with lines\n"
        )
    if table.name == "gap_scan":
        return head + (
            "set logscale xy\nset xlabel 'N'\nset ylabel 'minimum gap / |c1|'\n"
            f"plot '{table.name}.csv' using 1:3 with points pt 3\n"
        )
    if table.name == "speed_scan":
        return head + (
            "set logscale x\nset xlabel 'v / |c1|^2'\nset ylabel 'xi/N and Pe'\n"
            f"plot '{table.name}.csv' using 1:2 with lines, "
            f"'{table.name}.csv' using 1:3 with points pt 6\n"
        )
    if table.name == "time_scaling":
        return head + (
            "set logscale x\nset xlabel 'N'\nset ylabel 'T |c1|'\n"
            f"plot '{table.name}.csv' using 1:2 with linespoints\n"
        )
    if table.name == "sweep_trajectory":
        return head + (
            "set xlabel 't |c1|'\nset ylabel 'xi/N'\n"
            f"plot '{table.name}.csv' using 1:4 with lines\n"
        )
    return None


def _preset(config: RunConfig) -> SpeciesPreset | None:
    return PRESETS.get(config.species) if config.species else None


def _run_phase_scan(config: RunConfig) -> int:
    grid = parse_grid(config.grid, default="-6:6:0.05")
    table = scans.phase_scan(config.n_atoms, config.c1, grid)
    try:
        transitions = scans.locate_transitions(table)
        summary = {"transitions": transitions, "resolution": float(grid[1] - grid[0])}
    except SpinsweepError as exc:
        summary = {"transitions": [], "error": str(exc)}
    emit_outputs(table, config, extra_json={"phase_scan_summary.json": summary})
    return EXIT_OK if not table.metadata["failures"] else EXIT_SOLVER


def _run_gap_scan(config: RunConfig) -> int:
    table, fit = scans.gap_scan(config.n_list, config.c1)
    payload = {"a": fit.prefactor, "b": fit.exponent, "residual": fit.residual}
    emit_outputs(table, config, extra_json={"gap_fit.json": payload})
    if config.grid is not None:
        curve = scans.gap_curve(max(config.n_list), config.c1, parse_grid(config.grid))
        emit_outputs(curve, config)
    return EXIT_OK


def _run_sweep(config: RunConfig) -> int:
    params = ModelParams(config.n_atoms, config.c1, config.q_end)
    schedule = SweepSchedule(config.q_start, config.q_end, config.speed, config.branch)
    basis = SectorBasis(config.n_atoms)
    psi0 = product_state_m0(basis)
    record = config.record_every if config.record_every else max(1, 600 // 100)
    result = evolve_sweep(
        params, schedule, psi0, control=config.step_control(), record_every=record
    )
    n = config.n_atoms
    columns = {
        "t": [s.t for s in result.trajectory],
        "q": [s.q for s in result.trajectory],
        "xi": [s.xi for s in result.trajectory],
        "xi_over_N": [s.xi / n for s in result.trajectory],
        "n0_fraction": [s.n0_fraction for s in result.trajectory],
        "norm_error": [s.norm_error for s in result.trajectory],
    }
    preset = _preset(config)
    if preset is not None:
        columns["t_seconds"] = [convert_units(s.t, "time", preset) for s in result.trajectory]
    table = scans.ScanTable(
        name="sweep_trajectory",
        columns=columns,
        metadata={
            "scan": "sweep",
            "n_atoms": n,
            "c1": config.c1,
            "q_start": config.q_start,
            "q_end": config.q_end,
            "speed": config.speed,
            "branch": config.branch,
            "norm_drift": result.norm_drift,
            "steps_taken": result.steps_taken,
            "version": __version__,
        },
    )
    final = result.final_state
    report = observables.entanglement_depth(basis, final)
    summary = {
        "duration": schedule.duration,
        "xi": report.xi,
        "xi_over_N": report.xi / n,
        "depth_bound": report.depth_bound,
        "n0_fraction": observables.n0_fraction(basis, final),
        "Pe": excitation_probability(params, final),
        "norm_drift": result.norm_drift,
        "steps_taken": result.steps_taken,
    }
    if preset is not None:
        summary["duration_seconds"] = convert_units(schedule.duration, "time", preset)
        summary["species"] = preset.name
    emit_outputs(table, config, extra_json={"sweep_summary.json": summary})
    return EXIT_OK


def _run_speed_scan(config: RunConfig) -> int:
    grid = parse_grid(config.grid, default="log:0.01:100:13")
    schedule = SweepSchedule(config.q_start, config.q_end, 1.0, config.branch)
    table = scans.speed_scan(
        config.n_atoms, config.c1, grid, schedule_base=schedule,
        control=config.step_control(),
    )
    emit_outputs(table, config)
    return EXIT_OK


def _run_time_scaling(config: RunConfig) -> int:
    rows = []
    for n in config.n_list:
        duration, evaluations = scans.required_sweep_time(
            n, config.c1, config.target, control=config.step_control(),
            return_evaluations=True,
        )
        rows.append((float(n), duration, evaluations[-1]["v"], len(evaluations)))
    columns = {
        "n_atoms": [r[0] for r in rows],
        "T": [r[1] for r in rows],
        "v_final": [r[2] for r in rows],
        "evaluations": [float(r[3]) for r in rows],
    }
    preset = _preset(config)
    if preset is not None:
        columns["T_seconds"] = [convert_units(r[1], "time", preset) for r in rows]
    table = scans.ScanTable(
        name="time_scaling",
        columns=columns,
        metadata={
            "scan": "time_scaling",
            "n_list": config.n_list,
            "c1": config.c1,
            "target": config.target,
            "version": __version__,
        },
    )
    emit_outputs(table, config)
    return EXIT_OK


def _run_depth_report(config: RunConfig) -> int:
    params = ModelParams(config.n_atoms, config.c1, config.q)
    basis = SectorBasis(config.n_atoms)
    which = "lowest" if config.c1 < 0 else "highest"
    pair = extreme_eigenpairs(build_hamiltonian(params), which, 1)[0]
    override = None
    loss_info = None
    if config.loss_rate is not None and config.loss_rate > 0:
        loss = observables.LossModel(config.loss_rate)
        override = observables.loss_variance(config.n_atoms, loss)
        loss_info = {
            "p": loss.p,
            "delta_lz2": override,
            "xi_estimate": observables.loss_xi_estimate(loss, config.n_atoms),
        }
    report = observables.entanglement_depth(basis, pair.vector, delta_lz2_override=override)
    payload = {
        "n_atoms": config.n_atoms,
        "c1": config.c1,
        "q": config.q,
        "branch_energy": pair.value,
        "xi": report.xi,
        "depth_bound": report.depth_bound,
        "perp_moment": report.perp_moment,
        "delta_lz2": report.delta_lz2,
        "n0_fraction": observables.n0_fraction(basis, pair.vector),
        "loss": loss_info,
    }
    out_dir = Path(config.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    path = out_dir / "depth_report.json"
    path.write_text(json.dumps(payload, sort_keys=True, indent=2) + "\n")
    sidecar = {"config": config.to_dict(), "version": __version__}
    (out_dir / "depth_report.meta.json").write_text(
        json.dumps(sidecar, sort_keys=True, indent=2) + "\n"
    )
    return EXIT_OK


_RUNNERS = {
    "phase-scan": _run_phase_scan,
    "gap-scan": _run_gap_scan,
    "sweep": _run_sweep,
    "speed-scan": _run_speed_scan,
    "time-scaling": _run_time_scaling,
    "depth-report": _run_depth_report,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="spinsweep",
        description="Adiabatic entanglement generation in a spin-1 condensate "
                    "(exact diagonalization in the zero-magnetization sector).",
    )
    parser.add_argument("--version", action="version", version=f"spinsweep {__version__}")
    sub = parser.add_subparsers(dest="command")

    def add_common(p, atoms=True):
        p.add_argument("--config", help="JSON config file (flags override file values)")
        if atoms:
            p.add_argument("--n-atoms", type=int, dest="n_atoms", help="total atom number N")
        p.add_argument("--c1", type=float, help="spin coupling; negative = ferromagnetic (default -1)")
        p.add_argument("--species", choices=sorted(PRESETS), help="atom species preset (sets sign and physical units)")
        p.add_argument("--out-dir", dest="out_dir", help="output directory (default .)")
        p.add_argument("--format", dest="formats", help="output formats: csv[,gnuplot]")

    p = sub.add_parser("phase-scan", help="tracked-branch condensate fraction vs q")
    add_common(p)
    p.add_argument("--grid", help="q grid 'lo:hi:step' (default -6:6:0.05)")

    p = sub.add_parser("gap-scan", help="minimum gap vs N with power-law fit")
    add_common(p, atoms=False)
    p.add_argument("--n-list", dest="n_list", help="comma-separated atom numbers")
    p.add_argument("--grid", help="optional q grid for a gap-vs-q curve at max(N)")

    p = sub.add_parser("sweep", help="single linear ramp of q from the product state")
    add_common(p)
    p.add_argument("--q-start", type=float, dest="q_start")
    p.add_argument("--q-end", type=float, dest="q_end")
    p.add_argument("--speed", type=float, help="ramp speed v in |c1|^2")
    p.add_argument("--branch", choices=("ground", "highest"))
    p.add_argument("--record-every", type=int, dest="record_every", help="trajectory sampling stride in steps")
    p.add_argument("--dq-max", type=float, dest="dq_max")
    p.add_argument("--dt-max", type=float, dest="dt_max")

    p = sub.add_parser("speed-scan", help="final xi/N and Pe vs sweep speed")
    add_common(p)
    p.add_argument("--grid", help="speed grid 'log:lo:hi:count' (default log:0.01:100:13)")
    p.add_argument("--q-start", type=float, dest="q_start")
    p.add_argument("--q-end", type=float, dest="q_end")
    p.add_argument("--branch", choices=("ground", "highest"))
    p.add_argument("--dq-max", type=float, dest="dq_max")
    p.add_argument("--dt-max", type=float, dest="dt_max")

    p = sub.add_parser("time-scaling", help="required sweep time vs N at fixed depth target")
    add_common(p, atoms=False)
    p.add_argument("--n-list", dest="n_list", help="comma-separated atom numbers")
    p.add_argument("--target", type=float, help="depth target as a fraction of N (default 0.5)")
    p.add_argument("--dq-max", type=float, dest="dq_max")
    p.add_argument("--dt-max", type=float, dest="dt_max")

    p = sub.add_parser("depth-report", help="witness report for the tracked eigenstate at fixed q")
    add_common(p)
    p.add_argument("--q", type=float, help="Zeeman coefficient (default 0)")
    p.add_argument("--loss-rate", type=float, dest="loss_rate", help="atom loss rate p in [0,1)")

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command is None:
        parser.print_help()
        return EXIT_BAD_GRID

    overrides = {
        key: value
        for key, value in vars(args).items()
        if key not in ("config",) and value is not None
    }
    try:
        config = parse_config(args.config, overrides)
        return _RUNNERS[config.command](config)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code
    except SpinsweepError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
