"""Command-line batch runner.

Usage::

    ramsey-wigner <subcommand> [--config run.toml] [--out DIR] [--jobs N] [--format csv|pgm|both]

Subcommands: ``spectrum``, ``fock``, ``calibrate``, ``parity-scan``,
``wigner-scan``, ``oracle``, ``compare``.  Each writes CSV tables, PNG
figures and a ``<subcommand>.json`` run record with SHA-256 hashes of every
artefact.  Exit codes: 0 success, 2 configuration error, 3 numerical error
(including per-point scan failures), 4 calibration failure.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__, calibration, core, outputs, potentials, propagator, ramsey, wigner
from .config import RunConfig, Setup, build_setup, load_config
from .errors import CalibrationError, ConfigurationError, DomainError, NumericalError
from .units import GroundStateScales, parse_quantity

log = logging.getLogger("ramsey_wigner")

EXIT_OK, EXIT_CONFIG, EXIT_NUMERICAL, EXIT_CALIBRATION = 0, 2, 3, 4


class Context:
    """Shared state of one CLI invocation."""

    def __init__(self, command: str, cfg: RunConfig, out: Path, fmt: str, jobs: int):
        self.command = command
        self.cfg = cfg
        self.setup: Setup = build_setup(cfg)
        self.out = out
        self.fmt = fmt
        self.jobs = jobs
        self.record = outputs.RunRecord(command, cfg.model_dump(), __version__)
        self.record.config["jobs"] = jobs
        out.mkdir(parents=True, exist_ok=True)

    # -- shared builders --------------------------------------------------
    @property
    def scales(self) -> GroundStateScales:
        return GroundStateScales(self.setup.model.omega)

    def to_us(self, t: float) -> float:
        return self.setup.units.to_time(t) * 1e6

    def template(self) -> ramsey.SequenceSpec:
        """Sequence with the configured (or analytically estimated) hold time."""
        s = self.setup
        spec = ramsey.SequenceSpec.build(s.model, s.grid, s.peak_depths, s.t_ramp, 0.0, s.t_switch,
                                         dt=s.dt, displacement_first=s.displacement_first)
        if s.t_hold is None:
            hold = potentials.hold_for_phase(spec.schedule, s.model, s.grid, method=s.hold_method)
            source = f"auto ({s.hold_method})"
        else:
            hold, source = s.t_hold, "config"
        spec = spec.with_hold(hold)
        self.record.results.setdefault("sequence", {
            "t_hold_us": self.to_us(hold),
            "t_hold_source": source,
            "phi0_rad": spec.phi0,
            "dt_ns": self.to_us(spec.dt) * 1e3,
            "t_pulse2_us": self.to_us(spec.t_pulse2),
            "dx0_nm": self.setup.units.to_length(self.scales.dx0) * 1e9,
        })
        return spec

    def fock_states(self, count: int):
        return potentials.stationary_states(self.setup.model, self.setup.grid, count)

    def axes(self):
        sc = self.cfg.scan
        return (np.linspace(-sc.x_max, sc.x_max, sc.resolution),
                np.linspace(-sc.p_max, sc.p_max, sc.resolution))

    # -- artefacts --------------------------------------------------------
    def table(self, name: str, header, rows) -> Path:
        path = outputs.write_table(self.out / name, header, rows)
        self.record.add_artifact(path, self.out)
        return path

    def figure(self, path: Path):
        self.record.add_artifact(path, self.out)

    def wigner_outputs(self, stem: str, grid: ramsey.WignerGrid, title: str):
        if self.fmt in ("csv", "both"):
            self.record.add_artifact(outputs.write_wigner_csv(self.out / f"{stem}.csv", grid), self.out)
        if self.fmt in ("pgm", "both"):
            for path in outputs.write_pgm(self.out / f"{stem}.pgm", grid):
                self.record.add_artifact(path, self.out)
        self.figure(plotting().wigner_map(grid, self.out / f"{stem}.png", title))

    def finish(self) -> Path:
        return self.record.write(self.out / f"{self.command}.json")


def plotting():
    from . import plotting as mod  # imported lazily: matplotlib is only needed for reports

    return mod


# -- subcommands -------------------------------------------------------------

def cmd_spectrum(ctx: Context, args) -> int:
    s = ctx.setup
    model, grid = s.model, s.grid
    count = max(ctx.cfg.scan.n_max, 5) + 1
    exact = np.array([e for e, _ in ctx.fock_states(count)])
    n = np.arange(count)
    omega = model.omega
    harmonic = potentials.harmonic_spectrum(n, omega, model.depth)
    if isinstance(model, potentials.Lattice):
        perturbative = potentials.lattice_spectrum_perturbative(n, model.depth)
    elif isinstance(model, potentials.Tweezer):
        perturbative = potentials.tweezer_spectrum_perturbative(n, model.depth, model.waist)
    else:
        perturbative = harmonic
    pert_dev = (perturbative - exact) / omega
    harm_dev = (harmonic - exact) / omega
    ctx.table("spectrum.csv",
              ("n", "E_diagonalized_Erec", "E_harmonic_Erec", "E_perturbative_Erec",
               "perturbative_minus_diagonalized_hbar_omega", "harmonic_minus_diagonalized_hbar_omega"),
              zip(n, 2 * exact, 2 * harmonic, 2 * perturbative, pert_dev, harm_dev))

    up, down = s.peak_depths
    rows = []
    for level in range(min(count, 6)):
        d_exact, d_ho = potentials.differential_shift(level, up, down, model, grid)
        rows.append((level, d_exact / omega, d_ho / omega, abs(d_exact - d_ho) / omega))
    ctx.table("differential.csv",
              ("n", "dE_diagonalized_hbar_omega", "dE_harmonic_hbar_omega", "abs_deviation_hbar_omega"), rows)
    ctx.figure(plotting().spectrum_table(n, {"perturbative": pert_dev, "harmonic": harm_dev},
                                         ctx.out / "spectrum.png"))
    ctx.record.results["spectrum"] = {
        "hbar_omega_Erec": 2 * omega,
        "max_abs_perturbative_deviation_n_le_5": float(np.max(np.abs(pert_dev[:6]))),
        "max_differential_deviation_n_le_5": float(max(r[3] for r in rows)),
    }
    return EXIT_OK


def cmd_fock(ctx: Context, args) -> int:
    count = ctx.cfg.scan.n_max + 1
    rows = []
    for n, (energy, wf) in enumerate(ctx.fock_states(count)):
        lost = float(propagator.leakage(wf.psi, ctx.setup.grid, 0.0, np.pi / 2)) if isinstance(
            ctx.setup.model, potentials.Lattice) else 0.0
        rows.append((n, 2 * energy, core.parity_expectation(wf), wf.norm(), lost))
    ctx.table("fock.csv", ("n", "energy_Erec", "parity", "norm", "outside_site"), rows)
    worst = max(abs(r[2] - (-1) ** r[0]) for r in rows)
    ctx.record.results["fock"] = {"max_parity_error": worst}
    return EXIT_OK if worst < 1e-6 else EXIT_NUMERICAL


def cmd_calibrate(ctx: Context, args) -> int:
    c = ctx.cfg.calibration
    units = ctx.setup.units
    holds = np.linspace(units.time(parse_quantity(c.hold_min, "time")),
                        units.time(parse_quantity(c.hold_max, "time")), c.hold_points)
    spec = ctx.template()
    ensemble = calibration.ThermalEnsemble(c.ground_fraction, c.n_max)
    states = [wf for _, wf in ctx.fock_states(c.n_max + 1)]
    started = time.perf_counter()
    curve = calibration.contrast_vs_hold(ensemble, holds, spec, states=states, n_phases=c.n_phases)
    ctx.record.timings["contrast_vs_hold_s"] = time.perf_counter() - started
    hold_us = [ctx.to_us(t) for t in curve.hold_times]
    ctx.table("calibration.csv", ("hold_us", "contrast", "fringe_phase_rad"),
              zip(hold_us, curve.contrast, curve.fringe_phase))
    ctx.record.errors.update(curve.errors)
    try:
        t_hold = calibration.find_collapse(curve)
    finally:
        ctx.figure(plotting().contrast_curve(hold_us, curve.contrast, ctx.out / "calibration.png",
                                             ground_fraction=c.ground_fraction))
    calibrated = spec.with_hold(t_hold)
    revival = calibration.find_revival(curve, t_hold)
    ctx.record.results["calibration"] = {
        "t_hold_us": ctx.to_us(t_hold),
        "phi0_rad": calibrated.phi0,
        "revival_hold_us": ctx.to_us(revival[0]),
        "revival_contrast": revival[1],
        "ground_fraction": c.ground_fraction,
        "config_snippet": f'[sequence]\nt_hold = "{ctx.to_us(t_hold):.6f} us"',
    }
    return EXIT_NUMERICAL if curve.errors else EXIT_OK


def cmd_parity_scan(ctx: Context, args) -> int:
    spec = ctx.template()
    states = [wf for _, wf in ctx.fock_states(ctx.cfg.scan.n_max + 1)]
    started = time.perf_counter()
    rows = ramsey.parity_scan(states, spec)
    ctx.record.timings["parity_scan_s"] = time.perf_counter() - started
    ctx.table("parity.csv", ("n", "w", "ideal", "abs_error", "leakage"),
              [(n, w, (-1) ** n, abs(w - (-1) ** n), lost) for n, w, lost in rows])
    ctx.figure(plotting().parity_bars([r[0] for r in rows], [r[1] for r in rows], [r[2] for r in rows],
                                      ctx.out / "parity.png"))
    ctx.record.results["parity_scan"] = {str(n): {"w": w, "leakage": lost} for n, w, lost in rows}
    return EXIT_OK


def cmd_wigner_scan(ctx: Context, args) -> int:
    spec = ctx.template()
    xs, ps = ctx.axes()
    states = ctx.fock_states(max(ctx.cfg.scan.states) + 1)
    status = EXIT_OK
    for n in ctx.cfg.scan.states:
        started = time.perf_counter()
        grid = ramsey.scan_wigner(states[n][1], xs, ps, spec, jobs=ctx.jobs,
                                  batch_size=ctx.cfg.scan.batch_size)
        ctx.record.timings[f"wigner_n{n}_s"] = time.perf_counter() - started
        ctx.wigner_outputs(f"wigner_n{n}", grid, f"Ramsey scan, n = {n}")
        center = grid.values[np.argmin(np.abs(xs)), np.argmin(np.abs(ps))]
        ctx.record.results[f"wigner_n{n}"] = {"central_contrast": center,
                                              "failed_points": len(grid.metadata["errors"])}
        if grid.metadata["errors"]:
            ctx.record.errors[f"wigner_n{n}"] = grid.metadata["errors"]
            status = EXIT_NUMERICAL
    return status


def cmd_oracle(ctx: Context, args) -> int:
    xs, ps = ctx.axes()
    o = ctx.cfg.oracle
    count = max(max(ctx.cfg.scan.states), o.n_max) + 1
    states = [wf for _, wf in ctx.fock_states(count)]
    for n in ctx.cfg.scan.states:
        if o.method == "integral-transform":
            result = wigner.wigner_transform(states[n], xs, ps, ctx.scales)
        else:
            result = wigner.wigner_parity_sum_grid(states[n], xs, ps, states, n_max=o.n_max, scales=ctx.scales)
        ctx.wigner_outputs(f"oracle_n{n}", result.grid, f"{result.method}, n = {n}")
        integrals = wigner.phase_space_integrals(result.grid, ctx.scales)
        ctx.record.results[f"oracle_n{n}"] = {"method": result.method, **result.parameters,
                                              "window_norm": integrals["norm"],
                                              "window_purity_times_2pi": 2 * np.pi * integrals["purity"]}
    return EXIT_OK


def cmd_compare(ctx: Context, args) -> int:
    pairs = []
    if args.a and args.b:
        pairs.append((Path(args.a), Path(args.b), "custom"))
    else:
        for n in ctx.cfg.scan.states:
            pairs.append((ctx.out / f"wigner_n{n}.csv", ctx.out / f"oracle_n{n}.csv", f"n{n}"))
    rows = []
    for a, b, label in pairs:
        if not (a.exists() and b.exists()):
            raise ConfigurationError(f"compare needs {a} and {b}; run wigner-scan and oracle first")
        ga, gb = outputs.read_wigner_csv(a), outputs.read_wigner_csv(b)
        metrics = wigner.compare(ga, gb)
        ctx.figure(plotting().difference_map(metrics["difference"], ga.x, ga.p,
                                             ctx.out / f"difference_{label}.png", f"scan - oracle, {label}"))
        rows.append((label, metrics["max_abs"], metrics["rms"], metrics["n_points"], metrics["n_missing"]))
        ctx.record.results[f"compare_{label}"] = {k: v for k, v in metrics.items() if k != "difference"}
        ctx.record.results[f"compare_{label}"]["inputs"] = [str(a), str(b)]
    ctx.table("compare.csv", ("label", "max_abs", "rms", "n_points", "n_missing"), rows)
    return EXIT_OK


COMMANDS = {
    "spectrum": (cmd_spectrum, "analytic vs diagonalised spectra and differential shifts"),
    "fock": (cmd_fock, "construct Fock states and check their parity"),
    "calibrate": (cmd_calibrate, "hold-time calibration from thermal contrast collapse"),
    "parity-scan": (cmd_parity_scan, "parity readout of Fock states at the origin"),
    "wigner-scan": (cmd_wigner_scan, "Ramsey-reconstructed Wigner functions"),
    "oracle": (cmd_oracle, "reference Wigner functions on the scan axes"),
    "compare": (cmd_compare, "difference metrics between scan and oracle grids"),
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="ramsey-wigner", description=__doc__.split("\n")[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)
    for name, (_, text) in COMMANDS.items():
        p = sub.add_parser(name, help=text, description=text)
        p.add_argument("--config", help="TOML run configuration")
        p.add_argument("--out", default="out", help="output directory (default: out)")
        p.add_argument("--jobs", type=int, default=None, help="worker processes for scans")
        p.add_argument("--format", choices=("csv", "pgm", "both"), default="both",
                       help="Wigner grid output format (default: both)")
        p.add_argument("-v", "--verbose", action="store_true")
        if name == "compare":
            p.add_argument("--a", help="first Wigner CSV (default: wigner_n*.csv in --out)")
            p.add_argument("--b", help="second Wigner CSV (default: oracle_n*.csv in --out)")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = load_config(args.config)
        jobs = args.jobs if args.jobs is not None else cfg.jobs
        if jobs < 1:
            raise ConfigurationError("--jobs must be positive")
        ctx = Context(args.command, cfg, Path(args.out), args.format, jobs)
        started = time.perf_counter()
        func = COMMANDS[args.command][0]
        try:
            status = func(ctx, args)
        finally:
            ctx.record.timings["total_s"] = time.perf_counter() - started
            record = ctx.finish()
        summary = {k: v for k, v in ctx.record.results.items()}
        print(json.dumps(outputs._jsonable(summary), indent=2))
        print(f"record: {record}", file=sys.stderr)
        return status
    except ConfigurationError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except CalibrationError as exc:
        print(f"calibration failed: {exc}", file=sys.stderr)
        return EXIT_CALIBRATION
    except (NumericalError, DomainError) as exc:
        print(f"numerical error: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
