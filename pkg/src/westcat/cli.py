"""Command line entry point: ``westcat <command> --config <path> [--out dir]``.

Commands: ``run``, ``mms``, ``tau-study``, ``inequalities``, ``validate``.
Exit codes: 0 completed, 1 configuration error, 2 degeneracy abort,
3 solver failure.
"""

from __future__ import annotations

import argparse
import datetime as _dt
import json
import logging
import sys
from pathlib import Path

from . import __version__, analysis, simulate
from .config import ScenarioConfig, config_digest, parse_config, serialize
from .errors import AssumptionViolation, ConfigError, StudyRunFailed
from .grid import build_grid, deterministic_reductions
from .medium import validate_assumptions

log = logging.getLogger("westcat")

COMMANDS = ("run", "mms", "tau-study", "inequalities", "validate")
EXIT_OK, EXIT_CONFIG, EXIT_DEGENERACY, EXIT_SOLVER = 0, 1, 2, 3
EXIT_FOR = {
    simulate.COMPLETED: EXIT_OK,
    simulate.DEGENERACY_ABORT: EXIT_DEGENERACY,
    simulate.SOLVER_FAILURE: EXIT_SOLVER,
}

ENERGY_COLUMNS = (
    ("t", "t"), ("E1", "E1"), ("E2", "E2"), ("D1", "D1"), ("D2", "D2"),
    ("Etheta0", "E_theta_0"), ("Etheta1", "E_theta_1"), ("Etheta", "E_theta_total"),
    ("Dtheta", "D_theta_total"), ("Elow", "E_low"), ("Ehigh", "E_high"),
    ("Dlow", "D_low"), ("Dhigh", "D_high"), ("min_coeff", "min_coeff"),
    ("max_coeff", "max_coeff"),
)
ENERGY_NOTE = ("# |grad Lap p| uses the Dirichlet closure on Lap p, which is not zero on the "
               "boundary; E2 and D2 carry an O(1) boundary-layer quadrature error")
FMT = "%.16e"


def _fmt(x) -> str:
    return FMT % float(x)


def write_csv(path: Path, header, rows, comment: str | None = None) -> Path:
    with open(path, "w", encoding="ascii", newline="\n") as fh:
        if comment:
            fh.write(comment + "\n")
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(v if isinstance(v, str) else _fmt(v) for v in row) + "\n")
    return path


def write_energy_csv(path: Path, series: simulate.TimeSeries) -> Path:
    rows = [[getattr(r, attr) for _, attr in ENERGY_COLUMNS] for r in series.reports]
    return write_csv(path, [c for c, _ in ENERGY_COLUMNS], rows, ENERGY_NOTE)


def write_snapshots(out: Path, grid, snapshots) -> list[Path]:
    folder = out / "snapshots"
    folder.mkdir(exist_ok=True)
    coords = [c.ravel() for c in grid.coordinates()]
    names = ["x", "y", "z"][: grid.dim]
    files = []
    for i, (t, p, theta) in enumerate(snapshots):
        rows = zip(*coords, p.ravel(), theta.ravel())
        path = folder / f"snapshot_{i:05d}.csv"
        write_csv(path, names + ["p", "theta"], rows, f"# t = {_fmt(t)}")
        files.append(path)
    return files


def _now() -> str:
    return _dt.datetime.now(_dt.timezone.utc).isoformat()


def _run(cfg: ScenarioConfig, out: Path):
    series = simulate.run_coupled(cfg)
    files = [write_energy_csv(out / "energy.csv", series)]
    if series.snapshots:
        files += write_snapshots(out, cfg.grid.build(), series.snapshots)
    if cfg.output.plots and len(series.times) > 1:
        from .plotting import plot_energies
        files.append(plot_energies(series, out / "energy.png"))
    extra = {"steps_reported": len(series.times), "max_picard": series.max_picard}
    if series.abort_step is not None:
        extra["abort_step"] = series.abort_step
        extra["message"] = series.message
    return series.termination, files, extra


def _mms(cfg, out):
    rows = simulate.mms_study(cfg)
    header = ["h", "dt", "error_p", "error_theta", "order_p", "order_theta"]
    data = [[r.h, r.dt, r.error_p, r.error_theta, r.order_p, r.order_theta] for r in rows]
    files = [write_csv(out / "mms.csv", header, data)]
    if cfg.output.plots:
        from .plotting import plot_mms
        files.append(plot_mms(rows, out / "mms.png"))
    return simulate.COMPLETED, files, {"kind": cfg.study.mms_kind}


def _tau(cfg, out):
    rows = simulate.tau_limit_study(cfg)
    files = [write_csv(out / "tau_study.csv", ["tau", "theta_gap", "p_gap"],
                       [[r.tau, r.theta_gap, r.p_gap] for r in rows])]
    if cfg.output.plots:
        from .plotting import plot_tau
        files.append(plot_tau(rows, out / "tau_study.png"))
    return simulate.COMPLETED, files, {}


def _inequalities(cfg, out):
    g = cfg.grid
    sweep = analysis.refinement_sweep(g.dim, g.extents, g.nodes[0], cfg.study.refinements,
                                      cfg.study.samples, cfg.study.seed)
    rows = []
    for n, reports in sweep:
        grid = build_grid(g.dim, g.extents, (n,) * g.dim)
        cp = analysis.poincare_constant(grid)
        for r in reports:
            rows.append([str(n), r.name, r.worst_ratio, str(r.sample_count),
                         cp if r.name == "poincare" else r.constant_estimate])
    files = [write_csv(out / "inequalities.csv",
                       ["nodes", "name", "worst_ratio", "sample_count", "constant_estimate"], rows)]
    if cfg.output.plots:
        from .plotting import plot_inequalities
        files.append(plot_inequalities(sweep, out / "inequalities.png"))
    return simulate.COMPLETED, files, {}


def _validate(cfg, out):
    report = validate_assumptions(cfg.medium.params(), cfg.medium.validated_range)
    path = out / "validate.txt"
    path.write_text(report.summary() + "\n", encoding="ascii")
    status = simulate.COMPLETED if report.passed else "assumption-violation"
    return status, [path], {"report": report.summary()}


HANDLERS = {"run": _run, "mms": _mms, "tau-study": _tau,
            "inequalities": _inequalities, "validate": _validate}


def run_scenario(cfg: ScenarioConfig, command: str, out, seed: int | None = None,
                 deterministic: bool = False) -> int:
    """Execute ``command`` for ``cfg``, write outputs plus ``manifest.json`` into ``out``."""
    if command not in HANDLERS:
        raise ValueError(f"unknown command {command!r}")
    out = Path(out)
    out.mkdir(parents=True, exist_ok=True)
    if seed is not None:
        cfg = cfg.replace(study={"seed": int(seed)})
    start = _now()
    files, extra = [], {}
    try:
        with deterministic_reductions(deterministic):
            status, files, extra = HANDLERS[command](cfg, out)
    except AssumptionViolation as exc:
        status, extra = "assumption-violation", {"message": str(exc)}
    except StudyRunFailed as exc:
        status, extra = exc.termination, {"message": str(exc)}
    code = EXIT_FOR.get(status, EXIT_CONFIG)
    (out / "config.txt").write_text(serialize(cfg), encoding="ascii")
    manifest = {
        "command": command,
        "config_digest": config_digest(cfg),
        "version": __version__,
        "start": start,
        "end": _now(),
        "status": status,
        "exit_code": code,
        "seed": cfg.study.seed,
        "deterministic": deterministic,
        "files": sorted(str(Path(f).relative_to(out)) for f in files + [out / "config.txt"]),
        **extra,
    }
    (out / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n",
                                       encoding="ascii")
    if code:
        log.error("%s ended with %s", command, status)
        if "message" in extra:
            log.error("%s", extra["message"])
    return code


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="westcat", description=__doc__.splitlines()[0])
    ap.add_argument("command", choices=COMMANDS)
    ap.add_argument("--config", required=True, type=Path)
    ap.add_argument("--out", type=Path, default=Path("westcat_out"))
    ap.add_argument("--seed", type=int, default=None)
    ap.add_argument("--deterministic", action="store_true",
                    help="order-independent reductions for byte-identical output")
    ap.add_argument("-v", "--verbose", action="store_true")
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    if args.seed is not None and not 0 <= args.seed < 2**64:
        log.error("seed must be an unsigned 64-bit integer")
        return EXIT_CONFIG
    try:
        cfg = parse_config(args.config.read_text(encoding="utf-8"))
    except OSError as exc:
        log.error("cannot read config: %s", exc)
        return EXIT_CONFIG
    except ConfigError as exc:
        log.error("%s", exc)
        return EXIT_CONFIG
    return run_scenario(cfg, args.command, args.out, args.seed, args.deterministic)


if __name__ == "__main__":
    sys.exit(main())
