"""Command-line batch runner.

    nwtsim run --model lotka --engine nwt --t-final 1000 --seed 7
    nwtsim models

Replicate ``i`` uses seed ``base + i`` so results do not depend on the
order in which replicates happen to execute.
"""

from __future__ import annotations

import argparse
import csv
import logging
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

from . import BUNDLED_MODELS, bundled_model_text, nwt, ode, ssa
from .ingest import ModelDocument, ParseError, load_model, parse_native
from .model import ModelError
from .recorder import Trajectory, extinction_time, steady_state_after

log = logging.getLogger("nwtsim")

OUTPUT_ENV = "NWTSIM_OUTPUT_DIR"
ENGINES = ("nwt", "ssa", "ode")

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_MODEL = 3
EXIT_ENGINE = 4
EXIT_IO = 5


@dataclass
class RunConfig:
    model: str
    engine: str = "nwt"
    t_final: float = 100.0
    interval: float = 1.0
    seed: int = 0
    replicates: int = 1
    out_dir: str = "."
    format: str | None = None
    ode_step: float = ode.DEFAULT_STEP
    lenient: bool = False
    track: list = field(default_factory=list)
    halt_on_extinction: bool = False
    steady_window: int = 20
    steady_band: float = 0.01
    workers: int = 1

    def check(self):
        if self.engine not in ENGINES:
            raise ValueError(f"engine must be one of {', '.join(ENGINES)}")
        if not self.t_final > 0:
            raise ValueError("--t-final must be positive")
        if not self.interval > 0:
            raise ValueError("--interval must be positive")
        if self.replicates < 1:
            raise ValueError("--replicates must be at least 1")
        if not self.ode_step > 0:
            raise ValueError("--ode-step must be positive")
        if self.workers < 1:
            raise ValueError("--workers must be at least 1")
        if self.steady_window < 2:
            raise ValueError("--steady-window must be at least 2")


class CliError(Exception):
    def __init__(self, kind, message, code):
        super().__init__(message)
        self.kind = kind
        self.code = code


def resolve_model(ref, fmt=None, strict=True):
    """Load ``ref`` from disk, falling back to a bundled model of that name."""
    path = Path(ref)
    if path.is_file():
        return load_model(path, fmt=fmt, strict=strict)
    name = path.name[:-6] if path.name.endswith(".model") else path.name
    if name in BUNDLED_MODELS and fmt in (None, "native"):
        return ModelDocument(f"bundled:{name}", "native", parse_native(bundled_model_text(name)))
    raise FileNotFoundError(f"no model file {ref!r} and no bundled model of that name")


def _stem(config):
    name = Path(config.model).name
    for suffix in (".model", ".xml", ".sbml"):
        if name.endswith(suffix):
            name = name[: -len(suffix)]
    return name


def _steady_time(traj, window, band):
    """Latest per-species settling time, or None if any species keeps moving."""
    vals = traj.values()
    times = traj.times
    worst = 0.0
    for j in range(vals.shape[1]):
        t = steady_state_after(vals[:, j], window, band, times=times)
        if t is None:
            return None
        worst = max(worst, t)
    return worst


def run_replicate(config, system, index):
    """Run one replicate, write its CSV and stats, return a summary row."""
    labels = system.species_labels()
    seed = config.seed + index
    out = Path(config.out_dir)
    base = out / f"{_stem(config)}_{config.engine}_r{index:03d}"
    csv_path = base.with_suffix(".csv")
    traj = Trajectory(labels, config.t_final, config.interval,
                      integer=config.engine != "ode", path=csv_path)
    tracked = config.track or labels
    halt = [labels.index(t) for t in tracked] if config.halt_on_extinction else []

    if config.engine in ("nwt", "ssa"):
        engine = nwt if config.engine == "nwt" else ssa
        state = engine.init(system, config.t_final, seed=seed)
        stats = engine.run(state, traj, halt_on_zero=halt)
        final = state.counts
    else:
        rates = ode.derive_rates(system)
        final, stats = ode.run(rates, system.initial_counts(), config.t_final,
                               h=config.ode_step, recorder=traj)

    times = traj.times
    for label in tracked:
        t = extinction_time(times, traj.series(label))
        if t is None and stats.termination == "extinct" and final[labels.index(label)] == 0:
            # the halting event falls between grid points; report its exact time
            t = stats.t_end
        stats.extinction_times[label] = t
    stats.steady_state_time = _steady_time(traj, config.steady_window, config.steady_band)
    stats.write(base.with_suffix(".stats"))

    row = {
        "replicate": index,
        "engine": config.engine,
        "seed": "" if config.engine == "ode" else seed,
        "applied_rules": stats.applied_rule_count,
        "nondet_decisions": stats.nondet_decision_count,
        "nondet_fraction": f"{stats.nondet_fraction:.9f}",
        "termination": stats.termination,
    }
    for label in tracked:
        t = stats.extinction_times[label]
        row[f"extinction_time.{label}"] = "" if t is None else f"{t:.6f}"
    return row


def _task(args):
    config, system, index = args
    return run_replicate(config, system, index)


def execute(config):
    """Run every replicate and write ``summary.csv``; returns the summary rows."""
    config.check()
    try:
        doc = resolve_model(config.model, config.format, strict=not config.lenient)
    except FileNotFoundError as exc:
        raise CliError("io", str(exc), EXIT_IO) from exc
    system = doc.system
    labels = system.species_labels()
    unknown = [t for t in config.track if t not in labels]
    if unknown:
        raise ValueError(f"--track names unknown species: {', '.join(unknown)}")
    Path(config.out_dir).mkdir(parents=True, exist_ok=True)

    jobs = [(config, system, i) for i in range(config.replicates)]
    if config.workers > 1 and config.replicates > 1:
        with ProcessPoolExecutor(max_workers=config.workers) as pool:
            rows = list(pool.map(_task, jobs))
    else:
        rows = [_task(job) for job in jobs]

    summary = Path(config.out_dir) / "summary.csv"
    with open(summary, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=list(rows[0]), lineterminator="\n")
        writer.writeheader()
        writer.writerows(rows)
    return rows


def build_parser():
    parser = argparse.ArgumentParser(prog="nwtsim", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="simulate a model")
    run.add_argument("--model", required=True,
                     help="model file, or the name of a bundled model (e.g. lotka.model)")
    run.add_argument("--format", choices=("native", "sbml"), default=None,
                     help="override format detection by file suffix")
    run.add_argument("--engine", choices=ENGINES, default="nwt")
    run.add_argument("--t-final", type=float, required=True)
    run.add_argument("--interval", type=float, default=1.0, help="sample spacing")
    run.add_argument("--seed", type=int, default=0, help="base seed; replicate i uses seed+i")
    run.add_argument("--replicates", type=int, default=1)
    run.add_argument("--out-dir", default=os.environ.get(OUTPUT_ENV, "."),
                     help=f"output directory (default ${OUTPUT_ENV} or .)")
    run.add_argument("--ode-step", type=float, default=ode.DEFAULT_STEP)
    run.add_argument("--lenient", action="store_true",
                     help="drop unsupported SBML elements with a warning instead of failing")
    run.add_argument("--track", nargs="+", default=[], metavar="SPECIES",
                     help="species whose extinction times are reported (default all)")
    run.add_argument("--halt-on-extinction", action="store_true",
                     help="stop a stochastic run once a tracked species reaches zero")
    run.add_argument("--steady-window", type=int, default=20)
    run.add_argument("--steady-band", type=float, default=0.01)
    run.add_argument("--workers", type=int, default=1)

    sub.add_parser("models", help="list bundled models")
    show = sub.add_parser("show", help="print a bundled model")
    show.add_argument("name")
    return parser


def _config_from(ns):
    return RunConfig(
        model=ns.model, engine=ns.engine, t_final=ns.t_final, interval=ns.interval,
        seed=ns.seed, replicates=ns.replicates, out_dir=ns.out_dir, format=ns.format,
        ode_step=ns.ode_step, lenient=ns.lenient, track=list(ns.track),
        halt_on_extinction=ns.halt_on_extinction, steady_window=ns.steady_window,
        steady_band=ns.steady_band, workers=ns.workers,
    )


def _fail(kind, message, code, line=None):
    where = f" line={line}" if line is not None else ""
    print(f"nwtsim: error kind={kind}{where}: {message}", file=sys.stderr)
    return code


def main(argv=None):
    parser = build_parser()
    ns = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if ns.verbose else logging.WARNING,
                        format="%(name)s: %(levelname)s: %(message)s")

    if ns.command == "models":
        for name in BUNDLED_MODELS:
            print(f"{name}.model")
        return EXIT_OK
    if ns.command == "show":
        try:
            sys.stdout.write(bundled_model_text(ns.name))
        except KeyError as exc:
            return _fail("usage", exc.args[0], EXIT_USAGE)
        return EXIT_OK

    try:
        rows = execute(_config_from(ns))
    except CliError as exc:
        return _fail(exc.kind, str(exc), exc.code)
    except ParseError as exc:
        return _fail("parse", str(exc), EXIT_MODEL, exc.line)
    except ModelError as exc:
        return _fail("validation", str(exc), EXIT_MODEL)
    except ode.IntegrationDiverged as exc:
        return _fail("diverged", f"{exc}; try a smaller --ode-step", EXIT_ENGINE)
    except OSError as exc:
        return _fail("io", str(exc), EXIT_IO)
    except ValueError as exc:
        return _fail("usage", str(exc), EXIT_USAGE)
    for row in rows:
        log.info("replicate %s: %s", row["replicate"], row["termination"])
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
