"""
Command-line surface.

    spdt ingest    updates.csv --out-graph real.graph --out-cip real.cip
    spdt fit       real.cip --out params.txt
    spdt generate  params.txt --nodes 126000 --days 7 --seed 1 --out synth.graph
    spdt badn      --nodes 50000 --days 32 --seed 1 --out badn.graph
    spdt clip-spst synth.graph --out spst.graph
    spdt densify   real.graph --days 32 --seed 1 --out dense.graph
    spdt simulate  synth.graph --r 0.5 1.0 1.5 --runs 200 --seed 7 --out series.csv
    spdt compare   real_series.csv synth_series.csv --out report.csv
    spdt analyze   synth.graph --params params.txt --out analysis.csv

Defaults come from ``spdt.infra.settings``; every flag left unset falls back
to the layered settings. Exit status: 0 on success, 1 on an spdt error,
2 on a usage error.
"""

import argparse
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional

from spdt.core.diffusion_engine import DiseaseParams, breathing_rate_from_litres_per_minute
from spdt.core.errors import RunConfigError, SpdtError
from spdt.handlers.command import Command
from spdt.handlers.commands.analysis_commands import AnalyzeCommand
from spdt.handlers.commands.fit_commands import FitCommand
from spdt.handlers.commands.graph_commands import BadnCommand, ClipSpstCommand, DensifyCommand, GenerateCommand
from spdt.handlers.commands.ingest_commands import IngestCommand
from spdt.handlers.commands.simulation_commands import CompareCommand, SimulateCommand
from spdt.handlers.dispatcher import CommandDispatcher
from spdt.infra.logging import configure_logging
from spdt.infra.settings import resolve_settings


@dataclass
class RunConfig:
    """Everything one invocation needs: subcommand, paths, seed, workers, resolved settings."""
    subcommand: str
    inputs: List[Path] = field(default_factory=list)
    outputs: List[Path] = field(default_factory=list)
    seed: Optional[int] = None
    workers: int = 1
    settings: Dict[str, Any] = field(default_factory=dict)
    args: argparse.Namespace = None

    @classmethod
    def from_args(cls, args: argparse.Namespace) -> "RunConfig":
        overrides = {key: getattr(args, key, None) for key in _SETTING_FLAGS}
        settings = resolve_settings(overrides)
        inputs = [Path(p) for p in (getattr(args, name, None) for name in _INPUT_ARGS) if p]
        outputs = [Path(p) for p in (getattr(args, name, None) for name in _OUTPUT_ARGS) if p]
        return cls(
            subcommand=args.command,
            inputs=inputs,
            outputs=outputs,
            seed=getattr(args, "seed", None),
            workers=int(settings["workers"]),
            settings=settings,
            args=args,
        )

    def validate(self) -> None:
        for path in self.inputs:
            if not path.exists():
                raise RunConfigError(f"input not found: {path}")
        for path in self.outputs:
            parent = path.parent if str(path.parent) else Path(".")
            if not parent.is_dir():
                raise RunConfigError(f"output directory does not exist: {parent}")
            if path in self.inputs:
                raise RunConfigError(f"output would overwrite an input: {path}")
        if self.workers < 1:
            raise RunConfigError(f"workers must be >= 1, got {self.workers}")


# Flags whose unset value falls back to the layered settings
_SETTING_FLAGS = (
    "step_seconds", "delta_sec", "radius_m", "max_gap_s", "eta", "psi",
    "sigma", "g", "p_litres_per_min", "volume", "infectious_days_min", "infectious_days_max",
    "seeds", "days", "runs", "split_midnight",
    "badn_f_per_day", "badn_stay_minutes", "badn_m",
    "workers", "log_level",
)
_INPUT_ARGS = ("updates_file", "cip_file", "params_file", "graph_file", "real_series", "observed_series", "params")
_OUTPUT_ARGS = ("out", "out_graph", "out_cip")


# ----------------------------------------------------------------------
# Parser
# ----------------------------------------------------------------------

def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--workers", type=int, help="parallel worker processes (results do not depend on it)")
    parser.add_argument("--log-level", dest="log_level", help="DEBUG, INFO, WARNING or ERROR")


def _add_seed(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--seed", type=int, required=True, help="64-bit seed (required)")


def _add_model_constants(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--eta", type=float, help="contact reinforcement constant")
    parser.add_argument("--psi", type=float, help="upper bound of node attractiveness")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="spdt", description="SPDT temporal contact graphs and airborne SIR diffusion")
    sub = parser.add_subparsers(dest="command", required=True)

    ingest = sub.add_parser("ingest", help="location updates -> real graph + CIP samples")
    ingest.add_argument("updates_file")
    ingest.add_argument("--out-graph", dest="out_graph", required=True)
    ingest.add_argument("--out-cip", dest="out_cip", required=True)
    ingest.add_argument("--delta", dest="delta_sec", type=float, help="indirect window in seconds")
    ingest.add_argument("--radius", dest="radius_m", type=float, help="proximity radius in meters")
    ingest.add_argument("--max-gap", dest="max_gap_s", type=float, help="longest gap inside a visit, seconds")
    ingest.add_argument("--step", dest="step_seconds", type=int, help="step length in seconds")
    _add_common(ingest)

    fit = sub.add_parser("fit", help="CIP samples -> parameter file")
    fit.add_argument("cip_file")
    fit.add_argument("--out", required=True)
    fit.add_argument("--step", dest="step_seconds", type=int, help="step length in seconds")
    _add_model_constants(fit)
    _add_common(fit)

    generate = sub.add_parser("generate", help="synthesise an SPDT graph")
    generate.add_argument("params_file")
    generate.add_argument("--nodes", type=int, required=True)
    generate.add_argument("--days", type=int, required=True)
    generate.add_argument("--out", required=True)
    _add_model_constants(generate)
    _add_seed(generate)
    _add_common(generate)

    badn = sub.add_parser("badn", help="activity-driven baseline graph")
    badn.add_argument("--nodes", type=int, required=True)
    badn.add_argument("--days", type=int)
    badn.add_argument("--f", dest="badn_f_per_day", type=float, help="activations per day")
    badn.add_argument("--stay", dest="badn_stay_minutes", type=float, help="mean stay in minutes")
    badn.add_argument("--m", dest="badn_m", type=int, help="links per activation")
    badn.add_argument("--step", dest="step_seconds", type=int)
    badn.add_argument("--out", required=True)
    _add_seed(badn)
    _add_common(badn)

    clip = sub.add_parser("clip-spst", help="drop indirect link components")
    clip.add_argument("graph_file")
    clip.add_argument("--out", required=True)
    _add_common(clip)

    dense = sub.add_parser("densify", help="fill empty host days by copying active ones")
    dense.add_argument("graph_file")
    dense.add_argument("--days", type=int)
    dense.add_argument("--out", required=True)
    _add_seed(dense)
    _add_common(dense)

    simulate = sub.add_parser("simulate", help="SIR runs over a graph")
    simulate.add_argument("graph_file")
    simulate.add_argument("--r", dest="r_per_hour", type=float, nargs="+", help="removal rate(s) in 1/h")
    simulate.add_argument("--sigma", type=float)
    simulate.add_argument("--g", type=float, help="particle generation rate, PFU/s")
    simulate.add_argument("--p", dest="p_litres_per_min", type=float, help="breathing rate, L/min")
    simulate.add_argument("--V", dest="volume", type=float, help="proximity volume, m^3")
    simulate.add_argument("--infectious-min", dest="infectious_days_min", type=int)
    simulate.add_argument("--infectious-max", dest="infectious_days_max", type=int)
    simulate.add_argument("--seeds", type=int, help="initially infected nodes")
    simulate.add_argument("--days", type=int)
    simulate.add_argument("--runs", type=int)
    simulate.add_argument("--split-midnight", dest="split_midnight", action="store_true", default=None)
    simulate.add_argument("--out", required=True)
    _add_seed(simulate)
    _add_common(simulate)

    compare = sub.add_parser("compare", help="APE/MAPE between two series files")
    compare.add_argument("real_series")
    compare.add_argument("observed_series")
    compare.add_argument("--out", required=True)
    _add_common(compare)

    analyze = sub.add_parser("analyze", help="static structure and CIP fidelity of a graph")
    analyze.add_argument("graph_file")
    analyze.add_argument("--params", help="parameter file for CIP RSEs")
    analyze.add_argument("--histograms", help="directory for bin,proportion dumps")
    analyze.add_argument("--out", required=True)
    _add_common(analyze)
    return parser


# ----------------------------------------------------------------------
# Command construction
# ----------------------------------------------------------------------

def _disease_params(s: Dict[str, Any]) -> DiseaseParams:
    return DiseaseParams(
        sigma=float(s["sigma"]),
        g=float(s["g"]),
        p_pulmonary=breathing_rate_from_litres_per_minute(float(s["p_litres_per_min"])),
        volume=float(s["volume"]),
        infectious_days_min=int(s["infectious_days_min"]),
        infectious_days_max=int(s["infectious_days_max"]),
        n_seeds=int(s["seeds"]),
        horizon_days=int(s["days"]),
        split_midnight=bool(s["split_midnight"]),
    )


def _ingest(c: RunConfig) -> Command:
    s, a = c.settings, c.args
    return IngestCommand(
        a.updates_file, a.out_graph, a.out_cip,
        delta_sec=float(s["delta_sec"]),
        radius_m=float(s["radius_m"]),
        max_gap_s=float(s["max_gap_s"]),
        step_seconds=int(s["step_seconds"]),
    )


def _fit(c: RunConfig) -> Command:
    s = c.settings
    return FitCommand(
        c.args.cip_file, c.args.out,
        step_seconds=int(s["step_seconds"]),
        eta=float(s["eta"]),
        psi=float(s["psi"]),
    )


def _generate(c: RunConfig) -> Command:
    a = c.args
    # the parameter file is authoritative; only explicit flags replace its eta and psi
    return GenerateCommand(a.params_file, a.nodes, a.days, c.seed, a.out, workers=c.workers, eta=a.eta, psi=a.psi)


def _badn(c: RunConfig) -> Command:
    s, a = c.settings, c.args
    return BadnCommand(
        a.nodes, int(s["days"]), c.seed, a.out,
        f_per_day=float(s["badn_f_per_day"]),
        stay_minutes=float(s["badn_stay_minutes"]),
        m=int(s["badn_m"]),
        step_seconds=int(s["step_seconds"]),
    )


def _clip(c: RunConfig) -> Command:
    return ClipSpstCommand(c.args.graph_file, c.args.out)


def _densify(c: RunConfig) -> Command:
    return DensifyCommand(c.args.graph_file, int(c.settings["days"]), c.seed, c.args.out)


def _simulate(c: RunConfig) -> Command:
    s, a = c.settings, c.args
    r_values = a.r_per_hour if a.r_per_hour else [float(s["r_per_hour"])]
    return SimulateCommand(
        a.graph_file, a.out, _disease_params(s),
        r_per_hour=r_values,
        runs=int(s["runs"]),
        seed=c.seed,
        workers=c.workers,
    )


def _compare(c: RunConfig) -> Command:
    return CompareCommand(c.args.real_series, c.args.observed_series, c.args.out)


def _analyze(c: RunConfig) -> Command:
    a = c.args
    return AnalyzeCommand(a.graph_file, a.out, params_file=a.params, histogram_dir=a.histograms)


COMMAND_BUILDERS: Dict[str, Callable[[RunConfig], Command]] = {
    "ingest": _ingest,
    "fit": _fit,
    "generate": _generate,
    "badn": _badn,
    "clip-spst": _clip,
    "densify": _densify,
    "simulate": _simulate,
    "compare": _compare,
    "analyze": _analyze,
}


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if isinstance(exc.code, int) else 2

    try:
        config = RunConfig.from_args(args)
        config.validate()
        configure_logging(config.settings["log_level"])
        command = COMMAND_BUILDERS[config.subcommand](config)
        result = CommandDispatcher().execute(command)
    except SpdtError as exc:
        print(f"spdt {args.command}: error: {exc}", file=sys.stderr)
        return 1

    results = result if isinstance(result, list) else [result]
    for item in results:
        print(f"spdt {args.command}: {item}", file=sys.stderr)
    return 0
