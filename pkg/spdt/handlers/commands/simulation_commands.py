"""SIR simulation over a graph file and comparison of two series files."""

import logging
from dataclasses import dataclass, replace
from pathlib import Path
from typing import List, Sequence

import numpy as np

from spdt.core.analysis import (
    ApeReport,
    RunSummary,
    ape_mape,
    mean_new_infections,
    mean_prevalence,
    rse,
    summarize_runs,
)
from spdt.core.diffusion_engine import DiseaseParams, removal_rate_from_per_hour, run_sir
from spdt.core.errors import MetricError, RunConfigError
from spdt.core.random_source import RandomSource
from spdt.handlers.command import Command
from spdt.infra.persistence import GraphFile, SeriesFile, TextFile, format_number
from spdt.infra.reporting import ReportEngine

logger = logging.getLogger(__name__)

SUMMARY_TEMPLATE = "simulation_summary.csv.j2"
COMPARISON_TEMPLATE = "comparison_report.csv.j2"


def sweep_path(path: Path, r_per_hour: float, sweep: bool) -> Path:
    """``series.csv`` -> ``series.r1.5.csv`` when several r values share one output name."""
    if not sweep:
        return path
    return path.with_name(f"{path.stem}.r{format_number(r_per_hour)}{path.suffix}")


def summary_path(series_path: Path) -> Path:
    return series_path.with_name(f"{series_path.stem}.summary{series_path.suffix or '.csv'}")


@dataclass(frozen=True)
class SimulationSummary:
    r_per_hour: float
    series_file: Path
    summary: RunSummary

    def __str__(self) -> str:
        s = self.summary
        return (
            f"r={format_number(self.r_per_hour)}/h runs={s.runs} peak_I={s.peak_prevalence:.1f} "
            f"peak_day={s.peak_day} total_I={s.mean_total_infected:.1f}±{s.std_total_infected:.1f}"
        )


class SimulateCommand(Command):
    """Run SIR for each removal rate and write series + summary files."""

    def __init__(
        self,
        graph_file,
        out_series,
        disease: DiseaseParams,
        r_per_hour: Sequence[float],
        runs: int,
        seed: int,
        workers: int = 1,
        report_engine: ReportEngine = None,
    ):
        self.graph_file = Path(graph_file)
        self.out_series = Path(out_series)
        self.disease = disease
        self.r_per_hour = list(r_per_hour)
        self.runs = runs
        self.seed = seed
        self.workers = workers
        self.report_engine = report_engine or ReportEngine()

    def describe(self) -> dict:
        return {"graph": str(self.graph_file), "r_per_hour": self.r_per_hour, "runs": self.runs, "seed": self.seed}

    def execute(self) -> List[SimulationSummary]:
        if not self.graph_file.is_file():
            raise RunConfigError(f"graph file not found: {self.graph_file}")
        if not self.r_per_hour:
            raise RunConfigError("at least one removal rate r is required")
        graph = GraphFile(self.graph_file).load()
        sweep = len(self.r_per_hour) > 1

        results = []
        for r_per_hour in self.r_per_hour:
            disease = replace(self.disease, r=removal_rate_from_per_hour(r_per_hour))
            series = run_sir(graph, disease, RandomSource(self.seed), self.runs, workers=self.workers)
            series_file = sweep_path(self.out_series, r_per_hour, sweep)
            SeriesFile(series_file).save(series)

            summary = summarize_runs(series)
            TextFile(summary_path(series_file)).save(self.report_engine.render(SUMMARY_TEMPLATE, {
                "label": str(self.graph_file.name),
                "r_per_hour": r_per_hour,
                "sigma": disease.sigma,
                "seeds": disease.n_seeds,
                "days": disease.horizon_days,
                "runs": series,
                "summary": summary,
            }))
            results.append(SimulationSummary(r_per_hour, series_file, summary))
        return results


@dataclass(frozen=True)
class ComparisonSummary:
    report: ApeReport
    prevalence_rse: float

    def __str__(self) -> str:
        return (
            f"Total Er={self.report.cumulative_ape:.2f}% Mean Er={self.report.mape:.2f}% "
            f"STD Er={self.report.std:.2f}% prevalence RSE={self.prevalence_rse:.4f}"
        )


def _proportions(curve: np.ndarray) -> np.ndarray:
    total = curve.sum()
    return curve / total if total > 0 else np.full(len(curve), 1.0 / max(1, len(curve)))


class CompareCommand(Command):
    """APE/MAPE of run-mean daily infections, plus RSE of the prevalence curves."""

    def __init__(self, real_series, observed_series, out_report, report_engine: ReportEngine = None):
        self.real_series = Path(real_series)
        self.observed_series = Path(observed_series)
        self.out_report = Path(out_report)
        self.report_engine = report_engine or ReportEngine()

    def describe(self) -> dict:
        return {"real": str(self.real_series), "observed": str(self.observed_series)}

    def execute(self) -> ComparisonSummary:
        for path in (self.real_series, self.observed_series):
            if not path.is_file():
                raise RunConfigError(f"series file not found: {path}")
        real = SeriesFile(self.real_series).load()
        observed = SeriesFile(self.observed_series).load()
        if not real or not observed:
            raise MetricError("both series files need at least one run")

        real_new = mean_new_infections(real)
        observed_new = mean_new_infections(observed)
        if len(real_new) != len(observed_new):
            raise MetricError(f"series lengths differ: {len(real_new)} vs {len(observed_new)} days")
        report = ape_mape(real_new, observed_new)
        prevalence_rse = rse(_proportions(mean_prevalence(observed)), _proportions(mean_prevalence(real)))

        compared = iter(report.ape.tolist())
        days = [
            {
                "day": day,
                "real": r,
                "observed": o,
                "ape": next(compared) if r > 0 else None,
            }
            for day, (r, o) in enumerate(zip(real_new.tolist(), observed_new.tolist()))
        ]
        TextFile(self.out_report).save(self.report_engine.render(COMPARISON_TEMPLATE, {
            "real_label": self.real_series.name,
            "observed_label": self.observed_series.name,
            "days": days,
            "report": report,
            "prevalence_rse": prevalence_rse,
        }))
        return ComparisonSummary(report=report, prevalence_rse=prevalence_rse)
