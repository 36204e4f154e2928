import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, Optional

from spdt.core.analysis import (
    clustering_coefficients,
    cip_rse_report,
    daily_link_density,
    degree_stats,
    histogram_dump,
    project_static,
    proportion_histogram,
)
from spdt.core.errors import RunConfigError
from spdt.core.estimator import extract_cip, seconds_to_ceil_steps
from spdt.handlers.command import Command
from spdt.infra.persistence import GraphFile, ParamsFile, TextFile
from spdt.infra.reporting import ReportEngine

logger = logging.getLogger(__name__)

ANALYSIS_TEMPLATE = "analysis_report.csv.j2"


@dataclass(frozen=True)
class AnalysisSummary:
    pearson: float
    mean_clustering: float
    static_edges: int
    cip_rse: Dict[str, float] = field(default_factory=dict)

    def __str__(self) -> str:
        text = (
            f"edges={self.static_edges} pearson(in,out)={self.pearson:.3f} "
            f"mean_clustering={self.mean_clustering:.4f}"
        )
        if self.cip_rse:
            text += " " + " ".join(f"rse_{k}={v:.4f}" for k, v in self.cip_rse.items())
        return text


class AnalyzeCommand(Command):
    """Static structure, CIP fidelity and daily density of a graph file."""

    def __init__(
        self,
        graph_file,
        out_report,
        params_file=None,
        histogram_dir=None,
        report_engine: ReportEngine = None,
    ):
        self.graph_file = Path(graph_file)
        self.out_report = Path(out_report)
        self.params_file: Optional[Path] = Path(params_file) if params_file else None
        self.histogram_dir: Optional[Path] = Path(histogram_dir) if histogram_dir else None
        self.report_engine = report_engine or ReportEngine()

    def describe(self) -> dict:
        return {"graph": str(self.graph_file)}

    def execute(self) -> AnalysisSummary:
        if not self.graph_file.is_file():
            raise RunConfigError(f"graph file not found: {self.graph_file}")
        if self.params_file is not None and not self.params_file.is_file():
            raise RunConfigError(f"parameter file not found: {self.params_file}")

        graph = GraphFile(self.graph_file).load()
        static = project_static(graph)
        degrees = degree_stats(static)
        clustering = clustering_coefficients(static)
        cip = extract_cip(graph)

        cip_rse: Dict[str, float] = {}
        if self.params_file is not None:
            cip_rse = cip_rse_report(cip, ParamsFile(self.params_file).load())
        if self.histogram_dir is not None:
            self._dump_histograms(cip, graph.step_seconds)

        density = daily_link_density(graph)
        per_host = density.links_per_active_host
        TextFile(self.out_report).save(self.report_engine.render(ANALYSIS_TEMPLATE, {
            "graph_label": self.graph_file.name,
            "nodes": graph.n_nodes,
            "copies": graph.n_copies,
            "links": graph.n_links,
            "static_edges": static.n_edges,
            "pearson": degrees.pearson,
            "mean_clustering": clustering.mean,
            "cip_rse": cip_rse,
            "density": [
                {
                    "day": day,
                    "active_hosts": int(density.active_hosts[day]),
                    "links": int(density.links[day]),
                    "per_host": float(per_host[day]),
                }
                for day in range(len(density.links))
            ],
        }))
        return AnalysisSummary(
            pearson=degrees.pearson,
            mean_clustering=clustering.mean,
            static_edges=static.n_edges,
            cip_rse=cip_rse,
        )

    def _dump_histograms(self, cip, step_seconds: int) -> None:
        samples = {
            "t_a": seconds_to_ceil_steps(cip.active_durations, step_seconds),
            "t_w": seconds_to_ceil_steps(cip.waiting_periods, step_seconds),
            "d": cip.degrees,
            "t_c": seconds_to_ceil_steps(cip.creation_delays, step_seconds),
            "t_d": seconds_to_ceil_steps(cip.link_durations, step_seconds),
        }
        for name, values in samples.items():
            if len(values) == 0:
                continue
            lines = ["bin,proportion", *histogram_dump(proportion_histogram(values))]
            TextFile(self.histogram_dir / f"{name}.csv").save("\n".join(lines))
