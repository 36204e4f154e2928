"""Commands that produce temporal graph files: synthesis, baselines and densification."""

import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, Optional

from spdt.core.analysis import cip_rse_report
from spdt.core.errors import RunConfigError
from spdt.core.estimator import extract_cip
from spdt.core.generator import badn_activation_potential, clip_to_spst, generate_badn, synthesize_graph
from spdt.core.graph import TemporalGraph
from spdt.core.ingestion import densify
from spdt.core.params import TimeStep
from spdt.core.random_source import RandomSource, StreamDomain
from spdt.handlers.command import Command
from spdt.infra.persistence import GraphFile, ParamsFile

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class GraphSummary:
    nodes: int
    copies: int
    links: int
    cip_rse: Dict[str, float] = field(default_factory=dict)

    @classmethod
    def of(cls, graph: TemporalGraph, cip_rse: Optional[Dict[str, float]] = None) -> "GraphSummary":
        return cls(graph.n_nodes, graph.n_copies, graph.n_links, dict(cip_rse or {}))

    def __str__(self) -> str:
        text = f"nodes={self.nodes} copies={self.copies} links={self.links}"
        if self.cip_rse:
            text += " " + " ".join(f"rse_{k}={v:.4f}" for k, v in self.cip_rse.items())
        return text


def _require_file(path: Path, what: str) -> None:
    if not path.is_file():
        raise RunConfigError(f"{what} not found: {path}")


def _require_positive(value: int, name: str) -> None:
    if value < 1:
        raise RunConfigError(f"{name} must be >= 1, got {value}")


class GenerateCommand(Command):
    """Synthesise an SPDT graph from a parameter file and report CIP fidelity."""

    def __init__(
        self,
        params_file,
        nodes: int,
        days: int,
        seed: int,
        out_graph,
        workers: int = 1,
        eta: Optional[float] = None,
        psi: Optional[float] = None,
    ):
        self.params_file = Path(params_file)
        self.nodes = nodes
        self.days = days
        self.seed = seed
        self.out_graph = Path(out_graph)
        self.workers = workers
        self.overrides = {k: v for k, v in (("eta", eta), ("psi", psi)) if v is not None}

    def describe(self) -> dict:
        return {"nodes": self.nodes, "days": self.days, "seed": self.seed, "workers": self.workers}

    def execute(self) -> GraphSummary:
        _require_file(self.params_file, "parameter file")
        _require_positive(self.days, "days")
        params = ParamsFile(self.params_file).load()
        if self.overrides:
            params = params.with_overrides(**self.overrides)
        horizon = TimeStep.at_day(self.days, params.step_seconds).index
        graph = synthesize_graph(params, self.nodes, horizon, RandomSource(self.seed), workers=self.workers)
        GraphFile(self.out_graph).save(graph)
        rse = cip_rse_report(extract_cip(graph), params)
        return GraphSummary.of(graph, rse)


class BadnCommand(Command):
    """Basic activity-driven baseline with p = f * stay / day."""

    def __init__(
        self,
        nodes: int,
        days: int,
        seed: int,
        out_graph,
        f_per_day: float,
        stay_minutes: float,
        m: int,
        step_seconds: int,
    ):
        self.nodes = nodes
        self.days = days
        self.seed = seed
        self.out_graph = Path(out_graph)
        self.f_per_day = f_per_day
        self.stay_minutes = stay_minutes
        self.m = m
        self.step_seconds = step_seconds

    def describe(self) -> dict:
        return {"nodes": self.nodes, "days": self.days, "seed": self.seed, "m": self.m}

    def execute(self) -> GraphSummary:
        _require_positive(self.days, "days")
        p = badn_activation_potential(self.f_per_day, self.stay_minutes)
        horizon = TimeStep.at_day(self.days, self.step_seconds).index
        rng = RandomSource(self.seed, 0, StreamDomain.BADN)
        graph = generate_badn(self.nodes, p, self.m, horizon, rng, step_seconds=self.step_seconds)
        GraphFile(self.out_graph).save(graph)
        return GraphSummary.of(graph)


class ClipSpstCommand(Command):
    """Remove the indirect part of every link."""

    def __init__(self, in_graph, out_graph):
        self.in_graph = Path(in_graph)
        self.out_graph = Path(out_graph)

    def describe(self) -> dict:
        return {"input": str(self.in_graph)}

    def execute(self) -> GraphSummary:
        _require_file(self.in_graph, "graph file")
        graph = clip_to_spst(GraphFile(self.in_graph).load())
        GraphFile(self.out_graph).save(graph)
        return GraphSummary.of(graph)


class DensifyCommand(Command):
    """Copy active days of each host onto its empty days."""

    def __init__(self, in_graph, days: int, seed: int, out_graph):
        self.in_graph = Path(in_graph)
        self.days = days
        self.seed = seed
        self.out_graph = Path(out_graph)

    def describe(self) -> dict:
        return {"input": str(self.in_graph), "days": self.days, "seed": self.seed}

    def execute(self) -> GraphSummary:
        _require_file(self.in_graph, "graph file")
        _require_positive(self.days, "days")
        graph = densify(GraphFile(self.in_graph).load(), self.days, RandomSource(self.seed))
        GraphFile(self.out_graph).save(graph)
        return GraphSummary.of(graph)
