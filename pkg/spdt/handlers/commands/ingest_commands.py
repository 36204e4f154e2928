import logging
from dataclasses import dataclass
from pathlib import Path

from spdt.core.errors import RunConfigError
from spdt.core.ingestion import build_real_graph, extract_visits
from spdt.handlers.command import Command
from spdt.infra.imports.trajectory_service import TrajectoryImportService
from spdt.infra.persistence import CipFile, GraphFile

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class IngestSummary:
    users: int
    visits: int
    copies: int
    links: int
    skipped_rows: int

    def __str__(self) -> str:
        return (
            f"users={self.users} visits={self.visits} copies={self.copies} "
            f"links={self.links} skipped_rows={self.skipped_rows}"
        )


class IngestCommand(Command):
    """Location updates -> real temporal graph file + CIP sample file."""

    def __init__(
        self,
        updates_file,
        out_graph,
        out_cip,
        delta_sec: float,
        radius_m: float,
        max_gap_s: float,
        step_seconds: int,
    ):
        self.updates_file = Path(updates_file)
        self.out_graph = Path(out_graph)
        self.out_cip = Path(out_cip)
        self.delta_sec = delta_sec
        self.radius_m = radius_m
        self.max_gap_s = max_gap_s
        self.step_seconds = step_seconds

    def describe(self) -> dict:
        return {"input": str(self.updates_file), "delta_sec": self.delta_sec}

    def execute(self) -> IngestSummary:
        if not self.updates_file.is_file():
            raise RunConfigError(f"location update file not found: {self.updates_file}")

        batch = TrajectoryImportService().read_file(self.updates_file)
        visits = extract_visits(
            batch.updates,
            radius_m=self.radius_m,
            max_gap_s=self.max_gap_s,
            coordinates=batch.coordinates,
        )
        result = build_real_graph(
            visits,
            delta_sec=self.delta_sec,
            radius_m=self.radius_m,
            step_seconds=self.step_seconds,
            coordinates=batch.coordinates,
        )
        GraphFile(self.out_graph).save(result.graph)
        CipFile(self.out_cip).save(result.cip)
        return IngestSummary(
            users=batch.users,
            visits=len(visits),
            copies=result.graph.n_copies,
            links=result.graph.n_links,
            skipped_rows=batch.skipped,
        )
