"""
Line-oriented file formats: temporal graphs, parameter sets, CIP samples and
epidemic time series. Every save writes a temp file next to the target and
atomically replaces it.
"""

import csv
import logging
import os
import tempfile
from pathlib import Path
from typing import Dict, Iterable, Iterator, List, TextIO, Tuple

import numpy as np

from spdt.core.diffusion_engine import EpidemicTimeSeries
from spdt.core.errors import FileFormatError
from spdt.core.estimator import CipSamples
from spdt.core.graph import TemporalGraph
from spdt.core.params import SpdtParams, validate_params

logger = logging.getLogger(__name__)

GRAPH_HEADERS = ("nodes", "horizon", "step_seconds", "delta_steps")
SERIES_COLUMNS = ("run", "day", "S", "I", "R", "new_I")
MISSING_LINK = "-"


def format_number(value: float) -> str:
    """Integers without a decimal point, other floats round-trippable."""
    number = float(value)
    if number.is_integer() and abs(number) < 1e15:
        return str(int(number))
    return repr(number)


class _AtomicFile:
    """Base for stores that replace their target file atomically."""

    def __init__(self, file_path):
        self.file_path = Path(file_path)

    def _write(self, produce) -> None:
        self.file_path.parent.mkdir(parents=True, exist_ok=True)
        temp_fd, temp_path = tempfile.mkstemp(prefix=self.file_path.name, dir=str(self.file_path.parent))
        try:
            with os.fdopen(temp_fd, "w", newline="") as f:
                produce(f)
            os.replace(temp_path, self.file_path)
        finally:
            if os.path.exists(temp_path):
                os.unlink(temp_path)

    def _lines(self) -> Iterator[Tuple[int, str]]:
        try:
            with open(self.file_path, "r") as f:
                for number, line in enumerate(f, start=1):
                    yield number, line.strip()
        except OSError as exc:
            raise FileFormatError(f"cannot read {self.file_path}: {exc}") from exc


# ----------------------------------------------------------------------
# Temporal graph
# ----------------------------------------------------------------------

class GraphFile(_AtomicFile):
    """``host copy_id t_s t_l neighbor t_s' t_l'`` per link; linkless copies use ``- - -``."""

    def save(self, graph: TemporalGraph) -> None:
        order = np.argsort(graph.link_copy, kind="stable")
        offsets = np.concatenate(([0], np.cumsum(graph.links_per_copy())))
        hosts = graph.copy_host.tolist()
        ids = graph.copy_id.tolist()
        starts = graph.copy_t_s.tolist()
        ends = graph.copy_t_l.tolist()
        neighbors = graph.link_neighbor[order].tolist()
        arrivals = graph.link_t_s[order].tolist()
        departures = graph.link_t_l[order].tolist()

        def produce(f: TextIO) -> None:
            f.write(f"#nodes={graph.n_nodes}\n")
            f.write(f"#horizon={graph.horizon}\n")
            f.write(f"#step_seconds={graph.step_seconds}\n")
            f.write(f"#delta_steps={graph.delta_steps}\n")
            for index in range(graph.n_copies):
                prefix = f"{hosts[index]} {ids[index]} {starts[index]} {ends[index]}"
                lo, hi = offsets[index], offsets[index + 1]
                if lo == hi:
                    f.write(f"{prefix} - - -\n")
                    continue
                for k in range(lo, hi):
                    f.write(f"{prefix} {neighbors[k]} {arrivals[k]} {departures[k]}\n")

        self._write(produce)
        logger.info(f"Saved {graph} to {self.file_path}")

    def load(self, validate: bool = True) -> TemporalGraph:
        headers: Dict[str, int] = {}
        copy_index: Dict[Tuple[int, int], int] = {}
        copies: List[Tuple[int, int, int, int]] = []
        links: List[Tuple[int, int, int, int]] = []

        for number, line in self._lines():
            if not line:
                continue
            if line.startswith("#"):
                key, _, value = line[1:].partition("=")
                key = key.strip()
                if key in GRAPH_HEADERS:
                    try:
                        headers[key] = int(value)
                    except ValueError:
                        raise FileFormatError(f"header {key} must be an integer", number)
                continue
            fields = line.split()
            if len(fields) != 7:
                raise FileFormatError(f"expected 7 fields, found {len(fields)}", number)
            try:
                host, copy_id, t_s, t_l = (int(v) for v in fields[:4])
            except ValueError:
                raise FileFormatError("copy fields must be integers", number)
            key = (host, copy_id)
            index = copy_index.get(key)
            if index is None:
                index = copy_index[key] = len(copies)
                copies.append((host, copy_id, t_s, t_l))
            elif copies[index][2:] != (t_s, t_l):
                raise FileFormatError(f"copy {key} appears with different times", number)
            if fields[4:] == [MISSING_LINK] * 3:
                continue
            try:
                neighbor, t_s_prime, t_l_prime = (int(v) for v in fields[4:])
            except ValueError:
                raise FileFormatError("link fields must be integers or '- - -'", number)
            links.append((index, neighbor, t_s_prime, t_l_prime))

        missing = [h for h in GRAPH_HEADERS if h not in headers]
        if missing:
            raise FileFormatError(f"missing header(s): {', '.join('#' + h for h in missing)}")

        copy_array = np.asarray(copies, dtype=np.int64).reshape(-1, 4)
        link_array = np.asarray(links, dtype=np.int64).reshape(-1, 4)
        graph = TemporalGraph(
            n_nodes=headers["nodes"],
            horizon=headers["horizon"],
            step_seconds=headers["step_seconds"],
            delta_steps=headers["delta_steps"],
            copy_host=copy_array[:, 0],
            copy_id=copy_array[:, 1],
            copy_t_s=copy_array[:, 2],
            copy_t_l=copy_array[:, 3],
            link_copy=link_array[:, 0],
            link_neighbor=link_array[:, 1],
            link_t_s=link_array[:, 2],
            link_t_l=link_array[:, 3],
        )
        if validate:
            graph.validate(strict_order=False)
        return graph


# ----------------------------------------------------------------------
# Parameters
# ----------------------------------------------------------------------

_OPTIONAL_PARAMS = {"eta", "step_seconds"}


class ParamsFile(_AtomicFile):
    """``key = value`` per line with exactly the SpdtParams field names."""

    def save(self, params: SpdtParams) -> None:
        def produce(f: TextIO) -> None:
            for name, value in params.as_dict().items():
                f.write(f"{name} = {format_number(value) if name != 'step_seconds' else value}\n")

        self._write(produce)

    def load(self) -> SpdtParams:
        known = set(SpdtParams.field_names())
        values: Dict[str, float] = {}
        for number, line in self._lines():
            if not line or line.startswith("#"):
                continue
            key, sep, raw = line.partition("=")
            key = key.strip()
            if not sep:
                raise FileFormatError("expected 'key = value'", number)
            if key not in known:
                raise FileFormatError(f"unknown parameter '{key}'", number)
            if key in values:
                raise FileFormatError(f"duplicate parameter '{key}'", number)
            try:
                values[key] = int(raw) if key == "step_seconds" else float(raw)
            except ValueError:
                raise FileFormatError(f"parameter '{key}' is not a number", number)
        missing = sorted(known - _OPTIONAL_PARAMS - set(values))
        if missing:
            raise FileFormatError(f"missing parameter(s): {', '.join(missing)}")
        return validate_params(SpdtParams(**values))


# ----------------------------------------------------------------------
# CIP samples
# ----------------------------------------------------------------------

class CipFile(_AtomicFile):
    """Records ``TA``, ``H``, ``D``, ``TC <delay> <paired t_a>``, ``TD``, ``TW`` (seconds)."""

    def save(self, cip: CipSamples) -> None:
        def produce(f: TextIO) -> None:
            f.write(f"#observation_days={format_number(cip.observation_days)}\n")
            f.write(f"#delta_sec={format_number(cip.delta_sec)}\n")
            for value in cip.active_durations:
                f.write(f"TA {format_number(value)}\n")
            for value in cip.activation_frequencies:
                f.write(f"H {format_number(value)}\n")
            for value in cip.degrees:
                f.write(f"D {int(value)}\n")
            for delay, paired in zip(cip.creation_delays, cip.paired_durations):
                f.write(f"TC {format_number(delay)} {format_number(paired)}\n")
            for value in cip.link_durations:
                f.write(f"TD {format_number(value)}\n")
            for value in cip.waiting_periods:
                f.write(f"TW {format_number(value)}\n")

        self._write(produce)

    def load(self) -> CipSamples:
        samples: Dict[str, List[float]] = {"TA": [], "H": [], "D": [], "TC": [], "TCP": [], "TD": [], "TW": []}
        headers = {"observation_days": 1.0, "delta_sec": 0.0}
        for number, line in self._lines():
            if not line:
                continue
            if line.startswith("#"):
                key, _, value = line[1:].partition("=")
                if key.strip() in headers:
                    try:
                        headers[key.strip()] = float(value)
                    except ValueError:
                        raise FileFormatError(f"header {key.strip()} is not a number", number)
                continue
            record, *values = line.split()
            expected = 2 if record == "TC" else 1
            if record not in samples or record == "TCP" or len(values) != expected:
                raise FileFormatError(f"malformed CIP record '{line}'", number)
            try:
                numbers = [float(v) for v in values]
            except ValueError:
                raise FileFormatError(f"non-numeric CIP record '{line}'", number)
            samples[record].append(numbers[0])
            if record == "TC":
                samples["TCP"].append(numbers[1])

        return CipSamples(
            active_durations=samples["TA"],
            activation_frequencies=samples["H"],
            degrees=np.asarray(samples["D"], dtype=np.int64),
            creation_delays=samples["TC"],
            paired_durations=samples["TCP"],
            link_durations=samples["TD"],
            waiting_periods=samples["TW"],
            observation_days=headers["observation_days"],
            delta_sec=headers["delta_sec"],
        )


# ----------------------------------------------------------------------
# Epidemic series and plain tables
# ----------------------------------------------------------------------

class SeriesFile(_AtomicFile):
    """``run,day,S,I,R,new_I`` rows, runs in order."""

    def save(self, series: Iterable[EpidemicTimeSeries]) -> None:
        def produce(f: TextIO) -> None:
            writer = csv.writer(f, lineterminator="\n")
            writer.writerow(SERIES_COLUMNS)
            for run in series:
                writer.writerows(run.rows())

        self._write(produce)

    def load(self) -> List[EpidemicTimeSeries]:
        rows: Dict[int, List[Tuple[int, ...]]] = {}
        try:
            with open(self.file_path, "r", newline="") as f:
                reader = csv.reader(f)
                header = next(reader, None)
                if header is None or tuple(h.strip() for h in header) != SERIES_COLUMNS:
                    raise FileFormatError(f"series header must be {','.join(SERIES_COLUMNS)}", 1)
                for number, row in enumerate(reader, start=2):
                    if not row:
                        continue
                    try:
                        values = tuple(int(v) for v in row)
                    except ValueError:
                        raise FileFormatError("series fields must be integers", number)
                    if len(values) != len(SERIES_COLUMNS):
                        raise FileFormatError(f"expected {len(SERIES_COLUMNS)} fields", number)
                    rows.setdefault(values[0], []).append(values)
        except OSError as exc:
            raise FileFormatError(f"cannot read {self.file_path}: {exc}") from exc

        series = []
        for run in sorted(rows):
            table = np.asarray(sorted(rows[run], key=lambda r: r[1]), dtype=np.int64)
            series.append(EpidemicTimeSeries(
                run=run,
                seed=0,
                susceptible=table[:, 2],
                infected=table[:, 3],
                recovered=table[:, 4],
                new_infections=table[:, 5],
            ))
        return series


class TextFile(_AtomicFile):
    """Rendered reports and histogram dumps."""

    def save(self, text: str) -> None:
        self._write(lambda f: f.write(text if text.endswith("\n") else text + "\n"))
