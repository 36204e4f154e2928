import csv
import logging
import math
from pathlib import Path
from typing import List, Optional, TextIO

from spdt.core.errors import IngestionError
from spdt.core.ingestion import (
    CoordinateSystem,
    LocationUpdate,
    TrajectoryBatch,
    TrajectoryRowError,
)

logger = logging.getLogger(__name__)

COORDS_HEADER = "#coords="
COLUMNS = ("user", "x", "y", "t")


class TrajectoryImportService:
    """Reads ``user,x,y,t`` location updates under a ``#coords=meters|degrees`` header."""

    def read_file(self, path) -> TrajectoryBatch:
        path = Path(path)
        try:
            with open(path, "r", newline="") as stream:
                return self.read(stream)
        except OSError as exc:
            raise IngestionError(f"cannot read {path}: {exc}") from exc

    def read(self, stream: TextIO) -> TrajectoryBatch:
        coordinates: Optional[CoordinateSystem] = None
        updates: List[LocationUpdate] = []
        row_errors: List[TrajectoryRowError] = []
        saw_content = False

        for row_index, row in enumerate(csv.reader(stream), start=1):
            if not row or all(_is_blank_cell(cell) for cell in row):
                continue
            first = row[0].strip()
            if first.startswith("#"):
                if first.lower().startswith(COORDS_HEADER):
                    if coordinates is not None:
                        raise IngestionError(f"line {row_index}: repeated coordinate header")
                    coordinates = _parse_coordinates(first, row_index)
                continue
            saw_content = True
            if coordinates is None:
                raise IngestionError("file must start with a '#coords=meters|degrees' header")
            if [cell.strip().lower() for cell in row] == list(COLUMNS):
                continue

            errors: List[str] = []
            if len(row) != len(COLUMNS):
                errors.append(f"expected {len(COLUMNS)} fields, found {len(row)}")
            else:
                update = _parse_update(row, coordinates, errors)
                if update is not None:
                    updates.append(update)
            if errors:
                row_errors.append(TrajectoryRowError(row_number=row_index, messages=tuple(errors)))

        if coordinates is None:
            if saw_content:
                raise IngestionError("file must start with a '#coords=meters|degrees' header")
            coordinates = CoordinateSystem.METERS
        if row_errors:
            logger.warning(f"Skipped {len(row_errors)} malformed location rows")
        return TrajectoryBatch(coordinates=coordinates, updates=updates, errors=row_errors)


def _parse_coordinates(cell: str, row_index: int) -> CoordinateSystem:
    value = cell[len(COORDS_HEADER):].strip().lower()
    try:
        return CoordinateSystem(value)
    except ValueError:
        raise IngestionError(f"line {row_index}: unknown coordinate system '{value}'")


def _parse_update(row: List[str], coordinates: CoordinateSystem, errors: List[str]) -> Optional[LocationUpdate]:
    raw_user, raw_x, raw_y, raw_t = (cell.strip() for cell in row)
    try:
        user = int(raw_user)
    except ValueError:
        errors.append(f"user id '{raw_user}' is not an integer")
        return None
    try:
        x, y, t = float(raw_x), float(raw_y), float(raw_t)
    except ValueError:
        errors.append("x, y and t must be numbers")
        return None
    if not all(math.isfinite(v) for v in (x, y, t)):
        errors.append("x, y and t must be finite")
        return None
    if coordinates is CoordinateSystem.DEGREES and not (-180.0 <= x <= 180.0 and -90.0 <= y <= 90.0):
        errors.append("longitude/latitude out of range")
        return None
    return LocationUpdate(user=user, x=x, y=y, t=t)


def _is_blank_cell(value: object) -> bool:
    return value is None or str(value).strip() == ""
