import logging
import sys
from dataclasses import dataclass
from datetime import datetime
from typing import Any, Dict, List, Union

LOG_FORMAT = "%(asctime)s - %(name)s - %(levelname)s - %(message)s"


def configure_logging(level: Union[str, int] = "INFO") -> None:
    """Send diagnostics to stderr; data files never receive log output."""
    if isinstance(level, str):
        level = logging.getLevelName(level.upper())
        if not isinstance(level, int):
            level = logging.INFO
    logging.basicConfig(level=level, format=LOG_FORMAT, stream=sys.stderr, force=True)


@dataclass
class LogEvent:
    """Represents a single run event."""
    timestamp: datetime
    source: str
    event_type: str
    payload: Dict[str, Any]


class LogManager:
    """Singleton history of structured run events."""

    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
            cls._instance._initialized = False
        return cls._instance

    def __init__(self):
        if self._initialized:
            return
        self._history: List[LogEvent] = []
        self._initialized = True

    def emit(self, source: str, event_type: str, payload: Dict[str, Any]) -> None:
        """
        Record an event.

        Args:
            source: Emitting component (e.g. "generator", "Dispatcher")
            event_type: Event name (e.g. "GRAPH_SYNTHESIZED", "EXECUTE_COMPLETE")
            payload: Summary values for the event
        """
        self._history.append(LogEvent(
            timestamp=datetime.now(),
            source=source,
            event_type=event_type,
            payload=payload,
        ))
        logging.getLogger(f"spdt.events.{source}").debug(f"{event_type} {payload}")

    def clear(self) -> None:
        self._history.clear()
