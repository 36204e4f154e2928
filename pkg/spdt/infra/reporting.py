"""
Jinja2 rendering of run summaries, comparison reports and analysis tables.

Templates live in ``data/reports`` and produce delimiter-separated text.
"""

import csv
from io import StringIO
from pathlib import Path
from typing import Any, Dict, Optional

from jinja2 import Environment, FileSystemLoader, StrictUndefined, TemplateNotFound

REPORTS_DIR = Path(__file__).resolve().parents[2] / "data" / "reports"


class ReportEngine:
    """Engine for rendering report templates."""

    def __init__(self, templates_dir: Optional[Path] = None):
        self.templates_dir = Path(templates_dir) if templates_dir is not None else REPORTS_DIR
        self.env = Environment(
            loader=FileSystemLoader(str(self.templates_dir)),
            autoescape=False,
            trim_blocks=True,
            lstrip_blocks=True,
            keep_trailing_newline=True,
            undefined=StrictUndefined,
        )
        self.env.filters["csv"] = self._csv_filter
        self.env.filters["num"] = self._number_filter

    @staticmethod
    def _csv_filter(value: Any) -> str:
        """Render a single scalar or list value as a valid CSV field."""
        if value is None:
            scalar = ""
        elif isinstance(value, (list, tuple, set)):
            scalar = ", ".join(str(item) for item in value)
        else:
            scalar = str(value)

        buffer = StringIO()
        writer = csv.writer(buffer, lineterminator="")
        writer.writerow([scalar])
        return buffer.getvalue()

    @staticmethod
    def _number_filter(value: Any, digits: int = 6) -> str:
        if value is None:
            return ""
        number = float(value)
        if number != number:
            return "nan"
        if number.is_integer() and abs(number) < 1e15:
            return str(int(number))
        return f"{number:.{digits}g}"

    def render(self, template_id: str, context: Dict[str, Any]) -> str:
        """
        Render a template with the given context data.

        Args:
            template_id: Template filename (e.g., "simulation_summary.csv.j2")
            context: Values passed to the template

        Raises:
            TemplateNotFound: If template_id doesn't exist
        """
        try:
            template = self.env.get_template(template_id)
        except TemplateNotFound:
            raise TemplateNotFound(f"Template '{template_id}' not found in {self.templates_dir}")
        return template.render(**context)
