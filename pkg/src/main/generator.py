"""
Markdown Report Generator
=========================
Prepare evaluation context and render via Jinja2 template.
"""

from pathlib import Path
from typing import Any

import jinja2

from src.models.evaluation import EvalReport
from src.repositories.container import atomic_write_text

_TEMPLATES_DIR = Path(__file__).parent / "templates"
_TEMPLATE_NAME = "report.md.j2"


def _mm(value: float) -> str:
    return f"{value:.2f}"


class MarkdownReportGenerator:
    """Evaluation tables in Markdown, one column group per region."""

    def __init__(self) -> None:
        self._env = jinja2.Environment(
            loader=jinja2.FileSystemLoader(str(_TEMPLATES_DIR)),
            autoescape=False,
            trim_blocks=True,
            lstrip_blocks=True,
            keep_trailing_newline=True,
        )
        self._env.filters["mm"] = _mm

    def render(self, report: EvalReport) -> str:
        template = self._env.get_template(_TEMPLATE_NAME)
        return template.render(**self._build_context(report))

    def generate(self, report: EvalReport, output_path: Path) -> None:
        """Generate Markdown report to output_path."""
        atomic_write_text(Path(output_path), self.render(report))

    # ── context builder ────────────────────────────────────────────────────

    def _build_context(self, report: EvalReport) -> dict[str, Any]:
        regions = report.regions()
        methods = report.methods()
        table = [
            {
                "method": method,
                "cells": [report.row(method, region) for region in regions],
            }
            for method in methods
        ]
        # lowest m_d per region is set in bold
        best = {
            region: min(methods, key=lambda m: report.row(m, region).md_mean) for region in regions
        }
        return {
            "samples": report.samples,
            "regions": regions,
            "table": table,
            "best": best,
            "pck_range": (report.thresholds[0], report.thresholds[-1]) if report.thresholds else None,
            "skull": sorted(report.skull, key=lambda s: s.median),
            "inputs": sorted(report.inputs.items()),
        }
