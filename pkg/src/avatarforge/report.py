"""The thirteen-metric report: registry, container, and serializers.

Reports serialize to JSON, CSV, and a two-table Markdown layout (quality /
input alignment + frame consistency) with a direction arrow after each
metric name. Output is byte-stable for identical inputs: no timestamps,
fixed ordering, fixed float formatting.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field

from .errors import InvariantViolation

LOWER = "lower"
HIGHER = "higher"

# name -> (scope, better-direction), in Tables-layout order.
METRIC_REGISTRY: dict[str, tuple[str, str]] = {
    "Frame NIQE": ("frame", LOWER),
    "Body NIQE": ("body", LOWER),
    "Background NIQE": ("background", LOWER),
    "Frame BRISQUE": ("frame", LOWER),
    "Body BRISQUE": ("body", LOWER),
    "Background BRISQUE": ("background", LOWER),
    "Pose MES": ("pose", LOWER),
    "Text Alignment": ("text", HIGHER),
    "Frame MSE": ("frame", LOWER),
    "Frame L1": ("frame", LOWER),
    "Frame CLIP": ("frame", HIGHER),
    "Body CLIP": ("body", HIGHER),
    "Background CLIP": ("background", HIGHER),
}

QUALITY_METRICS = (
    "Frame NIQE", "Body NIQE", "Background NIQE",
    "Frame BRISQUE", "Body BRISQUE", "Background BRISQUE",
)
ALIGNMENT_METRICS = (
    "Pose MES", "Text Alignment",
    "Frame MSE", "Frame L1", "Frame CLIP", "Body CLIP", "Background CLIP",
)

_ARROW = {LOWER: "↓", HIGHER: "↑"}


@dataclass(frozen=True)
class MetricEntry:
    scope: str
    direction: str
    value: float | None
    note: str = ""

    @property
    def available(self) -> bool:
        return self.value is not None


@dataclass
class MetricReport:
    """Named metric values grouped by scope, restricted to the registry."""

    entries: dict[str, MetricEntry] = field(default_factory=dict)

    def set(self, name: str, value: float | None, note: str = "") -> None:
        if name not in METRIC_REGISTRY:
            raise InvariantViolation(f"unknown metric name {name!r}")
        scope, direction = METRIC_REGISTRY[name]
        if value is not None:
            value = float(value)
            if not math.isfinite(value):
                raise InvariantViolation(f"metric {name!r} must be finite, got {value}")
        self.entries[name] = MetricEntry(scope=scope, direction=direction, value=value, note=note)

    def get(self, name: str) -> MetricEntry:
        return self.entries[name]

    def ordered_names(self) -> list[str]:
        return [n for n in METRIC_REGISTRY if n in self.entries]

    def to_json(self) -> str:
        doc = {
            name: {
                "scope": e.scope,
                "direction": e.direction,
                "value": e.value,
                **({"note": e.note} if e.note else {}),
            }
            for name, e in ((n, self.entries[n]) for n in self.ordered_names())
        }
        return json.dumps(doc, indent=2) + "\n"

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["metric", "scope", "direction", "value"])
        for name in self.ordered_names():
            e = self.entries[name]
            writer.writerow([name, e.scope, e.direction, _format_value(e.value)])
        return buf.getvalue()

    def to_markdown(self, label: str = "result") -> str:
        lines = ["## Quality", ""]
        lines += self._markdown_table(label, QUALITY_METRICS)
        lines += ["", "## Input Alignment & Frame Consistency", ""]
        lines += self._markdown_table(label, ALIGNMENT_METRICS)
        return "\n".join(lines) + "\n"

    def _markdown_table(self, label: str, names: tuple[str, ...]) -> list[str]:
        present = [n for n in names if n in self.entries]
        header = ["Model"] + [f"{n} {_ARROW[METRIC_REGISTRY[n][1]]}" for n in present]
        row = [label] + [_format_value(self.entries[n].value) for n in present]
        return [
            "| " + " | ".join(header) + " |",
            "|" + "|".join("---" for _ in header) + "|",
            "| " + " | ".join(row) + " |",
        ]


def _format_value(value: float | None) -> str:
    if value is None:
        return "n/a"
    return f"{value:.2f}"
