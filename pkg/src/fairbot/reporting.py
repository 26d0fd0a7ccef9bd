"""Serialization of experiment reports, rate tables, and run manifests.

Every output file embeds a RunManifest describing the tool version, the
subcommand, the full flag set, and the root seed; re-running those flags
reproduces the payload byte for byte on the same platform (only the manifest
timestamp differs). CSV files carry the manifest as a leading comment line.
"""

from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass
from datetime import datetime, timezone
from enum import Enum
from typing import Any

import numpy as np

from . import __version__
from .scenarios import ExperimentReport
from .uniformity import BotSeries


@dataclass(frozen=True)
class RunManifest:
    tool_version: str
    subcommand: str
    args: dict[str, Any]
    root_seed: int | None
    timestamp: str

    @classmethod
    def create(cls, subcommand: str, args: dict[str, Any], root_seed: int | None) -> "RunManifest":
        return cls(
            tool_version=__version__,
            subcommand=subcommand,
            args=_plain(args),
            root_seed=root_seed,
            timestamp=datetime.now(timezone.utc).isoformat(timespec="seconds"),
        )


def _plain(obj):
    """Recursively convert to JSON-serializable builtins."""
    if isinstance(obj, Enum):
        return obj.value
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    if dataclasses.is_dataclass(obj) and not isinstance(obj, type):
        return {k: _plain(v) for k, v in dataclasses.asdict(obj).items()}
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, (str, int, float, bool, type(None))):
        return obj
    return str(obj)


def series_payload(series: BotSeries, emit_values: bool) -> dict[str, Any]:
    payload = {
        "d_stat": series.d_stat,
        "p_value": series.p_value,
        "histogram": series.histogram.tolist(),
    }
    if emit_values:
        payload["values"] = series.values.tolist()
    return payload


def report_payload(
    report: ExperimentReport, manifest: RunManifest, emit_values: bool = False
) -> dict[str, Any]:
    return {
        "manifest": _plain(manifest),
        "config": _plain(report.config),
        "n_cases": report.n_cases,
        "seed": report.seed,
        "stream_index": report.stream_index,
        "series": {
            variant: series_payload(s, emit_values) for variant, s in report.series.items()
        },
    }


def write_report_json(path, report: ExperimentReport, manifest: RunManifest, emit_values=False):
    payload = report_payload(report, manifest, emit_values)
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=2)
        fh.write("\n")


def manifest_comment(manifest: RunManifest) -> str:
    return "# manifest: " + json.dumps(_plain(manifest), separators=(",", ":"))


def write_histogram_csv(path, report: ExperimentReport, manifest: RunManifest):
    """Per-variant histogram table: variant, bin_lower, bin_upper, count."""
    lines = [manifest_comment(manifest), "variant,bin_lower,bin_upper,count"]
    for variant, series in report.series.items():
        bins = series.histogram.size
        for j, count in enumerate(series.histogram):
            lines.append(f"{variant},{j / bins},{(j + 1) / bins},{int(count)}")
    _write_lines(path, lines)


def write_rate_csv(path, header: list[str], rows: list[list], manifest: RunManifest):
    lines = [manifest_comment(manifest), ",".join(header)]
    for row in rows:
        lines.append(",".join(_format_cell(v) for v in row))
    _write_lines(path, lines)


def write_bias_csv(path, values: np.ndarray, manifest: RunManifest):
    rows = [[i + 1, float(v)] for i, v in enumerate(values)]
    write_rate_csv(path, ["dimension", "normalized_bias"], rows, manifest)


def _format_cell(value) -> str:
    if isinstance(value, float):
        return repr(value)
    if isinstance(value, Enum):
        return str(value.value)
    return str(value)


def _write_lines(path, lines: list[str]):
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")
