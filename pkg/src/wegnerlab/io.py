"""Result persistence with provenance.

Every table is a CSV whose first line is a comment row carrying the config
digest; numeric cells use shortest round-trip formatting.  Structured results
are JSON objects bundling the manifest with named payloads.  Only
manifest.json carries run-dependent fields (timestamp, command line); all
other files are byte-identical for identical config + seed.
"""

from __future__ import annotations

import datetime as dt
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

__all__ = ["RunManifest", "Table", "ResultBundle", "format_cell"]

TOOL_VERSION = "0.1.0"


@dataclass(frozen=True)
class RunManifest:
    """Provenance of one run: what was configured and how it was invoked."""

    config_digest: str
    master_seed: int
    command_line: str
    timestamp: str = ""
    tool_version: str = TOOL_VERSION

    @staticmethod
    def create(config_digest: str, master_seed: int, command_line: str) -> "RunManifest":
        stamp = dt.datetime.now(dt.timezone.utc).strftime("%Y-%m-%dT%H:%M:%SZ")
        return RunManifest(config_digest, master_seed, command_line, stamp)

    def to_dict(self) -> dict:
        return {
            "tool_version": self.tool_version,
            "config_digest": self.config_digest,
            "master_seed": self.master_seed,
            "timestamp": self.timestamp,
            "command_line": self.command_line,
        }


def format_cell(value) -> str:
    """Shortest exact representation for numbers; strings pass through."""
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    text = str(value)
    if "," in text or "\n" in text:
        raise ValueError(f"cell {text!r} would break the CSV layout")
    return text


@dataclass(frozen=True, eq=False)
class Table:
    """Named rectangular result with a header row."""

    name: str
    columns: tuple
    rows: list

    def to_csv(self, digest: str) -> str:
        lines = [f"# manifest: {digest}", ",".join(self.columns)]
        for row in self.rows:
            if len(row) != len(self.columns):
                raise ValueError(f"table {self.name}: row width {len(row)} != {len(self.columns)}")
            lines.append(",".join(format_cell(c) for c in row))
        return "\n".join(lines) + "\n"


def _json_ready(obj):
    if isinstance(obj, dict):
        return {str(k): _json_ready(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_json_ready(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_json_ready(v) for v in obj.tolist()]
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if np.isfinite(v) else repr(v)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


@dataclass(eq=False)
class ResultBundle:
    """Manifest plus named tables (CSV), objects (JSON), plots (SVG), and
    human-readable texts."""

    manifest: RunManifest
    tables: dict = field(default_factory=dict)
    objects: dict = field(default_factory=dict)
    plots: dict = field(default_factory=dict)
    texts: dict = field(default_factory=dict)

    def add_table(self, name: str, columns, rows) -> None:
        self.tables[name] = Table(name, tuple(columns), list(rows))

    def add_object(self, name: str, payload) -> None:
        self.objects[name] = payload

    def add_plot(self, name: str, svg_text: str) -> None:
        self.plots[name] = svg_text

    def add_text(self, name: str, text: str) -> None:
        self.texts[name] = text

    def write(self, outdir) -> list[Path]:
        outdir = Path(outdir)
        outdir.mkdir(parents=True, exist_ok=True)
        digest = self.manifest.config_digest
        written = []

        path = outdir / "manifest.json"
        path.write_text(json.dumps(self.manifest.to_dict(), indent=2, sort_keys=True) + "\n")
        written.append(path)

        for name, table in sorted(self.tables.items()):
            path = outdir / f"{name}.csv"
            path.write_text(table.to_csv(digest))
            written.append(path)

        for name, payload in sorted(self.objects.items()):
            path = outdir / f"{name}.json"
            doc = {"manifest": {"config_digest": digest,
                                "master_seed": self.manifest.master_seed,
                                "tool_version": self.manifest.tool_version},
                   name: _json_ready(payload)}
            path.write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")
            written.append(path)

        for name, svg in sorted(self.plots.items()):
            path = outdir / f"{name}.svg"
            path.write_text(svg)
            written.append(path)

        for name, text in sorted(self.texts.items()):
            path = outdir / f"{name}.txt"
            path.write_text(text)
            written.append(path)
        return written
