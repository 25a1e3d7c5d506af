"""Deterministic CSV / JSON report files.

CSV layout::

    # qtur-report v1
    # command: verify
    # config: {...}
    instance,seed,dim,...
    <rows>
    # summary: {...}
    # violation: {...}          (one line per violating instance)
"""

from __future__ import annotations

import csv
import io
import json
import math
import sys
from pathlib import Path
from typing import Any

REPORT_VERSION = "qtur-report v1"


def _jsonable(x: Any) -> Any:
    if isinstance(x, float) and not math.isfinite(x):
        return "nan" if math.isnan(x) else ("inf" if x > 0 else "-inf")
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if hasattr(x, "item"):  # numpy scalar
        return _jsonable(x.item())
    return x


def _dumps(x: Any) -> str:
    return json.dumps(_jsonable(x), sort_keys=True, separators=(",", ":"))


def _cell(v: Any) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(v)
    if hasattr(v, "item"):
        return _cell(v.item())
    return str(v)


def render_csv(command: str, config: dict, columns, rows, summary: dict, violations) -> str:
    buf = io.StringIO()
    buf.write(f"# {REPORT_VERSION}\n# command: {command}\n# config: {_dumps(config)}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for r in rows:
        w.writerow([_cell(r[c]) for c in columns])
    buf.write(f"# summary: {_dumps(summary)}\n")
    for v in violations:
        buf.write(f"# violation: {_dumps(v)}\n")
    return buf.getvalue()


def render_json(command: str, config: dict, columns, rows, summary: dict, violations) -> str:
    doc = {
        "format": REPORT_VERSION,
        "command": command,
        "config": config,
        "columns": list(columns),
        "rows": [{c: r[c] for c in columns} for r in rows],
        "summary": summary,
        "violations": list(violations),
    }
    return json.dumps(_jsonable(doc), sort_keys=True, indent=1) + "\n"


def write_report(out: str | None, fmt: str, command: str, config: dict, result) -> None:
    render = render_json if fmt == "json" else render_csv
    text = render(command, config, result.columns, result.rows, result.summary, result.violations)
    if out in (None, "-"):
        sys.stdout.write(text)
        return
    path = Path(out)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text)
    if result.violations:
        repro = path.with_name(path.name + ".repro.json")
        repro.write_text(json.dumps(_jsonable(result.violations), sort_keys=True, indent=1) + "\n")


def read_csv_report(path) -> tuple[dict, list[dict], dict]:
    """Parse a CSV report back into ``(config, rows, summary)`` (values as strings)."""
    config, summary, body = {}, {}, []
    for line in Path(path).read_text().splitlines():
        if line.startswith("# config: "):
            config = json.loads(line[len("# config: "):])
        elif line.startswith("# summary: "):
            summary = json.loads(line[len("# summary: "):])
        elif not line.startswith("#"):
            body.append(line)
    return config, list(csv.DictReader(body)), summary
