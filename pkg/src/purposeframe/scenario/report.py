"""Report emission: stable JSON for golden files, or a short text summary."""

from __future__ import annotations

import json
from pathlib import Path

from .trials import ReportDocument

FORMATS = ("json", "text")


def _as_dict(report) -> dict:
    return report.to_dict() if hasattr(report, "to_dict") else dict(report)


def render_json(report) -> str:
    return json.dumps(_as_dict(report), indent=2, sort_keys=True, ensure_ascii=False) + "\n"


def render_text(report) -> str:
    doc = _as_dict(report)
    lines = []
    if "trials" in doc:
        lines.append(f"scenario {doc['scenario']}  seed {doc['seed']}  digest {doc['digest'][:12]}")
        for t in doc["trials"]:
            prio = ", ".join(f"{k}={v:g}" for k, v in t["priorities"].items())
            ok = "reached" if t["success"] else "timed out"
            lines.append(
                f"trial {t['trial']} [phase {t['phase']}, {t['context']}] {prio}: "
                f"{t['choice']} {ok} in {t['steps']} steps, ends {t['states'][-1]}"
            )
        for c in doc["checks"]:
            sem = "aligned" if c["semantic"]["aligned"] else "misaligned"
            op = "aligned" if c["operational"]["aligned"] else "misaligned"
            line = f"check {c['id']} after phase {c['after_phase']} ({c['case']}): conditions {sem}, definition {op}"
            if "causal" in c:
                line += f", actual cause {'yes' if c['causal']['overall'] else 'no'}"
            lines.append(line)
        for w in doc["warnings"]:
            lines.append(f"warning: {w}")
        return "\n".join(lines) + "\n"
    if "conditions" in doc and "mode" in doc:
        lines.append(f"{doc['case']} ({doc['mode']}): {'aligned' if doc['aligned'] else 'misaligned'}")
        for c in doc["conditions"]:
            mark = "ok  " if c["holds"] else "FAIL"
            lines.append(f"  {mark} {c['id']}: {c['label']}")
            if not c["holds"] and c.get("witness") is not None:
                lines.append(f"       witness: {json.dumps(c['witness'], sort_keys=True)}")
        for n in doc.get("notes", []):
            lines.append(f"  note: {n}")
        for w in doc.get("warnings", []):
            lines.append(f"  warning: {w}")
        return "\n".join(lines) + "\n"
    return render_json(doc)


def render_report(report, fmt: str = "json") -> str:
    if fmt == "json":
        return render_json(report)
    if fmt == "text":
        return render_text(report)
    raise ValueError(f"unknown report format {fmt!r}; expected one of {FORMATS}")


def emit_report(report: ReportDocument | dict, path: str | Path | None, fmt: str = "json") -> str:
    """Write the report (UTF-8) to ``path`` and return the text; ``None`` only returns it."""
    text = render_report(report, fmt)
    if path is not None:
        Path(path).write_text(text, encoding="utf-8")
    return text


__all__ = ["emit_report", "render_report", "render_json", "render_text", "FORMATS"]
