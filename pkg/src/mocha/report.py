"""Render a simulation output directory as plain-text or markdown tables."""

from __future__ import annotations

import csv
import json
from pathlib import Path

from mocha.errors import ConfigError


def _table(headers: list[str], rows: list[list], fmt: str) -> str:
    cells = [[_cell(v) for v in r] for r in rows]
    if fmt == "markdown":
        out = ["| " + " | ".join(headers) + " |", "|" + "|".join("---" for _ in headers) + "|"]
        out += ["| " + " | ".join(r) + " |" for r in cells]
        return "\n".join(out)
    widths = [max(len(h), *(len(r[i]) for r in cells)) if cells else len(h) for i, h in enumerate(headers)]
    line = lambda r: "  ".join(v.rjust(w) for v, w in zip(r, widths))
    return "\n".join([line(headers), line(["-" * w for w in widths])] + [line(r) for r in cells])


def _cell(v) -> str:
    if v is None:
        return "-"
    if isinstance(v, float):
        return f"{v:.4f}"
    return str(v)


def load_outputs(outdir: str | Path) -> tuple[dict, list[str], list[list[float]]]:
    outdir = Path(outdir)
    try:
        summary = json.loads((outdir / "summary.json").read_text())
        with (outdir / "bandwidth.csv").open() as fh:
            rows = list(csv.reader(fh))
    except FileNotFoundError as exc:
        raise ConfigError(f"{outdir}: missing {Path(exc.filename).name}; is this a 'sim run' output?") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{outdir}/summary.json:{exc.lineno}: {exc.msg}") from exc
    if not rows or rows[0][:1] != ["time_s"]:
        raise ConfigError(f"{outdir}/bandwidth.csv: header must start with time_s")
    return summary, rows[0][1:], [[float(x) for x in r] for r in rows[1:]]


def render(outdir: str | Path, fmt: str = "text") -> str:
    summary, names, bw = load_outputs(outdir)
    title = f"{summary.get('scenario', 'run')} (seed {summary.get('seed')}, radius {summary.get('comm_radius')} m)"
    parts = ["# " + title if fmt == "markdown" else title]

    s = summary["sessions"]
    parts.append(_section("Sessions", fmt))
    parts.append(_table(
        ["complete", "interrupted", "timeout", "total", "success_rate"],
        [[s["complete"], s["interrupted"], s["timeout"], s.get("total"), s.get("success_rate")]],
        fmt,
    ))
    w = summary["message_wait"]
    parts.append(_section("Message wait [s]", fmt))
    parts.append(_table(["mean", "sd", "count"], [[w["mean"], w["sd"], w.get("count")]], fmt))

    nodes = summary.get("nodes", {})
    parts.append(_section("Per-peer", fmt))
    parts.append(_table(
        ["observer", "peer", "last_sync_time", "rtt", "status"],
        [[nodes.get(str(p.get("observer")), p.get("observer")), nodes.get(str(p["rid"]), p["rid"]),
          p.get("last_sync_time"), p.get("rtt"), p.get("status")] for p in summary["per_peer"]],
        fmt,
    ))

    tx, rx = summary["bytes"]["tx"], summary["bytes"]["rx"]
    rows = []
    for i, name in enumerate(names):
        series = [r[i + 1] for r in bw]
        active = sum(1 for v in series if v > 0)
        rid = next((k for k, v in nodes.items() if v == name), None)
        rows.append([name, tx.get(rid, sum(series)), rx.get(rid), max(series, default=0.0), active])
    parts.append(_section("Bandwidth", fmt))
    parts.append(_table(["node", "tx_bytes", "rx_bytes", "peak_Bps", "active_s"], rows, fmt))
    return "\n\n".join(parts) + "\n"


def _section(name: str, fmt: str) -> str:
    return f"## {name}" if fmt == "markdown" else f"{name}\n{'=' * len(name)}"
