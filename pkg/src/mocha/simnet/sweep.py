"""Parameter sweeps over radius and team size, one CSV row per cell."""

from __future__ import annotations

import csv
import dataclasses
import io
import itertools
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

from mocha.diagnostics import Diagnostic, LocatedDocument, as_mapping, raise_if_any
from mocha.simnet.engine import run
from mocha.simnet.scenario import generate_team_scenario, load_scenario

COLUMNS = [
    "comm_radius",
    "uavs",
    "ugvs",
    "seeds",
    "runs_ok",
    "wait_mean",
    "wait_sd",
    "wait_count",
    "success_rate",
    "sessions",
    "timeouts",
    "error",
]

_GENERATOR_KEYS = {"area", "duration", "grid_spacing", "base", "start_spacing", "load", "hold"}


@dataclass
class SweepSpec:
    comm_radius: list[float]
    uavs: list[int] = field(default_factory=lambda: [1])
    ugvs: list[int] = field(default_factory=lambda: [3])
    seeds: list[int] = field(default_factory=lambda: [0])
    generator: dict = field(default_factory=dict)
    scenario: str | None = None  # template file; team axes are then fixed by the file
    name: str = "sweep"

    def cells(self) -> list[tuple[float, int, int]]:
        return list(itertools.product(self.comm_radius, self.uavs, self.ugvs))


def sweep_from_dict(data: Any, doc: LocatedDocument | None = None, base: Path | None = None) -> SweepSpec:
    diags: list[Diagnostic] = []

    def bad(path, msg):
        diags.append(doc.diagnose(path, msg) if doc else Diagnostic(tuple(path), msg))

    data = as_mapping(data)
    axes = as_mapping(data.get("axes"))
    if not axes:
        bad(("axes",), "missing or empty")

    def number_list(key, kind, positive):
        raw = axes.get(key)
        if raw is None:
            return None
        if not isinstance(raw, list) or not raw:
            bad(("axes", key), "must be a non-empty list")
            return None
        out = []
        for i, v in enumerate(raw):
            if isinstance(v, bool) or not isinstance(v, (int, float)) or (kind is int and not float(v).is_integer()):
                bad(("axes", key, i), f"expected {kind.__name__}, got {v!r}")
                continue
            if (positive and v <= 0) or v < 0:
                bad(("axes", key, i), "must be > 0" if positive else "must be >= 0")
                continue
            out.append(kind(v))
        return out

    radius = number_list("comm_radius", float, True)
    if radius is None and not any(d.path[:2] == ("axes", "comm_radius") for d in diags):
        bad(("axes", "comm_radius"), "required")
    uavs = number_list("uavs", int, True)
    ugvs = number_list("ugvs", int, False)
    seeds_raw = axes.get("seeds", 1)
    if isinstance(seeds_raw, int) and not isinstance(seeds_raw, bool):
        if seeds_raw < 1:
            bad(("axes", "seeds"), "must be >= 1")
        seeds = list(range(seeds_raw))
    else:
        seeds = number_list("seeds", int, False) or []
        if not seeds:
            bad(("axes", "seeds"), "must be a count or a non-empty list")

    scenario = data.get("scenario")
    if scenario is not None:
        if uavs is not None or ugvs is not None:
            bad(("axes",), "uavs/ugvs axes need the generator, not a scenario template")
        path = Path(scenario)
        if base is not None and not path.is_absolute():
            path = base / path
        if not path.exists():
            bad(("scenario",), f"template {path} not found")
        scenario = str(path)
    gen = as_mapping(data.get("generator"))
    for k in gen:
        if k not in _GENERATOR_KEYS:
            bad(("generator", k), f"unknown generator option; known: {sorted(_GENERATOR_KEYS)}")
    raise_if_any(diags, "sweep spec")
    return SweepSpec(
        comm_radius=radius,
        uavs=uavs or [1],
        ugvs=ugvs if ugvs is not None else [3],
        seeds=seeds,
        generator={k: tuple(v) if isinstance(v, list) else v for k, v in gen.items()},
        scenario=scenario,
        name=str(data.get("name", "sweep")),
    )


def load_sweep(path: str | Path) -> SweepSpec:
    path = Path(path)
    doc = LocatedDocument.from_path(path)
    return sweep_from_dict(doc.data, doc, base=path.parent)


def build_scenario(spec: SweepSpec, radius: float, uavs: int, ugvs: int, seed: int):
    if spec.scenario is not None:
        sc = load_scenario(spec.scenario)
        return dataclasses.replace(sc, comm_radius=radius, seed=seed, name=f"{sc.name}_r{radius:g}_s{seed}")
    return generate_team_scenario(radius, uavs, ugvs, seed, **spec.generator)


def run_one(spec: SweepSpec, radius: float, uavs: int, ugvs: int, seed: int) -> dict:
    """Summary of a single (cell, seed) run."""
    return run(build_scenario(spec, radius, uavs, ugvs, seed)).summary


def _run_cell(spec: SweepSpec, cell: tuple[float, int, int]) -> dict:
    radius, uavs, ugvs = cell
    row: dict[str, Any] = {"comm_radius": radius, "uavs": uavs, "ugvs": ugvs, "seeds": len(spec.seeds)}
    n = s1 = s2 = 0.0
    complete = total = timeouts = ok = 0
    errors = []
    for seed in spec.seeds:
        try:
            summary = run_one(spec, radius, uavs, ugvs, seed)
        except Exception as exc:  # one bad cell must not sink the sweep
            errors.append(f"seed {seed}: {type(exc).__name__}: {exc}")
            continue
        ok += 1
        w = summary["message_wait"]
        # pool waits across seeds from per-run count/mean/sd
        n += w["count"]
        s1 += w["count"] * w["mean"]
        s2 += w["count"] * (w["sd"] ** 2 + w["mean"] ** 2)
        s = summary["sessions"]
        complete += s["complete"]
        total += s["total"]
        timeouts += s["timeout"]
    mean = s1 / n if n else float("nan")
    sd = math.sqrt(max(s2 / n - mean * mean, 0.0)) if n else float("nan")
    row.update(
        runs_ok=ok,
        wait_mean=mean,
        wait_sd=sd,
        wait_count=int(n),
        success_rate=complete / total if total else float("nan"),
        sessions=total,
        timeouts=timeouts,
        error="; ".join(errors),
    )
    return row


def run_sweep(spec: SweepSpec, jobs: int = 1) -> list[dict]:
    """Rows in cell order regardless of how many worker processes ran them."""
    cells = spec.cells()
    if jobs <= 1 or len(cells) == 1:
        return [_run_cell(spec, c) for c in cells]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(_run_cell, [spec] * len(cells), cells))


def _fmt(v) -> str:
    if isinstance(v, float):
        return "nan" if math.isnan(v) else f"{v:.6f}"
    return str(v)


def rows_to_csv(rows: list[dict]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(COLUMNS)
    for r in rows:
        w.writerow([_fmt(r[c]) for c in COLUMNS])
    return buf.getvalue()
