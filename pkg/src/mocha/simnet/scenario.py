"""Simulation scenarios: team, mobility, radio range, workload and mission."""

from __future__ import annotations

import bisect
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import numpy as np

from mocha.core.config import RobotSpec, TeamConfig, TopicSpec
from mocha.core.header import MAX_SECONDS
from mocha.diagnostics import Diagnostic, LocatedDocument, raise_if_any
from mocha.mission.fsm import MissionTimers
from mocha.mission.graph import Point, WaypointGraph
from mocha.simnet.latency import LatencyModel

DEFAULT_DURATION = 1800.0
UGV_SPEED = 1.5
UAV_SPEED = 10.0


class Trajectory:
    """Piecewise-linear timed waypoints; position is held before the first and after the last."""

    def __init__(self, points: list[tuple[float, float, float]]):
        if not points:
            raise ValueError("trajectory needs at least one point")
        pts = sorted((float(t), float(x), float(y)) for t, x, y in points)
        self.times = [p[0] for p in pts]
        self.xy = [(p[1], p[2]) for p in pts]

    @classmethod
    def static(cls, pos: Point) -> Trajectory:
        return cls([(0.0, pos[0], pos[1])])

    @classmethod
    def from_path(cls, path: list[Point], speed: float, depart: float = 0.0) -> Trajectory:
        """Constant-speed traversal of ``path`` leaving at ``depart``."""
        t = depart
        pts = [(t, *path[0])]
        for a, b in zip(path, path[1:]):
            t += math.hypot(b[0] - a[0], b[1] - a[1]) / speed
            pts.append((t, *b))
        return cls(pts)

    def at(self, t: float) -> Point:
        i = bisect.bisect_right(self.times, t)
        if i == 0:
            return self.xy[0]
        if i == len(self.times):
            return self.xy[-1]
        t0, t1 = self.times[i - 1], self.times[i]
        (x0, y0), (x1, y1) = self.xy[i - 1], self.xy[i]
        f = (t - t0) / (t1 - t0) if t1 > t0 else 1.0
        return (x0 + f * (x1 - x0), y0 + f * (y1 - y0))

    def to_list(self) -> list[list[float]]:
        return [[t, x, y] for t, (x, y) in zip(self.times, self.xy)]


@dataclass
class NodeSpec:
    kind: str = "ugv"
    trajectory: Trajectory | None = None
    mission: bool = False
    search_only: bool = False
    speed: float | None = None
    initiates: bool = True
    clock_offset: float = 0.0


@dataclass
class Workload:
    rid: int
    topic: str
    start: float = 0.0
    period: float = 1.0
    nbytes: int = 64
    until: float | None = None
    count: int | None = None

    def times(self, duration: float) -> list[float]:
        end = duration if self.until is None else min(self.until, duration)
        out, k = [], 0
        while True:
            t = self.start + k * self.period
            if t > end or (self.count is not None and k >= self.count):
                return out
            out.append(t)
            k += 1


@dataclass
class MissionSpec:
    graph: WaypointGraph
    timers: MissionTimers = field(default_factory=MissionTimers)
    targets: dict[int, Point] = field(default_factory=dict)


@dataclass
class Scenario:
    team: TeamConfig
    nodes: dict[int, NodeSpec]
    comm_radius: float = 10.0
    duration: float = DEFAULT_DURATION
    seed: int = 0
    tick: float = 0.5
    session_timeout: float = 5.0
    retry_interval: float = 10.0
    rssi_trigger: bool = True
    position_interval: float = 5.0
    history: int = 50
    latency: LatencyModel = field(default_factory=LatencyModel)
    workload: list[Workload] = field(default_factory=list)
    mission: MissionSpec | None = None
    name: str = "scenario"

    def __post_init__(self) -> None:
        raise_if_any(self.check(), "scenario")

    def check(self) -> list[Diagnostic]:
        out = []

        def bad(path, msg):
            out.append(Diagnostic(tuple(path), msg))

        if not self.comm_radius > 0:
            bad(("comm_radius",), "must be > 0")
        if not self.duration > 0:
            bad(("duration",), "must be > 0")
        max_offset = max((n.clock_offset for n in self.nodes.values()), default=0.0)
        if self.duration + max_offset > MAX_SECONDS:
            bad(("duration",), f"node clocks would exceed the {MAX_SECONDS}s header time range")
        for name in ("tick", "session_timeout", "retry_interval", "position_interval"):
            if not getattr(self, name) > 0:
                bad((name,), "must be > 0")
        for rid in range(self.team.n_robots):
            if rid not in self.nodes:
                bad(("nodes", self.team.robots[rid].name), "robot has no node entry")
        for rid, n in self.nodes.items():
            if n.mission and self.mission is None:
                bad(("nodes", self.team.robots[rid].name, "mission"), "mission node needs a 'mission' section")
            if not n.mission and n.trajectory is None:
                bad(("nodes", self.team.robots[rid].name), "node needs a trajectory, path or position")
        for i, w in enumerate(self.workload):
            if not 0 <= w.rid < self.team.n_robots:
                bad(("workload", i, "robot"), "unknown robot")
            elif w.topic not in {t.name for t in self.team.robots[w.rid].topics}:
                bad(("workload", i, "topic"), f"robot does not declare topic {w.topic!r}")
            if not w.period > 0:
                bad(("workload", i, "period"), "must be > 0")
            if w.nbytes < 0:
                bad(("workload", i, "bytes"), "must be >= 0")
        if self.mission is not None:
            if not self.mission.graph.is_connected():
                bad(("mission", "graph"), "waypoint graph is not connected")
            if not self.mission.graph.nodes:
                bad(("mission", "graph"), "waypoint graph is empty")
        return out

    @property
    def ugvs(self) -> list[int]:
        return [r for r, n in sorted(self.nodes.items()) if n.kind != "uav"]


# -- loading ------------------------------------------------------------------


def load_scenario(path: str | Path) -> Scenario:
    path = Path(path)
    doc = LocatedDocument.from_path(path)
    return scenario_from_dict(doc.data, doc, base=path.parent)


def scenario_from_dict(data: Any, doc: LocatedDocument | None = None, base: Path | None = None) -> Scenario:
    diags: list[Diagnostic] = []

    def bad(p, msg):
        diags.append(doc.diagnose(p, msg) if doc else Diagnostic(tuple(p), msg))

    if not isinstance(data, dict):
        bad((), "scenario must be a mapping")
        raise_if_any(diags, "scenario")

    team_raw = data.get("team")
    if isinstance(team_raw, str):
        tpath = Path(team_raw)
        if not tpath.is_absolute() and base is not None:
            tpath = base / tpath
        if not tpath.exists():
            bad(("team",), f"team config {str(tpath)!r} not found")
            raise_if_any(diags, "scenario")
        team = TeamConfig.load(tpath)
    else:
        team = TeamConfig.from_dict(team_raw, _Sub(doc, ("team",)) if doc else None)

    mission = None
    m = data.get("mission")
    if m is not None:
        try:
            g = m.get("graph", {})
            graph = WaypointGraph(
                {int(k): tuple(v) for k, v in (g.get("nodes") or {}).items()},
                [tuple(e) for e in g.get("edges") or []],
                list(m.get("exploration_order") or []),
            )
        except (ValueError, TypeError, AttributeError) as exc:
            bad(("mission", "graph"), str(exc))
            graph = None
        timers = MissionTimers()
        try:
            timers = MissionTimers(**(m.get("timers") or {}))
        except (ValueError, TypeError) as exc:
            bad(("mission", "timers"), str(exc))
        targets = {}
        for name, pos in (m.get("targets") or {}).items():
            try:
                targets[team.rid(name)] = (float(pos[0]), float(pos[1]))
            except KeyError:
                bad(("mission", "targets", name), "unknown robot")
        if graph is not None:
            mission = MissionSpec(graph, timers, targets)

    nodes: dict[int, NodeSpec] = {}
    for name, spec in (data.get("nodes") or {}).items():
        try:
            rid = team.rid(name)
        except KeyError:
            bad(("nodes", name), "node is not a robot of the team")
            continue
        spec = spec or {}
        kind = spec.get("kind", "ugv")
        speed = spec.get("speed", UAV_SPEED if kind == "uav" else UGV_SPEED)
        traj = None
        try:
            if "trajectory" in spec:
                traj = Trajectory([tuple(p) for p in spec["trajectory"]])
            elif "path" in spec:
                traj = Trajectory.from_path([tuple(p) for p in spec["path"]], float(speed), float(spec.get("depart", 0.0)))
            elif "position" in spec:
                traj = Trajectory.static(tuple(spec["position"]))
        except (ValueError, TypeError, ZeroDivisionError) as exc:
            bad(("nodes", name), f"bad trajectory: {exc}")
        nodes[rid] = NodeSpec(
            kind=kind,
            trajectory=traj,
            mission=bool(spec.get("mission", False)),
            search_only=bool(spec.get("search_only", False)),
            speed=float(speed),
            initiates=bool(spec.get("initiates", True)),
            clock_offset=float(spec.get("clock_offset", 0.0)),
        )

    workload = []
    for i, w in enumerate(data.get("workload") or []):
        try:
            workload.append(
                Workload(
                    rid=team.rid(w["robot"]),
                    topic=w["topic"],
                    start=float(w.get("start", 0.0)),
                    period=float(w.get("period", 1.0)),
                    nbytes=int(w.get("bytes", 64)),
                    until=w.get("until"),
                    count=w.get("count"),
                )
            )
        except KeyError as exc:
            bad(("workload", i), f"missing or unknown {exc}")

    lat = data.get("latency") or {}
    try:
        latency = LatencyModel(**lat)
    except (TypeError, ValueError) as exc:
        bad(("latency",), str(exc))
        latency = LatencyModel()

    raise_if_any(diags, "scenario")
    kwargs = {}
    for key in ("comm_radius", "duration", "tick", "session_timeout", "retry_interval", "position_interval"):
        if key in data:
            kwargs[key] = float(data[key])
    for key in ("seed", "history"):
        if key in data:
            kwargs[key] = int(data[key])
    if "rssi_trigger" in data:
        kwargs["rssi_trigger"] = bool(data["rssi_trigger"])
    if "name" in data:
        kwargs["name"] = str(data["name"])
    try:
        return Scenario(team=team, nodes=nodes, latency=latency, workload=workload, mission=mission, **kwargs)
    except Exception as exc:
        from mocha.errors import ConfigError

        if isinstance(exc, ConfigError) and doc is not None:
            located = [doc.diagnose(d.path, d.message) for d in exc.diagnostics]
            raise_if_any(located, "scenario")
        raise


class _Sub:
    """View of a LocatedDocument rooted at a sub-path (for nested team configs)."""

    def __init__(self, doc: LocatedDocument, prefix: tuple):
        self.doc, self.prefix = doc, prefix

    def diagnose(self, path, message):
        return self.doc.diagnose(self.prefix + tuple(path), message)


# -- generated team scenarios (sweeps) -------------------------------------------------------


UGV_TOPICS = (
    TopicSpec("pose", priority=3, rate_hz=1.0, hint_bytes=64),
    TopicSpec("goal", priority=5, rate_hz=0.2, hint_bytes=32),
    TopicSpec("map", priority=1, rate_hz=0.1, hint_bytes=2000),
)
UAV_TOPICS = (
    TopicSpec("pose", priority=3, rate_hz=1.0, hint_bytes=64),
    TopicSpec("semantic_map", priority=2, rate_hz=0.05, hint_bytes=8000),
)


def generate_team_scenario(
    comm_radius: float,
    n_uav: int,
    n_ugv: int,
    seed: int,
    *,
    area: tuple[float, float] = (250.0, 250.0),
    duration: float = 600.0,
    grid_spacing: float = 50.0,
    base: Point = (20.0, 20.0),
    start_spacing: float = 3.0,
    load: float = 1.0,
    hold: float = 60.0,
    timers: MissionTimers | None = None,
    name: str | None = None,
) -> Scenario:
    """Air-ground team in a rectangular area.

    UGVs start packed around ``base``, hold there for ``hold`` seconds and
    then wander between random waypoints at walking speed. The first UAV flies the full mission, any
    extra UAV only searches. ``load`` scales every topic's publish rate.
    """
    rng = np.random.default_rng(seed)
    robots, nodes, workload = [], {}, []
    for i in range(n_uav):
        robots.append(RobotSpec(f"uav{i}", tuple(_scaled(t, load) for t in UAV_TOPICS)))
    for i in range(n_ugv):
        robots.append(RobotSpec(f"ugv{i}", tuple(_scaled(t, load) for t in UGV_TOPICS)))
    team = TeamConfig(tuple(robots))

    nx = max(2, int(area[0] // grid_spacing) + 1)
    ny = max(2, int(area[1] // grid_spacing) + 1)
    graph = WaypointGraph.grid(nx, ny, min(area[0] / (nx - 1), area[1] / (ny - 1)))
    cols = max(1, math.ceil(math.sqrt(n_ugv)))
    targets = {}
    for i in range(n_ugv):
        rid = n_uav + i
        start = (base[0] + (i % cols) * start_spacing, base[1] + (i // cols) * start_spacing)
        targets[rid] = start
        nodes[rid] = NodeSpec(kind="ugv", trajectory=_random_waypoints(rng, start, area, duration, hold), speed=UGV_SPEED)
    for i in range(n_uav):
        nodes[i] = NodeSpec(kind="uav", mission=True, search_only=i > 0, speed=UAV_SPEED)
    for rid, r in enumerate(team.robots):
        for t in r.topics:
            workload.append(
                Workload(rid, t.name, start=float(rng.uniform(0, 1.0 / t.rate_hz)), period=1.0 / t.rate_hz, nbytes=t.hint_bytes)
            )
    return Scenario(
        team=team,
        nodes=nodes,
        comm_radius=comm_radius,
        duration=duration,
        seed=seed,
        workload=workload,
        mission=MissionSpec(graph, timers or MissionTimers(), targets),
        name=name or f"r{comm_radius:g}_uav{n_uav}_ugv{n_ugv}_s{seed}",
    )


def _scaled(t: TopicSpec, load: float) -> TopicSpec:
    return TopicSpec(t.name, t.priority, t.rate_hz * load, t.hint_bytes)


def _random_waypoints(rng, start: Point, area, duration: float, hold: float = 0.0) -> Trajectory:
    pts = [(0.0, start[0], start[1]), (hold, start[0], start[1])]
    t, pos = hold, start
    while t < duration:
        nxt = (float(rng.uniform(0, area[0])), float(rng.uniform(0, area[1])))
        t += math.hypot(nxt[0] - pos[0], nxt[1] - pos[1]) / UGV_SPEED
        pts.append((t, *nxt))
        t += float(rng.uniform(0, 30))  # pause at the waypoint
        pts.append((t, *nxt))
        pos = nxt
    return Trajectory(pts)
