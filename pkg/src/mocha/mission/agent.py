"""Simulated UAV that flies the mission state machine over a waypoint graph."""

from __future__ import annotations

from dataclasses import replace
from typing import Mapping, Sequence

from mocha.mission.fsm import MissionState, MissionTimers, Mode, next_search_target, tick
from mocha.mission.graph import Point, WaypointGraph, distance, plan_route

UAV_SPEED = 10.0


class UavAgent:
    """Couples the pure state machine with routing and kinematics.

    The simulator calls :meth:`step` once per tick with the contact-derived
    ``found`` / ``comm_end`` flags and gets back any mode changes.
    """

    def __init__(
        self,
        rid: int,
        graph: WaypointGraph,
        ugvs: Sequence[int],
        fallback: Mapping[int, Point],
        *,
        timers: MissionTimers | None = None,
        search_only: bool = False,
        speed: float = UAV_SPEED,
        start: Point | None = None,
        now: float = 0.0,
    ):
        self.rid = rid
        self.graph = graph
        self.ugvs = list(ugvs)
        self.fallback = dict(fallback)
        self.speed = speed
        self.state = MissionState.initial(timers, search_only, now)
        first = graph.exploration_order[0] if graph.exploration_order else next(iter(graph.nodes))
        self.position: Point = tuple(start) if start is not None else graph.nodes[first]
        self.route: list[Point] = []
        self.route_nodes: list[int | None] = []
        self.last_known: dict[int, tuple[Point, float]] = {}
        self.explored: list[int] = []
        self._exploring_to: int | None = None
        if self.state.mode is Mode.SEARCH:
            self._enter_search()

    # -- observations -------------------------------------------------------

    def observe(self, rid: int, position: Point, t: float) -> None:
        if rid in self.ugvs:
            self.last_known[rid] = (tuple(position), t)

    # -- main loop --------------------------------------------------------------

    def step(self, now: float, dt: float, found_at: Point | None, comm_end: bool) -> list[tuple[Mode, Mode]]:
        """Advance timers then fly for ``dt`` seconds.

        ``found_at`` is the search target's current position when it is in
        range (None otherwise).
        """
        changes = []
        old = self.state
        self.state = tick(old, found_at is not None, comm_end, now)
        if self.state is not old:
            changes.append((old.mode, self.state.mode))
            self._on_enter(self.state.mode, found_at)
        self._fly(dt)
        return changes

    def _on_enter(self, mode: Mode, found_at: Point | None) -> None:
        if mode is Mode.SEARCH:
            self._exploring_to = None
            self._enter_search()
        elif mode is Mode.COMM:
            # hover over the robot's position as reported during the contact
            self.state = replace(self.state, goal=tuple(found_at), waypoint_plan=())
            self._set_route([tuple(found_at)], [None])
        elif mode is Mode.EXPL:
            self._exploring_to = None
            self._set_route([], [])

    def _enter_search(self) -> None:
        rid, goal, cursor = next_search_target(self.state, self.ugvs, self.last_known, self.fallback)
        start = self.graph.nearest(self.position)
        end = self.graph.nearest(goal)
        path = plan_route(self.graph, start, end)
        self.state = replace(
            self.state, search_target=rid, goal=goal, round_robin_cursor=cursor, waypoint_plan=tuple(path)
        )
        self._set_route([self.graph.nodes[n] for n in path] + [goal], list(path) + [None])

    @property
    def exploration_done(self) -> bool:
        return self.state.exploration_progress >= len(self.graph.exploration_order)

    def _exploring(self) -> bool:
        return self.state.mode in (Mode.INIT, Mode.EXPL)

    def _plan_exploration(self) -> None:
        if self.exploration_done:
            return
        target = self.graph.exploration_order[self.state.exploration_progress]
        path = plan_route(self.graph, self.graph.nearest(self.position), target)
        self._exploring_to = target
        self.state = replace(self.state, waypoint_plan=tuple(path))
        self._set_route([self.graph.nodes[n] for n in path], list(path))

    def _set_route(self, points: list[Point], nodes: list[int | None]) -> None:
        self.route = list(points)
        self.route_nodes = list(nodes)

    def _fly(self, dt: float) -> None:
        budget = self.speed * dt
        while True:
            if not self.route:
                if self._exploring() and not self.exploration_done:
                    if self._exploring_to is not None:
                        self._reach_exploration_target()
                    self._plan_exploration()
                    if not self.route:
                        return
                else:
                    return  # hover / loiter
            target = self.route[0]
            d = distance(self.position, target)
            if d <= budget:
                self.position = target
                budget -= d
                self.route.pop(0)
                self.route_nodes.pop(0)
                if budget <= 0 and self.route:
                    return
            else:
                f = budget / d
                self.position = (
                    self.position[0] + f * (target[0] - self.position[0]),
                    self.position[1] + f * (target[1] - self.position[1]),
                )
                return

    def _reach_exploration_target(self) -> None:
        w = self._exploring_to
        self._exploring_to = None
        if w is not None and self.position == self.graph.nodes[w]:
            self.explored.append(w)
            self.state = replace(self.state, exploration_progress=self.state.exploration_progress + 1)
