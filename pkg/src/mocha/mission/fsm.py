"""Communication-aware exploration state machine for an aerial robot.

INIT explores for ``t_i`` seconds, then the UAV alternates between
SEARCH (look for one ground robot, round-robin), COMM (hover over a found
robot until the exchange ends or ``t_c`` passes) and EXPL (resume the
waypoint sweep for ``t_e`` seconds). All guards use strict ``>``.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field, replace
from typing import Mapping, Sequence

from mocha.mission.graph import Point


class Mode(str, enum.Enum):
    INIT = "INIT"
    SEARCH = "SEARCH"
    EXPL = "EXPL"
    COMM = "COMM"


EDGES = frozenset(
    {
        (Mode.INIT, Mode.SEARCH),
        (Mode.SEARCH, Mode.COMM),
        (Mode.SEARCH, Mode.EXPL),
        (Mode.COMM, Mode.EXPL),
        (Mode.EXPL, Mode.SEARCH),
    }
)

# a search-only UAV never explores: timeouts loop back into SEARCH
SEARCH_ONLY_EDGES = frozenset({(Mode.SEARCH, Mode.COMM), (Mode.SEARCH, Mode.SEARCH), (Mode.COMM, Mode.SEARCH)})


@dataclass(frozen=True)
class MissionTimers:
    t_i: float = 180.0
    t_e: float = 120.0
    t_s: float = 45.0
    t_c: float = 20.0

    def __post_init__(self) -> None:
        for name in ("t_i", "t_e", "t_s", "t_c"):
            if not getattr(self, name) > 0:
                raise ValueError(f"timer {name} must be strictly positive, got {getattr(self, name)}")


@dataclass(frozen=True)
class MissionState:
    mode: Mode = Mode.INIT
    mode_entered_at: float = 0.0
    timers: MissionTimers = field(default_factory=MissionTimers)
    search_only: bool = False
    search_target: int | None = None
    round_robin_cursor: int = -1
    goal: Point | None = None
    waypoint_plan: tuple[int, ...] = ()
    exploration_progress: int = 0

    @classmethod
    def initial(cls, timers: MissionTimers | None = None, search_only: bool = False, now: float = 0.0):
        return cls(
            mode=Mode.SEARCH if search_only else Mode.INIT,
            mode_entered_at=now,
            timers=timers or MissionTimers(),
            search_only=search_only,
        )


def next_mode(
    mode: Mode, elapsed: float, found: bool, comm_end: bool, timers: MissionTimers, search_only: bool = False
) -> Mode | None:
    """Evaluate the guards leaving ``mode``; None means stay."""
    if mode is Mode.INIT:
        return Mode.SEARCH if elapsed > timers.t_i else None
    if mode is Mode.SEARCH:
        if found:
            return Mode.COMM
        if elapsed > timers.t_s:
            return Mode.SEARCH if search_only else Mode.EXPL
        return None
    if mode is Mode.COMM:
        if comm_end or elapsed > timers.t_c:
            return Mode.SEARCH if search_only else Mode.EXPL
        return None
    if mode is Mode.EXPL:
        return Mode.SEARCH if elapsed > timers.t_e else None
    raise ValueError(f"unknown mode {mode!r}")


def tick(state: MissionState, found: bool, comm_end: bool, now: float) -> MissionState:
    """Advance the mode if a guard holds. Planning is left to the caller."""
    if now < state.mode_entered_at:
        raise ValueError(f"time went backwards: {now} < {state.mode_entered_at}")
    new = next_mode(state.mode, now - state.mode_entered_at, bool(found), bool(comm_end), state.timers, state.search_only)
    if new is None:
        return state
    return replace(state, mode=new, mode_entered_at=now)


def next_search_target(
    state: MissionState,
    team: Sequence[int],
    last_known: Mapping[int, tuple[Point, float]],
    fallback: Mapping[int, Point],
) -> tuple[int, Point, int]:
    """Pick the next ground robot round-robin and where to look for it.

    Returns ``(rid, goal, cursor)``. The goal is the robot's last known
    position when there is one, otherwise its configured target/start point.
    """
    if not team:
        raise ValueError("no ground robots to search for")
    cursor = (state.round_robin_cursor + 1) % len(team)
    rid = team[cursor]
    if rid in last_known:
        goal = last_known[rid][0]
    else:
        goal = fallback[rid]
    return rid, (float(goal[0]), float(goal[1])), cursor
