from mocha.mission.agent import UavAgent
from mocha.mission.fsm import (
    EDGES,
    SEARCH_ONLY_EDGES,
    MissionState,
    MissionTimers,
    Mode,
    next_mode,
    next_search_target,
    tick,
)
from mocha.mission.graph import WaypointGraph, distance, plan_route

__all__ = [
    "EDGES",
    "SEARCH_ONLY_EDGES",
    "MissionState",
    "MissionTimers",
    "Mode",
    "UavAgent",
    "WaypointGraph",
    "distance",
    "next_mode",
    "next_search_target",
    "plan_route",
    "tick",
]
