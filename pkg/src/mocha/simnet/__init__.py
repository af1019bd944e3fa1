from mocha.simnet.channel import Channel, Transmission
from mocha.simnet.engine import SimResult, Simulator, run
from mocha.simnet.latency import LatencyModel, Stage, sample_latency, stage_for
from mocha.simnet.scenario import (
    MissionSpec,
    NodeSpec,
    Scenario,
    Trajectory,
    Workload,
    generate_team_scenario,
    load_scenario,
    scenario_from_dict,
)

__all__ = [
    "Channel",
    "LatencyModel",
    "MissionSpec",
    "NodeSpec",
    "Scenario",
    "SimResult",
    "Simulator",
    "Stage",
    "Trajectory",
    "Transmission",
    "Workload",
    "generate_team_scenario",
    "load_scenario",
    "run",
    "sample_latency",
    "scenario_from_dict",
    "stage_for",
]
