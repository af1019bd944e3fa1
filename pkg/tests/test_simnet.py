import json
import math
from importlib.resources import files

import numpy as np
import pytest

from mocha.core import TeamConfig, TopicSpec
from mocha.core.config import RobotSpec
from mocha.errors import ConfigError
from mocha.protocol import Op
from mocha.simnet import (
    Channel,
    LatencyModel,
    NodeSpec,
    Scenario,
    Stage,
    Trajectory,
    Workload,
    generate_team_scenario,
    load_scenario,
    run,
    sample_latency,
    scenario_from_dict,
    stage_for,
)

SCEN = files("mocha") / "scenarios"


# -- latency ------------------------------------------------------------------


def test_single_byte_mean_transfer():
    rng = np.random.default_rng(0)
    x = sample_latency(LatencyModel(), Stage.TRANSFER, 1, rng, size=1_000_000)
    assert x.mean() * 1000 == pytest.approx(1 / 7.63, rel=0.01)
    assert (x > 0).all()


def test_kilobyte_messages_match_sum_of_exponentials_oracle():
    model = LatencyModel()
    # oracle: literally add 1000 exponential per-byte delays
    oracle = np.random.default_rng(1).exponential(1 / 7.63, size=(20_000, 1000)).sum(axis=1)
    assert oracle.mean() == pytest.approx(131.06, rel=0.01)
    assert oracle.std() / oracle.mean() == pytest.approx(1 / math.sqrt(1000), rel=0.05)
    got = sample_latency(model, "transfer", 1000, np.random.default_rng(2), size=100_000) * 1000
    assert got.mean() == pytest.approx(oracle.mean(), rel=0.01)
    assert got.std() / got.mean() == pytest.approx(oracle.std() / oracle.mean(), rel=0.05)


def test_latency_deterministic():
    a = [sample_latency(LatencyModel(), "header", 40, np.random.default_rng(9)) for _ in range(3)]
    b = [sample_latency(LatencyModel(), "header", 40, np.random.default_rng(9)) for _ in range(3)]
    assert a == b and isinstance(a[0], float)


def test_latency_validation():
    with pytest.raises(ValueError):
        LatencyModel(lambda_h=0)
    with pytest.raises(ValueError):
        sample_latency(LatencyModel(), "end", 0, np.random.default_rng())


def test_stage_mapping():
    assert stage_for(Op.REQ_HEADER_LIST) is Stage.HEADER
    assert stage_for(Op.PAYLOAD) is Stage.TRANSFER
    assert stage_for(Op.ACK) is Stage.END


# -- channel ---------------------------------------------------------------------


def test_idle_channel_no_wait():
    ch = Channel()
    wait, start, end = ch.request_tx(0, 100, "transfer", 5.0)
    assert wait == 0 and start == 5.0 and end > 5.0


def test_second_simultaneous_request_waits_first_duration():
    ch = Channel()
    _, s1, e1 = ch.request_tx(0, 500, "transfer", 1.0)
    wait, s2, _ = ch.request_tx(1, 500, "transfer", 1.0)
    assert wait == e1 - s1 and s2 == e1


@pytest.mark.parametrize("n", [2, 5, 10])
def test_fifo_mean_wait_closed_form(n):
    d = 0.37
    ch = Channel()
    waits = [ch.request_tx(i, 10, "transfer", 0.0, duration=d)[0] for i in range(n)]
    assert sum(waits) / n == pytest.approx(d * (n - 1) / 2, rel=1e-12, abs=1e-12)


def test_channel_rejects_time_travel():
    ch = Channel()
    ch.request_tx(0, 1, "end", 2.0)
    with pytest.raises(ValueError):
        ch.request_tx(0, 1, "end", 1.0)


def test_channel_later_request_after_idle():
    ch = Channel()
    ch.request_tx(0, 1, "end", 0.0, duration=1.0)
    assert ch.request_tx(0, 1, "end", 3.0, duration=1.0)[0] == 0.0
    assert ch.pending(3.5) == 1


# -- scenarios --------------------------------------------------------------


def pair_team():
    return TeamConfig(
        (
            RobotSpec("a", (TopicSpec("pose", 1, 1.0, 64),)),
            RobotSpec("b", (TopicSpec("pose", 1, 1.0, 64),)),
        )
    )


def test_trajectory_interpolation():
    tr = Trajectory([(0, 0, 0), (10, 10, 0)])
    assert tr.at(-1) == (0, 0) and tr.at(5) == (5, 0) and tr.at(20) == (10, 0)
    tr = Trajectory.from_path([(0, 0), (3, 4)], speed=1.0, depart=2.0)
    assert tr.times == [2.0, 7.0]


def test_single_static_pair_one_session_six_frames():
    sc = Scenario(
        team=pair_team(),
        nodes={
            0: NodeSpec(trajectory=Trajectory.static((0, 0))),
            1: NodeSpec(trajectory=Trajectory.static((3, 0)), initiates=False),
        },
        comm_radius=5,
        duration=5,
        workload=[Workload(1, "pose", start=0.0, count=1)],
    )
    res = run(sc)
    ends = res.sessions()
    assert len(ends) == 1 and ends[0]["outcome"] == "complete" and ends[0]["committed"] == 1
    ops = [e["op"] for e in res.events if e["type"] == "frame_tx"]
    assert ops == ["REQ_HEADER_LIST", "HEADER_LIST", "REQ_HEADER", "PAYLOAD", "COMM_END", "ACK"]
    assert res.stores[0].newest(1, 0) is not None


def test_pair_out_of_range_no_traffic():
    sc = Scenario(
        team=pair_team(),
        nodes={0: NodeSpec(trajectory=Trajectory.static((0, 0))), 1: NodeSpec(trajectory=Trajectory.static((50, 0)))},
        comm_radius=10,
        duration=60,
        workload=[Workload(0, "pose"), Workload(1, "pose")],
    )
    res = run(sc)
    assert res.sessions() == []
    assert all(v == 0 for v in res.summary["bytes"]["tx"].values())
    assert all(sum(s) == 0 for s in res.bandwidth.values())


def test_peer_leaving_mid_exchange_times_out():
    team = TeamConfig((RobotSpec("a", ()), RobotSpec("b", tuple(TopicSpec(f"m{i}", 0, 1.0) for i in range(20)))))
    # b drives away fast right after the contact starts; big payloads keep the exchange long
    sc = Scenario(
        team=team,
        nodes={
            0: NodeSpec(trajectory=Trajectory.static((0, 0))),
            1: NodeSpec(trajectory=Trajectory([(0, 0, 2), (1.0, 0, 2), (2.0, 200, 2)]), initiates=False),
        },
        comm_radius=10,
        duration=20,
        workload=[Workload(1, f"m{i}", start=0.0, count=1, nbytes=20000) for i in range(20)],
    )
    res = run(sc)
    ends = res.sessions()
    assert [e["outcome"] for e in ends] == ["timeout"]
    assert any(e["type"] == "frame_lost" for e in res.events)
    # prefix committed, not everything
    assert 0 <= ends[0]["committed"] < 20


def test_data_mule_propagation():
    res = run(load_scenario(SCEN / "data_mule.yaml"))
    team = res.scenario.team
    r1, r2, r3 = (team.rid(n) for n in ("robot1", "robot2", "robot3"))
    have = res.stores[r1].newest_map()
    assert (r2, 0) in have and (r2, 1) in have
    pairs = {frozenset((e["client"], e["server"])) for e in res.sessions()}
    assert frozenset((r1, r2)) not in pairs
    assert frozenset((r1, r3)) in pairs


def test_determinism_byte_identical():
    sc = load_scenario(SCEN / "comm_aware.yaml")
    a = run(sc).events_jsonl()
    b = run(load_scenario(SCEN / "comm_aware.yaml")).events_jsonl()
    assert a == b and len(a) > 1000


def test_seed_changes_log():
    a = run(generate_team_scenario(10, 1, 3, seed=1, duration=120)).events_jsonl()
    b = run(generate_team_scenario(10, 1, 3, seed=2, duration=120)).events_jsonl()
    assert a != b


@pytest.fixture(scope="module")
def busy_run():
    return run(generate_team_scenario(10, 2, 5, seed=4, duration=400))


def test_channel_exclusivity(busy_run):
    txs = sorted((e["start"], e["end"]) for e in busy_run.events if e["type"] == "frame_tx")
    assert len(txs) > 100
    for (s0, e0), (s1, e1) in zip(txs, txs[1:]):
        assert s1 >= e0


def test_log_times_non_decreasing(busy_run):
    ts = [e["t"] for e in busy_run.events]
    assert ts == sorted(ts)


def test_conservation(busy_run):
    b = busy_run.summary["bytes"]
    assert sum(b["committed"].values()) <= b["payload_frames"]
    assert sum(sum(s) for s in busy_run.bandwidth.values()) == pytest.approx(sum(b["tx"].values()))


def test_mission_state_changes_follow_edges(busy_run):
    from mocha.mission import EDGES, SEARCH_ONLY_EDGES, Mode

    for e in busy_run.events:
        if e["type"] == "state_change":
            edge = (Mode(e["old"]), Mode(e["new"]))
            assert edge in (SEARCH_ONLY_EDGES if e["node"] == 1 else EDGES)


def test_sporadic_bandwidth_zero_outside_contacts():
    # b shuttles past a static a twice; traffic only near those passes
    sc = Scenario(
        team=pair_team(),
        nodes={
            0: NodeSpec(trajectory=Trajectory.static((0, 0))),
            1: NodeSpec(
                trajectory=Trajectory([(0, -100, 0), (60, 0, 0), (70, 0, 0), (130, 100, 0), (200, 0, 0), (215, 0, 0), (300, -100, 0)])
            ),
        },
        comm_radius=8,
        duration=300,
        workload=[Workload(0, "pose"), Workload(1, "pose")],
    )
    res = run(sc)
    pos = {}
    for e in res.events:
        if e["type"] == "position":
            pos.setdefault(e["t"], {})[e["node"]] = (e["x"], e["y"])
    in_range = [t for t, p in pos.items() if math.dist(p[0], p[1]) <= 8]
    assert in_range
    for rid, series in res.bandwidth.items():
        for b, v in enumerate(series):
            near = any(t - 6 <= b <= t + 6 for t in in_range)
            if not near:
                assert v == 0, (rid, b, v)
    assert sum(res.bandwidth[0]) > 0


def test_contention_trend_small():
    waits = [run(generate_team_scenario(5, 1, n, seed=0)).summary["message_wait"]["mean"] for n in (3, 5, 10)]
    assert waits == sorted(waits)


def test_clock_offsets_do_not_matter():
    # shifting one robot's clock by an hour changes headers but not what propagates
    base = load_scenario(SCEN / "data_mule.yaml")
    res = run(base)
    r3 = base.team.rid("robot3")
    assert res.stores[0].newest(r3, 0).header.time_s >= 3600


def test_scenario_validation_errors():
    bad = {
        "team": {"robots": [{"name": "a", "topics": []}]},
        "comm_radius": -1,
        "nodes": {"a": {"position": [0, 0]}},
    }
    with pytest.raises(ConfigError) as ei:
        scenario_from_dict(bad)
    assert "comm_radius" in str(ei.value)
    with pytest.raises(ConfigError):
        scenario_from_dict({"team": {"robots": [{"name": "a"}]}, "nodes": {}})
    with pytest.raises(ConfigError):
        scenario_from_dict({"team": {"robots": [{"name": "a"}]}, "nodes": {"a": {"position": [0, 0]}}, "duration": 70000})


def test_result_write(tmp_path):
    res = run(load_scenario(SCEN / "data_mule.yaml"))
    res.write(tmp_path)
    lines = (tmp_path / "events.jsonl").read_text().splitlines()
    assert all(json.loads(l)["type"] for l in lines)
    summary = json.loads((tmp_path / "summary.json").read_text())
    assert set(summary) >= {"per_peer", "message_wait", "sessions", "bytes"}
    assert set(summary["message_wait"]) >= {"mean", "sd"}
    header = (tmp_path / "bandwidth.csv").read_text().splitlines()[0]
    assert header == "time_s,uav,robot1,robot2,robot3"
