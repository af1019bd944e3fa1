import itertools
import random

import pytest

from mocha.errors import Unreachable
from mocha.mission import (
    EDGES,
    MissionState,
    MissionTimers,
    Mode,
    UavAgent,
    WaypointGraph,
    next_mode,
    next_search_target,
    plan_route,
    tick,
)

T = MissionTimers(t_i=180, t_e=120, t_s=45, t_c=20)


@pytest.mark.parametrize(
    "mode, elapsed, found, comm_end, expected",
    [
        (Mode.INIT, 181, False, False, Mode.SEARCH),
        (Mode.INIT, 180, False, False, None),
        (Mode.INIT, 179, True, True, None),
        (Mode.SEARCH, 0, True, False, Mode.COMM),
        (Mode.SEARCH, 100, True, False, Mode.COMM),
        (Mode.SEARCH, 46, False, False, Mode.EXPL),
        (Mode.SEARCH, 45, False, False, None),
        (Mode.COMM, 21, False, False, Mode.EXPL),
        (Mode.COMM, 20, False, False, None),
        (Mode.COMM, 1, False, True, Mode.EXPL),
        (Mode.EXPL, 121, False, False, Mode.SEARCH),
        (Mode.EXPL, 120, True, True, None),
    ],
)
def test_transition_table(mode, elapsed, found, comm_end, expected):
    assert next_mode(mode, elapsed, found, comm_end, T) == expected


def test_tick_resets_entry_time():
    s = MissionState.initial(T)
    s = tick(s, False, False, 181.0)
    assert s.mode is Mode.SEARCH and s.mode_entered_at == 181.0
    assert tick(s, False, False, 200.0) is s


def test_search_only_variant():
    assert next_mode(Mode.SEARCH, 46, False, False, T, search_only=True) is Mode.SEARCH
    assert next_mode(Mode.COMM, 21, False, False, T, search_only=True) is Mode.SEARCH
    assert MissionState.initial(T, search_only=True).mode is Mode.SEARCH


def test_bad_timers():
    with pytest.raises(ValueError):
        MissionTimers(t_c=-1)
    with pytest.raises(ValueError):
        MissionTimers(t_i=0)


def guard(mode, elapsed, found, comm_end, new):
    if (mode, new) == (Mode.INIT, Mode.SEARCH):
        return elapsed > T.t_i
    if (mode, new) == (Mode.SEARCH, Mode.COMM):
        return found
    if (mode, new) == (Mode.SEARCH, Mode.EXPL):
        return not found and elapsed > T.t_s
    if (mode, new) == (Mode.COMM, Mode.EXPL):
        return comm_end or elapsed > T.t_c
    if (mode, new) == (Mode.EXPL, Mode.SEARCH):
        return elapsed > T.t_e
    return False


def test_fuzz_soundness_small():
    rng = random.Random(0)
    for _ in range(10_000):
        mode = rng.choice(list(Mode))
        elapsed = rng.choice([rng.uniform(0, 300), float(rng.choice([20, 45, 120, 180]))])
        found, comm_end = rng.random() < 0.5, rng.random() < 0.5
        new = next_mode(mode, elapsed, found, comm_end, T)
        if new is None:
            assert not any(guard(mode, elapsed, found, comm_end, m) for m in Mode)
        else:
            assert (mode, new) in EDGES and guard(mode, elapsed, found, comm_end, new)


# -- routing ------------------------------------------------------------------


def all_simple_paths(g, a, b):
    out = []

    def walk(path):
        if path[-1] == b:
            out.append(list(path))
            return
        for m in g.neighbors(path[-1]):
            if m not in path:
                walk(path + [m])

    walk([a])
    return out


def oracle_route(g, a, b):
    paths = all_simple_paths(g, a, b)
    if not paths:
        raise Unreachable
    best = min(round(g.path_length(p), 9) for p in paths)
    return min(p for p in paths if round(g.path_length(p), 9) == best)


def test_route_same_node():
    g = WaypointGraph.grid(2, 2, 1.0)
    assert plan_route(g, 3, 3) == [3]


def test_route_square_tie_break():
    g = WaypointGraph({0: (0, 0), 1: (1, 0), 2: (1, 1), 3: (0, 1)}, [(0, 1), (1, 2), (2, 3), (3, 0)])
    assert oracle_route(g, 0, 2) == [0, 1, 2]
    assert plan_route(g, 0, 2) == [0, 1, 2]
    assert plan_route(g, 2, 0) == oracle_route(g, 2, 0) == [2, 1, 0]


def test_route_unreachable():
    g = WaypointGraph({0: (0, 0), 1: (1, 0), 2: (5, 5)}, [(0, 1)])
    with pytest.raises(Unreachable):
        plan_route(g, 0, 2)
    assert not g.is_connected()


def test_route_matches_exhaustive_oracle():
    rng = random.Random(11)
    for _ in range(60):
        n = rng.randint(2, 7)
        nodes = {i: (rng.randint(0, 4), rng.randint(0, 4)) for i in range(n)}
        edges = [e for e in itertools.combinations(range(n), 2) if rng.random() < 0.5]
        g = WaypointGraph(nodes, edges)
        for a, b in itertools.product(range(n), repeat=2):
            try:
                expected = oracle_route(g, a, b)
            except Unreachable:
                with pytest.raises(Unreachable):
                    plan_route(g, a, b)
                continue
            assert plan_route(g, a, b) == expected


# -- search targets ---------------------------------------------------------------


def test_round_robin_successor():
    s = MissionState(round_robin_cursor=0)
    rid, _, cursor = next_search_target(s, [1, 2, 3], {}, {1: (0, 0), 2: (9, 9), 3: (0, 0)})
    assert (rid, cursor) == (2, 1)


def test_last_known_position_used():
    s = MissionState(round_robin_cursor=0)
    _, goal, _ = next_search_target(s, [1, 2, 3], {2: ((50, 30), 12.0)}, {2: (0, 0)})
    assert goal == (50.0, 30.0)


def test_fallback_position():
    s = MissionState(round_robin_cursor=0)
    _, goal, _ = next_search_target(s, [1, 2, 3], {}, {2: (7, 8)})
    assert goal == (7.0, 8.0)


@pytest.mark.parametrize("n, m", [(3, 10), (4, 4), (5, 17), (1, 3)])
def test_round_robin_fairness(n, m):
    team = list(range(1, n + 1))
    s = MissionState()
    counts = dict.fromkeys(team, 0)
    from dataclasses import replace

    for _ in range(m):
        rid, _, cursor = next_search_target(s, team, {}, dict.fromkeys(team, (0, 0)))
        counts[rid] += 1
        s = replace(s, round_robin_cursor=cursor)
    assert all(m // n <= c <= -(-m // n) for c in counts.values())


# -- agent --------------------------------------------------------------------


def run_agent(agent, duration, dt=0.5):
    modes, t = [], 0.0
    while t <= duration:
        for old, new in agent.step(t, dt, None, False):
            modes.append((t, old, new))
        t += dt
    return modes


def test_agent_explores_every_waypoint_once_without_contacts():
    g = WaypointGraph.grid(4, 3, 40.0)
    timers = MissionTimers(t_i=60, t_e=30, t_s=20, t_c=10)
    agent = UavAgent(0, g, [1, 2], {1: (500, 500), 2: (-300, 0)}, timers=timers)
    modes = run_agent(agent, 1200)
    assert agent.explored == g.exploration_order
    assert all((old, new) in EDGES for _, old, new in modes)
    # after exploration finishes only SEARCH/EXPL cycling remains
    assert {new for _, _, new in modes} <= {Mode.SEARCH, Mode.EXPL}
    assert len(modes) > 10


def test_agent_comm_hovers_over_found_robot():
    g = WaypointGraph.grid(3, 3, 50.0)
    timers = MissionTimers(t_i=5, t_e=30, t_s=20, t_c=100)
    agent = UavAgent(0, g, [1], {1: (100, 100)}, timers=timers)
    run_agent(agent, 6)
    assert agent.state.mode is Mode.SEARCH and agent.state.search_target == 1
    agent.step(7.0, 0.5, (60.0, 70.0), False)
    assert agent.state.mode is Mode.COMM and agent.state.goal == (60.0, 70.0)
    for k in range(40):
        agent.step(7.5 + k * 0.5, 0.5, None, False)
    assert agent.position == (60.0, 70.0)
    assert agent.state.mode is Mode.COMM
    agent.step(30.0, 0.5, None, True)
    assert agent.state.mode is Mode.EXPL
