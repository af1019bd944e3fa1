"""Discrete-event simulation of gossip sessions over one contended channel.

Time advances through a heap of events (ticks, local inserts, frame
deliveries, reply timeouts). Every protocol frame is a channel transmission
whose duration comes from the latency model; frames that arrive after the
two robots have drifted out of range are lost, and the waiting client times
out exactly as it would on a real link.
"""

from __future__ import annotations

import csv
import heapq
import itertools
import json
import math
import statistics
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from mocha.core.store import MessageStore
from mocha.errors import Throttled
from mocha.metrics import NodeMetrics, bandwidth_series
from mocha.mission.agent import UavAgent
from mocha.mission.fsm import Mode
from mocha.mission.graph import distance
from mocha.protocol.frames import Op, WireFrame
from mocha.protocol.session import TIMEOUT, ClientSession, Outcome, ServerSession
from mocha.simnet.channel import Channel
from mocha.simnet.latency import stage_for
from mocha.simnet.scenario import Scenario

# event kinds, in tie-break order for equal timestamps
_TICK, _INSERT, _DELIVER, _TIMEOUT = range(4)


@dataclass
class _Live:
    id: int
    client_rid: int
    server_rid: int
    client: ClientSession
    server: ServerSession
    started: float
    outstanding: int = 0
    frames: int = 0


@dataclass
class SimResult:
    scenario: Scenario
    events: list[dict]
    summary: dict
    stores: dict[int, MessageStore]
    bandwidth: dict[int, list[float]] = field(default_factory=dict)

    def events_jsonl(self) -> str:
        return "".join(json.dumps(e, sort_keys=True, separators=(",", ":")) + "\n" for e in self.events)

    def sessions(self, outcome: str | None = None) -> list[dict]:
        return [
            e for e in self.events if e["type"] == "session_end" and (outcome is None or e["outcome"] == outcome)
        ]

    @property
    def timeout_dominated(self) -> bool:
        s = self.summary["sessions"]
        return s["total"] > 0 and s["timeout"] / s["total"] > 0.5

    def write(self, outdir: str | Path) -> None:
        out = Path(outdir)
        out.mkdir(parents=True, exist_ok=True)
        (out / "events.jsonl").write_text(self.events_jsonl())
        (out / "summary.json").write_text(json.dumps(self.summary, indent=2, sort_keys=True) + "\n")
        names = [r.name for r in self.scenario.team.robots]
        with open(out / "bandwidth.csv", "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["time_s"] + names)
            nbins = max((len(v) for v in self.bandwidth.values()), default=0)
            for b in range(nbins):
                w.writerow([b] + [_fmt(self.bandwidth[rid][b]) for rid in range(len(names))])


def _fmt(x: float) -> str:
    return str(int(x)) if float(x).is_integer() else repr(x)


class Simulator:
    def __init__(self, scenario: Scenario):
        self.sc = scenario
        self.team = scenario.team
        seq = np.random.SeedSequence(scenario.seed)
        rng_channel, rng_nonce = (np.random.default_rng(s) for s in seq.spawn(2))
        self.channel = Channel(scenario.latency, rng_channel)
        self._nonce_rng = rng_nonce
        self.stores = {
            rid: MessageStore(self.team, rid, history=scenario.history) for rid in range(self.team.n_robots)
        }
        self.metrics = {rid: NodeMetrics() for rid in self.stores}
        self.events: list[dict] = []
        self._heap: list = []
        self._seq = itertools.count()
        self._sid = itertools.count(1)
        self.live: dict[int, _Live] = {}
        self._live_pair: dict[tuple[int, int], int] = {}
        self._last_attempt: dict[tuple[int, int], float] = {}
        self._in_range: set[tuple[int, int]] = set()
        self.positions: dict[int, tuple[float, float]] = {}
        self.agents: dict[int, UavAgent] = {}
        self._comm_done: dict[int, set] = {}
        self._bytes_tx = dict.fromkeys(self.stores, 0)
        self._bytes_rx = dict.fromkeys(self.stores, 0)
        self._payload_bytes_sent = 0
        self._committed_bytes = dict.fromkeys(self.stores, 0)
        self._counts = {o.value: 0 for o in Outcome}
        self._setup_agents()

    # -- setup --------------------------------------------------------------

    def _setup_agents(self) -> None:
        sc = self.sc
        ugvs = sc.ugvs
        for rid, node in sorted(sc.nodes.items()):
            if not node.mission:
                continue
            m = sc.mission
            fallback = {u: m.targets.get(u, sc.nodes[u].trajectory.at(0.0)) for u in ugvs}
            start = node.trajectory.at(0.0) if node.trajectory is not None else None
            self.agents[rid] = UavAgent(
                rid, m.graph, ugvs, fallback, timers=m.timers, search_only=node.search_only, speed=node.speed, start=start
            )
            self._comm_done[rid] = set()
            self.positions[rid] = self.agents[rid].position

    def _push(self, t: float, kind: int, data) -> None:
        heapq.heappush(self._heap, (t, kind, next(self._seq), data))

    def _log(self, t: float, type_: str, **fields) -> None:
        rec = {"t": t, "type": type_}
        rec.update(fields)
        self.events.append(rec)

    # -- main loop ----------------------------------------------------------

    def run(self) -> SimResult:
        sc = self.sc
        nticks = int(math.floor(sc.duration / sc.tick + 1e-9))
        for k in range(nticks + 1):
            self._push(k * sc.tick, _TICK, k)
        for w in sc.workload:
            for t in w.times(sc.duration):
                self._push(t, _INSERT, w)
        while self._heap:
            t, kind, _, data = heapq.heappop(self._heap)
            if t > sc.duration:
                break
            if kind == _TICK:
                self._on_tick(t, data)
            elif kind == _INSERT:
                self._on_insert(t, data)
            elif kind == _DELIVER:
                self._on_deliver(t, *data)
            elif kind == _TIMEOUT:
                self._on_timeout(t, *data)
        return self._result()

    def _name(self, rid: int) -> str:
        return self.team.robots[rid].name

    def _position(self, rid: int, t: float):
        if rid in self.agents:
            return self.agents[rid].position
        return self.sc.nodes[rid].trajectory.at(t)

    def _on_tick(self, t: float, k: int) -> None:
        sc = self.sc
        for rid in sorted(self.stores):
            if rid not in self.agents:
                self.positions[rid] = self._position(rid, t)
        for rid in sorted(self.agents):
            self._step_agent(rid, t)
        in_range = set()
        for a, b in itertools.combinations(sorted(self.stores), 2):
            d = distance(self.positions[a], self.positions[b])
            if d <= sc.comm_radius:
                in_range.add((a, b))
                self.metrics[a].record_phy(b, -20.0 * math.log10(max(d, 1.0)))
                self.metrics[b].record_phy(a, -20.0 * math.log10(max(d, 1.0)))
        for a, b in sorted(in_range):
            entered = (a, b) not in self._in_range
            for client, server in ((a, b), (b, a)):
                if not sc.nodes[client].initiates:
                    continue
                if (client, server) in self._live_pair:
                    continue
                last = self._last_attempt.get((client, server))
                due = last is None or t - last >= sc.retry_interval - 1e-9
                if (entered and sc.rssi_trigger) or due:
                    self._start_session(client, server, t)
        self._in_range = in_range
        every = max(1, round(sc.position_interval / sc.tick))
        if k % every == 0:
            for rid in sorted(self.stores):
                x, y = self.positions[rid]
                self._log(t, "position", node=rid, x=round(x, 6), y=round(y, 6))

    def _step_agent(self, rid: int, t: float) -> None:
        agent = self.agents[rid]
        sc = self.sc
        for u in agent.ugvs:
            if distance(agent.position, self.positions[u]) <= sc.comm_radius:
                agent.observe(u, self.positions[u], t)
        st = agent.state
        found_at = None
        if st.mode is Mode.SEARCH and st.search_target is not None:
            tp = self.positions[st.search_target]
            if distance(agent.position, tp) <= sc.comm_radius:
                found_at = tp
        comm_end = st.mode is Mode.COMM and self._comm_done[rid] >= {"pull", "push"}
        for old, new in agent.step(t, sc.tick, found_at, comm_end):
            self._comm_done[rid] = set()
            self._log(
                t,
                "state_change",
                node=rid,
                old=old.value,
                new=new.value,
                target=agent.state.search_target,
            )
        self.positions[rid] = agent.position

    def _on_insert(self, t: float, w) -> None:
        node = self.sc.nodes[w.rid]
        store = self.stores[w.rid]
        local_t = t + node.clock_offset
        body = _payload(self._name(w.rid), w.topic, local_t, w.nbytes)
        try:
            h = store.insert_local(w.topic, body, local_t)
        except Throttled:
            self._log(t, "throttled", node=w.rid, topic=w.topic)
            return
        self._log(t, "insert", node=w.rid, header=str(h), bytes=len(body))

    # -- sessions -----------------------------------------------------------

    def _start_session(self, client_rid: int, server_rid: int, t: float) -> None:
        sid = next(self._sid)
        nonce = int(self._nonce_rng.integers(0, 2**32))
        client = ClientSession(self.stores[client_rid], server_rid, nonce=nonce)
        server = ServerSession(self.stores[server_rid])
        live = _Live(sid, client_rid, server_rid, client, server, t)
        self.live[sid] = live
        self._live_pair[(client_rid, server_rid)] = sid
        self._last_attempt[(client_rid, server_rid)] = t
        self._log(t, "session_start", session=sid, client=client_rid, server=server_rid)
        self._transmit(live, client.start(now=t), client_rid, server_rid, t)

    def _transmit(self, live: _Live, frame: WireFrame, src: int, dst: int, t: float) -> None:
        nbytes = len(frame)
        stage = stage_for(frame.op)
        wait, start, end = self.channel.request_tx(src, nbytes, stage, t)
        live.frames += 1
        self._bytes_tx[src] += nbytes
        if frame.op is Op.PAYLOAD:
            self._payload_bytes_sent += nbytes
        self._log(
            t,
            "frame_tx",
            session=live.id,
            src=src,
            dst=dst,
            op=frame.op.name,
            bytes=nbytes,
            stage=stage.value,
            wait=wait,
            start=start,
            end=end,
        )
        self._push(end, _DELIVER, (live.id, frame, src, dst))
        if src == live.client_rid:
            live.outstanding += 1
            self._push(t + self.sc.session_timeout, _TIMEOUT, (live.id, live.outstanding))

    def _reachable(self, a: int, b: int) -> bool:
        return distance(self.positions[a], self.positions[b]) <= self.sc.comm_radius

    def _on_deliver(self, t: float, sid: int, frame: WireFrame, src: int, dst: int) -> None:
        live = self.live.get(sid)
        if live is None:
            return
        if not self._reachable(src, dst):
            self._log(t, "frame_lost", session=sid, src=src, dst=dst, op=frame.op.name)
            return
        self._bytes_rx[dst] += len(frame)
        if dst == live.server_rid:
            reply = live.server.step(frame, now=t)
            if reply is not None:
                self._transmit(live, reply, live.server_rid, live.client_rid, t)
            return
        before = len(live.client.committed)
        out = live.client.step(frame, now=t)
        for h in live.client.committed[before:]:
            msg = self.stores[live.client_rid].get_payload(h)
            self._committed_bytes[live.client_rid] += len(msg.payload)
            self._log(t, "commit", node=live.client_rid, header=str(h), bytes=len(msg.payload), session=sid)
        if out is not None:
            # the outstanding request was answered; a fresh timeout guards the next one
            self._transmit(live, out, live.client_rid, live.server_rid, t)
        elif live.client.finished:
            self._finish(live, t)

    def _on_timeout(self, t: float, sid: int, seq: int) -> None:
        live = self.live.get(sid)
        if live is None or live.outstanding != seq:
            return
        live.client.step(TIMEOUT, now=t)
        self._finish(live, t)

    def _finish(self, live: _Live, t: float) -> None:
        del self.live[live.id]
        del self._live_pair[(live.client_rid, live.server_rid)]
        report = live.client.report()
        self._counts[report.outcome.value] += 1
        self.metrics[live.client_rid].record_report(live.server_rid, report, live.started, t)
        self._log(
            t,
            "session_end",
            session=live.id,
            client=live.client_rid,
            server=live.server_rid,
            outcome=report.outcome.value,
            committed=report.messages_committed,
            requested=report.requested_count,
            frames=live.frames,
            bytes_received=report.bytes_received,
            rtt=report.rtt_estimate,
        )
        if report.outcome is Outcome.COMPLETE:
            for uav, agent in self.agents.items():
                if agent.state.mode is Mode.COMM and live.started >= agent.state.mode_entered_at:
                    target = agent.state.search_target
                    if (live.client_rid, live.server_rid) == (uav, target):
                        self._comm_done[uav].add("pull")
                    elif (live.client_rid, live.server_rid) == (target, uav):
                        self._comm_done[uav].add("push")

    # -- results ------------------------------------------------------------

    def _result(self) -> SimResult:
        sc = self.sc
        waits = self.channel.waits
        total = sum(self._counts.values())
        per_peer = []
        for rid in sorted(self.metrics):
            for entry in self.metrics[rid].snapshot():
                entry = {k: v for k, v in entry.items() if k in ("rid", "last_sync_time", "rtt", "status")}
                per_peer.append({"observer": rid, **entry})
        summary = {
            "scenario": sc.name,
            "seed": sc.seed,
            "duration": sc.duration,
            "comm_radius": sc.comm_radius,
            "nodes": {str(rid): self._name(rid) for rid in sorted(self.stores)},
            "per_peer": per_peer,
            "message_wait": {
                "mean": statistics.fmean(waits) if waits else 0.0,
                "sd": statistics.pstdev(waits) if len(waits) > 1 else 0.0,
                "count": len(waits),
            },
            "sessions": {
                "complete": self._counts["complete"],
                "interrupted": self._counts["interrupted"],
                "timeout": self._counts["timeout"],
                "config_mismatch": self._counts["config_mismatch"],
                "unfinished": len(self.live),
                "total": total,
                "success_rate": self._counts["complete"] / total if total else None,
            },
            "bytes": {
                "tx": {str(r): self._bytes_tx[r] for r in sorted(self.stores)},
                "rx": {str(r): self._bytes_rx[r] for r in sorted(self.stores)},
                "payload_frames": self._payload_bytes_sent,
                "committed": {str(r): self._committed_bytes[r] for r in sorted(self.stores)},
            },
        }
        bw = bandwidth_series(self.events, 1.0, nodes=sorted(self.stores), duration=sc.duration)
        return SimResult(sc, self.events, summary, self.stores, bw)


def _payload(robot: str, topic: str, t: float, nbytes: int) -> bytes:
    stem = f"{robot}/{topic}@{t:.3f};".encode()
    reps = nbytes // len(stem) + 1
    return (stem * reps)[:nbytes]


def run(scenario: Scenario) -> SimResult:
    return Simulator(scenario).run()
