"""Command-line entry points.

Exit codes: 0 ok, 2 validation error, 3 runtime error, 4 simulation run
dominated by timed-out sessions.
"""

from __future__ import annotations

import argparse
import asyncio
import json
import logging
import signal
import sys
from pathlib import Path

from mocha import __version__
from mocha.errors import ConfigError, MochaError

EXIT_OK, EXIT_INVALID, EXIT_RUNTIME, EXIT_TIMEOUTS = 0, 2, 3, 4

log = logging.getLogger("mocha.cli")


class CliError(Exception):
    def __init__(self, message: str, code: int = EXIT_RUNTIME):
        super().__init__(message)
        self.code = code


# -- validate -------------------------------------------------------------------


def _kind_of(data) -> str:
    if isinstance(data, dict):
        if "axes" in data:
            return "sweep"
        if "nodes" in data:
            return "scenario"
        if "robots" in data:
            return "team"
    return "unknown"


def validate_path(path: str) -> str:
    """Check one file; returns a one-line description or raises ConfigError."""
    from mocha.core.config import TeamConfig
    from mocha.diagnostics import LocatedDocument
    from mocha.simnet.scenario import scenario_from_dict
    from mocha.simnet.sweep import sweep_from_dict

    p = Path(path)
    doc = LocatedDocument.from_path(p)
    kind = _kind_of(doc.data)
    if kind == "team":
        team = TeamConfig.from_dict(doc.data, doc)
        return f"team: {team.n_robots} robots, {team.header_list_size} keys, hash {team.config_hash().hex()}"
    if kind == "scenario":
        sc = scenario_from_dict(doc.data, doc, base=p.parent)
        return f"scenario {sc.name}: {len(sc.nodes)} nodes, {sc.duration:g} s, radius {sc.comm_radius:g} m"
    if kind == "sweep":
        spec = sweep_from_dict(doc.data, doc, base=p.parent)
        return f"sweep {spec.name}: {len(spec.cells())} cells x {len(spec.seeds)} seeds"
    raise ConfigError(f"{p}:1: cannot tell what this is; expected 'robots', 'nodes' or 'axes' at top level")


def cmd_validate(args) -> int:
    status = EXIT_OK
    for path in args.paths:
        try:
            print(f"{path}: ok ({validate_path(path)})")
        except ConfigError as exc:
            status = EXIT_INVALID
            print(str(exc) if str(exc).startswith(path) else f"{path}: {exc}", file=sys.stderr)
        except OSError as exc:
            status = EXIT_INVALID
            print(f"{path}: {exc.strerror or exc}", file=sys.stderr)
    return status


# -- sim -------------------------------------------------------------------------


def cmd_sim_run(args) -> int:
    import dataclasses

    from mocha.simnet import load_scenario, run

    sc = load_scenario(args.scenario)
    changes = {}
    if args.seed is not None:
        changes["seed"] = args.seed
    if args.radius is not None:
        changes["comm_radius"] = args.radius
    if args.duration is not None:
        changes["duration"] = args.duration
    if changes:
        sc = dataclasses.replace(sc, **changes)
    res = run(sc)
    if args.out:
        res.write(args.out)
    s, w = res.summary["sessions"], res.summary["message_wait"]
    rate = "n/a" if s["success_rate"] is None else f"{s['success_rate']:.3f}"
    print(
        f"{sc.name}: sessions {s['complete']}/{s['total']} complete (success {rate}), "
        f"{s['timeout']} timeout; message wait mean {w['mean']:.4f} s sd {w['sd']:.4f} s"
    )
    if args.out:
        print(f"wrote {args.out}/events.jsonl, summary.json, bandwidth.csv")
    if res.timeout_dominated:
        print(f"{sc.name}: more than half of the sessions timed out", file=sys.stderr)
        return EXIT_TIMEOUTS
    return EXIT_OK


def cmd_sim_sweep(args) -> int:
    from mocha.simnet.sweep import load_sweep, rows_to_csv, run_sweep

    spec = load_sweep(args.spec)
    if args.seeds is not None:
        spec.seeds = list(range(args.seeds))
    rows = run_sweep(spec, jobs=args.jobs)
    text = rows_to_csv(rows)
    if args.out:
        Path(args.out).parent.mkdir(parents=True, exist_ok=True)
        Path(args.out).write_text(text)
        print(f"wrote {len(rows)} rows to {args.out}")
    else:
        sys.stdout.write(text)
    failed = [r for r in rows if r["error"]]
    for r in failed:
        print(f"cell radius={r['comm_radius']:g} uavs={r['uavs']} ugvs={r['ugvs']}: {r['error']}", file=sys.stderr)
    return EXIT_RUNTIME if failed else EXIT_OK


def cmd_report(args) -> int:
    from mocha.report import render

    text = render(args.outdir, args.format)
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


# -- peer ----------------------------------------------------------------------


def _resolve_rid(team, value: str) -> int:
    if value.isdigit():
        rid = int(value)
        if rid >= team.n_robots:
            raise ConfigError(f"rid {rid} is not in the team ({team.n_robots} robots)")
        return rid
    try:
        return team.rid(value)
    except KeyError:
        raise ConfigError(f"no robot named {value!r} in the team") from None


def parse_peers(team, spec: str | None, interval: float | None):
    from mocha.transport import PeerEndpoint

    peers = []
    for item in filter(None, (s.strip() for s in (spec or "").split(","))):
        key, sep, addr = item.partition("=")
        if not sep:
            raise ConfigError(f"bad peer {item!r}, expected rid=host:port")
        try:
            peers.append(PeerEndpoint(_resolve_rid(team, key), addr, interval))
        except (ValueError, OSError) as exc:
            raise ConfigError(f"bad peer {item!r}: {exc}") from None
    return peers


async def _serve(args) -> int:
    from mocha.core.config import TeamConfig
    from mocha.transport import PeerDaemon, configure_logging

    configure_logging()
    team = TeamConfig.load(args.config)
    rid = _resolve_rid(team, args.rid)
    peers = parse_peers(team, args.peer, args.sync_interval if args.sync_interval > 0 else None)
    daemon = PeerDaemon(
        team,
        rid,
        args.bind,
        peers,
        timeout=args.timeout,
        metrics_out=args.metrics_out,
        metrics_interval=args.metrics_interval,
        epoch=args.epoch,
    )
    try:
        address = await daemon.start()
    except OSError as exc:
        raise CliError(f"cannot bind {args.bind}: {exc.strerror or exc}")
    api = None
    if args.api:
        from mocha.service import api_server

        api = api_server(daemon, args.api)
        api_task = asyncio.create_task(api.serve())
    loop = asyncio.get_running_loop()
    for sig in (signal.SIGINT, signal.SIGTERM):
        try:
            loop.add_signal_handler(sig, daemon.request_stop)
        except (NotImplementedError, RuntimeError):
            pass
    # one parseable line so scripts know where we ended up
    print(json.dumps({"rid": rid, "listen": address, "api": args.api}), flush=True)
    await daemon.run_forever()
    if api is not None:
        api.should_exit = True
        await api_task
    return EXIT_OK


def cmd_peer_serve(args) -> int:
    return asyncio.run(_serve(args))


def cmd_peer_sync(args) -> int:
    from mocha.core.config import TeamConfig
    from mocha.core.store import MessageStore
    from mocha.transport import sync_with

    team = TeamConfig.load(args.config)
    rid = _resolve_rid(team, args.rid)
    peers = parse_peers(team, args.peer, None)
    if not peers:
        raise ConfigError("--peer is required")
    if any(p.rid == rid for p in peers):
        raise ConfigError(f"rid {rid} cannot sync with itself")
    store = MessageStore(team, rid)
    status = EXIT_OK
    for p in peers:
        report = asyncio.run(sync_with(store, p, args.timeout))
        print(json.dumps(report.to_dict(), sort_keys=True))
        if report.outcome.value != "complete":
            status = EXIT_RUNTIME
    if args.show:
        for h in sorted(store.latest_headers(), key=lambda h: h.key):
            print(f"  {team.robots[h.rid].name}/{team.robots[h.rid].topics[h.tid].name} {h}")
    return status


def _api_call(args, method: str, path: str, **kw):
    import httpx

    url = args.api if "://" in args.api else f"http://{args.api}"
    try:
        r = httpx.request(method, url.rstrip("/") + path, timeout=args.http_timeout, **kw)
    except httpx.HTTPError as exc:
        raise CliError(f"cannot reach {url}: {exc}")
    if r.status_code >= 400:
        try:
            detail = r.json().get("detail")
        except ValueError:
            detail = r.text
        raise CliError(f"{method} {path}: HTTP {r.status_code}: {detail}", EXIT_INVALID if r.status_code in (404, 422) else EXIT_RUNTIME)
    return r.json()


def cmd_peer_insert(args) -> int:
    item = {"topic": args.topic, "payload": args.payload}
    if args.base64:
        item["encoding"] = "base64"
    out = _api_call(args, "POST", "/insert", json={"items": [item]})
    res = out["results"][0]
    if res.get("error"):
        print(f"{args.topic}: {res['error']}", file=sys.stderr)
        return EXIT_RUNTIME
    print(f"{args.topic}: {res['header']['text']}")
    return EXIT_OK


def cmd_peer_status(args) -> int:
    status = _api_call(args, "GET", "/status")
    if args.json:
        status["metrics"] = _api_call(args, "GET", "/metrics")["peers"]
        print(json.dumps(status, indent=2, sort_keys=True))
        return EXIT_OK
    print(f"rid {status['rid']} ({status['name']}) on {status['address']}, up {status['uptime']:.1f} s")
    print(f"messages {status['messages']}, newest digest {status['newest_digest'][:16]}")
    for p in _api_call(args, "GET", "/metrics")["peers"]:
        rtt = "-" if p.get("rtt") is None else f"{p['rtt'] * 1000:.1f} ms"
        print(f"  peer {p['rid']}: {p['status']} last_sync={p.get('last_sync_time')} rtt={rtt}")
    return EXIT_OK


def cmd_peer_trigger(args) -> int:
    out = _api_call(args, "POST", f"/trigger/{args.peer_rid}")
    if out["busy"]:
        print(f"peer {args.peer_rid}: a session is already running")
        return EXIT_OK
    print(json.dumps(out["report"], sort_keys=True))
    return EXIT_OK if out["report"]["outcome"] == "complete" else EXIT_RUNTIME


# -- parser ------------------------------------------------------------------------


def _add_serve_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", required=True, help="team configuration YAML")
    p.add_argument("--rid", required=True, help="this robot's id or name")
    p.add_argument("--bind", default="127.0.0.1:7700", help="sync listener host:port (default %(default)s)")
    p.add_argument("--peer", default="", help="comma list of rid=host:port (rid may be a robot name)")
    p.add_argument("--sync-interval", type=float, default=2.0, help="per-peer sync timer in seconds; 0 = manual only")
    p.add_argument("--timeout", type=float, default=5.0, help="poll timeout per awaited reply (default %(default)s s)")
    p.add_argument("--api", default=None, help="serve the HTTP control API on host:port")
    p.add_argument("--metrics-out", default=None, help="append JSON-lines metrics to this file")
    p.add_argument("--metrics-interval", type=float, default=5.0, help="seconds between metrics lines")
    p.add_argument("--epoch", type=float, default=None,
                   help="unix time that message clocks count from (default: daemon start); share it across restarts")
    p.set_defaults(func=cmd_peer_serve)


def _add_api_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--api", required=True, help="control API address of a running daemon (host:port or URL)")
    p.add_argument("--http-timeout", type=float, default=15.0)


def _add_sim_args(sim_sub) -> None:
    p = sim_sub.add_parser("run", help="run one scenario")
    p.add_argument("scenario", help="scenario YAML")
    p.add_argument("--out", help="directory for events.jsonl, summary.json, bandwidth.csv")
    p.add_argument("--seed", type=int, help="override the scenario seed")
    p.add_argument("--radius", type=float, help="override comm_radius (m)")
    p.add_argument("--duration", type=float, help="override duration (s)")
    p.set_defaults(func=cmd_sim_run)

    p = sim_sub.add_parser("sweep", help="run a radius x team-size sweep into a CSV")
    p.add_argument("spec", help="sweep spec YAML")
    p.add_argument("--out", help="CSV path (default stdout)")
    p.add_argument("--jobs", type=int, default=1, help="worker processes (default %(default)s)")
    p.add_argument("--seeds", type=int, help="override the seed count")
    p.set_defaults(func=cmd_sim_sweep)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="mocha", description="Gossip sync for intermittently connected robot teams.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("validate", help="check team configs, scenarios or sweep specs")
    p.add_argument("paths", nargs="+")
    p.set_defaults(func=cmd_validate)

    sim = sub.add_parser("sim", help="simulator")
    _add_sim_args(sim.add_subparsers(dest="sim_command", required=True))

    peer = sub.add_parser("peer", help="peer daemon and its control API")
    psub = peer.add_subparsers(dest="peer_command", required=True)
    _add_serve_args(psub.add_parser("serve", help="run a sync daemon"))

    p = psub.add_parser("sync", help="one-shot pull from peers into an empty store")
    p.add_argument("--config", required=True)
    p.add_argument("--rid", required=True)
    p.add_argument("--peer", required=True, help="comma list of rid=host:port")
    p.add_argument("--timeout", type=float, default=5.0)
    p.add_argument("--show", action="store_true", help="list received headers")
    p.set_defaults(func=cmd_peer_sync)

    p = psub.add_parser("insert", help="publish a message through a daemon")
    _add_api_args(p)
    p.add_argument("topic")
    p.add_argument("payload")
    p.add_argument("--base64", action="store_true", help="payload is base64")
    p.set_defaults(func=cmd_peer_insert)

    p = psub.add_parser("status", help="show a daemon's store and peer metrics")
    _add_api_args(p)
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_peer_status)

    p = psub.add_parser("trigger", help="sync with a peer now (emulates it entering radio range)")
    _add_api_args(p)
    p.add_argument("peer_rid", type=int)
    p.set_defaults(func=cmd_peer_trigger)

    p = sub.add_parser("report", help="render a sim output directory as tables")
    p.add_argument("outdir")
    p.add_argument("--format", choices=["text", "markdown"], default="text")
    p.add_argument("--out", help="write to file instead of stdout")
    p.set_defaults(func=cmd_report)
    return parser


def _dispatch(args) -> int:
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.code
    except (MochaError, OSError, ValueError) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    except KeyboardInterrupt:
        return EXIT_RUNTIME


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    return _dispatch(args)


def peer_main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(prog="mocha-peer", description="Run a gossip sync daemon.")
    _add_serve_args(parser)
    return _dispatch(parser.parse_args(argv))


def sim_main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(prog="mocha-sim", description="Simulator commands.")
    _add_sim_args(parser.add_subparsers(dest="sim_command", required=True))
    return _dispatch(parser.parse_args(argv))


if __name__ == "__main__":
    sys.exit(main())
