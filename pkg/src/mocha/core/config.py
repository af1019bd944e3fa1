"""Team configuration shared verbatim by every node.

Robot ids and topic ids are positional: the index of a robot in ``robots``
and the index of a topic inside that robot's ``topics`` list.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

from mocha.diagnostics import Diagnostic, LocatedDocument, raise_if_any
from mocha.errors import UnknownTopic

MAX_ROBOTS = 256
MAX_TOPICS = 256


@dataclass(frozen=True)
class TopicSpec:
    name: str
    priority: int = 0
    rate_hz: float = 1.0
    hint_bytes: int = 0


@dataclass(frozen=True)
class RobotSpec:
    name: str
    topics: tuple[TopicSpec, ...] = ()


@dataclass(frozen=True)
class TeamConfig:
    robots: tuple[RobotSpec, ...]
    _rid_by_name: dict = field(init=False, repr=False, compare=False)
    _tid_by_name: dict = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        diags = check_team(self.to_dict())
        raise_if_any(diags, "team configuration")
        object.__setattr__(self, "_rid_by_name", {r.name: i for i, r in enumerate(self.robots)})
        object.__setattr__(
            self,
            "_tid_by_name",
            {(i, t.name): j for i, r in enumerate(self.robots) for j, t in enumerate(r.topics)},
        )

    # -- construction -------------------------------------------------------

    @classmethod
    def from_dict(cls, data: Any, doc: LocatedDocument | None = None) -> TeamConfig:
        raise_if_any(check_team(data, doc), "team configuration")
        robots = []
        for r in data["robots"]:
            topics = tuple(
                TopicSpec(
                    name=t["name"],
                    priority=int(t.get("priority", 0)),
                    rate_hz=float(t.get("rate_hz", 1.0)),
                    hint_bytes=int(t.get("hint_bytes", 0)),
                )
                for t in r.get("topics") or []
            )
            robots.append(RobotSpec(r["name"], topics))
        return cls(tuple(robots))

    @classmethod
    def load(cls, path: str | Path) -> TeamConfig:
        doc = LocatedDocument.from_path(path)
        return cls.from_dict(doc.data, doc)

    @classmethod
    def uniform(cls, n_robots: int, topics: list[TopicSpec], prefix: str = "robot") -> TeamConfig:
        """Every robot publishes the same topic list; handy for tests and sweeps."""
        return cls(tuple(RobotSpec(f"{prefix}{i}", tuple(topics)) for i in range(n_robots)))

    def to_dict(self) -> dict:
        return {
            "robots": [
                {
                    "name": r.name,
                    "topics": [
                        {"name": t.name, "priority": t.priority, "rate_hz": t.rate_hz, "hint_bytes": t.hint_bytes}
                        for t in r.topics
                    ],
                }
                for r in self.robots
            ]
        }

    # -- lookups ------------------------------------------------------------

    @property
    def n_robots(self) -> int:
        return len(self.robots)

    def rid(self, robot_name: str) -> int:
        try:
            return self._rid_by_name[robot_name]
        except KeyError:
            raise KeyError(f"unknown robot {robot_name!r}") from None

    def tid(self, rid: int, topic_name: str) -> int:
        try:
            return self._tid_by_name[(rid, topic_name)]
        except KeyError:
            raise UnknownTopic(f"robot {rid} declares no topic {topic_name!r}") from None

    def topic(self, rid: int, tid: int) -> TopicSpec:
        return self.robots[rid].topics[tid]

    def has_key(self, rid: int, tid: int) -> bool:
        return 0 <= rid < len(self.robots) and 0 <= tid < len(self.robots[rid].topics)

    def priority(self, rid: int, tid: int) -> int:
        return self.robots[rid].topics[tid].priority

    def topic_count(self, rid: int) -> int:
        """Number of topics r_i declared by robot ``rid``."""
        return len(self.robots[rid].topics)

    @property
    def header_list_size(self) -> int:
        """S_h: total number of (rid, tid) keys across the team."""
        return sum(len(r.topics) for r in self.robots)

    def max_requests(self, rid: int) -> int:
        """Worst-case number of payloads a client can request in one session."""
        return self.header_list_size - self.topic_count(rid)

    def keys(self):
        for i, r in enumerate(self.robots):
            for j in range(len(r.topics)):
                yield (i, j)

    def config_hash(self) -> bytes:
        """8-byte digest of the canonical config; exchanged at session start."""
        canonical = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(canonical.encode()).digest()[:8]


def check_team(data: Any, doc: LocatedDocument | None = None) -> list[Diagnostic]:
    def diag(path, msg):
        return doc.diagnose(path, msg) if doc else Diagnostic(tuple(path), msg)

    out: list[Diagnostic] = []
    if not isinstance(data, dict) or not isinstance(data.get("robots"), list):
        return [diag(("robots",), "expected a 'robots' list")]
    robots = data["robots"]
    if not robots:
        out.append(diag(("robots",), "at least one robot is required"))
    if len(robots) > MAX_ROBOTS:
        out.append(
            diag(
                ("robots",),
                f"{len(robots)} robots declared; the 8-bit robot id allows at most {MAX_ROBOTS} nodes",
            )
        )
    seen_robots: set = set()
    for i, r in enumerate(robots):
        if not isinstance(r, dict) or not isinstance(r.get("name"), str) or not r.get("name"):
            out.append(diag(("robots", i), "robot needs a non-empty string 'name'"))
            continue
        if r["name"] in seen_robots:
            out.append(diag(("robots", i, "name"), f"duplicate robot name {r['name']!r}"))
        seen_robots.add(r["name"])
        topics = r.get("topics") or []
        if not isinstance(topics, list):
            out.append(diag(("robots", i, "topics"), "topics must be a list"))
            continue
        if len(topics) > MAX_TOPICS:
            out.append(
                diag(
                    ("robots", i, "topics"),
                    f"{len(topics)} topics declared; the 8-bit topic id allows at most {MAX_TOPICS}",
                )
            )
        seen_topics: set = set()
        for j, t in enumerate(topics):
            path = ("robots", i, "topics", j)
            if not isinstance(t, dict) or not isinstance(t.get("name"), str) or not t.get("name"):
                out.append(diag(path, "topic needs a non-empty string 'name'"))
                continue
            if t["name"] in seen_topics:
                out.append(diag(path + ("name",), f"duplicate topic name {t['name']!r}"))
            seen_topics.add(t["name"])
            prio = t.get("priority", 0)
            if not isinstance(prio, int) or isinstance(prio, bool) or not 0 <= prio <= 255:
                out.append(diag(path + ("priority",), "priority must be an integer in [0, 255]"))
            rate = t.get("rate_hz", 1.0)
            if not isinstance(rate, (int, float)) or isinstance(rate, bool) or rate <= 0:
                out.append(diag(path + ("rate_hz",), "rate_hz must be a positive number"))
            hint = t.get("hint_bytes", 0)
            if not isinstance(hint, int) or isinstance(hint, bool) or hint < 0:
                out.append(diag(path + ("hint_bytes",), "hint_bytes must be a non-negative integer"))
    return out
