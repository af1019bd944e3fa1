"""Waypoint graph with pre-validated (no-fly-safe) edges and shortest-path routing."""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass, field

from mocha.errors import Unreachable

Point = tuple[float, float]


def distance(a: Point, b: Point) -> float:
    return math.hypot(a[0] - b[0], a[1] - b[1])


@dataclass
class WaypointGraph:
    nodes: dict[int, Point]
    edges: list[tuple[int, int]]
    exploration_order: list[int] = field(default_factory=list)

    def __post_init__(self) -> None:
        self.nodes = {int(k): (float(v[0]), float(v[1])) for k, v in self.nodes.items()}
        self._adj: dict[int, list[int]] = {n: [] for n in self.nodes}
        for a, b in self.edges:
            if a not in self.nodes or b not in self.nodes:
                raise ValueError(f"edge ({a}, {b}) references an unknown waypoint")
            if b not in self._adj[a]:
                self._adj[a].append(b)
                self._adj[b].append(a)
        for n in self._adj:
            self._adj[n].sort()
        for w in self.exploration_order:
            if w not in self.nodes:
                raise ValueError(f"exploration order references unknown waypoint {w}")

    @classmethod
    def grid(cls, nx: int, ny: int, spacing: float, origin: Point = (0.0, 0.0)) -> WaypointGraph:
        """Rectangular lattice; exploration order is a boustrophedon sweep."""
        nodes, edges, order = {}, [], []
        for j in range(ny):
            for i in range(nx):
                nodes[j * nx + i] = (origin[0] + i * spacing, origin[1] + j * spacing)
                if i:
                    edges.append((j * nx + i - 1, j * nx + i))
                if j:
                    edges.append(((j - 1) * nx + i, j * nx + i))
            row = [j * nx + i for i in range(nx)]
            order.extend(row if j % 2 == 0 else row[::-1])
        return cls(nodes, edges, order)

    def neighbors(self, n: int) -> list[int]:
        return self._adj[n]

    def is_connected(self) -> bool:
        if not self.nodes:
            return True
        start = next(iter(self.nodes))
        seen, stack = {start}, [start]
        while stack:
            for m in self._adj[stack.pop()]:
                if m not in seen:
                    seen.add(m)
                    stack.append(m)
        return len(seen) == len(self.nodes)

    def nearest(self, p: Point) -> int:
        return min(self.nodes, key=lambda n: (distance(self.nodes[n], p), n))

    def path_length(self, path: list[int]) -> float:
        return sum(distance(self.nodes[a], self.nodes[b]) for a, b in zip(path, path[1:]))


def plan_route(graph: WaypointGraph, start: int, goal: int) -> list[int]:
    """Shortest Euclidean path over graph edges.

    Among equally short paths the lexicographically smallest id sequence
    wins. Distances are rounded to 1e-9 m so float noise does not break ties.
    """
    for n in (start, goal):
        if n not in graph.nodes:
            raise KeyError(f"unknown waypoint {n}")
    heap: list[tuple[float, tuple[int, ...], float]] = [(0.0, (start,), 0.0)]
    settled: set[int] = set()
    while heap:
        _, path, dist = heapq.heappop(heap)
        node = path[-1]
        if node in settled:
            continue
        settled.add(node)
        if node == goal:
            return list(path)
        for m in graph.neighbors(node):
            if m not in settled:
                d = dist + distance(graph.nodes[node], graph.nodes[m])
                heapq.heappush(heap, (round(d, 9), path + (m,), d))
    raise Unreachable(f"waypoint {goal} is not reachable from {start}")
