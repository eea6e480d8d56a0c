"""Graph instances: disordered King's graphs, generic unit-disk graphs, degree order."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

KING_RADIUS = math.sqrt(2.0) + 1e-9


class EmptyInstanceError(ValueError):
    """Hole sampling removed every site; callers may resample with another seed."""


@dataclass(frozen=True)
class Graph:
    """Undirected simple graph with optional 2-D vertex positions (lattice units).

    ``edges`` is a sorted tuple of ``(u, v)`` pairs with ``u < v``.
    """

    n: int
    edges: tuple[tuple[int, int], ...]
    positions: np.ndarray | None = None
    degrees: tuple[int, ...] = field(default=())

    def __post_init__(self) -> None:
        deg = [0] * self.n
        for u, v in self.edges:
            if u == v:
                raise ValueError(f"self-loop at vertex {u}")
            if not (0 <= u < self.n and 0 <= v < self.n):
                raise ValueError(f"edge ({u}, {v}) out of range for n={self.n}")
            deg[u] += 1
            deg[v] += 1
        if self.degrees and tuple(self.degrees) != tuple(deg):
            raise ValueError("stored degrees do not match the edge set")
        object.__setattr__(self, "degrees", tuple(deg))
        if self.positions is not None:
            pos = np.asarray(self.positions, dtype=np.float64)
            if pos.shape != (self.n, 2):
                raise ValueError(f"positions must have shape ({self.n}, 2), got {pos.shape}")
            pos.setflags(write=False)
            object.__setattr__(self, "positions", pos)

    @property
    def m(self) -> int:
        return len(self.edges)

    @property
    def adjacency_masks(self) -> np.ndarray:
        """int64 array; bit ``j`` of entry ``i`` is set iff ``(i, j)`` is an edge."""
        adj = np.zeros(self.n, dtype=np.int64)
        for u, v in self.edges:
            adj[u] |= 1 << v
            adj[v] |= 1 << u
        return adj

    def neighbors(self, i: int) -> list[int]:
        return [v for u, v in self.edges if u == i] + [u for u, v in self.edges if v == i]

    def distance(self, i: int, j: int) -> float:
        if self.positions is None:
            raise ValueError("graph has no vertex positions")
        return float(np.hypot(*(self.positions[i] - self.positions[j])))

    def is_connected(self) -> bool:
        if self.n == 0:
            return True
        adj = self.adjacency_masks
        seen = 1
        frontier = 1
        while frontier:
            nxt = 0
            for v in range(self.n):
                if frontier >> v & 1:
                    nxt |= int(adj[v])
            frontier = nxt & ~seen
            seen |= nxt
        return seen == (1 << self.n) - 1

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Graph):
            return NotImplemented
        if self.n != other.n or self.edges != other.edges:
            return False
        if (self.positions is None) != (other.positions is None):
            return False
        return self.positions is None or bool(np.array_equal(self.positions, other.positions))

    def __hash__(self) -> int:
        return hash((self.n, self.edges))


@dataclass(frozen=True)
class DegreeOrder:
    """Vertices sorted by ascending degree, ties by ascending vertex id."""

    permutation: tuple[int, ...]
    sorted_degrees: tuple[int, ...]

    @property
    def n(self) -> int:
        return len(self.permutation)


def from_edge_list(
    n: int,
    edges: Iterable[Sequence[int]],
    positions: Sequence[Sequence[float]] | np.ndarray | None = None,
) -> Graph:
    """Build a graph from an edge list; duplicate and reversed edges collapse."""
    if n < 0:
        raise ValueError("vertex count must be non-negative")
    canon = set()
    for e in edges:
        u, v = int(e[0]), int(e[1])
        if u == v:
            raise ValueError(f"self-loop at vertex {u}")
        if not (0 <= u < n and 0 <= v < n):
            raise ValueError(f"edge ({u}, {v}) out of range for n={n}")
        canon.add((min(u, v), max(u, v)))
    return Graph(n, tuple(sorted(canon)), None if positions is None else np.asarray(positions, float))


def unit_disk_graph(positions: Sequence[Sequence[float]] | np.ndarray, radius: float) -> Graph:
    """Connect every pair of points closer than ``radius`` (inclusive)."""
    pos = np.asarray(positions, dtype=np.float64).reshape(-1, 2)
    n = pos.shape[0]
    diff = pos[:, None, :] - pos[None, :, :]
    dist = np.hypot(diff[..., 0], diff[..., 1])
    iu, ju = np.nonzero(np.triu(dist <= radius, k=1))
    return Graph(n, tuple(zip(iu.tolist(), ju.tolist())), pos)


def build_kings_graph(rows: int, cols: int, hole_probability: float, seed: int) -> Graph:
    """Disordered King's graph: each site of a rows x cols grid is dropped with
    probability ``hole_probability``; survivors are relabelled row-major.

    Raises:
        ValueError: bad dimensions or probability.
        EmptyInstanceError: every site was removed.
    """
    if rows < 1 or cols < 1:
        raise ValueError("rows and cols must be positive")
    if not 0.0 <= hole_probability <= 1.0:
        raise ValueError(f"hole_probability must lie in [0, 1], got {hole_probability}")
    rng = np.random.default_rng(seed)
    keep = rng.random(rows * cols) >= hole_probability
    sites = [(r, c) for r in range(rows) for c in range(cols)]
    pos = np.array([s for s, k in zip(sites, keep) if k], dtype=np.float64).reshape(-1, 2)
    if pos.shape[0] == 0:
        raise EmptyInstanceError(f"all {rows * cols} sites removed (seed={seed})")
    return unit_disk_graph(pos, KING_RADIUS)


def kings_edge_count(rows: int, cols: int) -> int:
    """Edge count of the hole-free rows x cols King's graph."""
    return rows * (cols - 1) + cols * (rows - 1) + 2 * (rows - 1) * (cols - 1)


def degree_order(g: Graph) -> DegreeOrder:
    deg = np.asarray(g.degrees, dtype=np.int64)
    perm = np.argsort(deg, kind="stable")
    return DegreeOrder(tuple(int(p) for p in perm), tuple(int(d) for d in deg[perm]))


# ------------------------------------------------------------------ text I/O
# First line "N M", then M lines "u v", then optionally N lines "x y".


def dumps(g: Graph) -> str:
    lines = [f"{g.n} {g.m}"]
    lines += [f"{u} {v}" for u, v in g.edges]
    if g.positions is not None:
        lines += [f"{x!r} {y!r}" for x, y in g.positions.tolist()]
    return "\n".join(lines) + "\n"


def loads(text: str) -> Graph:
    rows = [ln.split() for ln in text.splitlines() if ln.strip() and not ln.lstrip().startswith("#")]
    if not rows or len(rows[0]) != 2:
        raise ValueError("graph file must start with 'N M'")
    n, m = int(rows[0][0]), int(rows[0][1])
    body = rows[1:]
    if len(body) not in (m, m + n):
        raise ValueError(f"expected {m} edge lines (+ optional {n} position lines), got {len(body)}")
    edges = [(int(a), int(b)) for a, b in body[:m]]
    positions = [(float(x), float(y)) for x, y in body[m:]] if len(body) == m + n and n else None
    return from_edge_list(n, edges, positions)


def save(g: Graph, path: str | Path) -> None:
    Path(path).write_text(dumps(g))


def load(path: str | Path) -> Graph:
    return loads(Path(path).read_text())
