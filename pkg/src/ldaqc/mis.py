"""Independent-set enumeration, exact MIS, and MIS-extension bookkeeping.

Vertex sets are stored as integer bitmasks (bit ``i`` set means vertex ``i`` is
in the set), so graphs are limited to 63 vertices here and to ``max_n`` for the
exhaustive catalog.
"""
from __future__ import annotations

import json
from collections import Counter
from dataclasses import dataclass
from typing import Iterable, Literal, Sequence

import numpy as np

from . import _kernels
from .graph import Graph

DEFAULT_MAX_N = 20


class EnumerationCapError(ValueError):
    """Graph too large for the exhaustive catalog; use :func:`solve_mis`."""


@dataclass(frozen=True)
class ISCatalog:
    """All independent sets of a graph, grouped by size.

    Attributes:
        n: vertex count.
        by_size: ``by_size[k]`` is a sorted int64 array of the size-k masks.
        mis_size: size of a maximum independent set.
        mis_count: number of maximum independent sets (MIS degeneracy).
        extension_counts: aligned with ``by_size[mis_size - 1]``; entry ``j`` is
            the number of distinct MISs containing that set (0 = disconnected).
    """

    n: int
    by_size: dict[int, np.ndarray]
    mis_size: int
    mis_count: int
    extension_counts: np.ndarray

    @property
    def mis_masks(self) -> np.ndarray:
        return self.by_size[self.mis_size]

    @property
    def near_mis_masks(self) -> np.ndarray:
        return self.by_size[self.mis_size - 1]

    @property
    def degeneracies(self) -> dict[int, int]:
        return {k: len(v) for k, v in self.by_size.items()}

    @property
    def connected(self) -> np.ndarray:
        return self.extension_counts >= 1

    def all_masks(self) -> np.ndarray:
        return np.concatenate([self.by_size[k] for k in sorted(self.by_size)])

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "strata": {str(k): len(v) for k, v in sorted(self.by_size.items())},
            "mis_size": self.mis_size,
            "mis_count": self.mis_count,
            "mis": [mask_to_set(int(m)) for m in self.mis_masks],
            "near_mis": [
                {"set": mask_to_set(int(m)), "c": int(c)}
                for m, c in zip(self.near_mis_masks, self.extension_counts)
            ],
        }

    def to_json(self, **kw) -> str:
        return json.dumps(self.to_dict(), **kw)


def mask_to_set(mask: int) -> list[int]:
    out = []
    i = 0
    while mask:
        if mask & 1:
            out.append(i)
        mask >>= 1
        i += 1
    return out


def set_to_mask(vertices: Iterable[int]) -> int:
    mask = 0
    for v in vertices:
        mask |= 1 << int(v)
    return mask


def is_independent(g: Graph, mask: int) -> bool:
    adj = g.adjacency_masks
    return all(not (mask >> v & 1) or not (int(adj[v]) & mask) for v in range(g.n))


def enumerate_independent_sets(g: Graph, max_n: int = DEFAULT_MAX_N) -> ISCatalog:
    """Exhaustive catalog over all 2**N vertex subsets (the empty set included)."""
    if g.n > max_n:
        raise EnumerationCapError(
            f"graph has {g.n} vertices, above the enumeration cap {max_n}; use solve_mis"
        )
    table = _kernels.independent_table(g.adjacency_masks, g.n)
    masks = np.flatnonzero(table).astype(np.int64)
    sizes = _kernels.popcounts(g.n)[masks]
    by_size = {int(k): masks[sizes == k] for k in np.unique(sizes)}
    mis_size = int(sizes.max())
    mis = by_size[mis_size]
    counts = extension_counts_bottom_up(g, by_size[mis_size - 1]) if mis_size >= 1 else np.zeros(0, np.int64)
    return ISCatalog(g.n, by_size, mis_size, len(mis), counts)


def extension_counts_bottom_up(g: Graph, near_mis: np.ndarray) -> np.ndarray:
    """For each size-(|MIS|-1) set, count vertices whose addition yields an MIS.

    Any independent set of size |MIS| is maximum, so it suffices to count
    vertices outside the set that have no neighbour inside it.
    """
    adj = g.adjacency_masks
    out = np.zeros(len(near_mis), dtype=np.int64)
    for j, s in enumerate(near_mis.tolist()):
        c = 0
        for v in range(g.n):
            if not (s >> v & 1) and not (int(adj[v]) & s):
                c += 1
        out[j] = c
    return out


def extension_counts_top_down(mis_masks: Sequence[int]) -> Counter:
    """Delete each vertex of each MIS and tally the resulting subsets."""
    tally: Counter = Counter()
    for m in mis_masks:
        m = int(m)
        rest = m
        while rest:
            low = rest & -rest
            tally[m ^ low] += 1
            rest ^= low
    return tally


def solve_mis(g: Graph) -> tuple[int, frozenset[int]]:
    """Exact MIS by branch-and-bound with minimum-degree pivoting.

    Some maximum independent set contains a vertex of N[v] for any v, so the
    search branches only on the closed neighbourhood of a minimum-degree
    vertex of the remaining graph; degree <= 1 vertices are taken greedily.
    """
    if g.n > 63:
        raise ValueError("bitmask solver supports at most 63 vertices")
    adj = [int(a) for a in g.adjacency_masks]
    best_mask = 0
    best_size = 0

    def bits(mask: int) -> list[int]:
        return mask_to_set(mask)

    def search(cand: int, chosen: int, size: int) -> None:
        nonlocal best_mask, best_size
        while True:
            if not cand:
                if size > best_size:
                    best_size, best_mask = size, chosen
                return
            if size + cand.bit_count() <= best_size:
                return
            pivot, pdeg = -1, 64
            for v in bits(cand):
                d = (adj[v] & cand).bit_count()
                if d < pdeg:
                    pivot, pdeg = v, d
            if pdeg <= 1:
                chosen |= 1 << pivot
                size += 1
                cand &= ~((1 << pivot) | adj[pivot])
                continue
            break
        closed = (1 << pivot) | (adj[pivot] & cand)
        for u in bits(closed):
            search(cand & ~((1 << u) | adj[u]), chosen | (1 << u), size + 1)
            # later branches may assume u is excluded
            cand &= ~(1 << u)

    search((1 << g.n) - 1, 0, 0)
    witness = frozenset(mask_to_set(best_mask))
    assert is_independent(g, best_mask)
    return best_size, witness


def mis_union_mask(catalog: ISCatalog) -> int:
    union = 0
    for m in catalog.mis_masks.tolist():
        union |= m
    return union


@dataclass(frozen=True)
class MembershipRow:
    degree: int
    count: int
    empirical: float
    analytic: float


def membership_probability_by_degree(
    ensemble: Sequence[Graph],
    membership: Literal["uniform", "any", "canonical"] = "uniform",
    max_n: int = DEFAULT_MAX_N,
) -> dict[int, MembershipRow]:
    """Empirical P(i in MIS) per degree against the (1 - |MIS|/N)**d estimate.

    Averaged over (graph, vertex) pairs. ``membership="uniform"`` scores a
    vertex by the fraction of the graph's MISs that contain it (a uniformly
    drawn MIS); ``"any"`` counts it if it lies in at least one MIS;
    ``"canonical"`` uses only the lowest-mask MIS of each graph.
    """
    if membership not in ("uniform", "any", "canonical"):
        raise ValueError(f"unknown membership rule {membership!r}")
    if not ensemble:
        raise ValueError("empty ensemble")
    hits: dict[int, float] = {}
    totals: Counter = Counter()
    analytic: dict[int, float] = {}
    for g in ensemble:
        cat = enumerate_independent_sets(g, max_n)
        if membership == "uniform":
            bits = (cat.mis_masks[:, None] >> np.arange(g.n)[None, :]) & 1
            score = bits.mean(axis=0)
        else:
            target = mis_union_mask(cat) if membership == "any" else int(cat.mis_masks[0])
            score = [(target >> v) & 1 for v in range(g.n)]
        ratio = 1.0 - cat.mis_size / g.n
        for v, d in enumerate(g.degrees):
            totals[d] += 1
            hits[d] = hits.get(d, 0.0) + float(score[v])
            analytic[d] = analytic.get(d, 0.0) + ratio**d
    return {
        d: MembershipRow(d, totals[d], hits[d] / totals[d], analytic[d] / totals[d])
        for d in sorted(totals)
    }
