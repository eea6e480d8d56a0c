"""Brute-force cross-checks runnable from an installed package (no pytest)."""
from __future__ import annotations

from itertools import combinations
from typing import Callable

import numpy as np

from .detuning import difference_all, engineer_detunings, find_k_star, get_family, homogeneous_profile, profile_at, solve_a_star
from .dynamics import final_band_spectrum
from .graph import degree_order, from_edge_list
from .metrics import NoConnectedStatesError, hardness_local_degree, hardness_traditional
from .mis import enumerate_independent_sets, solve_mis


def _random_graphs(count: int, max_n: int, seed: int):
    rng = np.random.default_rng(seed)
    for _ in range(count):
        n = int(rng.integers(1, max_n + 1))
        p = rng.random()
        edges = [(i, j) for i, j in combinations(range(n), 2) if rng.random() < p]
        yield from_edge_list(n, edges)


def _brute_sets(g) -> list[frozenset]:
    edges = set(g.edges)
    return [
        frozenset(c)
        for k in range(g.n + 1)
        for c in combinations(range(g.n), k)
        if all(e not in edges for e in combinations(c, 2))
    ]


def check_catalog(count: int = 200, max_n: int = 10, seed: int = 0) -> str:
    for g in _random_graphs(count, max_n, seed):
        sets = _brute_sets(g)
        cat = enumerate_independent_sets(g)
        size = max(map(len, sets))
        mis = [s for s in sets if len(s) == size]
        assert cat.mis_size == size and cat.mis_count == len(mis)
        assert len(cat.all_masks()) == len(sets)
        assert solve_mis(g)[0] == size
        total = sum(sum(1 for m in mis if s < m) for s in sets if len(s) == size - 1)
        assert int(cat.extension_counts.sum()) == total == size * len(mis)
    return f"{count} graphs agree with exhaustive subset scan"


def check_hardness_reduction(count: int = 200, max_n: int = 10, seed: int = 1) -> str:
    worst = 0.0
    for g in _random_graphs(count, max_n, seed):
        cat = enumerate_independent_sets(g)
        try:
            hp = hardness_traditional(cat)
        except NoConnectedStatesError:
            continue
        spec = final_band_spectrum(cat, homogeneous_profile(g.n, 1.0))
        worst = max(worst, abs(hardness_local_degree(cat, spec) - hp))
    assert worst <= 1e-9, worst
    return f"max |HP_LD(a=0) - HP_trad| = {worst:.1e}"


def check_energy_condition(count: int = 200, max_n: int = 12, seed: int = 2) -> str:
    for g in _random_graphs(count, max_n, seed):
        for fam in ("linear", "exponential", "power_law"):
            prof = engineer_detunings(g, fam)
            assert np.all(difference_all(degree_order(g), get_family(fam), prof.a_used) > 0)
    return f"{count} graphs x 3 families satisfy D_k > 0"


def check_anchors() -> str:
    p4 = from_edge_list(4, [(0, 1), (1, 2), (2, 3)])
    s3 = from_edge_list(4, [(0, 1), (0, 2), (0, 3)])
    lin = get_family("linear")
    assert find_k_star(degree_order(p4)) == 2
    assert abs(solve_a_star(degree_order(p4), lin).a - 1 / 3) < 1e-9
    assert abs(solve_a_star(degree_order(s3), lin).a - 1 / 3) < 1e-9
    cat = enumerate_independent_sets(p4)
    assert abs(hardness_traditional(cat) - 2 / 3) < 1e-12
    assert abs(hardness_traditional(enumerate_independent_sets(s3)) - 1.0) < 1e-12
    spec = final_band_spectrum(cat, profile_at(p4, lin, 1 / 3, 1.0))
    assert abs(hardness_local_degree(cat, spec) - 11 / 18) < 1e-9
    return "P4 and S3 closed forms reproduced"


CHECKS: dict[str, Callable[[], str]] = {
    "catalog": check_catalog,
    "hardness_reduction": check_hardness_reduction,
    "energy_condition": check_energy_condition,
    "anchors": check_anchors,
}


def run_all() -> list[tuple[str, bool, str]]:
    out = []
    for name, fn in CHECKS.items():
        try:
            out.append((name, True, fn()))
        except AssertionError as exc:
            out.append((name, False, f"assertion failed {exc}"))
    return out
