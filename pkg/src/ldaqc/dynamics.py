"""Rydberg-array annealing: Hamiltonian, state-vector evolution, spectra.

Basis convention: computational basis index ``m`` has bit ``i`` equal to the
Rydberg occupation of atom ``i``; index 0 is the all-ground state.

    H(t) = sum_i [Omega(t) X_i - Delta_i(t) n_i] + sum_edges U_ij n_i n_j
    Delta_i(t) = f_i * delta0 * (t - t_f/2) / t_f

Because Omega vanishes at t_f, the final energy of an independent set S is
``-(delta0/2) * sum_{i in S} f_i``.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Literal

import numpy as np
import scipy.linalg
import scipy.sparse as sp

from . import _kernels
from .detuning import DEFAULT_DELTA0, DetuningProfile, homogeneous_profile
from .graph import Graph
from .mis import ISCatalog

SIM_CAP = 14
DENSE_CAP = 12
# nearest-neighbour blockade U = 2*pi*Omega_max*BLOCKADE_FACTOR (lattice spacing 1)
BLOCKADE_FACTOR = 16.0

Protocol = Literal["traditional", "local_degree"]


class IntegratorError(RuntimeError):
    """Norm drift exceeded tolerance; retry with a smaller step."""


def default_c6(omega_max: float = 1.0, factor: float = BLOCKADE_FACTOR) -> float:
    return 2.0 * math.pi * omega_max * factor


# ------------------------------------------------------------------ schedule


def sin2_envelope(t, t_f: float, omega_max: float):
    return omega_max * np.sin(np.pi * np.asarray(t) / t_f) ** 2


def trapezoid_envelope(t, t_f: float, omega_max: float, rise: float = 0.1):
    t = np.asarray(t, dtype=np.float64)
    edge = rise * t_f
    ramp = np.minimum(np.minimum(t, t_f - t) / edge, 1.0)
    return omega_max * np.clip(ramp, 0.0, 1.0)


def sin2_integral(t, t_f: float, omega_max: float):
    """Antiderivative of :func:`sin2_envelope`, zero at t = 0."""
    t = np.asarray(t, dtype=np.float64)
    return omega_max * (0.5 * t - t_f / (4.0 * np.pi) * np.sin(2.0 * np.pi * t / t_f))


def trapezoid_integral(t, t_f: float, omega_max: float, rise: float = 0.1):
    t = np.clip(np.asarray(t, dtype=np.float64), 0.0, t_f)
    e = rise * t_f
    up = t**2 / (2 * e)
    flat = 0.5 * e + (t - e)
    down = t_f - e - (t_f - t) ** 2 / (2 * e)
    return omega_max * np.where(t <= e, up, np.where(t <= t_f - e, flat, down))


ENVELOPES: dict[str, tuple[Callable, Callable]] = {
    "sin2": (sin2_envelope, sin2_integral),
    "trapezoid": (trapezoid_envelope, trapezoid_integral),
}


@dataclass(frozen=True)
class PulseSchedule:
    """Rabi envelope plus per-atom linear detuning ramps."""

    t_f: float
    omega_max: float
    delta0: float
    factors: np.ndarray
    protocol: Protocol = "local_degree"
    shape: str = "sin2"

    def __post_init__(self) -> None:
        if self.t_f <= 0:
            raise ValueError("t_f must be positive")
        f = np.asarray(self.factors, dtype=np.float64).copy()
        f.setflags(write=False)
        object.__setattr__(self, "factors", f)
        if self.shape not in ENVELOPES:
            raise ValueError(f"unknown envelope {self.shape!r}")

    @classmethod
    def from_profile(
        cls,
        profile: DetuningProfile,
        t_f: float,
        omega_max: float = 1.0,
        protocol: Protocol = "local_degree",
        shape: str = "sin2",
    ) -> "PulseSchedule":
        factors = profile.factors if protocol == "local_degree" else np.ones(profile.n)
        return cls(t_f, omega_max, profile.delta0, factors, protocol, shape)

    @classmethod
    def traditional(cls, n: int, t_f: float, omega_max: float = 1.0, delta0: float = DEFAULT_DELTA0, shape: str = "sin2"):
        return cls.from_profile(homogeneous_profile(n, delta0), t_f, omega_max, "traditional", shape)

    def omega(self, t):
        return ENVELOPES[self.shape][0](t, self.t_f, self.omega_max)

    def omega_area(self, t0, t1):
        """Integral of Omega over [t0, t1] (vectorised)."""
        anti = ENVELOPES[self.shape][1]
        return anti(t1, self.t_f, self.omega_max) - anti(t0, self.t_f, self.omega_max)

    def sweep(self, t):
        """Common ramp ``delta0 (t - t_f/2) / t_f``; Delta_i = f_i * sweep."""
        return self.delta0 * (np.asarray(t, dtype=np.float64) - 0.5 * self.t_f) / self.t_f

    def detunings(self, t: float) -> np.ndarray:
        return self.factors * float(self.sweep(t))


# ------------------------------------------------------------------ model


@dataclass(frozen=True)
class HamiltonianModel:
    """Graph plus blockade interactions on its edges.

    Either ``c6`` (needs vertex positions; U_ij = c6 / r_ij**6) or a uniform
    ``u_edge`` for abstract graphs.
    """

    graph: Graph
    c6: float | None = None
    u_edge: float | None = None
    interactions: np.ndarray = field(init=False, repr=False)

    def __post_init__(self) -> None:
        g = self.graph
        if (self.c6 is None) == (self.u_edge is None):
            raise ValueError("give exactly one of c6 or u_edge")
        if self.c6 is not None:
            if g.positions is None and g.m:
                raise ValueError("graph has no positions; pass u_edge or attach coordinates")
            u = np.array([self.c6 / g.distance(i, j) ** 6 for i, j in g.edges], dtype=np.float64)
        else:
            u = np.full(g.m, float(self.u_edge))
        if np.any(u <= 0):
            raise ValueError("interactions must be positive")
        object.__setattr__(self, "interactions", u)

    @property
    def n(self) -> int:
        return self.graph.n

    @property
    def u_min(self) -> float:
        return float(self.interactions.min()) if self.graph.m else math.inf

    def diagonals(self, factors: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """(sum_i f_i n_i, sum_edges U_ij n_i n_j) over all basis states."""
        occ = _kernels.occupations(self.n)
        weight = occ @ np.asarray(factors, dtype=np.float64)
        inter = np.zeros(1 << self.n)
        for (i, j), u in zip(self.graph.edges, self.interactions):
            inter += u * occ[:, i] * occ[:, j]
        return weight, inter


def x_operator(n: int, masks: np.ndarray | None = None) -> sp.csr_matrix:
    """sum_i X_i, on the full space or restricted to ``masks`` (closed subspace rows)."""
    if masks is None:
        masks = np.arange(1 << n, dtype=np.int64)
    index = {int(m): k for k, m in enumerate(masks.tolist())}
    rows, cols = [], []
    for k, m in enumerate(masks.tolist()):
        for q in range(n):
            j = index.get(m ^ (1 << q))
            if j is not None:
                rows.append(k)
                cols.append(j)
    dim = len(masks)
    return sp.csr_matrix((np.ones(len(rows)), (rows, cols)), shape=(dim, dim))


def assemble_hamiltonian(model: HamiltonianModel, schedule: PulseSchedule, t: float, dense: bool = False):
    """H(t) on the full 2**N space (scipy CSR, or ndarray with ``dense=True``)."""
    if model.n > SIM_CAP:
        raise ValueError(f"N={model.n} exceeds the simulation cap {SIM_CAP}")
    weight, inter = model.diagonals(schedule.factors)
    diag = inter - float(schedule.sweep(t)) * weight
    h = sp.diags(diag).tocsr() + float(schedule.omega(t)) * x_operator(model.n)
    return h.toarray() if dense else h.tocsr()


# ------------------------------------------------------------------ evolution
#
# Splitting in the extended phase space (psi, t): the "X" flow carries time
# and is exact, exp(-i * integral(Omega) * sum X); the diagonal flow is exact
# at frozen t. Any palindromic splitting of an autonomous system therefore
# keeps its order. Schemes are listed as X coefficients (len s + 1) and
# diagonal coefficients (len s), sequence X d X d ... d X.

_W1 = 1.0 / (2.0 - 2.0 ** (1.0 / 3.0))
_W0 = 1.0 - 2.0 * _W1

# Blanes & Moan (2002) S6, fourth order
_BM_A = (0.0792036964311957, 0.353172906049774, -0.0420650803577195)
_BM_B = (0.209515106613362, -0.143851773179818)


def _bm6() -> tuple[tuple[float, ...], tuple[float, ...]]:
    a1, a2, a3 = _BM_A
    a4 = 1.0 - 2.0 * (a1 + a2 + a3)
    b1, b2 = _BM_B
    b3 = 0.5 - (b1 + b2)
    return (a1, a2, a3, a4, a3, a2, a1), (b1, b2, b3, b3, b2, b1)


SPLITTINGS: dict[str, tuple[int, tuple[float, ...], tuple[float, ...]]] = {
    "strang": (2, (0.5, 0.5), (1.0,)),
    "yoshida4": (4, (0.5 * _W1, 0.5 * (_W1 + _W0), 0.5 * (_W0 + _W1), 0.5 * _W1), (_W1, _W0, _W1)),
    "bm6": (4, *_bm6()),
}


@dataclass(frozen=True)
class IntegratorConfig:
    """Fixed-step split-operator integrator.

    ``dt`` is in units of 1/Omega_max. ``method`` picks the splitting scheme:
    ``bm6`` (fourth order, six stages, default), ``yoshida4`` (fourth-order
    triple jump) or ``strang`` (second order). Strong interactions make the
    splitting stiff, so the step is also capped at ``max_phase / max(U)``.
    """

    dt: float = 0.02
    method: str = "bm6"
    norm_tol: float = 1e-6
    max_phase: float = 1.0

    def __post_init__(self) -> None:
        if self.method not in SPLITTINGS:
            raise ValueError(f"unknown splitting {self.method!r}; choose from {sorted(SPLITTINGS)}")
        if self.dt <= 0:
            raise ValueError("dt must be positive")

    @property
    def order(self) -> int:
        return SPLITTINGS[self.method][0]


@dataclass
class EvolutionResult:
    state: np.ndarray
    norm_drift: float
    n_steps: int
    sample_times: np.ndarray
    samples: list[np.ndarray]


def _stage_plan(schedule: PulseSchedule, t0: float, t1: float, n_steps: int, method: str):
    """Kernel arguments (stage, x_angles, scales, taus) for ``n_steps`` steps."""
    _, xc, dc = SPLITTINGS[method]
    h = (t1 - t0) / n_steps
    xc = np.asarray(xc)
    dc = np.asarray(dc)
    s = dc.shape[0]
    # times at the X-stage boundaries within one step
    marks = np.concatenate([[0.0], np.cumsum(xc)])
    starts = t0 + h * np.arange(n_steps)
    edges = starts[:, None] + h * marks[None, :]  # (n_steps, s + 2)
    areas = schedule.omega_area(edges[:, :-1], edges[:, 1:])  # (n_steps, s + 1)
    # adjacent steps share their boundary X stage
    x_angles = np.zeros(n_steps * s + 1)
    for k in range(n_steps):
        x_angles[k * s : k * s + s + 1] += areas[k]
    d_times = edges[:, 1:-1].ravel()  # frozen time of each diagonal stage
    taus = np.tile(h * dc, n_steps)
    scales = -schedule.sweep(d_times)
    _, stage = np.unique(dc, return_inverse=True)
    return np.tile(stage.astype(np.int64), n_steps), x_angles, scales, taus, h


def _interaction_phases(inter: np.ndarray, method: str, h: float) -> np.ndarray:
    dc = np.unique(np.asarray(SPLITTINGS[method][2]))
    return np.exp(-1j * h * dc[:, None] * inter[None, :])


def initial_state(n: int) -> np.ndarray:
    psi = np.zeros(1 << n, dtype=np.complex128)
    psi[0] = 1.0
    return psi


def evolve(
    model: HamiltonianModel,
    schedule: PulseSchedule,
    config: IntegratorConfig | None = None,
    n_samples: int = 0,
    psi0: np.ndarray | None = None,
) -> EvolutionResult:
    """Integrate i d/dt psi = H(t) psi from 0 to t_f starting in the all-ground state.

    With ``n_samples > 0`` the state is also recorded at that many equally
    spaced times (t_f included).
    """
    if model.n > SIM_CAP:
        raise ValueError(f"N={model.n} exceeds the simulation cap {SIM_CAP}")
    if schedule.factors.shape[0] != model.n:
        raise ValueError("schedule and model disagree on the vertex count")
    config = config or IntegratorConfig()
    dt = config.dt / schedule.omega_max
    if model.graph.m:
        dt = min(dt, config.max_phase / float(model.interactions.max()))
    n_steps = max(1, math.ceil(schedule.t_f / dt - 1e-9))
    chunks = max(1, n_samples)
    n_steps = chunks * math.ceil(n_steps / chunks)
    _, inter = model.diagonals(schedule.factors)
    psi = initial_state(model.n) if psi0 is None else np.array(psi0, dtype=np.complex128)

    bounds = np.linspace(0.0, schedule.t_f, chunks + 1)
    samples = []
    v_phases = None
    for c in range(chunks):
        stage, x_angles, scales, taus, h = _stage_plan(
            schedule, bounds[c], bounds[c + 1], n_steps // chunks, config.method
        )
        if v_phases is None:
            v_phases = _interaction_phases(inter, config.method, h)
        _kernels.propagate(psi, model.n, schedule.factors, v_phases, stage, x_angles, scales, taus)
        if n_samples:
            samples.append(psi.copy())
    drift = abs(float(np.linalg.norm(psi)) - 1.0)
    if drift > config.norm_tol:
        raise IntegratorError(
            f"norm drift {drift:.2e} > {config.norm_tol:.0e}; try dt={config.dt / 2:g}"
        )
    return EvolutionResult(psi, drift, n_steps, bounds[1:] if n_samples else np.zeros(0), samples)


# ------------------------------------------------------------------ spectra


@dataclass(frozen=True)
class GapResult:
    delta_min: float
    t_min: float
    degenerate: bool
    times: np.ndarray
    gaps: np.ndarray


class _SpectrumEngine:
    """Low-lying eigenvalues of H(t) on the full space or the blockade subspace."""

    def __init__(self, model: HamiltonianModel, schedule: PulseSchedule, space: str, masks=None):
        n = model.n
        if space == "full":
            if n > DENSE_CAP:
                raise ValueError(f"dense diagonalisation capped at N={DENSE_CAP}")
            masks = np.arange(1 << n, dtype=np.int64)
        elif space == "blockade":
            if masks is None:
                masks = np.flatnonzero(_kernels.independent_table(model.graph.adjacency_masks, n))
            masks = np.asarray(masks, dtype=np.int64)
        else:
            raise ValueError("space must be 'full' or 'blockade'")
        weight, inter = model.diagonals(schedule.factors)
        self.weight = weight[masks]
        self.inter = inter[masks]
        self.x = x_operator(n, masks).toarray()
        self.schedule = schedule

    def levels(self, t: float, count: int) -> np.ndarray:
        s = self.schedule
        h = float(s.omega(t)) * self.x
        h[np.diag_indices_from(h)] = self.inter - float(s.sweep(t)) * self.weight
        count = min(count, h.shape[0])
        return scipy.linalg.eigh(h, eigvals_only=True, subset_by_index=[0, count - 1], driver="evr")


def instantaneous_gap(engine: _SpectrumEngine, t: float, manifold: int = 1) -> float:
    ev = engine.levels(t, manifold + 1)
    return float(ev[-1] - ev[0]) if ev.shape[0] > manifold else math.inf


def _golden_min(fn: Callable[[float], float], lo: float, hi: float, tol: float, max_iter: int = 100):
    inv = (math.sqrt(5.0) - 1.0) / 2.0
    c = hi - inv * (hi - lo)
    d = lo + inv * (hi - lo)
    fc, fd = fn(c), fn(d)
    for _ in range(max_iter):
        if hi - lo <= tol:
            break
        if fc < fd:
            hi, d, fd = d, c, fc
            c = hi - inv * (hi - lo)
            fc = fn(c)
        else:
            lo, c, fc = c, d, fd
            d = lo + inv * (hi - lo)
            fd = fn(d)
    return (c, fc) if fc < fd else (d, fd)


def minimal_gap(
    model: HamiltonianModel,
    schedule: PulseSchedule,
    n_points: int = 200,
    manifold: int = 1,
    space: Literal["full", "blockade"] = "full",
    masks: np.ndarray | None = None,
    degeneracy_tol: float = 1e-12,
) -> GapResult:
    """Minimum over the sweep of E_manifold(t) - E_0(t).

    ``manifold=1`` is the ground-to-first-excited gap. With a degenerate
    target (several MIS), pass the MIS count so the gap is measured to the
    first level outside the target manifold. A uniform grid is refined by a
    golden-section search around the grid minimum.
    """
    engine = _SpectrumEngine(model, schedule, space, masks)
    times = np.linspace(0.0, schedule.t_f, n_points)
    gaps = np.array([instantaneous_gap(engine, float(t), manifold) for t in times])
    i = int(np.argmin(gaps))
    t_best, g_best = float(times[i]), float(gaps[i])
    lo, hi = float(times[max(i - 1, 0)]), float(times[min(i + 1, n_points - 1)])
    if hi > lo:
        t_ref, g_ref = _golden_min(
            lambda t: instantaneous_gap(engine, t, manifold), lo, hi, 1e-6 * schedule.t_f
        )
        if g_ref < g_best:
            t_best, g_best = t_ref, g_ref
    degenerate = g_best < degeneracy_tol
    return GapResult(0.0 if degenerate else g_best, t_best, degenerate, times, gaps)


# ------------------------------------------------------------------ final bands


@dataclass(frozen=True)
class SpectrumRecord:
    """Final-time energies of all independent sets, grouped by size."""

    bands: dict[int, np.ndarray]
    masks: dict[int, np.ndarray]
    e_mis_mean: float
    near_mis_energies: np.ndarray
    connected: np.ndarray
    bands_separated: bool
    delta_min: float | None = None

    def mean_energy(self, connected: bool) -> float:
        sel = self.connected if connected else ~self.connected
        return float(self.near_mis_energies[sel].mean()) if np.any(sel) else math.nan


def final_energies(masks: np.ndarray, factors: np.ndarray, delta0: float) -> np.ndarray:
    n = factors.shape[0]
    bits = (np.asarray(masks, dtype=np.int64)[:, None] >> np.arange(n)[None, :]) & 1
    return -0.5 * delta0 * (bits @ factors)


def final_band_spectrum(catalog: ISCatalog, profile: DetuningProfile) -> SpectrumRecord:
    """Final-time IS energies; band k lies strictly below band k-1 when separated."""
    f = np.asarray(profile.factors, dtype=np.float64)
    bands = {k: final_energies(m, f, profile.delta0) for k, m in catalog.by_size.items()}
    separated = all(
        bands[k].max() < bands[k - 1].min() for k in sorted(bands) if k >= 1
    )
    mis_e = bands[catalog.mis_size]
    near = bands[catalog.mis_size - 1] if catalog.mis_size >= 1 else np.zeros(0)
    return SpectrumRecord(
        bands=bands,
        masks=dict(catalog.by_size),
        e_mis_mean=float(mis_e.mean()),
        near_mis_energies=near,
        connected=catalog.connected,
        bands_separated=bool(separated),
    )


# ------------------------------------------------------------------ trajectory dump


def trajectory(
    model: HamiltonianModel,
    schedule: PulseSchedule,
    catalog: ISCatalog,
    n_samples: int = 50,
    config: IntegratorConfig | None = None,
    gap_space: Literal["full", "blockade"] = "blockade",
) -> list[dict]:
    """Rows of (t, P_MIS(t), <n>(t), gap(t)) sampled along one evolution."""
    res = evolve(model, schedule, config, n_samples=n_samples)
    counts = _kernels.popcounts(model.n).astype(np.float64)
    mis = catalog.mis_masks
    engine = _SpectrumEngine(model, schedule, gap_space, catalog.all_masks() if gap_space == "blockade" else None)
    rows = []
    for t, psi in zip(res.sample_times, res.samples):
        prob = np.abs(psi) ** 2
        rows.append(
            {
                "t": float(t),
                "p_mis": float(prob[mis].sum()),
                "n_mean": float(prob @ counts),
                "gap": instantaneous_gap(engine, float(t), catalog.mis_count),
            }
        )
    return rows


def write_trajectory_csv(rows: list[dict], path: str | Path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=["t", "p_mis", "n_mean", "gap"])
        w.writeheader()
        w.writerows(rows)
