"""Degree-dependent detuning factors.

Vertices are sorted by ascending degree, so the factors ``f`` evaluated on the
sorted order are nonincreasing. The difference function

    D_k(a) = sum(f[N-k:]) - sum(f[:k-1])

compares the weakest k-excitation energy with the strongest (k-1)-excitation
energy; the energy condition is ``D_k > 0`` for every k. Its minimum over k
sits at the first k where ``d[k-1] >= d[N-k-1]``, and the engineered strength
``a*`` is the first root of ``D_{k*}``.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .graph import DegreeOrder, Graph, degree_order

# sweep amplitude in units of Omega_max
DEFAULT_DELTA0 = 16.0

Evaluator = Callable[[np.ndarray, float], np.ndarray]


class InvalidProfileError(ValueError):
    """The family cannot be bracketed: D_{k*}(0) <= 0."""


class EngineeringError(RuntimeError):
    """Post-engineering verification failed (family not monotone in degree)."""


@dataclass(frozen=True)
class ProfileFamily:
    """Degree-to-factor map ``f(d, a)`` normalised so that ``f(0, a) = 1``."""

    kind: str
    evaluator: Evaluator = field(compare=False)
    a_bound: Callable[[int], float] = field(compare=False, default=lambda d_max: 1.0)

    def __call__(self, degrees, a: float) -> np.ndarray:
        d = np.asarray(degrees, dtype=np.float64)
        return np.asarray(self.evaluator(d, float(a)), dtype=np.float64)

    def a_max(self, d_max: int) -> float:
        """Upper end of the admissible range of ``a`` for a given max degree."""
        return float(self.a_bound(int(d_max)))


def _linear_bound(d_max: int) -> float:
    return 1.0 / d_max if d_max > 0 else 1.0


def linear() -> ProfileFamily:
    return ProfileFamily("linear", lambda d, a: 1.0 - a * d, _linear_bound)


def exponential() -> ProfileFamily:
    return ProfileFamily("exponential", lambda d, a: np.exp(-d * a))


def power_law() -> ProfileFamily:
    return ProfileFamily("power_law", lambda d, a: (1.0 + d) ** (-a))


def custom(evaluator: Evaluator, a_max: float = 1.0, kind: str = "custom") -> ProfileFamily:
    """Wrap a user function; it must satisfy f(0, a) = 1 and be nonincreasing in d."""
    return ProfileFamily(kind, evaluator, lambda d_max: a_max)


FAMILIES: dict[str, Callable[[], ProfileFamily]] = {
    "linear": linear,
    "exponential": exponential,
    "power_law": power_law,
}


def get_family(name: str | ProfileFamily) -> ProfileFamily:
    if isinstance(name, ProfileFamily):
        return name
    try:
        return FAMILIES[name]()
    except KeyError:
        raise ValueError(f"unknown profile family {name!r}; choose from {sorted(FAMILIES)}") from None


# ------------------------------------------------------------ D_k machinery


def sorted_factors(order: DegreeOrder, family: ProfileFamily, a: float) -> np.ndarray:
    return family(order.sorted_degrees, a)


def _d_from_factors(f: np.ndarray, k: int) -> float:
    n = f.shape[0]
    return float(f[n - k :].sum() - f[: k - 1].sum())


def difference_function(order: DegreeOrder, family: ProfileFamily, a: float, k: int) -> float:
    n = order.n
    if not 1 <= k <= n:
        raise ValueError(f"k must lie in [1, {n}], got {k}")
    return _d_from_factors(sorted_factors(order, family, a), k)


def difference_all(order: DegreeOrder, family: ProfileFamily, a: float) -> np.ndarray:
    """``D_1 .. D_N`` as an array (index 0 holds D_1)."""
    f = sorted_factors(order, family, a)
    n = f.shape[0]
    tail = np.cumsum(f[::-1])  # tail[k-1] = sum of the k smallest
    head = np.concatenate([[0.0], np.cumsum(f)])  # head[k-1] = sum of the k-1 largest
    return tail[:n] - head[:n]


def epsilon(order: DegreeOrder, family: ProfileFamily, a: float, k: int) -> float:
    """Discrete gradient D_{k+1} - D_k, via the closed form f[N-k-1] - f[k-1]."""
    n = order.n
    if not 1 <= k <= n - 1:
        raise ValueError(f"k must lie in [1, {n - 1}], got {k}")
    f = sorted_factors(order, family, a)
    return float(f[n - k - 1] - f[k - 1])


def find_k_star(order: DegreeOrder) -> int:
    """Minimal k with d[k-1] >= d[N-k-1]."""
    d = order.sorted_degrees
    n = len(d)
    if n < 2:
        raise ValueError("need at least two vertices")
    for k in range(1, n):
        if d[k - 1] >= d[n - k - 1]:
            return k
    raise AssertionError("unreachable: k = 1 .. N/2 + 1 always satisfies the degree condition")


@dataclass(frozen=True)
class RootResult:
    a: float
    residual: float
    iterations: int
    unconstrained: bool


def solve_a_star(
    order: DegreeOrder,
    family: ProfileFamily,
    k_star: int | None = None,
    tol: float = 1e-10,
    max_iter: int = 200,
    scan_points: int = 64,
) -> RootResult:
    """First root of D_{k*}(a) on (0, a_max].

    A coarse scan locates the first sign change (the energy manifolds first
    touch there), then bisection with secant proposals refines it. If D_{k*}
    stays positive on the whole range, ``a_max`` is returned flagged
    ``unconstrained``.
    """
    if k_star is None:
        k_star = find_k_star(order) if order.n >= 2 else 1
    a_max = family.a_max(max(order.sorted_degrees, default=0))

    def dk(a: float) -> float:
        return difference_function(order, family, a, k_star)

    d0 = dk(0.0)
    if d0 <= 0.0:
        raise InvalidProfileError(f"D_{k_star}(0) = {d0} <= 0; family is not normalised")
    grid = np.linspace(0.0, a_max, scan_points + 1)
    lo, hi = 0.0, None
    f_lo, f_hi = d0, None
    for a in grid[1:]:
        val = dk(float(a))
        if val <= 0.0:
            hi, f_hi = float(a), val
            break
        lo, f_lo = float(a), val
    if hi is None:
        # a root sitting exactly on a_max may evaluate to +rounding error
        return RootResult(a_max, f_lo, 0, f_lo > tol)
    if f_hi == 0.0:
        return RootResult(hi, 0.0, 0, False)

    it = 0
    a_mid, f_mid = hi, f_hi
    while it < max_iter:
        it += 1
        # secant proposal, fall back to bisection if it leaves the bracket
        a_mid = lo - f_lo * (hi - lo) / (f_hi - f_lo)
        if not lo < a_mid < hi or it % 3 == 0:
            a_mid = 0.5 * (lo + hi)
        f_mid = dk(a_mid)
        if abs(f_mid) <= tol:
            break
        if f_mid > 0.0:
            lo, f_lo = a_mid, f_mid
        else:
            hi, f_hi = a_mid, f_mid
        if hi - lo <= 1e-15 * max(1.0, abs(hi)):
            break
    return RootResult(a_mid, f_mid, it, False)


# ------------------------------------------------------------ engineered profile


@dataclass(frozen=True)
class DetuningProfile:
    """Per-vertex detuning factors (original vertex order) and their provenance."""

    family: str
    a_star: float
    k_star: int
    safety: float
    a_used: float
    factors: np.ndarray
    delta0: float
    unconstrained: bool = False

    def __post_init__(self) -> None:
        f = np.asarray(self.factors, dtype=np.float64).copy()
        f.setflags(write=False)
        object.__setattr__(self, "factors", f)

    @property
    def n(self) -> int:
        return self.factors.shape[0]

    @property
    def f_max(self) -> float:
        return float(self.factors.max()) if self.n else 0.0

    def to_dict(self) -> dict:
        return {
            "family": self.family,
            "a_star": self.a_star,
            "k_star": self.k_star,
            "safety": self.safety,
            "a_used": self.a_used,
            "unconstrained": self.unconstrained,
            "delta0": self.delta0,
            "factors": self.factors.tolist(),
        }

    def to_json(self, **kw) -> str:
        return json.dumps(self.to_dict(), **kw)

    @classmethod
    def from_dict(cls, d: dict) -> "DetuningProfile":
        return cls(
            family=d["family"],
            a_star=float(d["a_star"]),
            k_star=int(d["k_star"]),
            safety=float(d["safety"]),
            a_used=float(d["a_used"]),
            factors=np.asarray(d["factors"], dtype=np.float64),
            delta0=float(d["delta0"]),
            unconstrained=bool(d.get("unconstrained", False)),
        )


def homogeneous_profile(n: int, delta0: float) -> DetuningProfile:
    """Global-drive protocol: f_i = 1 for every vertex."""
    return DetuningProfile("homogeneous", 0.0, 1, 1.0, 0.0, np.ones(n), delta0)


def profile_at(g: Graph, family: ProfileFamily | str, a: float, delta0: float) -> DetuningProfile:
    """Factors for a fixed ``a`` without running the engineering search."""
    fam = get_family(family)
    order = degree_order(g)
    k = find_k_star(order) if g.n >= 2 else 1
    return DetuningProfile(fam.kind, a, k, 1.0, a, fam(g.degrees, a), delta0)


def engineer_detunings(
    g: Graph,
    family: ProfileFamily | str = "linear",
    delta0: float = DEFAULT_DELTA0,
    safety: float = 0.99,
) -> DetuningProfile:
    """Sort by degree, locate k* and a*, back off to ``safety * a*``, verify."""
    if g.n < 1:
        raise ValueError("graph has no vertices")
    if not 0.0 < safety <= 1.0:
        raise ValueError("safety multiplier must lie in (0, 1]")
    fam = get_family(family)
    order = degree_order(g)
    k_star = find_k_star(order) if g.n >= 2 else 1
    root = solve_a_star(order, fam, k_star)
    a_used = safety * root.a
    factors = fam(g.degrees, a_used)

    d_all = difference_all(order, fam, a_used)
    if not np.all(d_all > 0.0):
        bad = int(np.argmin(d_all)) + 1
        raise EngineeringError(f"energy condition fails at k={bad}: D={d_all[bad - 1]:.3e}")
    if not np.all(factors > 0.0):
        raise EngineeringError("non-positive detuning factor after engineering")
    if np.any(factors[np.asarray(g.degrees) == 0] != 1.0):
        raise EngineeringError("isolated vertices must keep f = 1")
    return DetuningProfile(fam.kind, root.a, k_star, safety, a_used, factors, delta0, root.unconstrained)


def check_blockade(profile: DetuningProfile, u_min: float) -> bool:
    """Conservative blockade bound: u_min > (delta0 / 2) * max f."""
    return bool(u_min > 0.5 * profile.delta0 * profile.f_max)


def root_existence_bound(
    order: DegreeOrder, family: ProfileFamily, a: float, k: int
) -> tuple[float, bool]:
    """Upper bound D_k(a) <= f[N-k](a) for nonincreasing positive factors."""
    n = order.n
    if not 1 <= k <= n:
        raise ValueError(f"k must lie in [1, {n}], got {k}")
    f = sorted_factors(order, family, a)
    bound = float(f[n - k])
    return bound, _d_from_factors(f, k) <= bound + 1e-12

