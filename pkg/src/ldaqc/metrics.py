"""Performance and hardness metrics, correlation statistics, power-law fits."""
from __future__ import annotations

import math
import warnings
from dataclasses import asdict, dataclass
from typing import Literal, Sequence

import numpy as np
from scipy.stats import rankdata

from . import _kernels
from .dynamics import SpectrumRecord
from .mis import ISCatalog

P_CLAMP = 1.0 - 1e-15
WEIGHT_FLOOR = 1e-12


class NoConnectedStatesError(ValueError):
    pass


class UndefinedCorrelationError(ValueError):
    pass


@dataclass
class MetricsRecord:
    p_mis: float
    r_ratio: float
    spm: float
    hp_trad: float
    hp_ld_multiplicity: float
    hp_ld_binary: float
    delta_min: float | None = None
    log_error_ratio: float | None = None
    hp_ratio: float | None = None

    def to_dict(self) -> dict:
        return asdict(self)


# ------------------------------------------------------------ state metrics


def success_probability(state: np.ndarray, catalog: ISCatalog) -> float:
    """Total probability on the (possibly degenerate) MIS manifold."""
    return float(np.sum(np.abs(state[catalog.mis_masks]) ** 2))


def approximation_ratio(state: np.ndarray, catalog: ISCatalog, normalize: bool = True) -> float:
    """<sum_i n_i> / |MIS| (or the raw excitation count with ``normalize=False``)."""
    n = int(round(math.log2(state.shape[0])))
    mean_n = float((np.abs(state) ** 2) @ _kernels.popcounts(n))
    return mean_n / catalog.mis_size if normalize else mean_n


def blockade_violation(state: np.ndarray, catalog: ISCatalog) -> float:
    """Probability on basis states that are not independent sets."""
    return float(1.0 - np.sum(np.abs(state[catalog.all_masks()]) ** 2))


# ------------------------------------------------------------ hardness


def hardness_traditional(catalog: ISCatalog, check: bool = True) -> float:
    """D_{|MIS|-1} / (|MIS| * D_{|MIS|}), cross-checked against the c_j-sum form."""
    c = catalog.extension_counts
    total = int(c.sum())
    if total == 0:
        raise NoConnectedStatesError("no connected |MIS|-1 states")
    d_near = len(catalog.near_mis_masks)
    hp = d_near / (catalog.mis_size * catalog.mis_count)
    if check:
        alt = len(c) / total
        if abs(hp - alt) > 1e-12:
            raise AssertionError(f"degeneracy form {hp} != extension-count form {alt}")
    return hp


def hardness_local_degree(
    catalog: ISCatalog,
    spectrum: SpectrumRecord,
    variant: Literal["multiplicity", "binary"] = "multiplicity",
    delta0: float = 1.0,
) -> float:
    """Energy-weighted hardness: sum(w) / sum(w * c), w = 1 / |E_j - mean E_MIS|.

    ``variant="binary"`` replaces c_j by min(c_j, 1). Distances below
    ``1e-12 * delta0`` are floored (with a warning).
    """
    c = catalog.extension_counts.astype(np.float64)
    if variant == "binary":
        c = np.minimum(c, 1.0)
    elif variant != "multiplicity":
        raise ValueError(f"unknown variant {variant!r}")
    dist = np.abs(spectrum.near_mis_energies - spectrum.e_mis_mean)
    floor = WEIGHT_FLOOR * abs(delta0)
    if np.any(dist < floor):
        warnings.warn("IS energy degenerate with the mean MIS energy; weight floored", RuntimeWarning)
        dist = np.maximum(dist, floor)
    w = 1.0 / dist
    denom = float(np.sum(w * c))
    if denom == 0.0:
        raise NoConnectedStatesError("no connected |MIS|-1 states")
    return float(np.sum(w) / denom)


# ------------------------------------------------------------ scalar maps


def _clamp(p: float) -> float:
    if p >= 1.0:
        warnings.warn(f"probability {p} clamped below 1", RuntimeWarning)
        return P_CLAMP
    return min(p, P_CLAMP)


def spm(p: float) -> float:
    """Success probability metric -ln(1 - p)."""
    return -math.log1p(-_clamp(float(p)))


def log_error_ratio(p_trad: float, p_ld: float) -> float:
    """log10((1 - p_trad) / (1 - p_ld)); positive when the LD protocol fails less."""
    return math.log10((1.0 - _clamp(float(p_trad))) / (1.0 - _clamp(float(p_ld))))


def hp_ratio(hp_trad: float, hp_ld: float) -> float:
    return float(hp_trad) / float(hp_ld)


# ------------------------------------------------------------ correlations


def _pair(x, y, min_n: int = 3) -> tuple[np.ndarray, np.ndarray]:
    x = np.asarray(x, dtype=np.float64).ravel()
    y = np.asarray(y, dtype=np.float64).ravel()
    if x.shape != y.shape:
        raise ValueError("samples must have equal length")
    if x.shape[0] < min_n:
        raise ValueError(f"need at least {min_n} samples")
    if np.ptp(x) == 0 or np.ptp(y) == 0:
        raise UndefinedCorrelationError("constant input series")
    return x, y


def pearson(x, y) -> float:
    x, y = _pair(x, y)
    xc, yc = x - x.mean(), y - y.mean()
    return float(xc @ yc / math.sqrt((xc @ xc) * (yc @ yc)))


def spearman(x, y) -> float:
    """Pearson correlation of average ranks."""
    x, y = _pair(x, y)
    return pearson(rankdata(x), rankdata(y))


def pearson_log_gap(x, gap) -> float:
    """Pearson correlation between ``x`` and log(gap)."""
    gap = np.asarray(gap, dtype=np.float64)
    if np.any(gap <= 0):
        raise ValueError("gaps must be positive")
    return pearson(x, np.log(gap))


def _double_centered(v: np.ndarray) -> np.ndarray:
    d = np.abs(v[:, None] - v[None, :])
    return d - d.mean(axis=0)[None, :] - d.mean(axis=1)[:, None] + d.mean()


def distance_correlation(x, y) -> float:
    """dCov(x, y) / sqrt(dVar(x) dVar(y)) with V-statistic distance covariances."""
    x, y = _pair(x, y)
    a = _double_centered(x)
    b = _double_centered(y)
    dcov2 = (a * b).mean()
    dvar = (a * a).mean() * (b * b).mean()
    return float(math.sqrt(max(dcov2, 0.0) / math.sqrt(dvar)))


def equal_frequency_bins(v: np.ndarray, bins: int) -> np.ndarray:
    """Bin labels from average ranks, so tied values share a bin."""
    r = rankdata(v)  # 1..n, ties averaged
    return np.minimum(((r - 1.0) * bins / v.shape[0]).astype(np.int64), bins - 1)


def mutual_information(x, y, bins: int | None = None) -> float:
    """Plug-in mutual information (nats) on an equal-frequency histogram.

    Defaults to ceil(sqrt(n)) bins per axis, capped at 16.
    """
    x, y = _pair(x, y)
    n = x.shape[0]
    if bins is None:
        bins = min(16, math.ceil(math.sqrt(n)))
    bx = equal_frequency_bins(x, bins)
    by = equal_frequency_bins(y, bins)
    joint = np.zeros((bins, bins))
    np.add.at(joint, (bx, by), 1.0)
    joint /= n
    px = joint.sum(axis=1)
    py = joint.sum(axis=0)
    nz = joint > 0
    return float(np.sum(joint[nz] * np.log(joint[nz] / np.outer(px, py)[nz])))


CORRELATIONS = {
    "spearman": spearman,
    "pearson_log": pearson_log_gap,
    "distance_correlation": distance_correlation,
    "mutual_information": mutual_information,
}


def correlation_table(candidates: dict[str, Sequence[float]], gap: Sequence[float]) -> dict[str, dict[str, float]]:
    """metric -> candidate -> value, for every hardness candidate against the gap."""
    return {
        name: {cand: fn(vals, gap) for cand, vals in candidates.items()}
        for name, fn in CORRELATIONS.items()
    }


# ------------------------------------------------------------ fits


@dataclass(frozen=True)
class FitResult:
    """``y = scale * x**slope`` fitted in log-log space.

    ``exponent`` follows the caller's convention: for :func:`fit_power_law`
    it is b in ``a * x**(-b)``; for :func:`fit_loglog` and
    :func:`fit_exponent` it is the signed log-log slope.
    """

    scale: float
    exponent: float
    residual_norm: float
    n: int
    excluded: int = 0

    def predict(self, x, decaying: bool = False):
        x = np.asarray(x, dtype=np.float64)
        return self.scale * x ** (-self.exponent if decaying else self.exponent)


def fit_loglog(x, y) -> FitResult:
    """Least squares of log y on log x; non-positive pairs are dropped and counted."""
    x = np.asarray(x, dtype=np.float64).ravel()
    y = np.asarray(y, dtype=np.float64).ravel()
    if x.shape != y.shape:
        raise ValueError("samples must have equal length")
    keep = (x > 0) & (y > 0) & np.isfinite(x) & np.isfinite(y)
    lx, ly = np.log(x[keep]), np.log(y[keep])
    if lx.shape[0] < 2 or np.ptp(lx) == 0:
        raise ValueError("need at least two distinct positive samples")
    design = np.column_stack([np.ones_like(lx), lx])
    coef, *_ = np.linalg.lstsq(design, ly, rcond=None)
    resid = float(np.linalg.norm(ly - design @ coef))
    return FitResult(float(math.exp(coef[0])), float(coef[1]), resid, int(keep.sum()), int((~keep).sum()))


def fit_power_law(hp, spm_values, min_n: int = 5) -> FitResult:
    """SPM = a * HP**(-b); returns exponent b (positive for a decaying relation)."""
    fit = fit_loglog(hp, spm_values)
    if fit.n < min_n:
        raise ValueError(f"need at least {min_n} positive samples, got {fit.n}")
    return FitResult(fit.scale, -fit.exponent, fit.residual_norm, fit.n, fit.excluded)


def fit_exponent(spm_ld, spm_trad, min_n: int = 5) -> FitResult:
    """Log-log slope s of SPM_LD against SPM_trad (SPM_LD ~ SPM_trad**s)."""
    fit = fit_loglog(spm_trad, spm_ld)
    if fit.n < min_n:
        raise ValueError(f"need at least {min_n} positive samples, got {fit.n}")
    return fit


def composed_success_probability(a_trad: float, b_trad: float, s: float, hp_trad) -> np.ndarray:
    """P_LD = 1 - exp(-a_trad**s * HP_trad**(-s * b_trad))."""
    hp = np.asarray(hp_trad, dtype=np.float64)
    return 1.0 - np.exp(-(a_trad**s) * hp ** (-s * b_trad))
