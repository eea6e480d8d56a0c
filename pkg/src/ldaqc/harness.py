"""Ensemble experiments: paired traditional / local-degree runs and their reports.

The whole pipeline is a pure function of :class:`ExperimentConfig`. Instance
seeds are drawn from a generator seeded with the master seed, workers return
records tagged with their instance index, and everything is sorted by that
index before it is written, so a re-run reproduces ``records.csv`` byte for
byte. Timings live only in ``records.jsonl``.
"""
from __future__ import annotations

import csv
import json
import logging
import math
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from . import __version__
from .detuning import DEFAULT_DELTA0, check_blockade, engineer_detunings
from .dynamics import (
    BLOCKADE_FACTOR,
    HamiltonianModel,
    IntegratorConfig,
    IntegratorError,
    PulseSchedule,
    default_c6,
    evolve,
    final_band_spectrum,
    minimal_gap,
)
from .graph import EmptyInstanceError, Graph, build_kings_graph, dumps
from .metrics import (
    MetricsRecord,
    NoConnectedStatesError,
    CORRELATIONS,
    UndefinedCorrelationError,
    approximation_ratio,
    fit_exponent,
    fit_loglog,
    fit_power_law,
    hardness_local_degree,
    hardness_traditional,
    hp_ratio,
    log_error_ratio,
    spm,
    success_probability,
)
from .mis import enumerate_independent_sets

log = logging.getLogger(__name__)

SCHEMA_VERSION = 1
WORKERS_ENV = "LDAQC_WORKERS"
PROTOCOLS = ("traditional", "local_degree")
HP_CANDIDATES = ("hp_ld_multiplicity", "hp_ld_binary", "hp_trad")


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class EnsembleSpec:
    """Disordered King's-graph ensemble.

    Sites are dropped with ``hole_probability``; instances outside
    ``[n_min, n_max]`` vertices (or disconnected, when required) are
    resampled with the next seed.
    """

    rows: int = 4
    cols: int = 4
    hole_probability: float = 0.3
    count: int = 20
    seed: int = 0
    n_min: int = 9
    n_max: int = 11
    require_connected: bool = True
    # optional (lo, hi] window on HP_trad, applied while sampling
    hp_window: tuple[float, float] | None = None


@dataclass(frozen=True)
class ExperimentConfig:
    """Serializable description of one ensemble run.

    Energies are in units of Omega_max, ``t_f`` values in units of
    pi / Omega_max. ``c6`` overrides ``blockade_factor`` when given.
    """

    ensemble: EnsembleSpec = field(default_factory=EnsembleSpec)
    family: str = "linear"
    delta0: float = DEFAULT_DELTA0
    omega_max: float = 1.0
    blockade_factor: float = BLOCKADE_FACTOR
    c6: float | None = None
    t_f: tuple[float, ...] = (10.0, 20.0)
    dt: float = 0.02
    method: str = "bm6"
    safety: float = 0.99
    shape: str = "sin2"
    gap_points: int = 100
    compute_gap: bool = True
    output_dir: str = "runs/default"

    def __post_init__(self) -> None:
        object.__setattr__(self, "t_f", tuple(float(t) for t in self.t_f))
        if isinstance(self.ensemble, dict):
            object.__setattr__(self, "ensemble", _ensemble_from_dict(self.ensemble))

    @property
    def c6_value(self) -> float:
        return self.c6 if self.c6 is not None else default_c6(self.omega_max, self.blockade_factor)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["t_f"] = list(self.t_f)
        if self.ensemble.hp_window is not None:
            d["ensemble"]["hp_window"] = list(self.ensemble.hp_window)
        return {"schema_version": SCHEMA_VERSION, **d}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentConfig":
        d = dict(d)
        version = d.pop("schema_version", None)
        if version != SCHEMA_VERSION:
            raise ConfigError(f"unsupported config schema_version {version!r}; expected {SCHEMA_VERSION}")
        known = set(cls.__dataclass_fields__)
        unknown = set(d) - known
        if unknown:
            raise ConfigError(f"unknown config fields: {sorted(unknown)}")
        if "ensemble" in d:
            d["ensemble"] = _ensemble_from_dict(d["ensemble"])
        return cls(**d)

    def save(self, path: str | Path) -> None:
        Path(path).write_text(self.to_json() + "\n")

    @classmethod
    def load(cls, path: str | Path) -> "ExperimentConfig":
        return cls.from_dict(json.loads(Path(path).read_text()))


def _ensemble_from_dict(d: dict) -> EnsembleSpec:
    d = dict(d)
    unknown = set(d) - set(EnsembleSpec.__dataclass_fields__)
    if unknown:
        raise ConfigError(f"unknown ensemble fields: {sorted(unknown)}")
    if d.get("hp_window") is not None:
        d["hp_window"] = tuple(float(x) for x in d["hp_window"])
    return EnsembleSpec(**d)


# ------------------------------------------------------------------ instances


@dataclass(frozen=True)
class Instance:
    index: int
    seed: int
    graph: Graph


def generate_instances(spec: EnsembleSpec, max_attempts: int | None = None) -> list[Instance]:
    """Sample ``spec.count`` accepted instances; deterministic in ``spec.seed``."""
    if spec.count <= 0:
        raise ConfigError("ensemble count must be positive")
    if not 0.0 <= spec.hole_probability <= 1.0:
        raise ConfigError("hole_probability must lie in [0, 1]")
    rng = np.random.default_rng(spec.seed)
    max_attempts = max_attempts or 1000 * spec.count
    out: list[Instance] = []
    for _ in range(max_attempts):
        if len(out) == spec.count:
            break
        seed = int(rng.integers(0, 2**31 - 1))
        try:
            g = build_kings_graph(spec.rows, spec.cols, spec.hole_probability, seed)
        except EmptyInstanceError:
            continue
        if not spec.n_min <= g.n <= spec.n_max:
            continue
        if spec.require_connected and not g.is_connected():
            continue
        if spec.hp_window is not None:
            lo, hi = spec.hp_window
            try:
                hp = hardness_traditional(enumerate_independent_sets(g))
            except NoConnectedStatesError:
                continue
            if not lo < hp <= hi:
                continue
        out.append(Instance(len(out), seed, g))
    if len(out) < spec.count:
        raise ConfigError(f"only {len(out)} of {spec.count} instances accepted after {max_attempts} draws")
    return out


# ------------------------------------------------------------------ records


@dataclass
class ExperimentRecord:
    """Both protocols on one graph instance."""

    index: int
    seed: int
    graph: str
    n: int
    m: int
    status: str
    message: str = ""
    family: str = ""
    k_star: int = 0
    a_star: float = math.nan
    a_used: float = math.nan
    # metrics[protocol][str(t_f)]
    metrics: dict[str, dict[str, MetricsRecord]] = field(default_factory=dict)
    timings: dict[str, float] = field(default_factory=dict)
    version: str = __version__

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentRecord":
        d = dict(d)
        d["metrics"] = {
            proto: {tf: MetricsRecord(**m) for tf, m in by_tf.items()}
            for proto, by_tf in d.get("metrics", {}).items()
        }
        return cls(**d)

    def get(self, protocol: str, t_f: float) -> MetricsRecord:
        return self.metrics[protocol][_tf_key(t_f)]


def _tf_key(t_f: float) -> str:
    return f"{float(t_f):g}"


def run_instance(config: ExperimentConfig, inst: Instance) -> ExperimentRecord:
    """Catalog, engineer, blockade check, evolve both protocols, score."""
    g = inst.graph
    rec = ExperimentRecord(inst.index, inst.seed, dumps(g), g.n, g.m, "ok", family=config.family)
    clock = time.perf_counter()
    cat = enumerate_independent_sets(g)
    prof = engineer_detunings(g, config.family, config.delta0, config.safety)
    rec.k_star, rec.a_star, rec.a_used = prof.k_star, prof.a_star, prof.a_used
    model = HamiltonianModel(g, c6=config.c6_value)
    if not check_blockade(prof, model.u_min):
        rec.status = "skipped"
        rec.message = f"blockade check failed: u_min={model.u_min:.3g} <= {0.5 * config.delta0 * prof.f_max:.3g}"
        log.warning("instance %d: %s", inst.index, rec.message)
        return rec
    try:
        spec = final_band_spectrum(cat, prof)
        hp_t = hardness_traditional(cat)
        hp_m = hardness_local_degree(cat, spec, "multiplicity", config.delta0)
        hp_b = hardness_local_degree(cat, spec, "binary", config.delta0)
    except NoConnectedStatesError as exc:
        rec.status, rec.message = "skipped", str(exc)
        return rec
    rec.timings["setup"] = time.perf_counter() - clock

    integ = IntegratorConfig(config.dt, config.method)
    gaps: dict[str, float | None] = {}
    try:
        for proto in PROTOCOLS:
            rec.metrics[proto] = {}
            for tf in config.t_f:
                clock = time.perf_counter()
                sched = PulseSchedule.from_profile(prof, tf * math.pi / config.omega_max, config.omega_max, proto, config.shape)
                psi = evolve(model, sched, integ).state
                p = success_probability(psi, cat)
                rec.metrics[proto][_tf_key(tf)] = MetricsRecord(
                    p_mis=p,
                    r_ratio=approximation_ratio(psi, cat),
                    spm=spm(p),
                    hp_trad=hp_t,
                    hp_ld_multiplicity=hp_m,
                    hp_ld_binary=hp_b,
                )
                rec.timings[f"evolve_{proto}_{_tf_key(tf)}"] = time.perf_counter() - clock
            gaps[proto] = None
            if config.compute_gap:
                # the minimum gap in units of Omega_max does not depend on t_f
                clock = time.perf_counter()
                sched = PulseSchedule.from_profile(prof, max(config.t_f) * math.pi / config.omega_max, config.omega_max, proto, config.shape)
                gr = minimal_gap(model, sched, config.gap_points, manifold=cat.mis_count, space="blockade", masks=cat.all_masks())
                gaps[proto] = gr.delta_min
                rec.timings[f"gap_{proto}"] = time.perf_counter() - clock
    except IntegratorError as exc:
        rec.status, rec.message = "failed", str(exc)
        rec.metrics = {}
        return rec

    for proto in PROTOCOLS:
        for key, m in rec.metrics[proto].items():
            m.delta_min = gaps[proto]
            if proto == "local_degree":
                m.log_error_ratio = log_error_ratio(rec.metrics["traditional"][key].p_mis, m.p_mis)
                m.hp_ratio = hp_ratio(hp_t, hp_m)
    return rec


def _worker_count() -> int:
    raw = os.environ.get(WORKERS_ENV, "").strip()
    if not raw:
        return 1
    try:
        return max(1, int(raw))
    except ValueError:
        raise ConfigError(f"{WORKERS_ENV} must be an integer, got {raw!r}") from None


def _run_one(args: tuple[ExperimentConfig, Instance]) -> ExperimentRecord:
    config, inst = args
    try:
        return run_instance(config, inst)
    except Exception as exc:  # keep the ensemble going; the record carries the error
        log.exception("instance %d failed", inst.index)
        g = inst.graph
        return ExperimentRecord(inst.index, inst.seed, dumps(g), g.n, g.m, "failed", f"{type(exc).__name__}: {exc}")


def run_ensemble(
    config: ExperimentConfig,
    instances: Sequence[Instance] | None = None,
    workers: int | None = None,
) -> list[ExperimentRecord]:
    """Run every instance (optionally in a process pool); records sorted by index."""
    if instances is None:
        instances = generate_instances(config.ensemble)
    if not instances:
        raise ConfigError("no instances to run")
    workers = workers or _worker_count()
    jobs = [(config, inst) for inst in instances]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            records = list(pool.map(_run_one, jobs))
    else:
        records = [_run_one(job) for job in jobs]
    return sorted(records, key=lambda r: r.index)


# ------------------------------------------------------------------ report

CSV_FIELDS = (
    "index", "seed", "n", "m", "status", "protocol", "t_f",
    "p_mis", "r_ratio", "spm", "hp_trad", "hp_ld_multiplicity", "hp_ld_binary",
    "delta_min", "log_error_ratio", "hp_ratio", "family", "k_star", "a_star", "a_used",
)


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, float):
        return repr(v)
    return str(v)


def _csv_rows(records: Iterable[ExperimentRecord]) -> list[dict]:
    rows = []
    for r in records:
        base = {k: getattr(r, k) for k in ("index", "seed", "n", "m", "status", "family", "k_star", "a_star", "a_used")}
        if not r.metrics:
            rows.append({**base, "protocol": "", "t_f": ""})
            continue
        for proto in PROTOCOLS:
            for tf, m in r.metrics.get(proto, {}).items():
                rows.append({**base, "protocol": proto, "t_f": tf, **m.to_dict()})
    return rows


def write_records_csv(records: Sequence[ExperimentRecord], path: str | Path) -> None:
    """One row per instance, protocol and t_f; RFC-4180 quoting, no timings."""
    with open(path, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=CSV_FIELDS, lineterminator="\r\n")
        w.writeheader()
        for row in _csv_rows(records):
            w.writerow({k: _fmt(row.get(k)) for k in CSV_FIELDS})


def write_records_jsonl(records: Sequence[ExperimentRecord], path: str | Path) -> None:
    with open(path, "w") as fh:
        for r in records:
            fh.write(json.dumps(r.to_dict(), sort_keys=True) + "\n")


def read_records_jsonl(path: str | Path) -> list[ExperimentRecord]:
    with open(path) as fh:
        return [ExperimentRecord.from_dict(json.loads(line)) for line in fh if line.strip()]


def _safe(fn, *args):
    try:
        return fn(*args)
    except (ValueError, UndefinedCorrelationError) as exc:
        return {"error": str(exc)}


def _fit_dict(fit) -> dict:
    return fit if isinstance(fit, dict) else asdict(fit)


def _histogram(values: np.ndarray, bins: int = 10) -> dict:
    values = values[np.isfinite(values)]
    if values.size == 0:
        return {"counts": [], "edges": []}
    counts, edges = np.histogram(values, bins=bins)
    return {"counts": counts.tolist(), "edges": edges.tolist()}


def summarize(records: Sequence[ExperimentRecord]) -> dict:
    """Ensemble statistics: per-t_f means, fits, histograms, gap correlations."""
    if not records:
        raise ValueError("empty record set")
    ok = [r for r in records if r.status == "ok" and r.metrics]
    out: dict = {
        "n_records": len(records),
        "n_ok": len(ok),
        "n_skipped": sum(r.status == "skipped" for r in records),
        "n_failed": sum(r.status == "failed" for r in records),
        "by_t_f": {},
    }
    if not ok:
        return out
    keys = list(ok[0].metrics["traditional"])
    hp = {c: np.array([getattr(r.metrics["traditional"][keys[0]], c) for r in ok]) for c in HP_CANDIDATES}
    for key in keys:
        trad = [r.metrics["traditional"][key] for r in ok]
        ld = [r.metrics["local_degree"][key] for r in ok]
        p_t = np.array([m.p_mis for m in trad])
        p_l = np.array([m.p_mis for m in ld])
        s_t = np.array([m.spm for m in trad])
        s_l = np.array([m.spm for m in ld])
        ler = np.array([m.log_error_ratio for m in ld], dtype=np.float64)
        entry = {
            "mean_p_mis": {"traditional": float(p_t.mean()), "local_degree": float(p_l.mean())},
            "mean_one_minus_r": {
                "traditional": float(np.mean([1 - m.r_ratio for m in trad])),
                "local_degree": float(np.mean([1 - m.r_ratio for m in ld])),
            },
            "mean_log_error_ratio": float(ler.mean()),
            "fraction_ld_better": float(np.mean(ler > 0)),
            "fit_traditional": _fit_dict(_safe(fit_power_law, hp["hp_trad"], s_t)),
            "fit_local_degree": _fit_dict(_safe(fit_power_law, hp["hp_ld_multiplicity"], s_l)),
            "fit_spm_ld_vs_trad": _fit_dict(_safe(fit_exponent, s_l, s_t)),
            "histogram_log_error_ratio": _histogram(ler),
            "scatter": {
                "hp_trad": hp["hp_trad"].tolist(),
                "hp_ld_multiplicity": hp["hp_ld_multiplicity"].tolist(),
                "spm_traditional": s_t.tolist(),
                "spm_local_degree": s_l.tolist(),
            },
        }
        out["by_t_f"][key] = entry
    ratio = hp["hp_trad"] / hp["hp_ld_multiplicity"]
    out["hp_ratio"] = {"mean": float(ratio.mean()), "histogram": _histogram(ratio)}

    gap_rows = [r for r in ok if r.metrics["local_degree"][keys[0]].delta_min is not None]
    if len(gap_rows) >= 3:
        out["gap"] = {}
        for proto in PROTOCOLS:
            gap = np.array([r.metrics[proto][keys[0]].delta_min for r in gap_rows])
            cand = {c: [getattr(r.metrics["traditional"][keys[0]], c) for r in gap_rows] for c in HP_CANDIDATES}
            corr = {
                name: {c: _safe(fn, vals, gap) for c, vals in cand.items()}
                for name, fn in CORRELATIONS.items()
            }
            fit = _safe(fit_loglog, cand["hp_ld_multiplicity"], gap)
            out["gap"][proto] = {
                "correlations": corr,
                "fit_gap_vs_hp_ld": _fit_dict(fit),
                "scatter": {"hp_ld_multiplicity": cand["hp_ld_multiplicity"], "delta_min": gap.tolist()},
            }
    return out


def _json_default(o):
    if isinstance(o, (np.floating, np.integer)):
        return o.item()
    raise TypeError(type(o).__name__)


def report(records: Sequence[ExperimentRecord], out_dir: str | Path) -> dict:
    """Write records.csv, records.jsonl, summary.json and fidelity.csv into ``out_dir``."""
    if not records:
        raise ValueError("empty record set")
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    write_records_csv(records, out / "records.csv")
    write_records_jsonl(records, out / "records.jsonl")
    summary = summarize(records)
    (out / "summary.json").write_text(json.dumps(summary, indent=2, sort_keys=True, default=_json_default) + "\n")
    with open(out / "fidelity.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\r\n")
        w.writerow(["t_f", "p_mis_traditional", "p_mis_local_degree", "one_minus_r_traditional", "one_minus_r_local_degree", "mean_log_error_ratio"])
        for key, e in summary["by_t_f"].items():
            w.writerow([key, *(repr(e[k][p]) for k in ("mean_p_mis", "mean_one_minus_r") for p in PROTOCOLS), repr(e["mean_log_error_ratio"])])
    return summary


def run_and_report(config: ExperimentConfig, out_dir: str | Path | None = None) -> tuple[list[ExperimentRecord], dict]:
    out = Path(out_dir or config.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    config.save(out / "config.json")
    records = run_ensemble(config)
    return records, report(records, out)


__all__ = [
    "ConfigError",
    "EnsembleSpec",
    "ExperimentConfig",
    "ExperimentRecord",
    "Instance",
    "generate_instances",
    "read_records_jsonl",
    "report",
    "run_and_report",
    "run_ensemble",
    "run_instance",
    "summarize",
    "write_records_csv",
]
