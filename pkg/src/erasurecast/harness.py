"""Monte Carlo experiment orchestration.

Trial ``i`` of an experiment runs with seed ``derive_seed(base_seed, i)``; inside
a trial the source, channel and coding generators use
``derive_seed(trial_seed, 0/1/2)``. Output is therefore a pure function of the
configuration, whatever the number of worker processes.
"""

from __future__ import annotations

import csv
import io
import itertools
import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Any, Iterable

import numpy as np

from . import bounds
from .bounds import DemandPair
from .channel import ChannelParams, ChannelSampler, validate_params
from .errors import Infeasible, RuntimeExceeded, ValidationError
from .onesided import run_onesided
from .report import SourceBlock
from .seeding import MASK64, derive_seed, make_rng
from .universal import run_universal

SCHEMA_VERSION = 1
SCHEMES = ("universal", "one-sided")

CSV_COLUMNS = (
    "trial", "scheme", "eps1", "eps2", "eps12", "d1", "d2", "n", "seed",
    "theta", "gamma", "latency1", "latency2", "latency_max",
    "distortion1", "distortion2",
    "phase1_len", "phase2_len", "phase3_len", "phase4_len",
    "unknown_load", "status",
)

METRICS = (
    "latency1", "latency2", "latency_max", "distortion1", "distortion2",
    "phase1_len", "phase2_len", "phase3_len", "phase4_len",
    "phase23_per_symbol", "unknown_load",
)


@dataclass(frozen=True)
class ExperimentConfig:
    scheme: str
    params: ChannelParams
    demands: DemandPair
    n: int
    trials: int
    base_seed: int
    output_format: str = "csv"

    def __post_init__(self) -> None:
        if self.scheme not in SCHEMES:
            raise ValidationError(f"unknown scheme {self.scheme!r}")
        if self.n < 1:
            raise ValidationError("n must be >= 1")
        if self.trials < 1:
            raise ValidationError("trials must be >= 1")
        if self.output_format not in ("csv", "json"):
            raise ValidationError(f"unknown output format {self.output_format!r}")
        validate_params(self.params)

    def to_dict(self) -> dict:
        return {
            "scheme": self.scheme,
            "eps1": self.params.eps1,
            "eps2": self.params.eps2,
            "eps12": self.params.eps12,
            "d1": self.demands.d1,
            "d2": self.demands.d2,
            "n": self.n,
            "trials": self.trials,
            "base_seed": self.base_seed,
        }


@dataclass
class MetricStats:
    mean: float | None
    stddev: float | None
    ci95: float | None
    count: int
    target: float | None = None
    rel_deviation: float | None = None


@dataclass
class AggregateStats:
    metrics: dict[str, MetricStats]
    trials_ok: int
    trials_failed: int
    failures: dict[str, int] = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "trials_ok": self.trials_ok,
            "trials_failed": self.trials_failed,
            "failures": dict(self.failures),
            "metrics": {k: asdict(v) for k, v in self.metrics.items()},
        }


@dataclass
class TrialsResult:
    config: ExperimentConfig
    stats: AggregateStats
    rows: list[dict]

    def to_dict(self) -> dict:
        return {
            "schema_version": SCHEMA_VERSION,
            "config": self.config.to_dict(),
            "aggregate": self.stats.to_dict(),
            "trials": self.rows,
        }


def trial_seed(base_seed: int, index: int) -> int:
    return derive_seed(base_seed & MASK64, index)


def trial_streams(seed: int) -> tuple[np.random.Generator, np.random.Generator, np.random.Generator]:
    """(source, channel, coding) generators of one trial."""
    return tuple(make_rng(derive_seed(seed, k)) for k in range(3))


def run_scheme(
    scheme: str,
    params: ChannelParams,
    demands: DemandPair,
    n: int,
    seed: int,
    *,
    record: bool = False,
    channel=None,
):
    """One seeded run of either scheme; returns ``(report, trace)``."""
    src_rng, ch_rng, code_rng = trial_streams(seed)
    source = SourceBlock.random(n, src_rng)
    if channel is None:
        channel = ChannelSampler(params, ch_rng)
    if scheme == "universal":
        return run_universal(source, params, demands, code_rng, channel=channel, record=record)
    return run_onesided(source, params, demands, code_rng, channel=channel, record=record)


def _row(cfg: ExperimentConfig, index: int) -> dict:
    seed = trial_seed(cfg.base_seed, index)
    p, d = cfg.params, cfg.demands
    row: dict[str, Any] = {
        "trial": index, "scheme": cfg.scheme,
        "eps1": p.eps1, "eps2": p.eps2, "eps12": p.eps12,
        "d1": d.d1, "d2": d.d2, "n": cfg.n, "seed": seed,
    }
    try:
        rep, _ = run_scheme(cfg.scheme, p, d, cfg.n, seed)
    except Infeasible:
        row["status"] = "infeasible"
        return row
    except RuntimeExceeded:
        row["status"] = "runtime_exceeded"
        return row
    phases = tuple(rep.phase_lengths) + (0,) * (4 - len(rep.phase_lengths))
    row.update(
        theta=rep.theta, gamma=rep.gamma,
        latency1=rep.latency1, latency2=rep.latency2, latency_max=rep.latency_max,
        distortion1=rep.distortion1, distortion2=rep.distortion2,
        phase1_len=phases[0], phase2_len=phases[1],
        phase3_len=phases[2], phase4_len=phases[3],
        unknown_load=rep.unknown_load,
        status="ok",
    )
    return row


def _summarize(values: list[float], target: float | None) -> MetricStats:
    k = len(values)
    if k == 0:
        return MetricStats(None, None, None, 0, target, None)
    arr = np.asarray(values, dtype=float)
    mean = float(arr.mean())
    sd = ci = None
    if k > 1:
        sd = float(arr.std(ddof=1))
        ci = 1.96 * sd / math.sqrt(k)
    rel = None
    if target is not None and target != 0:
        rel = abs(mean - target) / abs(target)
    return MetricStats(mean, sd, ci, k, target, rel)


def bound_targets(cfg: ExperimentConfig) -> dict[str, float | None]:
    p, d = cfg.params, cfg.demands
    w1 = bounds.w_star(d.d1, p.eps1)
    w2 = bounds.w_star(d.d2, p.eps2)
    targets: dict[str, float | None] = {
        "latency1": w1,
        "latency2": w2,
        "latency_max": max(w1, w2),
        "distortion1": d.d1,
        "distortion2": d.d2,
    }
    if cfg.scheme == "one-sided" and d.d1 < p.eps1:
        targets["phase23_per_symbol"] = bounds.capacity_c23(p, d.d1)[1]
        try:
            k = bounds.hybrid_coefficients(p, d.d1)
            hp = bounds.select_params(k, max(0.0, p.eps2 - d.d2))
            targets["unknown_load"] = bounds.load_L(k, hp)
        except Infeasible:
            pass
    return targets


def aggregate(cfg: ExperimentConfig, rows: Iterable[dict]) -> AggregateStats:
    rows = list(rows)
    ok = [r for r in rows if r["status"] == "ok"]
    failures: dict[str, int] = {}
    for r in rows:
        if r["status"] != "ok":
            failures[r["status"]] = failures.get(r["status"], 0) + 1
    targets = bound_targets(cfg)
    metrics = {}
    for m in METRICS:
        if m == "phase23_per_symbol":
            vals = [(r["phase2_len"] + r["phase3_len"]) / r["n"] for r in ok]
            if cfg.scheme == "universal":
                vals = []
        else:
            vals = [r[m] for r in ok if r.get(m) is not None]
        metrics[m] = _summarize(vals, targets.get(m))
    return AggregateStats(metrics, len(ok), len(rows) - len(ok), failures)


def run_trials(cfg: ExperimentConfig, workers: int = 1) -> TrialsResult:
    """Run every trial of ``cfg``; raises if no trial succeeds."""
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(_row, itertools.repeat(cfg), range(cfg.trials)))
    else:
        rows = [_row(cfg, i) for i in range(cfg.trials)]
    stats = aggregate(cfg, rows)
    if stats.trials_ok == 0:
        if "infeasible" in stats.failures:
            raise Infeasible("every trial was infeasible")
        raise RuntimeExceeded("every trial exceeded the slot cap")
    return TrialsResult(cfg, stats, rows)


def _fmt(v: Any) -> str:
    if v is None:
        return ""
    if isinstance(v, float):
        return repr(v)
    return str(v)


def write_csv(rows: Iterable[dict], fh, columns=CSV_COLUMNS) -> None:
    fh.write(f"# erasurecast schema_version={SCHEMA_VERSION}\n")
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(columns)
    for r in rows:
        w.writerow([_fmt(r.get(c)) for c in columns])


def render(result: TrialsResult, fmt: str) -> str:
    buf = io.StringIO()
    if fmt == "csv":
        write_csv(result.rows, buf)
    else:
        json.dump(result.to_dict(), buf, indent=2)
        buf.write("\n")
    return buf.getvalue()


def verify_race(params: ChannelParams, runs: int, rng: np.random.Generator) -> dict:
    """Monte Carlo check of the repetition race probability.

    Each run repeats one symbol until user 1 hears it and records whether
    user 2 heard at least one copy.
    """
    if runs < 1:
        raise ValidationError("runs must be >= 1")
    ch = ChannelSampler(params, rng)
    hits = 0
    for _ in range(runs):
        heard2 = False
        while True:
            z1, z2 = ch.next()
            heard2 = heard2 or not z2
            if not z1:
                break
        hits += heard2
    emp = hits / runs
    analytic = bounds.race_probability(params)
    sigma = math.sqrt(analytic * (1.0 - analytic) / runs)
    return {
        "runs": runs,
        "empirical": emp,
        "analytic": analytic,
        "deviation": emp - analytic,
        "sigma": sigma,
        "within_3sigma": abs(emp - analytic) <= 3.0 * sigma,
    }


# -- sweeps -----------------------------------------------------------------

SWEEP_KEYS = ("scheme", "eps1", "eps2", "eps12", "d1", "d2", "n")

SWEEP_COLUMNS = (
    "cell", "scheme", "eps1", "eps2", "eps12", "d1", "d2", "n", "trials", "seed",
    "status", "w1_star", "w2_star", "w_plus",
    "latency1_mean", "latency1_ci95", "latency2_mean", "latency2_ci95",
    "latency_max_mean", "latency_max_ci95", "latency_max_rel_dev",
    "distortion1_mean", "distortion2_mean", "unknown_load_mean", "unknown_load_target",
    "trials_ok", "message",
)


def expand_grid(grid: dict) -> list[dict]:
    """Cells of a sweep config: explicit ``cells`` or the product of list-valued keys."""
    base = {k: v for k, v in grid.items() if k != "cells"}
    if "cells" in grid:
        return [{**base, **cell} for cell in grid["cells"]]
    axes = [k for k in SWEEP_KEYS if isinstance(base.get(k), list)]
    cells = []
    for combo in itertools.product(*(base[k] for k in axes)):
        cells.append({**base, **dict(zip(axes, combo))})
    return cells


def _cell_config(cell: dict) -> ExperimentConfig:
    params = ChannelParams(float(cell["eps1"]), float(cell["eps2"]),
                           None if cell.get("eps12") is None else float(cell["eps12"]))
    return ExperimentConfig(
        scheme=cell.get("scheme", "universal"),
        params=params,
        demands=DemandPair(float(cell["d1"]), float(cell["d2"])),
        n=int(cell.get("n", 10_000)),
        trials=int(cell.get("trials", 200)),
        base_seed=int(cell.get("seed", 0)),
    )


def sweep(grid: dict, workers: int = 1) -> list[dict]:
    """One summary row per cell; failing cells are marked, never fatal."""
    out = []
    for i, cell in enumerate(expand_grid(grid)):
        row: dict[str, Any] = {"cell": i, **{k: cell.get(k) for k in SWEEP_KEYS},
                               "trials": cell.get("trials", 200), "seed": cell.get("seed", 0)}
        try:
            cfg = _cell_config(cell)
            row.update(eps12=cfg.params.eps12, scheme=cfg.scheme, n=cfg.n)
            res = run_trials(cfg, workers=workers)
        except ValidationError as exc:
            row.update(status="invalid", message=str(exc))
            out.append(row)
            continue
        except Infeasible as exc:
            row.update(status="infeasible", message=str(exc))
            out.append(row)
            continue
        except RuntimeExceeded as exc:
            row.update(status="runtime_exceeded", message=str(exc))
            out.append(row)
            continue
        m = res.stats.metrics
        t = bound_targets(cfg)
        row.update(
            status="ok", message="",
            w1_star=t["latency1"], w2_star=t["latency2"], w_plus=t["latency_max"],
            latency1_mean=m["latency1"].mean, latency1_ci95=m["latency1"].ci95,
            latency2_mean=m["latency2"].mean, latency2_ci95=m["latency2"].ci95,
            latency_max_mean=m["latency_max"].mean, latency_max_ci95=m["latency_max"].ci95,
            latency_max_rel_dev=m["latency_max"].rel_deviation,
            distortion1_mean=m["distortion1"].mean, distortion2_mean=m["distortion2"].mean,
            unknown_load_mean=m["unknown_load"].mean, unknown_load_target=t.get("unknown_load"),
            trials_ok=res.stats.trials_ok,
        )
        out.append(row)
    return out


def sweep_config_with(cfg: ExperimentConfig) -> dict:
    """The one-cell sweep grid equivalent to ``cfg``."""
    d = cfg.to_dict()
    d["seed"] = d.pop("base_seed")
    return d

