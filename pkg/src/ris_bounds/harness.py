"""Monte-Carlo experiment runner.

Each drop gets its own seed derived from the master seed and the drop
index, so results do not depend on execution order or on the number of
worker processes. Within a drop, channel synthesis and every randomized
method draw from separate child streams of the drop seed.
"""

import csv
import math
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from functools import partial

import numpy as np

from .channel import assemble_global, synth_channels
from .config import METHODS, PURE_LOS, ScenarioConfig
from .errors import BoundViolation, ValidationError
from .optim import (
    ao_optimize,
    lower_bound_phases,
    numerical_baseline,
    quantize_phases,
    random_phases,
    upper_bound,
)
from .separation import expand_quadratic, separate, sum_rate_direct

OUT_DIR_ENV = "RIS_BOUNDS_OUT"
CSV_HEADER = ("drop", "method", "sum_rate_bits", "wall_time_s", "sweeps", "seed")
SANDWICH_TOL = 1e-9


def default_out_dir():
    return os.environ.get(OUT_DIR_ENV, "results")


@dataclass(frozen=True)
class ExperimentRecord:
    drop: int
    method: str
    sum_rate_bits: float
    wall_time_s: float
    sweeps: int | None
    seed: int
    trace: tuple | None = None  # AO objective per sweep; not part of the CSV


def drop_seed(master, drop):
    """64-bit seed for one drop, a pure function of ``(master, drop)``."""
    ss = np.random.SeedSequence(entropy=master, spawn_key=(drop,))
    return int(ss.generate_state(1, np.uint64)[0])


def _stream(seed, slot):
    return np.random.default_rng(np.random.SeedSequence(entropy=seed, spawn_key=(slot,)))


def drop_channels(config, drop):
    """``(seed, ChannelSet)`` for one drop, exactly as :func:`run_drop` sees it."""
    seed = drop_seed(config.seed, drop)
    return seed, synth_channels(_stream(seed, 0), config)


def run_drop(config, drop, timing=False):
    """Evaluate every configured method on one drop.

    Returns the records in ``config.methods`` order. Rates of achievable
    designs are evaluated on the true channel; ``upper_bound`` is the bound
    itself.

    Raises
    ------
    BoundViolation
        On a pure-LOS drop whose achievable rate exceeds the upper bound.
    """
    seed, ch = drop_channels(config, drop)
    sep = separate(ch)
    qf = expand_quadratic(sep)
    clock = time.perf_counter if timing else (lambda: math.nan)

    def rate(x):
        return sum_rate_direct(assemble_global(ch, x))

    out = {}
    lb_cache = {}

    def lower_bound():
        if "x" not in lb_cache:
            lb_cache["x"] = lower_bound_phases(sep)
        return lb_cache["x"]

    for method in config.methods:
        # each method has a fixed stream slot, independent of which others run
        rng = _stream(seed, 1 + METHODS.index(method))
        t0 = clock()
        sweeps, trace = None, None
        if method == "random":
            value = rate(random_phases(rng, sep.n_ris))
        elif method == "lower_bound":
            value = rate(lower_bound())
        elif method == "lower_bound_qb":
            value = rate(quantize_phases(lower_bound(), config.quant_bits))
        elif method == "ao":
            x, tr = ao_optimize(sep, config.ao_epsilon, config.ao_max_sweeps, form=qf)
            value, sweeps, trace = rate(x), tr.sweeps, tuple(tr.objectives.tolist())
        elif method == "numerical":
            x = numerical_baseline(sep, config.numerical_restarts, config.numerical_steps, rng)
            value = rate(x)
        else:
            value = upper_bound(sep, form=qf)
        out[method] = ExperimentRecord(drop, method, float(value), clock() - t0, sweeps, seed, trace)

    if ch.pure_los:
        ub = out["upper_bound"].sum_rate_bits if "upper_bound" in out else upper_bound(sep, form=qf)
        for rec in out.values():
            if rec.method != "upper_bound" and rec.sum_rate_bits > ub + SANDWICH_TOL * max(1.0, ub):
                raise BoundViolation(
                    f"drop {drop} (seed {seed}): {rec.method} rate {rec.sum_rate_bits:.12g} "
                    f"exceeds upper bound {ub:.12g}")
    return [out[m] for m in config.methods]


def _run_drops(config, drops, workers, timing):
    work = partial(run_drop, config, timing=timing)
    if workers <= 1:
        return [work(d) for d in drops]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(work, drops, chunksize=max(1, len(drops) // (4 * workers))))


@dataclass(frozen=True)
class MethodSummary:
    mean: float
    stderr: float
    count: int


def summarize(records):
    """Per-method mean and standard error of the sum-rate, in first-seen order."""
    groups = {}
    for rec in records:
        groups.setdefault(rec.method, []).append(rec.sum_rate_bits)
    out = {}
    for method, vals in groups.items():
        v = np.asarray(vals)
        se = float(v.std(ddof=1) / np.sqrt(v.size)) if v.size > 1 else math.nan
        out[method] = MethodSummary(float(v.mean()), se, int(v.size))
    return out


def run_experiment(config, workers=1, timing=False):
    """Run ``config.trials`` drops; return ``(records, summary)``.

    Records are drop-major, in ``config.methods`` order within a drop.
    """
    if not isinstance(config, ScenarioConfig):
        raise ValidationError("config must be a ScenarioConfig")
    config.validate()
    if workers < 1:
        raise ValidationError("workers must be >= 1")
    per_drop = _run_drops(config, list(range(config.trials)), workers, timing)
    records = [rec for recs in per_drop for rec in recs]
    return records, summarize(records)


# --- CSV output --------------------------------------------------------------

def format_number(value):
    """Fixed 9-significant-digit positional decimal; ``nan`` for missing."""
    if value is None:
        return ""
    if isinstance(value, (int, np.integer)):
        return str(value)
    if not math.isfinite(value):
        return "nan" if math.isnan(value) else ("inf" if value > 0 else "-inf")
    text = np.format_float_positional(value, precision=9, unique=False, fractional=False, trim="k")
    return text.rstrip(".")


def _write_rows(path, header, rows):
    try:
        parent = os.path.dirname(os.fspath(path))
        if parent:
            os.makedirs(parent, exist_ok=True)
        with open(path, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(header)
            writer.writerows(rows)
    except OSError as exc:
        raise OSError(f"cannot write CSV {path}: {exc}") from exc


def emit_csv(records, path):
    """Write records as ``drop,method,sum_rate_bits,wall_time_s,sweeps,seed``."""
    rows = ([r.drop, r.method, format_number(r.sum_rate_bits), format_number(r.wall_time_s),
             format_number(r.sweeps), r.seed] for r in records)
    _write_rows(path, CSV_HEADER, rows)


SUMMARY_HEADER = ("n_ris", "users", "kappa_br", "method", "mean_bits", "stderr_bits", "drops")


def emit_summary_csv(points, path):
    """Write ``(config, summary)`` pairs as one row per (point, method)."""
    rows = []
    for cfg, summary in points:
        for method, s in summary.items():
            rows.append([cfg.n_ris, cfg.users, format_number(cfg.kappa_br), method,
                         format_number(s.mean), format_number(s.stderr), s.count])
    _write_rows(path, SUMMARY_HEADER, rows)


def emit_trace_csv(rows, path):
    """AO objective per sweep, one row per drop.

    ``rows`` holds ``(config, record)`` pairs for AO records. Traces that
    stopped early are padded by holding their final value.
    """
    width = max((len(rec.trace) for _, rec in rows), default=1)
    header = ["n_ris", "users", "drop", "seed", "sweeps"] + [f"obj_{i}" for i in range(width)]
    body = []
    for cfg, rec in rows:
        tr = list(rec.trace) + [rec.trace[-1]] * (width - len(rec.trace))
        body.append([cfg.n_ris, cfg.users, rec.drop, rec.seed, rec.sweeps] + [format_number(v) for v in tr])
    _write_rows(path, header, body)


# --- figure sweeps -----------------------------------------------------------

FIG2_N = (16, 36, 64, 100, 144)
FIG2_K = (2, 5)
FIG3_N = (64, 144)
FIG3_K = (2, 3, 4, 5, 6)
FIG3_KAPPA_BR = (PURE_LOS, 1.0)
FIG4_N = (100, 121, 144)
FIG4_K = (2, 4)


def fig2_points(base, n_values=FIG2_N, k_values=FIG2_K):
    base = base.replace(kappa_d=1.0, kappa_ru=1.0, kappa_br=PURE_LOS)
    return [base.with_sizes(n_ris=n, users=k) for k in k_values for n in n_values]


def fig3_points(base, n_values=FIG3_N, k_values=FIG3_K, kappas=FIG3_KAPPA_BR):
    return [base.replace(kappa_br=kb).with_sizes(n_ris=n, users=k)
            for kb in kappas for n in n_values for k in k_values]


def fig4_points(base, n_values=FIG4_N, k_values=FIG4_K):
    base = base.replace(methods=("ao",))
    return [base.with_sizes(n_ris=n, users=k) for k in k_values for n in n_values]


def run_sweep(points, workers=1, timing=False, progress=None):
    """Run each point config; return ``[(config, records, summary)]``."""
    out = []
    for cfg in points:
        records, summary = run_experiment(cfg, workers=workers, timing=timing)
        out.append((cfg, records, summary))
        if progress is not None:
            progress(cfg, summary)
    return out


# --- reference-power calibration ---------------------------------------------

CALIBRATION_BASE = ScenarioConfig().replace(
    kappa_d=0.0, kappa_ru=0.0, kappa_br=PURE_LOS, users=1, methods=("random",)
).with_sizes(n_ris=100, n_bs=64)


def mean_channel_power_db(config, trials, seed=0):
    """Mean per-user, per-antenna power of ``H_d + H_br H_ru`` (RIS phases all zero), dB."""
    total = 0.0
    for drop in range(trials):
        _, ch = drop_channels(config.replace(seed=seed), drop)
        h = assemble_global(ch, np.ones(ch.shape[1]))
        total += float(np.sum(np.abs(h) ** 2)) / (h.shape[0] * h.shape[1])
    return 10.0 * np.log10(total / trials)


def calibrate_reference_power(config=None, target_db=0.0, trials=200, lo=-50.0, hi=150.0,
                              tol_db=0.1, seed=0):
    """Reference power P (dB) giving mean per-user channel power ``target_db``.

    Bisection on P with common random numbers across evaluations, so the
    Monte-Carlo estimate is a deterministic increasing function of P.

    Raises
    ------
    ValidationError
        If ``[lo, hi]`` does not bracket the target.
    """
    config = CALIBRATION_BASE if config is None else config
    if trials < 1:
        raise ValidationError("trials must be >= 1")

    def excess(p):
        return mean_channel_power_db(config.replace(reference_power_db=p), trials, seed) - target_db

    f_lo, f_hi = excess(lo), excess(hi)
    if f_lo > 0 or f_hi < 0:
        raise ValidationError(
            f"P range [{lo}, {hi}] dB does not bracket target {target_db} dB "
            f"(powers {f_lo + target_db:.3f}, {f_hi + target_db:.3f} dB)")
    while hi - lo > 1e-3:
        mid = 0.5 * (lo + hi)
        f_mid = excess(mid)
        if abs(f_mid) <= 0.1 * tol_db:
            return mid
        if f_mid < 0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)
