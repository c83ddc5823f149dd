"""Experiment orchestration: rate sweeps, contraction estimation, reports.

A sweep draws `trials` seeded problem instances, runs every requested
algorithm at every rate until the distance to the optimizer crosses the
precision floor (or diverges, or t_max), estimates each run's contraction
factor, and aggregates mean and 5th/95th percentiles next to the
closed-form bound, the unquantized rate, and the converse. Identical
config + seed gives a byte-identical CSV.

The estimator takes the geometric mean of per-step ratios over the last
half of above-floor iterations: the raw T-th root carries the transient
constant, and the tail half suppresses it. Both values are recorded.
"""

import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import bounds, rng as rngmod
from .engines import (
    agd_iterates,
    build_dq_engine,
    build_nq_engine,
    gd_iterates,
    hb_iterates,
    run_protocol,
)
from .hyperparams import (
    agd_lambda,
    optimal_hyperparams,
    sigma_agd,
    sigma_gd,
    sigma_hb,
)
from .problems import (
    LeastSquares,
    MultiWorkerProblem,
    make_gaussian_ls,
    make_interpolation_problem,
)
from .schedules import RangeSchedule, waterfill_bits

UNQUANTIZED = ("gd", "agd", "hb")
QUANTIZED = ("dq-gd", "dq-agd", "dq-hb", "nq-gd")
DIVERGENCE_SCALE = 1e9


class InsufficientDataError(Exception):
    pass


class TrialError(Exception):
    """Engine/transport failure annotated with the trial that hit it."""

    def __init__(self, trial, cause):
        super().__init__(f"trial {trial}: {cause!r}")
        self.trial = trial


@dataclass
class RunRecord:
    """Per-iteration trace of one run; distances[0] is the start."""

    algo: str
    R: int | None
    floor: float
    distances: list = field(default_factory=list)
    u_norms: list = field(default_factory=list)
    ranges: list = field(default_factory=list)
    bits_per_iteration: list = field(default_factory=list)
    violations: int = 0

    @property
    def terminal_T(self):
        return len(self.distances) - 1

    def above_floor(self):
        d = np.asarray(self.distances)
        return d[d > self.floor]

    def estimate(self, clip=True):
        return estimate_contraction(self, clip)

    def estimate_raw(self):
        return estimate_contraction_raw(self)


def estimate_contraction(record, clip=True):
    """Tail-half geometric-mean per-step ratio, reported clipped at 1."""
    d = record.above_floor()
    if len(d) < 10:
        raise InsufficientDataError(
            f"only {len(d)} iterations above the precision floor"
        )
    T = len(d) - 1
    half = T // 2
    if d[T] == 0.0:
        return 0.0
    est = float((d[T] / d[half]) ** (1.0 / (T - half)))
    return min(est, 1.0) if clip else est


def estimate_contraction_raw(record):
    """Plain T-th root of the terminal relative distance."""
    d = record.above_floor()
    if len(d) < 2 or d[0] == 0.0:
        raise InsufficientDataError("need at least two above-floor iterations")
    T = len(d) - 1
    if d[T] == 0.0:
        return 0.0
    return float((d[T] / d[0]) ** (1.0 / T))


def _make_stop(x_star, floor, ceiling):
    def stop(t, server):
        dist = float(np.linalg.norm(server.x - x_star))
        return not math.isfinite(dist) or dist < floor or dist > ceiling

    return stop


def default_containment(algo, alpha):
    """Strict wherever containment is provable for the schedule.

    The heavy-ball schedule at alpha = 0 (the experimental setting) has no
    containment guarantee, so those runs record violations and let the
    quantizer saturate instead of aborting.
    """
    if algo == "dq-hb" and alpha == 0.0:
        return "record", True
    return "strict", False


def dq_schedule(algo, objective, R, rho=None, alpha=0.0):
    n = objective.n
    rho = bounds.default_rho(n) if rho is None else rho
    kappa = objective.kappa
    base = dict(L=objective.L, D=objective.D, rho=rho, R=R)
    if algo == "dq-gd":
        hp = optimal_hyperparams(objective.L, objective.mu, "gd")
        return RangeSchedule(scheme="dq-gd", sigma=hp.sigma, **base), hp
    if algo == "dq-agd":
        hp = optimal_hyperparams(objective.L, objective.mu, "agd")
        if hp.sigma == 0.0:  # kappa = 1: one-step convergence, no schedule
            raise ValueError("the accelerated schedule is undefined at "
                             "condition number 1; use dq-gd")
        return (
            RangeSchedule(scheme="dq-agd", sigma=hp.sigma, gamma=hp.gamma,
                          lam=agd_lambda(kappa), **base),
            hp,
        )
    if algo == "dq-hb":
        hp = optimal_hyperparams(objective.L, objective.mu, "hb")
        return (
            RangeSchedule(scheme="dq-hb", sigma=hp.sigma, gamma=hp.gamma,
                          alpha=alpha, **base),
            hp,
        )
    raise ValueError(f"not a DQ algorithm: {algo!r}")


def run_unquantized(algo, objective, t_max=10_000, floor_scale=1e-13):
    floor = floor_scale * max(1.0, objective.D)
    ceiling = DIVERGENCE_SCALE * max(1.0, objective.D)
    hp = optimal_hyperparams(objective.L, objective.mu, algo)
    record = RunRecord(algo=algo, R=None, floor=floor)
    record.distances.append(objective.D)
    if algo == "gd":
        it = gd_iterates(objective.grad, objective.x0, hp.eta)
    elif algo == "agd":
        it = (x for x, _ in agd_iterates(objective.grad, objective.x0, hp.eta, hp.gamma))
    elif algo == "hb":
        it = hb_iterates(objective.grad, objective.x0, hp.eta, hp.gamma)
    else:
        raise ValueError(f"unknown unquantized algorithm {algo!r}")
    for _ in range(t_max):
        x = next(it)
        dist = float(np.linalg.norm(x - objective.x_star))
        record.distances.append(dist)
        if not math.isfinite(dist) or dist < floor or dist > ceiling:
            break
    return record


def run_dq(algo, objective, R, t_max=10_000, floor_scale=1e-13, rho=None,
           alpha=0.0, containment=None):
    """One single-worker DQ run over the bit-exact channel."""
    schedule, hp = dq_schedule(algo, objective, R, rho, alpha)
    if containment is None:
        containment, saturate = default_containment(algo, alpha)
    else:
        saturate = containment == "record"
    worker, server, channel = build_dq_engine(
        algo, objective, hp, schedule, R, containment, saturate
    )
    floor = floor_scale * max(1.0, objective.D)
    record = RunRecord(algo=algo, R=R, floor=floor)
    record.distances.append(objective.D)

    def observe(t, srv, workers):
        record.distances.append(float(np.linalg.norm(srv.x - objective.x_star)))
        record.u_norms.append(workers[0].last_u_norm)
        record.ranges.append(workers[0].last_r)
        record.bits_per_iteration.append(channel.trace.uplink_bits[-1])

    run_protocol(
        server, [worker], [channel], t_max,
        on_iteration=observe,
        stop=_make_stop(objective.x_star, floor, DIVERGENCE_SCALE * max(1.0, objective.D)),
    )
    record.violations = len(worker.violations)
    return record


def run_nq(problem, rates, t_max=10_000, floor_scale=1e-13, rho=None,
           containment="strict"):
    """K-worker naive quantization at the given per-worker integer rates."""
    if not isinstance(problem, MultiWorkerProblem):
        problem = MultiWorkerProblem((problem,), problem.x_star, problem.x0)
    n = problem.x0.shape[0]
    rho = bounds.default_rho(n) if rho is None else rho
    sigma_nq = bounds.nq_sigma(problem.L_list, problem.mu, rates, n, rho)
    hp = optimal_hyperparams(problem.L, problem.mu, "gd")
    workers, server, channels = build_nq_engine(
        problem, hp, sigma_nq, rates, containment, saturate=containment == "record"
    )
    floor = floor_scale * max(1.0, problem.D)
    record = RunRecord(algo="nq-gd", R=sum(rates), floor=floor)
    record.distances.append(problem.D)

    def observe(t, srv, ws):
        record.distances.append(float(np.linalg.norm(srv.x - problem.x_star)))
        record.u_norms.append(max(w.last_u_norm for w in ws))
        record.ranges.append(max(w.last_r for w in ws))
        record.bits_per_iteration.append(
            sum(ch.trace.uplink_bits[-1] for ch in channels)
        )

    run_protocol(
        server, workers, channels, t_max,
        on_iteration=observe,
        stop=_make_stop(problem.x_star, floor, DIVERGENCE_SCALE * max(1.0, problem.D)),
    )
    record.violations = sum(len(w.violations) for w in workers)
    return record, channels


# ---------------------------------------------------------------------------
# sweeps


@dataclass(frozen=True)
class ExperimentConfig:
    name: str = "experiment"
    algos: tuple = ("gd", "dq-gd", "nq-gd")
    problem: dict = field(default_factory=lambda: {"kind": "gaussian", "m": 32, "n": 16, "kappa": 5.0})
    rates: tuple = tuple(range(1, 11))
    trials: int = 50
    seed: int = 0
    t_max: int = 10_000
    floor_scale: float = 1e-13
    hb_alpha: float = 0.0
    workers: int = 1
    allocation: str = "uniform"
    csv: str | None = None
    svg: str | None = None
    jobs: int = 1

    def __post_init__(self):
        if self.trials < 1:
            raise ValueError("trials must be >= 1")
        if any(R < 1 for R in self.rates):
            raise ValueError("rates must be >= 1")
        if self.allocation not in ("uniform", "waterfilling"):
            raise ValueError(f"unknown allocation {self.allocation!r}")


@dataclass(frozen=True)
class SweepRow:
    algo: str
    R: int
    emp_mean: float
    emp_p05: float
    emp_p95: float
    bound: float
    unquantized_sigma: float
    converse: float


def _trial_problem(config, trial):
    kind = config.problem["kind"]
    ss = np.random.SeedSequence(entropy=config.seed, spawn_key=(trial,))
    if kind == "gaussian":
        p = config.problem
        _, obj = make_gaussian_ls(p["m"], p["n"], p["kappa"], ss)
        return obj
    if kind == "mtx":
        A = np.asarray(config.problem["matrix"])
        gen = rngmod.make_rng(ss)
        y = rngmod.standard_normal(gen, A.shape[0])
        x0 = rngmod.standard_normal(gen, A.shape[1])
        return LeastSquares(A, y).objective(x0)
    if kind == "interpolation":
        p = config.problem
        return make_interpolation_problem(
            config.workers, p["n"], p["m"], p["kappas"], ss
        )
    raise ValueError(f"unknown problem kind {kind!r}")


def _rates_per_worker(config, R):
    if config.workers == 1:
        return [R]
    if config.allocation == "waterfilling":
        return None  # resolved per trial from the L_k draw
    if R % config.workers:
        raise ValueError("uniform allocation needs workers | R")
    return [R // config.workers] * config.workers


def _run_trial(config, trial):
    """All (algo, R) estimates for one seeded instance; picklable for jobs>1."""
    try:
        return _run_trial_inner(config, trial)
    except TrialError:
        raise
    except Exception as exc:
        raise TrialError(trial, exc) from exc


def _run_trial_inner(config, trial):
    problem = _trial_problem(config, trial)
    single = not isinstance(problem, MultiWorkerProblem)
    obj = problem if single else None
    out = {}
    for algo in config.algos:
        if algo in UNQUANTIZED:
            if not single:
                raise ValueError("unquantized baselines need a single-worker problem")
            rec = run_unquantized(algo, obj, config.t_max, config.floor_scale)
            out[(algo, None)] = estimate_contraction(rec)
            continue
        for R in config.rates:
            if algo == "nq-gd":
                target = problem if not single else obj
                rates = _rates_per_worker(config, R)
                if rates is None:
                    rates = waterfill_bits(
                        target.L_list if not single else [obj.L], R
                    )
                rec, _ = run_nq(target, rates, config.t_max, config.floor_scale)
            else:
                if not single:
                    raise ValueError("DQ engines are single-worker")
                rec = run_dq(algo, obj, R, config.t_max, config.floor_scale,
                             alpha=config.hb_alpha)
            out[(algo, R)] = estimate_contraction(rec)
    return out


def _reference_kappa(config):
    """Condition number the bound columns are evaluated at."""
    kind = config.problem["kind"]
    if kind == "gaussian":
        return float(config.problem["kappa"])
    if kind == "mtx":
        A = np.asarray(config.problem["matrix"])
        s = np.linalg.svd(A, compute_uv=False)
        return float((s[0] / s[-1]) ** 2)
    ks = config.problem["kappas"]
    return float(sum(ks) / len(ks))


def _nq_bound(config, kappa, n, R, rho):
    """Allocation-aware contraction bound for naive quantization."""
    if config.workers == 1:
        return bounds.achievable_rate("nq-gd", kappa, n, R, rho)
    # interpolation problems are built with unit smoothness targets, so
    # the reference constants are L_k = 1, mu_k = 1/kappa_k
    ks = config.problem["kappas"]
    L_list = [1.0] * config.workers
    mu_mean = sum(1.0 / k for k in ks) / len(ks)
    rates = _rates_per_worker(config, R)
    if rates is None:
        rates = waterfill_bits(L_list, R)
    return bounds.nq_sigma(L_list, mu_mean, rates, n, rho)


_CONVERSE_FAMILY = {"gd": "gd", "dq-gd": "gd", "nq-gd": "gd",
                    "agd": "gm", "dq-agd": "gm", "hb": "gm", "dq-hb": "gm"}
_SIGMA_OF = {"gd": sigma_gd, "dq-gd": sigma_gd, "nq-gd": sigma_gd,
             "agd": sigma_agd, "dq-agd": sigma_agd,
             "hb": sigma_hb, "dq-hb": sigma_hb}


def run_sweep(config):
    """Mean and percentile empirical factors per (algo, R), with overlays."""
    if config.jobs > 1:
        with ProcessPoolExecutor(max_workers=config.jobs) as pool:
            trial_results = list(
                pool.map(_run_trial, [config] * config.trials, range(config.trials))
            )
    else:
        trial_results = [_run_trial(config, t) for t in range(config.trials)]

    kappa = _reference_kappa(config)
    n = (config.problem.get("n")
         or np.asarray(config.problem["matrix"]).shape[1])
    rho = bounds.default_rho(n)
    rows = []
    for algo in config.algos:
        for R in config.rates:
            key = (algo, None) if algo in UNQUANTIZED else (algo, R)
            ests = np.array([tr[key] for tr in trial_results])
            sigma_unq = _SIGMA_OF[algo](kappa)
            if algo in UNQUANTIZED:
                bound = sigma_unq
            elif algo == "nq-gd":
                bound = _nq_bound(config, kappa, n, R, rho)
            else:
                bound = bounds.achievable_rate(algo, kappa, n, R, rho)
            rows.append(
                SweepRow(
                    algo=algo,
                    R=R,
                    emp_mean=float(ests.mean()),
                    emp_p05=float(np.percentile(ests, 5)),
                    emp_p95=float(np.percentile(ests, 95)),
                    bound=bound,
                    unquantized_sigma=sigma_unq,
                    converse=bounds.converse_curve(_CONVERSE_FAMILY[algo], kappa, R),
                )
            )
    return rows


# ---------------------------------------------------------------------------
# emission

CSV_HEADER = "algo,R,emp_mean,emp_p05,emp_p95,bound,unquantized_sigma,converse"


def _fmt(v):
    return format(v, ".17g")


def _ensure_parent(path):
    parent = os.path.dirname(os.path.abspath(path))
    os.makedirs(parent, exist_ok=True)


def emit_csv(rows, path):
    if not rows:
        raise ValueError("empty result table")
    _ensure_parent(path)
    lines = [CSV_HEADER]
    for r in rows:
        lines.append(
            ",".join(
                [r.algo, str(r.R), _fmt(r.emp_mean), _fmt(r.emp_p05),
                 _fmt(r.emp_p95), _fmt(r.bound), _fmt(r.unquantized_sigma),
                 _fmt(r.converse)]
            )
        )
    with open(path, "w", encoding="ascii", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


_PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e",
            "#8c564b", "#17becf", "#7f7f7f")


def emit_svg(rows, path, title=""):
    """Contraction factor vs rate, one polyline per series, clipped at 1."""
    if not rows:
        raise ValueError("empty result table")
    _ensure_parent(path)
    width, height = 760, 520
    ml, mr, mt, mb = 60, 200, 40, 50
    rates = sorted({r.R for r in rows})
    rmin, rmax = min(rates), max(rates)

    def sx(R):
        if rmax == rmin:
            return ml + (width - ml - mr) / 2
        return ml + (R - rmin) * (width - ml - mr) / (rmax - rmin)

    def sy(v):
        v = min(v, 1.0)
        return mt + (1.0 - v) * (height - mt - mb)

    series = []
    algos = []
    for r in rows:
        if r.algo not in algos:
            algos.append(r.algo)
    for algo in algos:
        pts = [(r.R, r.emp_mean) for r in rows if r.algo == algo]
        series.append((f"{algo} empirical", pts, "2.5", None))
        if algo in QUANTIZED:
            pts_b = [(r.R, r.bound) for r in rows if r.algo == algo]
            series.append((f"{algo} bound", pts_b, "1.5", "6 3"))
    seen_families = []
    for algo in algos:
        fam = _CONVERSE_FAMILY[algo]
        if fam not in seen_families:
            seen_families.append(fam)
            pts_c = [(r.R, r.converse) for r in rows if r.algo == algo]
            series.append((f"converse ({fam})", pts_c, "1.5", "2 3"))

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}">',
        f'<rect width="{width}" height="{height}" fill="white"/>',
        f'<text x="{ml}" y="24" font-family="sans-serif" font-size="15">{title}</text>',
        f'<line x1="{ml}" y1="{sy(0)}" x2="{width - mr}" y2="{sy(0)}" stroke="black"/>',
        f'<line x1="{ml}" y1="{sy(0)}" x2="{ml}" y2="{mt}" stroke="black"/>',
    ]
    for R in rates:
        parts.append(
            f'<text x="{sx(R):.1f}" y="{height - mb + 20}" font-family="sans-serif" '
            f'font-size="11" text-anchor="middle">{R}</text>'
        )
    for tick in (0.0, 0.25, 0.5, 0.75, 1.0):
        parts.append(
            f'<text x="{ml - 8}" y="{sy(tick):.1f}" font-family="sans-serif" '
            f'font-size="11" text-anchor="end">{tick:g}</text>'
        )
    for i, (label, pts, w, dash) in enumerate(series):
        color = _PALETTE[i % len(_PALETTE)]
        coords = " ".join(f"{sx(R):.2f},{sy(v):.2f}" for R, v in pts)
        dash_attr = f' stroke-dasharray="{dash}"' if dash else ""
        parts.append(
            f'<polyline points="{coords}" fill="none" stroke="{color}" '
            f'stroke-width="{w}"{dash_attr}/>'
        )
        ly = mt + 16 * i
        parts.append(
            f'<line x1="{width - mr + 10}" y1="{ly}" x2="{width - mr + 34}" '
            f'y2="{ly}" stroke="{color}" stroke-width="{w}"{dash_attr}/>'
        )
        parts.append(
            f'<text x="{width - mr + 40}" y="{ly + 4}" font-family="sans-serif" '
            f'font-size="11">{label}</text>'
        )
    parts.append(
        f'<text x="{(ml + width - mr) / 2:.1f}" y="{height - 12}" '
        f'font-family="sans-serif" font-size="12" text-anchor="middle">'
        f"rate R (bits / dimension)</text>"
    )
    parts.append("</svg>")
    with open(path, "w", encoding="ascii", newline="\n") as fh:
        fh.write("\n".join(parts) + "\n")
