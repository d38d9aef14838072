"""Monte Carlo risk evaluation for the model-selection estimator.

One engine run drives everything: each replication draws a fresh path,
runs the full selection pipeline, and scores the chosen estimate on the
in-period grid, while the same path also scores every fixed candidate
through the coefficient-space identity for the discrete norm.  Sharing
paths this way gives common random numbers, so the adaptive risk and
the oracle benchmark are directly comparable.

Determinism contract: replication r always draws from stream r of the
base seed, replications are processed in fixed chunks of 50, and chunk
results are reduced in chunk order.  Thread count changes wall-clock
time only, never a reported digit.
"""

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from time import perf_counter

import numpy as np

from .estimator import (
    build_weight_family,
    default_delta,
    efficient_delta,
    estimate_coefficients,
    select_model,
)
from .noise import NoiseSpec, RngStream, sample_observations
from .renewal import InterarrivalLaw
from .signal import SignalSpec, discrete_norm_sq, grid_coefficients, grid_values

_CHUNK = 50


def _benchmark_noise() -> NoiseSpec:
    return NoiseSpec(rho1=0.5, rho2=0.5, interarrival=InterarrivalLaw.chi_squared(3.0))


@dataclass(frozen=True)
class ExperimentConfig:
    """Full description of one risk experiment.

    `p` fixes the sampling frequency for every n; setting it to None
    switches to the rule p = max(p_min, ceil(n^(5/6))) instead.  The
    estimator knobs default to the sample-size driven choices when left
    at None.
    """

    signal: SignalSpec = field(default_factory=SignalSpec.benchmark)
    noise: NoiseSpec = field(default_factory=_benchmark_noise)
    n_values: tuple = (20, 100, 200, 1000)
    p: int = 100001
    p_min: int = 101
    replications: int = 10000
    base_seed: int = 0
    threads: int = 1
    strict_h5: bool = False
    oracle: bool = True
    eps: float = None
    k_star: int = None
    k_star0: int = 100
    delta: float = None
    delta_variant: str = "auto"
    varsigma_star: float = 1.0

    def __post_init__(self):
        if self.replications < 2:
            raise ValueError("need at least 2 replications for a standard error")
        if self.delta_variant not in ("auto", "efficient"):
            raise ValueError("delta_variant must be 'auto' or 'efficient'")
        if not self.n_values:
            raise ValueError("n_values is empty")


@dataclass(frozen=True)
class RiskRow:
    n: int
    p: int
    replications: int
    risk: float
    risk_se: float
    relative: float
    oracle: float
    seconds: float


@dataclass(frozen=True)
class RiskReport:
    rows: tuple

    def row_for(self, n: int) -> RiskRow:
        for row in self.rows:
            if row.n == n:
                return row
        raise KeyError(f"no row for n={n}")


def satisfies_h5(n: int, p: int) -> bool:
    """Sampling-frequency condition p >= n^(5/6)."""
    return p >= n ** (5.0 / 6.0)


def resolve_frequency(config: ExperimentConfig, n: int) -> int:
    if config.p is not None:
        p = config.p
    else:
        p = max(config.p_min, math.ceil(n ** (5.0 / 6.0)))
    if config.strict_h5 and not satisfies_h5(n, p):
        raise ValueError(f"p={p} violates the frequency condition for n={n}")
    return p


def resolve_delta(config: ExperimentConfig, n: int) -> float:
    if config.delta is not None:
        return config.delta
    if config.delta_variant == "efficient":
        return efficient_delta(n)
    return default_delta(n)


def pinsker_constant(k: int, r: float) -> float:
    """Sharp asymptotic risk constant for k-smooth signals of size r."""
    if k < 1 or int(k) != k:
        raise ValueError("smoothness order must be a positive integer")
    if r <= 0.0:
        raise ValueError("radius must be positive")
    return ((2 * k + 1) * r) ** (1.0 / (2 * k + 1)) * (k / ((k + 1) * math.pi)) ** (
        2.0 * k / (2 * k + 1)
    )


def relative_risk(risk: float, signal, p: int) -> float:
    """Risk divided by the discrete squared norm of the signal."""
    norm_sq = discrete_norm_sq(grid_values(signal, p))
    if norm_sq <= 0.0:
        raise ValueError("signal has zero discrete norm")
    return risk / norm_sq


def _candidate_tail_sums(theta_grid: np.ndarray, p: int) -> np.ndarray:
    """suffix[m] = squared-norm contribution of coordinates above m.

    The grid norm weights the last coefficient by 1/2 on even grids, so
    the same suffix array serves both parities exactly.
    """
    sq = theta_grid * theta_grid
    tail = sq[p - 1] if p % 2 else 0.5 * sq[p - 1]
    suffix = np.empty(p)
    suffix[p - 1] = tail
    suffix[: p - 1] = np.cumsum(sq[: p - 1][::-1])[::-1] + tail
    return suffix


def _run_chunk(payload):
    (signal, noise, n, p, family, delta, base_seed, start, stop, oracle, estimator) = payload
    s_grid = grid_values(signal, p)
    theta_grid = grid_coefficients(s_grid)
    suffix = _candidate_tail_sums(theta_grid, p)
    selected = np.empty(stop - start)
    cand_sum = np.zeros(family.size) if oracle else None
    for r in range(start, stop):
        obs = sample_observations(signal, noise, n=n, p=p, rng=RngStream(base_seed, r))
        est = estimate_coefficients(obs)
        if estimator is None:
            fitted = select_model(est, family, delta).grid_values()
        else:
            fitted = estimator(obs, est)
        diff = fitted - s_grid
        selected[r - start] = np.dot(diff, diff) / p
        if oracle:
            for k, w in enumerate(family.members):
                m = w.values.size
                d = w.values * est.theta[:m] - theta_grid[:m]
                cand_sum[k] += np.dot(d, d) + suffix[m]
    return selected, cand_sum


def run_risk_experiment(config: ExperimentConfig, estimator=None) -> RiskReport:
    """Evaluate the selection procedure for every requested n.

    `estimator` is a test hook: a callable (obs, est) -> grid values
    replacing the selection step.  Injected estimators run inline, so
    they do not need to be picklable.
    """
    rows = []
    for n in config.n_values:
        t0 = perf_counter()
        p = resolve_frequency(config, n)
        family = build_weight_family(
            n,
            p,
            eps=config.eps,
            k_star=config.k_star,
            k_star0=config.k_star0,
            varsigma_star=config.varsigma_star,
        )
        delta = resolve_delta(config, n)
        total = config.replications
        payloads = [
            (
                config.signal,
                config.noise,
                n,
                p,
                family,
                delta,
                config.base_seed,
                start,
                min(start + _CHUNK, total),
                config.oracle,
                estimator,
            )
            for start in range(0, total, _CHUNK)
        ]
        if config.threads > 1 and estimator is None:
            with ProcessPoolExecutor(max_workers=config.threads) as pool:
                results = list(pool.map(_run_chunk, payloads))
        else:
            results = [_run_chunk(pay) for pay in payloads]
        selected = np.concatenate([sel for sel, _ in results])
        risk = float(selected.mean())
        risk_se = float(selected.std(ddof=1) / math.sqrt(total))
        if config.oracle:
            cand_total = np.zeros(family.size)
            for _, cand in results:
                cand_total += cand
            oracle_val = float(cand_total.min() / total)
        else:
            oracle_val = math.nan
        rows.append(
            RiskRow(
                n=n,
                p=p,
                replications=total,
                risk=risk,
                risk_se=risk_se,
                relative=relative_risk(risk, config.signal, p),
                oracle=oracle_val,
                seconds=perf_counter() - t0,
            )
        )
    return RiskReport(rows=tuple(rows))


def empirical_risk(config: ExperimentConfig) -> dict:
    """Adaptive-estimator risk per n (one full engine run)."""
    report = run_risk_experiment(replace(config, oracle=False))
    return {row.n: row.risk for row in report.rows}


def oracle_risk(config: ExperimentConfig) -> dict:
    """Best fixed-candidate risk per n, on the same replication streams
    the adaptive risk consumes."""
    report = run_risk_experiment(config)
    return {row.n: row.oracle for row in report.rows}
