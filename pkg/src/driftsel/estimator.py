"""Penalized model selection over a Pinsker-type shrinkage family.

The pipeline turns one observation path into a curve estimate in three
steps.  First the raw trigonometric coefficients are read off the
increments: averaging phi_j against dy over the whole path reduces,
after folding onto one period, to a single length-p transform.  Second
a high-frequency slice of those coefficients estimates the proxy
variance, the noise level entering the penalty.  Third a finite family
of shrinkage profiles is scanned with the penalized empirical cost and
the minimizer is kept, ties going to the earliest candidate.

Coefficient arrays are indexed like everywhere else in this package:
entry j-1 holds the coefficient of basis function j, and a p-point grid
carries the p-1 estimable frequencies.
"""

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .noise import ObservationPath
from .signal import coefficients_to_grid, grid_coefficients


@dataclass(frozen=True)
class CoefficientEstimates:
    """Raw coefficient estimates for one observation path."""

    n: int
    p: int
    theta: np.ndarray


@dataclass(frozen=True)
class WeightVector:
    """One shrinkage profile, stored as its nonzero prefix."""

    beta: int
    scale: float
    values: np.ndarray

    @property
    def total(self) -> float:
        return float(self.values.sum())

    @property
    def norm_sq(self) -> float:
        return float(np.dot(self.values, self.values))


@dataclass(frozen=True)
class WeightFamily:
    k_star: int
    eps: float
    m: int
    upsilon: float
    members: tuple

    @property
    def size(self) -> int:
        return len(self.members)

    @property
    def max_total(self) -> float:
        """Largest weight sum over the family, the quantity the residual
        term of the oracle inequality scales with."""
        return max(w.total for w in self.members)


@dataclass(frozen=True)
class SelectionResult:
    index: int
    weights: WeightVector
    sigma: float
    delta: float
    costs: np.ndarray
    coefficients: np.ndarray
    n: int
    p: int

    def grid_values(self) -> np.ndarray:
        """Estimate at the p in-period grid points (1/p, 2/p, ..., 1)."""
        padded = np.zeros(self.p)
        padded[: self.p - 1] = self.coefficients
        return coefficients_to_grid(padded)


def estimate_coefficients(obs: ObservationPath) -> CoefficientEstimates:
    """Average each basis function against the observation increments.

    Periodicity folds the n*p increments onto one period before the
    transform, so the cost is one length-p FFT regardless of n.
    """
    if obs.p < 3:
        raise ValueError("need at least 3 observations per period")
    folded = obs.increments.reshape(obs.n, obs.p).sum(axis=0)
    theta = grid_coefficients(folded)[: obs.p - 1] * (obs.p / obs.n)
    return CoefficientEstimates(n=obs.n, p=obs.p, theta=theta)


def estimate_proxy_variance(est: CoefficientEstimates) -> float:
    """Noise-level estimate from the high-frequency coefficients.

    Frequencies from floor(sqrt(n)) up to min(p, n) carry essentially no
    signal, so n times each squared coefficient is an almost unbiased
    read of the proxy variance; the window average is returned, or 0.0
    when the window is empty.
    """
    low = math.isqrt(est.n)
    p_check = min(est.p, est.n)
    high = min(p_check, est.p - 1)
    if low > high:
        return 0.0
    block = est.theta[low - 1 : high]
    return float(est.n / p_check * np.dot(block, block))


def pinsker_weights(beta: int, scale: float, upsilon: float, cap: int) -> WeightVector:
    """Shrinkage profile: flat at 1 below the cutoff 1 + floor(ln upsilon),
    polynomial taper 1 - (j/omega)^beta out to the bandwidth omega, zero
    beyond.  `scale` multiplies the bandwidth; `cap` truncates the support
    so no profile reaches past the estimable frequencies.
    """
    if beta < 1:
        raise ValueError("taper order must be a positive integer")
    if scale <= 0.0 or upsilon <= 1.0:
        raise ValueError("bandwidth scale must be positive and upsilon > 1")
    j_star = 1 + math.floor(math.log(upsilon))
    d_beta = (beta + 1) * (2 * beta + 1) / (math.pi ** (2 * beta) * beta)
    omega = (d_beta * scale * upsilon) ** (1.0 / (2 * beta + 1))
    support = min(cap, max(j_star - 1, math.floor(omega)))
    j = np.arange(1, support + 1, dtype=float)
    lam = np.where(j < j_star, 1.0, np.where(j <= omega, 1.0 - (j / omega) ** beta, 0.0))
    return WeightVector(beta=beta, scale=scale, values=np.trim_zeros(lam, "b"))


def build_weight_family(
    n: int,
    p: int,
    eps: float = None,
    k_star: int = None,
    k_star0: int = 100,
    upsilon: float = None,
    varsigma_star: float = 1.0,
) -> WeightFamily:
    """Construct the full candidate grid: taper orders 1..k_star crossed
    with bandwidth scales eps, 2*eps, ..., floor(1/eps^2)*eps.

    Defaults follow the sample-size driven choices eps = 1/ln n and
    k_star = floor(k_star0 + sqrt(ln n)); upsilon defaults to n divided
    by the variance threshold.
    """
    if eps is None:
        eps = 1.0 / math.log(n)
    if k_star is None:
        k_star = int(k_star0 + math.sqrt(math.log(n)))
    if upsilon is None:
        upsilon = n / varsigma_star
    if not 0.0 < eps < 1.0:
        raise ValueError("eps must lie in (0, 1); increase n or set eps explicitly")
    if k_star < 1:
        raise ValueError("k_star must be at least 1")
    m = int(1.0 / eps**2)
    cap = min(n, p - 1)
    members = tuple(
        pinsker_weights(beta, i * eps, upsilon, cap)
        for beta in range(1, k_star + 1)
        for i in range(1, m + 1)
    )
    family = WeightFamily(k_star=k_star, eps=eps, m=m, upsilon=upsilon, members=members)
    if family.size != k_star * m:
        raise AssertionError("family cardinality must equal k_star * m")
    if family.max_total < 1.0:
        raise ValueError("all candidates shrink below total weight 1; grid too small")
    assert family.max_total <= 1.0 + (upsilon / eps) ** (1.0 / 3.0)
    return family


def penalty(weights: WeightVector, sigma: float, n: int) -> float:
    """Price of replacing the unknown cross term in the empirical error:
    the noise level times the squared norm of the profile, per unit time."""
    return sigma * weights.norm_sq / n


def selection_cost(
    weights: WeightVector, est: CoefficientEstimates, sigma: float, delta: float
) -> float:
    """Penalized empirical squared error of one candidate profile."""
    if not 0.0 < delta <= 1.0 / 6.0:
        warnings.warn(
            "threshold delta outside (0, 1/6]: the oracle inequality is not guaranteed",
            stacklevel=2,
        )
    lam = weights.values
    if lam.size > est.theta.size:
        raise ValueError("weight support exceeds the estimable frequencies")
    th = est.theta[: lam.size]
    tilde = th * th - sigma / est.n
    quad = float(np.dot(lam * lam, th * th))
    linear = float(np.dot(lam, tilde))
    return quad - 2.0 * linear + delta * penalty(weights, sigma, est.n)


def default_delta(n: int) -> float:
    """Penalty threshold used throughout the numerical experiments."""
    return (3.0 + math.log(n)) ** -2.0


def efficient_delta(n: int) -> float:
    """Slower-decaying threshold variant for the efficiency regime."""
    return 1.0 / (6.0 + math.log(n))


def select_model(
    est: CoefficientEstimates, family: WeightFamily, delta: float = None
) -> SelectionResult:
    """Scan the candidate grid and keep the cost minimizer.

    The scan records every cost so the choice can be audited; argmin
    takes the first occurrence, which makes ties deterministic.
    """
    if not family.members:
        raise ValueError("weight family is empty")
    if delta is None:
        delta = default_delta(est.n)
    sigma = estimate_proxy_variance(est)
    costs = np.array([selection_cost(w, est, sigma, delta) for w in family.members])
    index = int(np.argmin(costs))
    best = family.members[index]
    shrunk = np.zeros(est.p - 1)
    shrunk[: best.values.size] = best.values * est.theta[: best.values.size]
    return SelectionResult(
        index=index,
        weights=best,
        sigma=sigma,
        delta=delta,
        costs=costs,
        coefficients=shrunk,
        n=est.n,
        p=est.p,
    )
