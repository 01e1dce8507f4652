"""Type-belief representation and updates.

The defender summarizes its belief about the opponent's type by a beta
distribution. Observed actions fall into K+1 categories and are scored
with a binomial likelihood, which keeps the posterior in the beta family
with a simple hyperparameter recursion. A nonparametric grid belief
implements the Bayes rule directly and serves as an oracle for the
conjugate shortcut.

The regularized incomplete beta function is evaluated with a modified
Lentz continued fraction. It sits inside the defender's optimization
loop, where adaptive quadrature would be far too slow.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Iterable, Sequence

import numpy as np

# Relative tolerance and iteration cap for the continued fraction.
_CF_TOL = 1e-12
_CF_MAX_ITER = 300
_CF_TINY = 1e-300

# Default node count for the nonparametric grid (10^4 intervals).
GRID_NODES = 10_001


class DegenerateObservationError(ValueError):
    """Observation with zero probability under every type in the belief."""


@dataclass(frozen=True)
class BeliefParams:
    """Beta hyperparameters (alpha, beta), both strictly positive."""

    alpha: float
    beta: float

    def __post_init__(self) -> None:
        object.__setattr__(self, "alpha", float(self.alpha))
        object.__setattr__(self, "beta", float(self.beta))
        if not (self.alpha > 0 and self.beta > 0):
            raise ValueError(f"hyperparameters must be positive, got ({self.alpha}, {self.beta})")

    def mean(self) -> float:
        return self.alpha / (self.alpha + self.beta)

    def strength(self) -> float:
        return self.alpha + self.beta


@dataclass(frozen=True)
class CategoryMap:
    """Partition of attacker actions into categories 0..total.

    Category counts are what the belief update consumes: an action in
    category k is scored as k successes out of `total` trials.
    """

    total: int
    mapping: dict[int, int]

    def __post_init__(self) -> None:
        if int(self.total) != self.total or self.total < 1:
            raise ValueError("category total must be an integer >= 1")
        object.__setattr__(self, "total", int(self.total))
        for action, k in self.mapping.items():
            if int(k) != k or not 0 <= k <= self.total:
                raise ValueError(f"category {k!r} for action {action!r} outside 0..{self.total}")


def category_of(category_map: CategoryMap, action: int) -> int:
    try:
        return category_map.mapping[action]
    except KeyError:
        raise KeyError(f"attacker action {action!r} has no category") from None


def _check_count(k: int, total: int) -> None:
    if int(total) != total or total < 0:
        raise ValueError(f"category total must be a nonnegative integer, got {total!r}")
    if int(k) != k or not 0 <= k <= total:
        raise ValueError(f"category count {k!r} outside 0..{total}")


def binomial_likelihood(k: int, total: int, theta) -> float:
    """Probability of k successes in `total` trials at success rate theta.

    Accepts a scalar or an ndarray of theta values.
    """
    _check_count(k, total)
    k = int(k)
    total = int(total)
    coef = math.comb(total, k)
    return coef * theta**k * (1.0 - theta) ** (total - k)


def update_params(params: BeliefParams, k: int, total: int) -> BeliefParams:
    """Conjugate posterior after observing category k out of `total`."""
    _check_count(k, total)
    return BeliefParams(params.alpha + k, params.beta + total - k)


def beta_pdf(params: BeliefParams, theta: float) -> float:
    """Beta density at theta.

    At the endpoints the finite limit is returned when it exists;
    an unbounded density raises OverflowError.
    """
    a, b = params.alpha, params.beta
    if not 0.0 <= theta <= 1.0:
        raise ValueError(f"theta={theta} outside [0, 1]")
    if theta == 0.0:
        if a < 1.0:
            raise OverflowError("density unbounded at theta=0 for alpha < 1")
        return b if a == 1.0 else 0.0
    if theta == 1.0:
        if b < 1.0:
            raise OverflowError("density unbounded at theta=1 for beta < 1")
        return a if b == 1.0 else 0.0
    log_pdf = (
        (a - 1.0) * math.log(theta)
        + (b - 1.0) * math.log1p(-theta)
        + math.lgamma(a + b)
        - math.lgamma(a)
        - math.lgamma(b)
    )
    return math.exp(log_pdf)


def _betacf(a: float, b: float, x: float) -> float:
    # Modified Lentz evaluation of the continued fraction for I_x(a, b).
    qab = a + b
    qap = a + 1.0
    qam = a - 1.0
    c = 1.0
    d = 1.0 - qab * x / qap
    if abs(d) < _CF_TINY:
        d = _CF_TINY
    d = 1.0 / d
    h = d
    for m in range(1, _CF_MAX_ITER + 1):
        m2 = 2 * m
        aa = m * (b - m) * x / ((qam + m2) * (a + m2))
        d = 1.0 + aa * d
        if abs(d) < _CF_TINY:
            d = _CF_TINY
        c = 1.0 + aa / c
        if abs(c) < _CF_TINY:
            c = _CF_TINY
        d = 1.0 / d
        h *= d * c
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2))
        d = 1.0 + aa * d
        if abs(d) < _CF_TINY:
            d = _CF_TINY
        c = 1.0 + aa / c
        if abs(c) < _CF_TINY:
            c = _CF_TINY
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < _CF_TOL:
            return h
    raise ValueError(f"continued fraction for I_x({a}, {b}) did not converge at x={x}")


def regularized_incomplete_beta(x: float, a: float, b: float) -> float:
    """Regularized incomplete beta function I_x(a, b).

    Uses the continued fraction with the standard symmetry switch at
    x = (a + 1)/(a + b + 2) so the fraction always converges quickly.
    """
    if not (a > 0 and b > 0):
        raise ValueError(f"shape parameters must be positive, got ({a}, {b})")
    if not 0.0 <= x <= 1.0:
        raise ValueError(f"x={x} outside [0, 1]")
    if x == 0.0:
        return 0.0
    if x == 1.0:
        return 1.0
    log_front = (
        math.lgamma(a + b)
        - math.lgamma(a)
        - math.lgamma(b)
        + a * math.log(x)
        + b * math.log1p(-x)
    )
    front = math.exp(log_front)
    if x < (a + 1.0) / (a + b + 2.0):
        return front * _betacf(a, b, x) / a
    return 1.0 - front * _betacf(b, a, 1.0 - x) / b


def partial_moment(params: BeliefParams, threshold: float, order: int) -> float:
    """Tail moment E[theta^order * 1{theta > threshold}] under the belief.

    Only orders 0 and 1 are supported; the threshold is clamped to
    [0, 1] first.
    """
    if order not in (0, 1):
        raise ValueError(f"unsupported moment order {order!r}")
    threshold = min(max(threshold, 0.0), 1.0)
    a, b = params.alpha, params.beta
    if order == 0:
        return 1.0 - regularized_incomplete_beta(threshold, a, b)
    return params.mean() * (1.0 - regularized_incomplete_beta(threshold, a + 1.0, b))


def band_moment(params: BeliefParams, lo: float, hi: float, order: int) -> float:
    """Moment E[theta^order * 1{lo <= theta <= hi}] under the belief."""
    if order not in (0, 1):
        raise ValueError(f"unsupported moment order {order!r}")
    lo = min(max(lo, 0.0), 1.0)
    hi = min(max(hi, 0.0), 1.0)
    if hi <= lo:
        return 0.0
    a, b = params.alpha, params.beta
    if order == 1:
        a, coef = a + 1.0, params.mean()
    else:
        coef = 1.0
    return coef * (
        regularized_incomplete_beta(hi, a, b) - regularized_incomplete_beta(lo, a, b)
    )


@dataclass(frozen=True)
class GridBelief:
    """Nonparametric belief: density values on equispaced nodes over [0, 1].

    The density is stored renormalized so its trapezoid integral is 1.
    Unbounded endpoint densities are represented as 0 at the endpoint
    node; renormalization absorbs the missing sliver of mass.
    """

    thetas: np.ndarray
    density: np.ndarray

    def __post_init__(self) -> None:
        t = np.asarray(self.thetas, dtype=float)
        d = np.asarray(self.density, dtype=float)
        if t.shape != d.shape or t.ndim != 1 or t.size < 2:
            raise ValueError("thetas and density must be matching 1-d arrays")
        if np.any(d < 0):
            raise ValueError("density must be nonnegative")
        norm = np.trapezoid(d, t)
        if not norm > 0 or not np.isfinite(norm):
            raise DegenerateObservationError("belief has no mass on the grid")
        object.__setattr__(self, "thetas", t)
        object.__setattr__(self, "density", d / norm)

    @classmethod
    def from_params(cls, params: BeliefParams, nodes: int = GRID_NODES) -> "GridBelief":
        thetas = np.linspace(0.0, 1.0, nodes)
        a, b = params.alpha, params.beta
        density = np.empty_like(thetas)
        log_pdf = (
            (a - 1.0) * np.log(thetas[1:-1])
            + (b - 1.0) * np.log1p(-thetas[1:-1])
            + math.lgamma(a + b)
            - math.lgamma(a)
            - math.lgamma(b)
        )
        density[1:-1] = np.exp(log_pdf)
        # Endpoint nodes carry the finite limit when it exists and 0 when
        # the density is unbounded there; renormalization absorbs the gap.
        density[0] = b if a == 1.0 else 0.0
        density[-1] = a if b == 1.0 else 0.0
        return cls(thetas, density)

    def mean(self) -> float:
        return float(np.trapezoid(self.thetas * self.density, self.thetas))

    def l1_distance(self, other: "GridBelief") -> float:
        if self.thetas.shape != other.thetas.shape or np.any(self.thetas != other.thetas):
            raise ValueError("grids must share nodes")
        return float(np.trapezoid(np.abs(self.density - other.density), self.thetas))


def nonparametric_update(grid: GridBelief, likelihood: Callable[[np.ndarray], np.ndarray]) -> GridBelief:
    """Bayes rule on the grid: pointwise product with the likelihood.

    The likelihood must be nonnegative on the grid; an observation with
    zero probability under every type raises DegenerateObservationError.
    """
    try:
        values = np.asarray(likelihood(grid.thetas), dtype=float)
        if values.shape != grid.thetas.shape:
            raise TypeError
    except TypeError:
        values = np.array([float(likelihood(t)) for t in grid.thetas])
    if np.any(values < 0):
        raise ValueError("likelihood must be nonnegative on the grid")
    posterior = grid.density * values
    norm = np.trapezoid(posterior, grid.thetas)
    if not norm > 0 or not np.isfinite(norm):
        raise DegenerateObservationError("observation has zero probability under the belief")
    return GridBelief(grid.thetas, posterior)


def replay_updates(prior: BeliefParams, categories: Iterable[int], total: int) -> tuple[BeliefParams, ...]:
    """Belief sequence from a prior and a stream of category observations."""
    out = [prior]
    for k in categories:
        out.append(update_params(out[-1], k, total))
    return tuple(out)
