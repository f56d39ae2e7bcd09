"""Measure-aware SMC resampling and Metropolis-Hastings.

Both algorithms only ever compare or add target densities, so they need the
local dimension of each density but never a tangent basis.  Comparisons are
dimension-major: a lower-dimensional density beats any finite density of
higher dimension.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Protocol

import numpy as np
from scipy.special import logsumexp

from .algebra import DimensionedWeight
from .distributions import Distribution
from .errors import UndefinedComparison, UndefinedResampling

__all__ = [
    "ChainStats",
    "DistributionTarget",
    "FlipProposal",
    "GaussianRandomWalk",
    "Particle",
    "Proposal",
    "Target",
    "mh_chain",
    "mh_step",
    "smc_resample",
]


@dataclass(frozen=True, eq=False)
class Particle:
    state: np.ndarray
    weight: DimensionedWeight


class Target(Protocol):
    def evaluate(self, x) -> DimensionedWeight:
        """Unnormalized dimensioned probability of ``x``."""


class Proposal(Protocol):
    """A proposal kernel ``q(y | x)``.

    ``log_density(y, x)`` and ``log_density(x, y)`` must be taken with respect
    to the same base measure so that their ratio is meaningful, and ``y``
    must lie on a manifold of the same dimension as ``x``.
    """

    def sample(self, x, rng: np.random.Generator) -> np.ndarray:
        ...

    def log_density(self, y, x) -> float:
        ...


class DistributionTarget:
    """Use a distribution's local measure as an MCMC target."""

    def __init__(self, dist: Distribution):
        self.dist = dist

    def evaluate(self, x):
        return self.dist.local_measure(x).weight


class GaussianRandomWalk:
    """``y = x + scale * N(0, I)``; symmetric, density w.r.t. Lebesgue measure."""

    def __init__(self, scale: float = 1.0):
        self.scale = float(scale)

    def sample(self, x, rng):
        x = np.asarray(x, dtype=float).reshape(-1)
        return x + self.scale * rng.standard_normal(x.shape[0])

    def log_density(self, y, x):
        r = (np.asarray(y, dtype=float) - np.asarray(x, dtype=float)).reshape(-1) / self.scale
        return float(-0.5 * (r @ r) - r.shape[0] * (math.log(self.scale) + 0.5 * math.log(2 * math.pi)))


class FlipProposal:
    """Deterministically flip a binary state ``x -> 1 - x`` (counting measure)."""

    def sample(self, x, rng):
        return 1.0 - np.asarray(x, dtype=float).reshape(-1)

    def log_density(self, y, x):
        y = np.asarray(y, dtype=float).reshape(-1)
        x = np.asarray(x, dtype=float).reshape(-1)
        return 0.0 if np.array_equal(y, 1.0 - x) else -math.inf


def smc_resample(
    particles: list[Particle], n: int, rng: np.random.Generator
) -> tuple[list[np.ndarray], DimensionedWeight]:
    """Resample ``n`` states among the particles of minimal weight dimension.

    Particles whose weights have higher dimension carry zero mass relative to
    the minimal ones and are dropped.  Returns the resampled states together
    with the dimensioned self-normalization estimate ``(d, sum of w_j with d_j = d)``.

    Raises:
        UndefinedResampling: if every minimal-dimension weight is zero, or any
            weight is infinite.
    """
    if not particles:
        raise ValueError("need at least one particle")
    if n <= 0:
        raise ValueError(f"n must be positive, got {n}")
    d = min(p.weight.dim for p in particles)
    minimal = [p for p in particles if p.weight.dim == d]
    if all(p.weight.is_zero for p in minimal):
        raise UndefinedResampling(f"all particles of minimal dimension {d} have zero weight")
    if any(p.weight.is_infinite for p in particles if p.weight.dim > d):
        raise UndefinedResampling("a higher-dimensional particle has infinite weight")
    if any(p.weight.is_infinite for p in minimal):
        raise UndefinedResampling(f"a particle of minimal dimension {d} has infinite weight")
    log_w = np.array([p.weight.log_weight for p in minimal])
    log_total = float(logsumexp(log_w))
    probs = np.exp(log_w - log_total)
    picks = rng.choice(len(minimal), size=n, p=probs / probs.sum())
    return [minimal[k].state for k in picks], DimensionedWeight(d, log_total)


def _transition(target, proposal, x, rng):
    x = np.asarray(x, dtype=float).reshape(-1)
    y = np.asarray(proposal.sample(x, rng), dtype=float).reshape(-1)
    px = target.evaluate(x)
    py = target.evaluate(y)

    if py.dim > px.dim:
        if not px.is_zero and not py.is_infinite:
            return y, x, False
        raise UndefinedComparison(f"cannot compare {py} against current {px}")
    if py.dim < px.dim:
        if not py.is_zero and not px.is_infinite:
            return y, y, True
        raise UndefinedComparison(f"cannot compare {py} against current {px}")

    numerator = py.log_weight + proposal.log_density(x, y)
    denominator = px.log_weight + proposal.log_density(y, x)
    if math.isinf(numerator) and numerator == denominator:
        raise UndefinedComparison(f"acceptance ratio is {math.exp(numerator)}/{math.exp(denominator)}")
    # 1 - U is uniform on (0, 1], so its log is always defined
    if math.log1p(-rng.uniform()) < numerator - denominator:
        return y, y, True
    return y, x, False


def mh_step(target: Target, proposal: Proposal, x, rng: np.random.Generator) -> tuple[np.ndarray, bool]:
    """One measure-aware Metropolis-Hastings transition from ``x``.

    Returns the next state and whether the proposal was accepted.

    Raises:
        UndefinedComparison: when the target densities cannot be compared,
            e.g. a zero density at the lower dimension or ``0/0`` at equal
            dimension.
    """
    _, nxt, accepted = _transition(target, proposal, x, rng)
    return nxt, accepted


@dataclass
class ChainStats:
    """Accept/reject tallies keyed by ``(from_state, to_state)`` labels."""

    accepted: dict = field(default_factory=dict)
    proposed: dict = field(default_factory=dict)

    def record(self, key, accepted: bool):
        self.proposed[key] = self.proposed.get(key, 0) + 1
        self.accepted[key] = self.accepted.get(key, 0) + int(accepted)

    def acceptance_rate(self, key) -> float:
        n = self.proposed.get(key, 0)
        return self.accepted.get(key, 0) / n if n else math.nan


def mh_chain(target, proposal, x0, n_steps: int, rng, label=None):
    """Run ``n_steps`` of :func:`mh_step`.

    Returns the ``(n_steps + 1, n)`` array of visited states (including
    ``x0``) and a :class:`ChainStats`.  ``label`` maps a state to a hashable
    name used to key the transition tallies; by default the state tuple.
    """
    label = label or (lambda s: tuple(np.asarray(s).tolist()))
    x = np.asarray(x0, dtype=float).reshape(-1)
    states = np.empty((n_steps + 1, x.shape[0]))
    states[0] = x
    stats = ChainStats()
    for i in range(n_steps):
        y, nxt, accepted = _transition(target, proposal, x, rng)
        stats.record((label(x), label(y)), accepted)
        x = nxt
        states[i + 1] = x
    return states, stats
