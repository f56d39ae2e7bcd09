"""Worked models: the stretched circle, the Indian GPA puzzle, and random map pairs."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .algebra import DimensionedWeight, prodd
from .bijectors import Affine, Bijector, GraphEmbed, ScaleDiag, exp, sinh, softplus
from .distributions import (
    Distribution,
    LowerTriangularIID,
    Mixture,
    PointMass,
    StdNormal,
    UniformBox,
    UniformUnitCircle,
)
from .pushforward import TransformedDistribution

ELLIPSE_SCALE = (2.0, 20.0)


def stretched_circle() -> TransformedDistribution:
    """Uniform unit circle scaled by 2 along x and 20 along y."""
    return TransformedDistribution(UniformUnitCircle(), ScaleDiag(ELLIPSE_SCALE))


def ellipse_point(t):
    a, b = ELLIPSE_SCALE
    return np.stack([a * np.cos(t), b * np.sin(t)], axis=-1)


def ellipse_speed(t):
    """``|d/dt ellipse_point(t)|``, the arc-length element of the parameterization."""
    a, b = ELLIPSE_SCALE
    return np.hypot(a * np.sin(t), b * np.cos(t))


def ellipse_density_closed_form(x, y) -> float:
    """Uniform-circle density pushed onto the ellipse, w.r.t. arc length."""
    return 1.0 / (2.0 * math.pi * math.sqrt(y * y / 100.0 + 100.0 * x * x))


def ellipse_integral(log_density, nodes: int = 512) -> float:
    """Gauss-Legendre integral of ``exp(log_density(point))`` over the ellipse by arc length."""
    u, w = np.polynomial.legendre.leggauss(nodes)
    t = math.pi * (u + 1.0)
    points = ellipse_point(t)
    values = np.array([math.exp(log_density(p)) for p in points])
    return float(math.pi * np.sum(w * values * ellipse_speed(t)))


AMERICAN = 0.0
INDIAN = 1.0
GPA_LABELS = {AMERICAN: "American", INDIAN: "Indian"}


def american_gpa() -> Distribution:
    """American GPAs: a tenth of the mass sits exactly at the 4.0 maximum."""
    return Mixture([0.1, 0.9], [PointMass([4.0]), UniformBox([0.0], [4.0])])


def indian_gpa() -> Distribution:
    return UniformBox([0.0], [10.0])


@dataclass
class GPATarget:
    """Posterior over the nationality latent given an observed GPA.

    States are ``[0.0]`` (American) and ``[1.0]`` (Indian); the target is the
    prior mass times the dimensioned likelihood of the observation.
    """

    observed: float = 4.0
    prior_american: float = 0.5

    def __post_init__(self):
        self._likelihood = {AMERICAN: american_gpa(), INDIAN: indian_gpa()}

    def likelihood(self, latent: float) -> DimensionedWeight:
        return self._likelihood[latent].local_measure([self.observed]).weight

    def evaluate(self, x) -> DimensionedWeight:
        latent = float(np.asarray(x).reshape(-1)[0])
        prior = self.prior_american if latent == AMERICAN else 1.0 - self.prior_american
        return prodd(DimensionedWeight.from_weight(0, prior), self.likelihood(latent))


def _random_matrix(rng, n):
    # well-conditioned: identity plus a modest perturbation
    return np.eye(n) + 0.3 * rng.standard_normal((n, n))


def _bump(x):
    return np.array([math.sin(x[0]) + x[1] ** 2])


def _bump_jvp(x, v):
    return np.array([math.cos(x[0]) * v[0] + 2.0 * x[1] * v[1]])


def _sq_norm(x):
    return np.array([float(x @ x)])


def _sq_norm_jvp(x, v):
    return np.array([2.0 * float(x @ v)])


def random_bijector_pairs(rng: np.random.Generator) -> list[tuple[Distribution, Bijector, Bijector]]:
    """Five ``(base, f, g)`` triples covering every tangent variant and dispatch path."""
    return [
        (UniformUnitCircle(), ScaleDiag(rng.uniform(0.5, 3.0, 2)), Affine(_random_matrix(rng, 2), rng.standard_normal(2))),
        (StdNormal(3), exp(3), Affine(_random_matrix(rng, 3), rng.standard_normal(3))),
        (LowerTriangularIID(3), sinh(9), ScaleDiag(rng.uniform(0.5, 3.0, 9) * rng.choice([-1.0, 1.0], 9))),
        (UniformUnitCircle(), Affine(_random_matrix(rng, 2), rng.standard_normal(2)), GraphEmbed(_bump, 2, 1, _bump_jvp)),
        (StdNormal(2), softplus(2), GraphEmbed(_sq_norm, 2, 1, _sq_norm_jvp)),
    ]
