"""Distributions pushed forward through bijectors."""

from __future__ import annotations

import math

import numpy as np

from .bijectors import Bijector
from .distributions import MEMBERSHIP_TOL, Distribution, LocalMeasure
from .errors import DegenerateBasis, DomainError, NonFiniteDerivative
from .tangent import AxisAlignedTangent, transport

__all__ = ["TransformedDistribution", "naive_log_density"]


class TransformedDistribution(Distribution):
    """The distribution of ``bijector(x)`` for ``x ~ base``.

    Densities stay with respect to Hausdorff measure of the base support's
    dimension: the base density at the preimage is multiplied by the change
    in local ``d``-volume, and the tangent space is carried along so that
    further transformations can be stacked on top.  Stacking commutes with
    composing the maps first.
    """

    def __init__(self, base: Distribution, bijector: Bijector):
        if base.ambient_dim != bijector.domain_dim:
            raise ValueError(
                f"base lives in R^{base.ambient_dim} but {bijector!r} expects R^{bijector.domain_dim}"
            )
        self.base = base
        self.bijector = bijector
        self.ambient_dim = bijector.codomain_dim

    def sample(self, rng):
        return self.bijector.forward(self.base.sample(rng))

    def sample_n(self, rng, n):
        out = np.empty((n, self.ambient_dim))
        for i, x in enumerate(self.base.sample_n(rng, n)):
            out[i] = self.bijector.forward(x)
        return out

    def preimage(self, x_prime) -> np.ndarray | None:
        """``bijector.inverse(x_prime)``, or ``None`` if ``x_prime`` is off the image.

        Image membership is decided by the round trip
        ``|f(f^-1(x')) - x'| <= MEMBERSHIP_TOL * (1 + |x'|)``.
        """
        x_prime = np.asarray(x_prime, dtype=float).reshape(-1)
        try:
            x = self.bijector.inverse(x_prime)
            round_trip = self.bijector.forward(x)
        except DomainError:
            return None
        if np.linalg.norm(round_trip - x_prime) > MEMBERSHIP_TOL * (1.0 + np.linalg.norm(x_prime)):
            return None
        return x

    def _nowhere(self, x_prime, lm: LocalMeasure | None, off_image: bool) -> LocalMeasure:
        # keep the dimension channel meaningful even when the density is zero
        d = 0 if lm is None else lm.dimension
        tangent = None
        if lm is not None:
            try:
                tangent = transport(self.bijector, lm.point, lm.tangent)[0]
            except (DegenerateBasis, NonFiniteDerivative, DomainError):
                pass
        if tangent is None:
            mask = np.zeros(self.ambient_dim, dtype=bool)
            mask[:d] = True
            tangent = AxisAlignedTangent(mask)
        return LocalMeasure(x_prime, -math.inf, tangent, off_image=off_image)

    def local_measure(self, x_prime):
        x_prime = np.asarray(x_prime, dtype=float).reshape(-1)
        if x_prime.shape[0] != self.ambient_dim:
            raise ValueError(f"expected a point in R^{self.ambient_dim}, got shape {x_prime.shape}")
        x = self.preimage(x_prime)
        if x is None:
            return self._nowhere(x_prime, None, off_image=True)
        lm = self.base.local_measure(x)
        if not lm.on_support:
            return self._nowhere(x_prime, lm, off_image=False)
        tangent, log_correction = transport(self.bijector, x, lm.tangent)
        return LocalMeasure(x_prime, lm.log_density + log_correction, tangent)

    def __repr__(self):
        return f"TransformedDistribution({self.base!r}, {self.bijector!r})"


def naive_log_density(dist: TransformedDistribution, x_prime) -> float:
    """The textbook change-of-variables density ``p(f^-1(x')) / |det J|``.

    This ignores the base measure of the support and is wrong whenever the
    support is not full-dimensional; it exists for comparison only.
    """
    x = dist.preimage(x_prime)
    if x is None:
        return -math.inf
    return dist.base.log_density(x) - dist.bijector.jacobian_logdet(x)
