"""Distributions that report densities against Hausdorff measure.

Querying a distribution at a point returns a :class:`LocalMeasure`: the log
density with respect to ``H^d`` for the local support dimension ``d``,
together with the tangent space of the support there.  That is all the
information a change of variables or a mixed-dimension comparison needs.

Points on a lower-dimensional support are tested for membership with an
absolute tolerance of :data:`MEMBERSHIP_TOL` (after scaling the defining
constraint to unit gradient), since samples pushed through floating-point
maps land near the manifold rather than exactly on it.
"""

from __future__ import annotations

import abc
import math
from collections.abc import Sequence
from dataclasses import dataclass

import numpy as np
from scipy.special import logsumexp

from .algebra import DimensionedWeight
from .errors import AmbiguousTangent
from .tangent import (
    AxisAlignedTangent,
    FullTangent,
    GeneralTangent,
    TangentSpace,
    ZeroTangent,
    spans_equal,
)

__all__ = [
    "Bernoulli",
    "Distribution",
    "FiniteDiscrete",
    "LocalMeasure",
    "LowerTriangularIID",
    "MEMBERSHIP_TOL",
    "Mixture",
    "PointMass",
    "StdNormal",
    "UniformBox",
    "UniformUnitCircle",
]

MEMBERSHIP_TOL = 1e-9

_LOG_2PI = math.log(2.0 * math.pi)


@dataclass(frozen=True, eq=False)
class LocalMeasure:
    """Local description of a distribution at ``point``.

    Attributes:
        point: the query point in ``R^n``.
        log_density: log density with respect to ``H^d``, ``-inf`` off the support.
        tangent: tangent space of the support; ``d = tangent.dimension()``.
        off_image: set by transformed distributions when ``point`` is not in
            the image of the map at all.
    """

    point: np.ndarray
    log_density: float
    tangent: TangentSpace
    off_image: bool = False

    def __post_init__(self):
        point = np.array(self.point, dtype=float).reshape(-1)
        point.flags.writeable = False
        object.__setattr__(self, "point", point)
        object.__setattr__(self, "log_density", float(self.log_density))
        if self.tangent.ambient_dim != point.shape[0]:
            raise ValueError(
                f"tangent space lives in R^{self.tangent.ambient_dim} but the point is in R^{point.shape[0]}"
            )

    @property
    def dimension(self) -> int:
        return self.tangent.dimension()

    @property
    def on_support(self) -> bool:
        return self.log_density > -math.inf

    @property
    def weight(self) -> DimensionedWeight:
        return DimensionedWeight(self.dimension, self.log_density)


def _point(x, dim: int) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.ndim == 0:
        x = x.reshape(1)
    x = x.reshape(-1)
    if x.shape[0] != dim:
        raise ValueError(f"expected a point in R^{dim}, got shape {x.shape}")
    return x


class Distribution(abc.ABC):
    """A sampler paired with a local-measure query."""

    ambient_dim: int

    @abc.abstractmethod
    def sample(self, rng: np.random.Generator) -> np.ndarray:
        ...

    def sample_n(self, rng: np.random.Generator, n: int) -> np.ndarray:
        """``n`` independent samples stacked as an ``(n, ambient_dim)`` array."""
        out = np.empty((n, self.ambient_dim))
        for i in range(n):
            out[i] = self.sample(rng)
        return out

    @abc.abstractmethod
    def local_measure(self, x) -> LocalMeasure:
        ...

    def log_density(self, x) -> float:
        return self.local_measure(x).log_density


class UniformUnitCircle(Distribution):
    """Uniform distribution on the unit circle in ``R^2``; density ``1/2pi`` w.r.t. arc length."""

    ambient_dim = 2

    def sample(self, rng):
        theta = rng.uniform(0.0, 2.0 * math.pi)
        return np.array([math.cos(theta), math.sin(theta)])

    def sample_n(self, rng, n):
        theta = rng.uniform(0.0, 2.0 * math.pi, size=n)
        return np.column_stack([np.cos(theta), np.sin(theta)])

    def local_measure(self, x):
        x = _point(x, 2)
        direction = np.array([-x[1], x[0]])
        # |r - 1| is the constraint x^2 + y^2 = 1 rescaled to unit gradient
        if abs(math.hypot(x[0], x[1]) - 1.0) <= MEMBERSHIP_TOL:
            return LocalMeasure(x, -_LOG_2PI, GeneralTangent(direction))
        norm = np.linalg.norm(direction)
        placeholder = direction / norm if norm > 0 else np.array([0.0, 1.0])
        return LocalMeasure(x, -math.inf, GeneralTangent(placeholder))

    def __repr__(self):
        return "UniformUnitCircle()"


class FiniteDiscrete(Distribution):
    """Finitely many atoms in ``R^n`` with probabilities summing to one."""

    def __init__(self, atoms, weights):
        atoms = np.array(atoms, dtype=float)
        if atoms.ndim == 1:
            atoms = atoms.reshape(-1, 1)
        weights = np.array(weights, dtype=float).reshape(-1)
        if atoms.ndim != 2 or atoms.shape[0] != weights.shape[0] or atoms.shape[0] == 0:
            raise ValueError("need one weight per atom and at least one atom")
        if not (np.all(weights >= 0) and abs(weights.sum() - 1.0) <= 1e-12):
            raise ValueError(f"weights must be nonnegative and sum to 1, got {weights}")
        self.atoms = atoms
        self.weights = weights
        self.ambient_dim = atoms.shape[1]
        with np.errstate(divide="ignore"):
            self._log_weights = np.log(weights)

    def sample(self, rng):
        return self.atoms[rng.choice(len(self.weights), p=self.weights)].copy()

    def sample_n(self, rng, n):
        return self.atoms[rng.choice(len(self.weights), size=n, p=self.weights)]

    def local_measure(self, x):
        x = _point(x, self.ambient_dim)
        dist = np.linalg.norm(self.atoms - x, axis=1)
        k = int(np.argmin(dist))
        log_density = self._log_weights[k] if dist[k] <= MEMBERSHIP_TOL else -math.inf
        return LocalMeasure(x, log_density, ZeroTangent(self.ambient_dim))

    def __repr__(self):
        return f"FiniteDiscrete(atoms={self.atoms.tolist()}, weights={self.weights.tolist()})"


def Bernoulli(p: float) -> FiniteDiscrete:
    """Bernoulli on ``{0, 1}`` embedded in ``R``."""
    return FiniteDiscrete([[0.0], [1.0]], [1.0 - p, p])


def PointMass(at) -> FiniteDiscrete:
    at = np.asarray(at, dtype=float).reshape(1, -1)
    return FiniteDiscrete(at, [1.0])


class StdNormal(Distribution):
    """Standard normal on all of ``R^n``."""

    def __init__(self, dim: int):
        self.ambient_dim = int(dim)

    def sample(self, rng):
        return rng.standard_normal(self.ambient_dim)

    def sample_n(self, rng, n):
        return rng.standard_normal((n, self.ambient_dim))

    def local_measure(self, x):
        x = _point(x, self.ambient_dim)
        log_density = -0.5 * (self.ambient_dim * _LOG_2PI + float(x @ x))
        return LocalMeasure(x, log_density, FullTangent(self.ambient_dim))

    def __repr__(self):
        return f"StdNormal({self.ambient_dim})"


class UniformBox(Distribution):
    """Uniform on the closed box ``[low, high]`` in ``R^n``."""

    def __init__(self, low, high):
        low = np.atleast_1d(np.asarray(low, dtype=float))
        high = np.atleast_1d(np.asarray(high, dtype=float))
        if low.shape != high.shape or low.ndim != 1:
            raise ValueError("low and high must be vectors of equal length")
        if not (np.all(np.isfinite(low)) and np.all(np.isfinite(high)) and np.all(high > low)):
            raise ValueError("box bounds must be finite with high > low")
        self.low, self.high = low, high
        self.ambient_dim = low.shape[0]
        self._log_density = -float(np.sum(np.log(high - low)))

    def sample(self, rng):
        return rng.uniform(self.low, self.high)

    def sample_n(self, rng, n):
        return rng.uniform(self.low, self.high, size=(n, self.ambient_dim))

    def local_measure(self, x):
        x = _point(x, self.ambient_dim)
        inside = np.all(x >= self.low) and np.all(x <= self.high)
        return LocalMeasure(x, self._log_density if inside else -math.inf, FullTangent(self.ambient_dim))

    def __repr__(self):
        return f"UniformBox({self.low.tolist()}, {self.high.tolist()})"


class LowerTriangularIID(Distribution):
    """Lower-triangular ``k x k`` matrices with i.i.d. entries on and below the diagonal.

    Points are the row-major flattening of the matrix.  The support is a
    coordinate subspace of ``R^(k*k)``, so its tangent space is axis aligned.
    ``base`` is a scalar distribution on ``R`` with full support dimension.
    """

    def __init__(self, k: int, base: Distribution | None = None):
        base = StdNormal(1) if base is None else base
        if base.ambient_dim != 1:
            raise ValueError("base must be a scalar distribution")
        self.k = int(k)
        self.base = base
        self.ambient_dim = self.k * self.k
        self.mask = np.tril(np.ones((self.k, self.k), dtype=bool)).reshape(-1)
        self._tangent = AxisAlignedTangent(self.mask)

    def sample(self, rng):
        out = np.zeros(self.ambient_dim)
        for i in np.flatnonzero(self.mask):
            out[i] = self.base.sample(rng)[0]
        return out

    def local_measure(self, x):
        x = _point(x, self.ambient_dim)
        if np.any(np.abs(x[~self.mask]) > MEMBERSHIP_TOL):
            return LocalMeasure(x, -math.inf, self._tangent)
        log_density = sum(self.base.local_measure(v).log_density for v in x[self.mask])
        return LocalMeasure(x, log_density, self._tangent)

    def __repr__(self):
        return f"LowerTriangularIID({self.k}, {self.base!r})"


class Mixture(Distribution):
    """Finite mixture whose components may live on supports of different dimension.

    At a point, only the components of minimal support dimension contribute;
    their weighted densities are summed.  Higher-dimensional components are
    null with respect to the lower-dimensional Hausdorff measure.  Summing at
    intersections of equal-dimension supports is a convention (the mass there
    is zero), not a derived result.

    Raises:
        AmbiguousTangent: from :meth:`local_measure`, when the contributing
            minimal-dimension components disagree on the tangent space.
    """

    def __init__(self, weights: Sequence[float], components: Sequence[Distribution]):
        weights = np.array(weights, dtype=float).reshape(-1)
        if len(components) == 0 or len(components) != weights.shape[0]:
            raise ValueError("need one weight per component and at least one component")
        if not (np.all(weights >= 0) and abs(weights.sum() - 1.0) <= 1e-12):
            raise ValueError(f"weights must be nonnegative and sum to 1, got {weights}")
        dims = {c.ambient_dim for c in components}
        if len(dims) != 1:
            raise ValueError(f"components live in different ambient spaces: {sorted(dims)}")
        self.weights = weights
        self.components = tuple(components)
        self.ambient_dim = dims.pop()
        with np.errstate(divide="ignore"):
            self._log_weights = np.log(weights)

    def sample(self, rng):
        j = rng.choice(len(self.components), p=self.weights)
        return self.components[j].sample(rng)

    def local_measure(self, x):
        x = _point(x, self.ambient_dim)
        supported = []
        for log_w, component in zip(self._log_weights, self.components):
            lm = component.local_measure(x)
            if log_w + lm.log_density > -math.inf:
                supported.append((log_w + lm.log_density, lm))
        if not supported:
            return LocalMeasure(x, -math.inf, ZeroTangent(self.ambient_dim))
        d_min = min(lm.dimension for _, lm in supported)
        minimal = [(lw, lm) for lw, lm in supported if lm.dimension == d_min]
        tangent = minimal[0][1].tangent
        for _, lm in minimal[1:]:
            if not spans_equal(tangent, lm.tangent):
                raise AmbiguousTangent(f"components of dimension {d_min} meet transversally at {x}")
        return LocalMeasure(x, float(logsumexp([lw for lw, _ in minimal])), tangent)

    def __repr__(self):
        return f"Mixture({self.weights.tolist()}, {list(self.components)!r})"
