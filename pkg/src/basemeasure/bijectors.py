"""Invertible smooth maps with forward, inverse and directional derivatives.

Every bijector exposes ``jvp(x, v)``, the directional derivative of the map at
``x`` along ``v``.  ``v`` may be a single vector of shape ``(n,)`` or a stack
of row vectors of shape ``(k, n)``; the result has the matching shape with
``n`` replaced by the codomain dimension.  Tangent bases are pushed through a
map with a single ``jvp`` call on the stacked basis.

Capability flags tell the volume-correction dispatch which shortcuts apply:

* ``is_coordinatewise``: the map acts on each coordinate separately, so the
  Jacobian is diagonal and ``partial_derivative`` / ``diagonal_jacobian`` are
  available.
* ``has_jacobian_logdet``: a square map with a cheap ``log |det J|``.
"""

from __future__ import annotations

import abc
from collections.abc import Callable

import numpy as np
import scipy.linalg

from .errors import DomainError, InvalidBijector, NonFiniteDerivative

__all__ = [
    "Affine",
    "Bijector",
    "Chain",
    "Coordinatewise",
    "FiniteDifference",
    "GraphEmbed",
    "Identity",
    "ScaleDiag",
    "central_difference",
    "exp",
    "fd_jvp",
    "sinh",
    "softplus",
]

# relative singularity threshold shared with tangent bases
SINGULAR_RTOL = 1e-12

_FD_STEP = np.cbrt(np.finfo(float).eps)


def _as_vector(x, dim: int | None = None, name: str = "x") -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.ndim == 0:
        x = x.reshape(1)
    if x.ndim != 1:
        raise ValueError(f"{name} must be a vector, got shape {x.shape}")
    if dim is not None and x.shape[0] != dim:
        raise ValueError(f"{name} must have length {dim}, got {x.shape[0]}")
    return x


def _as_tangents(v, dim: int) -> np.ndarray:
    v = np.asarray(v, dtype=float)
    if v.ndim == 0:
        v = v.reshape(1)
    if v.ndim not in (1, 2) or v.shape[-1] != dim:
        raise ValueError(f"tangent vectors must have trailing dimension {dim}, got shape {v.shape}")
    return v


def row_norms(a: np.ndarray) -> np.ndarray:
    """Euclidean row norms that neither underflow nor overflow."""
    scale = np.max(np.abs(a), axis=1, keepdims=True)
    safe = np.where(scale > 0, scale, 1.0)
    return scale[:, 0] * np.linalg.norm(a / safe, axis=1)


def _relative_log_volume(a: np.ndarray) -> float:
    """``log |det a|`` minus the log of the product of its row norms (<= 0)."""
    norms = row_norms(a)
    if np.any(norms == 0):
        return -np.inf
    _, logabsdet = np.linalg.slogdet(a)
    return float(logabsdet - np.sum(np.log(norms)))


class Bijector(abc.ABC):
    """A diffeomorphism from ``R^domain_dim`` onto its image in ``R^codomain_dim``."""

    domain_dim: int
    codomain_dim: int
    is_coordinatewise: bool = False
    has_jacobian_logdet: bool = False

    @abc.abstractmethod
    def forward(self, x) -> np.ndarray:
        ...

    @abc.abstractmethod
    def inverse(self, y) -> np.ndarray:
        ...

    @abc.abstractmethod
    def jvp(self, x, v) -> np.ndarray:
        ...

    def __call__(self, x) -> np.ndarray:
        return self.forward(x)

    def jacobian_logdet(self, x) -> float:
        """``log |det J(x)|``; only meaningful when ``has_jacobian_logdet``."""
        raise NotImplementedError(f"{type(self).__name__} has no Jacobian log-determinant")

    def partial_derivative(self, x, i: int) -> float:
        """``d f_i / d x_i`` at ``x``; only meaningful when ``is_coordinatewise``."""
        return float(self.diagonal_jacobian(x)[i])

    def diagonal_jacobian(self, x) -> np.ndarray:
        raise NotImplementedError(f"{type(self).__name__} is not coordinatewise")

    def jacobian(self, x) -> np.ndarray:
        """Dense ``codomain_dim x domain_dim`` Jacobian assembled from JVPs."""
        return self.jvp(x, np.eye(self.domain_dim)).T


class Identity(Bijector):
    is_coordinatewise = True
    has_jacobian_logdet = True

    def __init__(self, dim: int):
        self.domain_dim = self.codomain_dim = int(dim)

    def forward(self, x):
        return _as_vector(x, self.domain_dim).copy()

    def inverse(self, y):
        return _as_vector(y, self.codomain_dim, "y").copy()

    def jvp(self, x, v):
        return _as_tangents(v, self.domain_dim).copy()

    def jacobian_logdet(self, x):
        return 0.0

    def diagonal_jacobian(self, x):
        return np.ones(self.domain_dim)

    def __repr__(self):
        return f"Identity({self.domain_dim})"


class ScaleDiag(Bijector):
    """``x -> s * x`` with elementwise nonzero scales."""

    is_coordinatewise = True
    has_jacobian_logdet = True

    def __init__(self, scale):
        scale = _as_vector(scale, name="scale")
        if np.any(scale == 0) or not np.all(np.isfinite(scale)):
            raise InvalidBijector(f"scale entries must be finite and nonzero, got {scale}")
        self.scale = scale
        self.scale.flags.writeable = False
        self.domain_dim = self.codomain_dim = scale.shape[0]
        self._logdet = float(np.sum(np.log(np.abs(scale))))

    def forward(self, x):
        return self.scale * _as_vector(x, self.domain_dim)

    def inverse(self, y):
        return _as_vector(y, self.codomain_dim, "y") / self.scale

    def jvp(self, x, v):
        return _as_tangents(v, self.domain_dim) * self.scale

    def jacobian_logdet(self, x):
        return self._logdet

    def diagonal_jacobian(self, x):
        return self.scale.copy()

    def __repr__(self):
        return f"ScaleDiag({self.scale.tolist()})"


class Affine(Bijector):
    """``x -> A x + b`` for an invertible square ``A``."""

    has_jacobian_logdet = True

    def __init__(self, matrix, shift=None):
        matrix = np.array(matrix, dtype=float, ndmin=2)
        if matrix.ndim != 2 or matrix.shape[0] != matrix.shape[1]:
            raise InvalidBijector(f"matrix must be square, got shape {matrix.shape}")
        if not np.all(np.isfinite(matrix)):
            raise InvalidBijector("matrix entries must be finite")
        n = matrix.shape[0]
        shift = np.zeros(n) if shift is None else _as_vector(shift, n, "shift")
        # scale-aware singularity test: |det A| against the Hadamard bound
        if _relative_log_volume(matrix) < np.log(SINGULAR_RTOL):
            raise InvalidBijector("matrix is singular")
        self.matrix = matrix
        self.shift = shift.copy()
        self.matrix.flags.writeable = False
        self.shift.flags.writeable = False
        self.domain_dim = self.codomain_dim = n
        self._lu = scipy.linalg.lu_factor(matrix)
        self._logdet = float(np.linalg.slogdet(matrix)[1])

    def forward(self, x):
        return self.matrix @ _as_vector(x, self.domain_dim) + self.shift

    def inverse(self, y):
        y = _as_vector(y, self.codomain_dim, "y")
        return scipy.linalg.lu_solve(self._lu, y - self.shift)

    def jvp(self, x, v):
        return _as_tangents(v, self.domain_dim) @ self.matrix.T

    def jacobian_logdet(self, x):
        return self._logdet

    def __repr__(self):
        return f"Affine({self.matrix.tolist()}, {self.shift.tolist()})"


class Coordinatewise(Bijector):
    """A strictly monotone scalar bijection applied to every coordinate.

    Args:
        fn: elementwise forward map.
        inverse_fn: elementwise inverse.
        derivative_fn: elementwise derivative of ``fn``; must not vanish.
        dim: number of coordinates.
        inverse_domain: optional elementwise predicate; ``inverse`` raises
            :class:`DomainError` where it is false.
        name: used in ``repr``.
    """

    is_coordinatewise = True
    has_jacobian_logdet = True

    def __init__(
        self,
        fn: Callable[[np.ndarray], np.ndarray],
        inverse_fn: Callable[[np.ndarray], np.ndarray],
        derivative_fn: Callable[[np.ndarray], np.ndarray],
        dim: int,
        inverse_domain: Callable[[np.ndarray], np.ndarray] | None = None,
        name: str = "g",
    ):
        self.fn = fn
        self.inverse_fn = inverse_fn
        self.derivative_fn = derivative_fn
        self.inverse_domain = inverse_domain
        self.name = name
        self.domain_dim = self.codomain_dim = int(dim)

    def forward(self, x):
        x = _as_vector(x, self.domain_dim)
        with np.errstate(over="ignore", invalid="ignore"):
            y = self.fn(x)
        if not np.all(np.isfinite(y)):
            raise DomainError(f"{self.name} is not finite at {x}")
        return y

    def inverse(self, y):
        y = _as_vector(y, self.codomain_dim, "y")
        if self.inverse_domain is not None and not np.all(self.inverse_domain(y)):
            raise DomainError(f"{y} is outside the image of {self.name}")
        with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
            x = self.inverse_fn(y)
        if not np.all(np.isfinite(x)):
            raise DomainError(f"inverse of {self.name} is not finite at {y}")
        return x

    def diagonal_jacobian(self, x):
        x = _as_vector(x, self.domain_dim)
        with np.errstate(over="ignore"):
            return np.asarray(self.derivative_fn(x), dtype=float)

    def jvp(self, x, v):
        return _as_tangents(v, self.domain_dim) * self.diagonal_jacobian(x)

    def jacobian_logdet(self, x):
        return float(np.sum(np.log(np.abs(self.diagonal_jacobian(x)))))

    def __repr__(self):
        return f"Coordinatewise({self.name}, dim={self.domain_dim})"


def exp(dim: int) -> Coordinatewise:
    return Coordinatewise(np.exp, np.log, np.exp, dim, inverse_domain=lambda y: y > 0, name="exp")


def sinh(dim: int) -> Coordinatewise:
    return Coordinatewise(np.sinh, np.arcsinh, np.cosh, dim, name="sinh")


def _softplus_inverse(y):
    # log(expm1(y)) loses precision for large y; y + log1p(-exp(-y)) does not
    return y + np.log(-np.expm1(-y))


def softplus(dim: int) -> Coordinatewise:
    return Coordinatewise(
        lambda x: np.logaddexp(0.0, x),
        _softplus_inverse,
        lambda x: 0.5 * (1.0 + np.tanh(0.5 * x)),
        dim,
        inverse_domain=lambda y: y > 0,
        name="softplus",
    )


def central_difference(fn: Callable[[np.ndarray], np.ndarray], x, v) -> np.ndarray:
    """Central-difference directional derivative of ``fn`` at ``x`` along ``v``.

    The step is taken along the unit vector ``v / |v|`` with length
    ``cbrt(eps) * (1 + |x|)`` and the result is rescaled by ``|v|``.
    ``v`` may be a stack of row vectors.
    """
    x = _as_vector(x)
    v = _as_tangents(v, x.shape[0])
    if v.ndim == 2:
        rows = [central_difference(fn, x, row) for row in v]
        if rows:
            return np.stack(rows)
        m = np.asarray(fn(x)).reshape(-1).shape[0]
        return np.zeros((0, m))
    norm = np.linalg.norm(v)
    if norm == 0:
        return np.zeros_like(np.asarray(fn(x), dtype=float).reshape(-1))
    u = v / norm
    h = _FD_STEP * (1.0 + np.linalg.norm(x))
    with np.errstate(all="ignore"):
        hi = np.asarray(fn(x + h * u), dtype=float).reshape(-1)
        lo = np.asarray(fn(x - h * u), dtype=float).reshape(-1)
        d = (hi - lo) / (2.0 * h) * norm
    if not np.all(np.isfinite(d)):
        raise NonFiniteDerivative(f"finite difference is not finite at {x} along {v}")
    return d


def fd_jvp(b: Bijector, x, v) -> np.ndarray:
    """Finite-difference JVP of ``b``; the generic fallback for maps without one."""
    return central_difference(b.forward, x, v)


class GraphEmbed(Bijector):
    """Embed ``R^n`` into ``R^(n+k)`` as the graph ``x -> (x, g(x))``.

    The inverse is projection onto the first ``n`` coordinates, which is a
    left inverse on the image.  Without ``g_jvp`` the derivative of ``g`` is
    taken by central differences.
    """

    def __init__(
        self,
        g: Callable[[np.ndarray], np.ndarray],
        dim: int,
        out_dim: int,
        g_jvp: Callable[[np.ndarray, np.ndarray], np.ndarray] | None = None,
    ):
        self.g = g
        self.g_jvp = g_jvp
        self.domain_dim = int(dim)
        self.codomain_dim = int(dim) + int(out_dim)
        self._k = int(out_dim)

    def _g(self, x):
        return np.asarray(self.g(x), dtype=float).reshape(self._k)

    def forward(self, x):
        x = _as_vector(x, self.domain_dim)
        return np.concatenate([x, self._g(x)])

    def inverse(self, y):
        return _as_vector(y, self.codomain_dim, "y")[: self.domain_dim].copy()

    def jvp(self, x, v):
        x = _as_vector(x, self.domain_dim)
        v = _as_tangents(v, self.domain_dim)
        if self.g_jvp is None:
            dg = central_difference(self._g, x, v)
        elif v.ndim == 2:
            dg = np.stack([np.asarray(self.g_jvp(x, row), dtype=float).reshape(self._k) for row in v])
            dg = dg.reshape(v.shape[0], self._k)
        else:
            dg = np.asarray(self.g_jvp(x, v), dtype=float).reshape(self._k)
        return np.concatenate([v, dg], axis=-1)

    def __repr__(self):
        return f"GraphEmbed({getattr(self.g, '__name__', 'g')}, {self.domain_dim} -> {self.codomain_dim})"


class Chain(Bijector):
    """Composition applying ``bijectors`` left to right: ``Chain(f, g) = g o f``."""

    def __init__(self, *bijectors: Bijector):
        if not bijectors:
            raise InvalidBijector("Chain needs at least one bijector")
        for a, b in zip(bijectors, bijectors[1:]):
            if a.codomain_dim != b.domain_dim:
                raise InvalidBijector(
                    f"cannot chain {a!r} (codomain {a.codomain_dim}) into {b!r} (domain {b.domain_dim})"
                )
        self.bijectors = tuple(bijectors)
        self.domain_dim = bijectors[0].domain_dim
        self.codomain_dim = bijectors[-1].codomain_dim
        self.is_coordinatewise = all(b.is_coordinatewise for b in bijectors)
        self.has_jacobian_logdet = all(b.has_jacobian_logdet for b in bijectors)

    def _trace(self, x):
        """Intermediate points: the input of each stage."""
        points = []
        x = _as_vector(x, self.domain_dim)
        for b in self.bijectors:
            points.append(x)
            x = b.forward(x)
        return points, x

    def forward(self, x):
        return self._trace(x)[1]

    def inverse(self, y):
        for b in reversed(self.bijectors):
            y = b.inverse(y)
        return y

    def jvp(self, x, v):
        points, _ = self._trace(x)
        for b, p in zip(self.bijectors, points):
            v = b.jvp(p, v)
        return v

    def jacobian_logdet(self, x):
        points, _ = self._trace(x)
        return float(sum(b.jacobian_logdet(p) for b, p in zip(self.bijectors, points)))

    def diagonal_jacobian(self, x):
        points, _ = self._trace(x)
        diag = np.ones(self.domain_dim)
        for b, p in zip(self.bijectors, points):
            diag = diag * b.diagonal_jacobian(p)
        return diag

    def __repr__(self):
        return "Chain(" + ", ".join(map(repr, self.bijectors)) + ")"


class FiniteDifference(Bijector):
    """Wrap a bijector so its derivatives come only from finite differences.

    All capability flags are dropped, which forces the general volume path.
    """

    def __init__(self, bijector: Bijector):
        self.bijector = bijector
        self.domain_dim = bijector.domain_dim
        self.codomain_dim = bijector.codomain_dim

    def forward(self, x):
        return self.bijector.forward(x)

    def inverse(self, y):
        return self.bijector.inverse(y)

    def jvp(self, x, v):
        return fd_jvp(self.bijector, x, v)

    def __repr__(self):
        return f"FiniteDifference({self.bijector!r})"
