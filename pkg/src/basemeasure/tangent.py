"""Tangent spaces of support manifolds and the volume correction under a map.

A distribution supported on a ``d``-dimensional manifold ``M`` in ``R^n`` has,
at each point, a tangent space spanned by ``d`` vectors (the rows of a
``d x n`` matrix ``V``).  Pushing the distribution through a diffeomorphism
``f`` multiplies its density by::

    sqrt(det(V V^T)) / sqrt(det(V' V'^T)),    V' = rows of df(x)[v_i]

Everything here works with the log of that factor.  Four tangent-space
variants let :func:`transport` skip the linear algebra where it is not
needed; unknown :class:`TangentSpace` subclasses fall back to the Gram
computation on their explicit ``basis()``.
"""

from __future__ import annotations

import abc
import functools
import math
from dataclasses import dataclass, field

import numpy as np

from .bijectors import SINGULAR_RTOL, Bijector, row_norms
from .errors import DegenerateBasis, NonFiniteDerivative

__all__ = [
    "AxisAlignedTangent",
    "FullTangent",
    "GeneralTangent",
    "TangentSpace",
    "ZeroTangent",
    "general_volume_correction",
    "gram_log_volume",
    "pushforward_tangent",
    "spans_equal",
    "transport",
    "volume_correction",
]

_LOG_SINGULAR_RTOL = math.log(SINGULAR_RTOL)


class TangentSpace(abc.ABC):
    ambient_dim: int

    @abc.abstractmethod
    def dimension(self) -> int:
        ...

    @abc.abstractmethod
    def basis(self) -> np.ndarray:
        """Basis as a ``dimension() x ambient_dim`` array, one vector per row."""


@dataclass(frozen=True)
class ZeroTangent(TangentSpace):
    """Tangent space of a discrete support."""

    ambient_dim: int

    def dimension(self) -> int:
        return 0

    def basis(self) -> np.ndarray:
        return np.zeros((0, self.ambient_dim))


@dataclass(frozen=True)
class FullTangent(TangentSpace):
    """Tangent space of a full-dimensional support: all of ``R^n``."""

    ambient_dim: int

    def dimension(self) -> int:
        return self.ambient_dim

    def basis(self) -> np.ndarray:
        return np.eye(self.ambient_dim)


@dataclass(frozen=True, eq=False)
class AxisAlignedTangent(TangentSpace):
    """Span of the standard basis vectors selected by ``mask``."""

    mask: np.ndarray
    ambient_dim: int = field(init=False)

    def __post_init__(self):
        mask = np.array(self.mask, dtype=bool).reshape(-1)
        mask.flags.writeable = False
        object.__setattr__(self, "mask", mask)
        object.__setattr__(self, "ambient_dim", mask.shape[0])

    def dimension(self) -> int:
        return int(np.count_nonzero(self.mask))

    def basis(self) -> np.ndarray:
        return np.eye(self.ambient_dim)[self.mask]

    def __eq__(self, other):
        return isinstance(other, AxisAlignedTangent) and np.array_equal(self.mask, other.mask)

    def __hash__(self):
        return hash(self.mask.tobytes())

    def __repr__(self):
        return f"AxisAlignedTangent(mask={self.mask.astype(int).tolist()})"


def _log_volume(basis: np.ndarray) -> float:
    """``log sqrt(det(V V^T))`` via the R factor of ``V^T``."""
    if basis.shape[0] == 0:
        return 0.0
    r = np.linalg.qr(basis.T, mode="r")
    with np.errstate(divide="ignore"):
        return float(np.sum(np.log(np.abs(np.diag(r)))))


@dataclass(frozen=True, eq=False)
class GeneralTangent(TangentSpace):
    """Span of the (unnormalized, linearly independent) rows of ``basis``.

    Raises:
        DegenerateBasis: when ``sqrt(det(V V^T))`` is below ``1e-12`` times
            the product of the row norms.
    """

    basis_rows: np.ndarray
    ambient_dim: int = field(init=False)
    log_volume: float = field(init=False, repr=False)

    def __post_init__(self):
        rows = np.array(self.basis_rows, dtype=float)
        if rows.ndim == 1:
            rows = rows.reshape(1, -1)
        if rows.ndim != 2:
            raise ValueError(f"basis must be a d x n matrix, got shape {rows.shape}")
        d, n = rows.shape
        if not np.all(np.isfinite(rows)):
            raise NonFiniteDerivative("tangent basis has non-finite entries")
        if d > n:
            raise DegenerateBasis(f"{d} vectors cannot be independent in R^{n}")
        log_volume = _log_volume(rows)
        if d:
            norms = row_norms(rows)
            if np.any(norms == 0) or log_volume - np.sum(np.log(norms)) < _LOG_SINGULAR_RTOL:
                raise DegenerateBasis(f"tangent basis is rank-deficient:\n{rows}")
        rows.flags.writeable = False
        object.__setattr__(self, "basis_rows", rows)
        object.__setattr__(self, "ambient_dim", n)
        object.__setattr__(self, "log_volume", log_volume)

    def dimension(self) -> int:
        return self.basis_rows.shape[0]

    def basis(self) -> np.ndarray:
        return self.basis_rows

    def __repr__(self):
        return f"GeneralTangent({self.basis_rows.tolist()})"


@functools.singledispatch
def gram_log_volume(t: TangentSpace) -> float:
    """``log sqrt(det(V V^T))`` for the basis ``V`` carried by ``t``."""
    return _log_volume(np.asarray(t.basis(), dtype=float))


@gram_log_volume.register
def _(t: ZeroTangent) -> float:
    return 0.0


@gram_log_volume.register
def _(t: FullTangent) -> float:
    return 0.0


@gram_log_volume.register
def _(t: AxisAlignedTangent) -> float:
    return 0.0


@gram_log_volume.register
def _(t: GeneralTangent) -> float:
    return t.log_volume


def spans_equal(a: TangentSpace, b: TangentSpace, tol: float = 1e-8) -> bool:
    """Whether ``a`` and ``b`` span the same linear subspace."""
    if a.ambient_dim != b.ambient_dim or a.dimension() != b.dimension():
        return False
    if a.dimension() in (0, a.ambient_dim):
        return True
    qa = np.linalg.qr(np.asarray(a.basis(), dtype=float).T)[0]
    qb = np.linalg.qr(np.asarray(b.basis(), dtype=float).T)[0]
    return bool(np.linalg.norm(qb - qa @ (qa.T @ qb)) <= tol)


def _push_rows(b: Bijector, x: np.ndarray, rows: np.ndarray) -> np.ndarray:
    pushed = np.asarray(b.jvp(x, rows), dtype=float).reshape(rows.shape[0], b.codomain_dim)
    if not np.all(np.isfinite(pushed)):
        raise NonFiniteDerivative(f"{b!r} has a non-finite derivative at {x}")
    return pushed


def _check_dims(b: Bijector, x: np.ndarray, t: TangentSpace):
    if t.ambient_dim != b.domain_dim or x.shape != (b.domain_dim,):
        raise ValueError(
            f"tangent space in R^{t.ambient_dim} at a point of shape {x.shape} "
            f"does not match {b!r} with domain R^{b.domain_dim}"
        )


@functools.singledispatch
def _transport(t: TangentSpace, b: Bijector, x: np.ndarray) -> tuple[TangentSpace, float]:
    return _general(t, b, x)


def _general(t: TangentSpace, b: Bijector, x: np.ndarray, jvp=None):
    rows = np.asarray(t.basis(), dtype=float)
    if jvp is None:
        pushed = _push_rows(b, x, rows)
    else:
        pushed = np.asarray(jvp(b, x, rows), dtype=float).reshape(rows.shape[0], b.codomain_dim)
    image = GeneralTangent(pushed)
    return image, _log_volume(rows) - image.log_volume


@_transport.register
def _(t: ZeroTangent, b: Bijector, x: np.ndarray):
    # counting measure is preserved by every bijection
    return ZeroTangent(b.codomain_dim), 0.0


@_transport.register
def _(t: FullTangent, b: Bijector, x: np.ndarray):
    if b.codomain_dim != t.ambient_dim:
        return _general(t, b, x)
    if b.has_jacobian_logdet:
        logdet = b.jacobian_logdet(x)
        if not np.isfinite(logdet):
            raise DegenerateBasis(f"{b!r} has a singular Jacobian at {x}")
        return FullTangent(t.ambient_dim), -logdet
    # square map without a log-det hook: still full, but pay for the Gram volume
    image = GeneralTangent(_push_rows(b, x, np.eye(t.ambient_dim)))
    return FullTangent(t.ambient_dim), -image.log_volume


@_transport.register
def _(t: AxisAlignedTangent, b: Bijector, x: np.ndarray):
    if not b.is_coordinatewise:
        return _general(t, b, x)
    partials = np.abs(np.asarray(b.diagonal_jacobian(x), dtype=float)[t.mask])
    if not np.all(np.isfinite(partials)):
        raise NonFiniteDerivative(f"{b!r} has a non-finite derivative at {x}")
    if np.any(partials == 0):
        raise DegenerateBasis(f"{b!r} has a vanishing partial derivative at {x}")
    return t, -float(np.sum(np.log(partials)))


@_transport.register
def _(t: GeneralTangent, b: Bijector, x: np.ndarray):
    image = GeneralTangent(_push_rows(b, x, t.basis_rows))
    return image, t.log_volume - image.log_volume


def transport(b: Bijector, x, t: TangentSpace) -> tuple[TangentSpace, float]:
    """Push the tangent space ``t`` at ``x`` through ``b``.

    Returns the tangent space at ``b(x)`` together with the log of the
    density correction factor.  Dispatch is on the tangent variant first and
    on the bijector's capability flags second:

    ==================  ==========================  ===========================
    tangent             bijector                    correction
    ==================  ==========================  ===========================
    zero                any                         0
    full                square, has log-det         ``-log |det J|``
    axis-aligned        coordinatewise              ``-sum log |df_i/dx_i|``
    anything else       any                         Gram determinants of V, V'
    ==================  ==========================  ===========================
    """
    x = np.asarray(x, dtype=float).reshape(-1)
    _check_dims(b, x, t)
    return _transport(t, b, x)


def pushforward_tangent(b: Bijector, x, t: TangentSpace) -> TangentSpace:
    return transport(b, x, t)[0]


def volume_correction(b: Bijector, x, t: TangentSpace) -> float:
    """Log of ``sqrt(det(V V^T)) / sqrt(det(V' V'^T))`` for ``t`` pushed through ``b`` at ``x``."""
    return transport(b, x, t)[1]


def general_volume_correction(b: Bijector, x, t: TangentSpace, jvp=None) -> float:
    """Volume correction computed from explicit bases, bypassing every shortcut.

    ``jvp(b, x, rows)`` overrides how basis rows are pushed forward, e.g.
    :func:`basemeasure.bijectors.fd_jvp`.
    """
    x = np.asarray(x, dtype=float).reshape(-1)
    _check_dims(b, x, t)
    return _general(t, b, x, jvp)[1]
