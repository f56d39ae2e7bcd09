"""Probability densities that know their base measure.

Densities are taken with respect to Hausdorff measure of the local support
dimension.  Distributions report a :class:`LocalMeasure` (density, dimension,
tangent space); pushing them through a :class:`Bijector` corrects densities
by the change in tangent ``d``-volume; mixed-dimension densities are compared
and combined with :func:`rat`, :func:`summ` and :func:`prodd`.
"""

from .algebra import DimensionedWeight, ExtendedRatio, RatioKind, prodd, rat, summ
from .bijectors import (
    Affine,
    Bijector,
    Chain,
    Coordinatewise,
    FiniteDifference,
    GraphEmbed,
    Identity,
    ScaleDiag,
    exp,
    fd_jvp,
    sinh,
    softplus,
)
from .distributions import (
    Bernoulli,
    Distribution,
    FiniteDiscrete,
    LocalMeasure,
    LowerTriangularIID,
    Mixture,
    PointMass,
    StdNormal,
    UniformBox,
    UniformUnitCircle,
)
from .errors import (
    AmbiguousTangent,
    BaseMeasureError,
    DegenerateBasis,
    DomainError,
    InvalidBijector,
    NonFiniteDerivative,
    UndefinedComparison,
    UndefinedResampling,
)
from .inference import (
    DistributionTarget,
    FlipProposal,
    GaussianRandomWalk,
    Particle,
    mh_chain,
    mh_step,
    smc_resample,
)
from .pushforward import TransformedDistribution, naive_log_density
from .tangent import (
    AxisAlignedTangent,
    FullTangent,
    GeneralTangent,
    TangentSpace,
    ZeroTangent,
    general_volume_correction,
    gram_log_volume,
    pushforward_tangent,
    spans_equal,
    transport,
    volume_correction,
)

__version__ = "0.1.0"
