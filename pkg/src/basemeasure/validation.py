"""Self-checks run by ``bmp validate``.

Each suite returns a list of :class:`Check` records.  Suites carry their own
nominal tolerance; a caller-supplied ``tol`` can only tighten it.
Monte-Carlo checks use a five-standard-error band instead and ignore ``tol``.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np
from scipy import stats

from . import models
from .algebra import DimensionedWeight, RatioKind, prodd, rat, summ
from .bijectors import Affine, Chain, FiniteDifference, exp, fd_jvp
from .distributions import Bernoulli, LowerTriangularIID, StdNormal, UniformUnitCircle
from .inference import FlipProposal, Particle, mh_chain, smc_resample
from .pushforward import TransformedDistribution, naive_log_density
from .tangent import (
    AxisAlignedTangent,
    FullTangent,
    GeneralTangent,
    ZeroTangent,
    general_volume_correction,
    volume_correction,
)

ANALYTIC_TOL = 1e-9
FD_TOL = 1e-5


@dataclass
class Check:
    name: str
    value: float
    expected: float
    tolerance: float
    passed: bool

    def as_dict(self):
        d = asdict(self)
        d["pass"] = d.pop("passed")
        return d


def _close(name, value, expected, tol, relative=True):
    scale = max(1.0, abs(expected)) if relative else 1.0
    err = abs(value - expected)
    return Check(name, float(value), float(expected), float(tol), bool(err <= tol * scale))


def _max_error(name, errors, tol):
    worst = float(np.max(errors)) if len(errors) else 0.0
    return Check(name, worst, 0.0, float(tol), bool(worst <= tol))


def _rel_err(a, b):
    return abs(a - b) / max(1.0, abs(b))


def ellipse_normalization(nodes=512, tol=1e-6):
    dist = models.stretched_circle()
    good = models.ellipse_integral(dist.log_density, nodes)
    bad = models.ellipse_integral(lambda p: naive_log_density(dist, p), nodes)
    perimeter = models.ellipse_integral(lambda p: 0.0, nodes)
    return [
        _close("ellipse.integral_good", good, 1.0, tol, relative=False),
        _close("ellipse.integral_naive", bad, perimeter / (80 * math.pi), tol, relative=False),
        _close("ellipse.integral_naive_vs_81.28", bad, 81.28 / (80 * math.pi), 1e-3, relative=False),
    ]


def ellipse_closed_form(tol=ANALYTIC_TOL, n_points=100):
    dist = models.stretched_circle()
    t = np.linspace(0.0, 2 * math.pi, n_points, endpoint=False) + 0.1
    errors = []
    for x, y in models.ellipse_point(t):
        errors.append(_rel_err(math.exp(dist.log_density([x, y])), models.ellipse_density_closed_form(x, y)))
    ratio = math.exp(dist.log_density([0.0, 20.0]) - dist.log_density([2.0, 0.0]))
    return [
        _max_error("ellipse.closed_form_rel_err", errors, tol),
        _close("ellipse.density_ratio", ratio, 10.0, tol),
    ]


def conventional_rule_recovery(rng, tol=ANALYTIC_TOL):
    checks = []
    for n in (1, 2, 5):
        a = np.eye(n) + 0.5 * rng.standard_normal((n, n))
        b = rng.standard_normal(n)
        dist = TransformedDistribution(StdNormal(n), Affine(a, b))
        oracle = stats.multivariate_normal(mean=b, cov=a @ a.T)
        errors = []
        for _ in range(20):
            x = dist.sample(rng)
            errors.append(_rel_err(dist.log_density(x), float(oracle.logpdf(x))))
        checks.append(_max_error(f"conventional_rule.n{n}", errors, tol))
    return checks


def discrete_invariance(rng):
    base = Bernoulli(0.5)
    maps = {"exp": exp(1), "affine": Affine([[rng.uniform(0.5, 3.0)]], [rng.standard_normal()])}
    checks = []
    for name, f in maps.items():
        dist = TransformedDistribution(base, f)
        for atom in (0.0, 1.0):
            lm = dist.local_measure(f.forward([atom]))
            exact = lm.dimension == 0 and lm.log_density == math.log(0.5)
            checks.append(Check(f"discrete_invariance.{name}.at{atom:g}", lm.log_density, math.log(0.5), 0.0, exact))
    return checks


def composition_commutation(rng, tol=ANALYTIC_TOL, fd_tol=FD_TOL, n_points=100):
    checks = []
    for i, (base, f, g) in enumerate(models.random_bijector_pairs(rng)):
        staged = TransformedDistribution(TransformedDistribution(base, f), g)
        composed = TransformedDistribution(base, Chain(f, g))
        staged_fd = TransformedDistribution(TransformedDistribution(base, FiniteDifference(f)), FiniteDifference(g))
        composed_fd = TransformedDistribution(base, FiniteDifference(Chain(f, g)))
        errors, fd_errors = [], []
        for x in base.sample_n(rng, n_points):
            y = Chain(f, g).forward(x)
            ref = staged.log_density(y)
            errors.append(_rel_err(composed.log_density(y), ref))
            fd_errors.append(max(_rel_err(staged_fd.log_density(y), ref), _rel_err(composed_fd.log_density(y), ref)))
        checks.append(_max_error(f"commutation.pair{i}.analytic", errors, tol))
        checks.append(_max_error(f"commutation.pair{i}.finite_difference", fd_errors, fd_tol))
    return checks


def fast_path_agreement(rng, tol=ANALYTIC_TOL, fd_tol=FD_TOL, trials=20):
    cases = {
        "zero": lambda: (Affine(np.eye(3) + 0.3 * rng.standard_normal((3, 3))), rng.standard_normal(3), ZeroTangent(3)),
        "full": lambda: (Affine(np.eye(3) + 0.3 * rng.standard_normal((3, 3))), rng.standard_normal(3), FullTangent(3)),
        "axis_aligned": lambda: (exp(4), rng.standard_normal(4), AxisAlignedTangent([1, 0, 1, 1])),
        "lower_triangular": lambda: (exp(9), LowerTriangularIID(3).sample(rng), AxisAlignedTangent(LowerTriangularIID(3).mask)),
    }
    checks = []
    for name, make in cases.items():
        errors, fd_errors = [], []
        for _ in range(trials):
            b, x, t = make()
            fast = volume_correction(b, x, t)
            errors.append(_rel_err(fast, general_volume_correction(b, x, t)))
            fd_errors.append(_rel_err(fast, general_volume_correction(b, x, t, jvp=fd_jvp)))
        checks.append(_max_error(f"fast_path.{name}.analytic", errors, tol))
        checks.append(_max_error(f"fast_path.{name}.finite_difference", fd_errors, fd_tol))
    return checks


def basis_invariance(rng, tol=ANALYTIC_TOL, trials=100):
    errors = []
    for _ in range(trials):
        n, d = 4, int(rng.integers(1, 4))
        b = Affine(np.eye(n) + 0.3 * rng.standard_normal((n, n)))
        x = rng.standard_normal(n)
        basis = rng.standard_normal((d, n))
        r = np.eye(d) + 0.5 * rng.standard_normal((d, d))
        ref = volume_correction(b, x, GeneralTangent(basis))
        errors.append(_rel_err(volume_correction(b, x, GeneralTangent(r @ basis)), ref))
    return [_max_error("basis_invariance", errors, tol)]


# weight classes: 0, finite positive, +inf
_W = {"0": -math.inf, "p": math.log(0.3), "inf": math.inf}

# (relation of d_y to d_x, class of p(y), class of p(x)) -> outcome, for unequal dims
_RAT_TABLE = {
    (">", "0", "p"): "zero", (">", "p", "p"): "zero", (">", "0", "inf"): "zero", (">", "p", "inf"): "zero",
    ("<", "p", "0"): "infinite", ("<", "p", "p"): "infinite", ("<", "inf", "0"): "infinite", ("<", "inf", "p"): "infinite",
}
_SUMM_TABLE = {
    # (relation of d_x to d_y, class of p(x), class of p(y)) -> which argument survives
    ("<", "p", "0"): "x", ("<", "p", "p"): "x", ("<", "inf", "0"): "x", ("<", "inf", "p"): "x",
    (">", "0", "p"): "y", (">", "p", "p"): "y", (">", "0", "inf"): "y", (">", "p", "inf"): "y",
}


def algebra_case_tables():
    mismatches = 0
    total = 0
    for rel, dy, dx in ((">", 2, 1), ("<", 1, 2)):
        for cy, ly in _W.items():
            for cx, lx in _W.items():
                total += 1
                expected = _RAT_TABLE.get((rel, cy, cx), "undefined")
                mismatches += rat(DimensionedWeight(dy, ly), DimensionedWeight(dx, lx)).kind.value != expected
                sx, sy = DimensionedWeight(dy, ly), DimensionedWeight(dx, lx)
                got = summ(sx, sy)
                which = _SUMM_TABLE.get((rel, cy, cx))
                mismatches += got != {"x": sx, "y": sy, None: None}[which]
    for ly in _W.values():
        for lx in _W.values():
            total += 1
            r = rat(DimensionedWeight(1, ly), DimensionedWeight(1, lx))
            if math.isinf(ly) and ly == lx:
                mismatches += r.kind is not RatioKind.UNDEFINED
            else:
                with np.errstate(invalid="ignore"):
                    mismatches += r.log() != ly - lx
            s = summ(DimensionedWeight(1, ly), DimensionedWeight(1, lx))
            mismatches += s != DimensionedWeight(1, float(np.logaddexp(ly, lx)))
            p = prodd(DimensionedWeight(2, ly), DimensionedWeight(1, lx))
            want = -math.inf if -math.inf in (ly, lx) else ly + lx
            mismatches += p != DimensionedWeight(3, want)
    return [Check("algebra.case_tables_mismatches", float(mismatches), 0.0, 0.0, mismatches == 0)]


def smc_mixed_dimension(rng, n=1000):
    particles = [
        Particle(np.array([0.0]), DimensionedWeight.from_weight(0, 0.5)),
        Particle(np.array([1.0]), DimensionedWeight.from_weight(1, 3.0)),
        Particle(np.array([2.0]), DimensionedWeight.from_weight(0, 0.5)),
    ]
    states, estimate = smc_resample(particles, n, rng)
    picked = np.array([s[0] for s in states])
    count0 = int(np.sum(picked == 0.0))
    sigma = math.sqrt(n * 0.25)
    errors = 0
    for bad in (
        [Particle(np.array([0.0]), DimensionedWeight.from_weight(0, 0.0)), Particle(np.array([1.0]), DimensionedWeight.from_weight(1, 2.0))],
        [Particle(np.array([0.0]), DimensionedWeight.from_weight(0, 1.0)), Particle(np.array([1.0]), DimensionedWeight(1, math.inf))],
    ):
        try:
            smc_resample(bad, 10, rng)
        except ArithmeticError:
            errors += 1
    return [
        Check("smc.higher_dim_drawn", float(np.sum(picked == 1.0)), 0.0, 0.0, bool(np.all(picked != 1.0))),
        Check("smc.index0_count", float(count0), n / 2, 5 * sigma, abs(count0 - n / 2) <= 5 * sigma),
        Check("smc.estimate_dim", float(estimate.dim), 0.0, 0.0, estimate.dim == 0),
        Check("smc.estimate_weight", estimate.weight, 1.0, 0.0, estimate.weight == 1.0),
        Check("smc.error_branches", float(errors), 2.0, 0.0, errors == 2),
    ]


def gpa_chain(rng, n_steps=10_000):
    target = models.GPATarget()
    states, chain_stats = mh_chain(
        target, FlipProposal(), [models.INDIAN], n_steps, rng, label=lambda s: models.GPA_LABELS[float(s[0])]
    )
    to_american = chain_stats.acceptance_rate(("Indian", "American"))
    # vacuously zero when the chain never proposed to leave American
    to_indian = chain_stats.acceptance_rate(("American", "Indian"))
    to_indian = 0.0 if math.isnan(to_indian) else to_indian
    freq = float(np.mean(states[1:, 0] == models.AMERICAN))
    return [
        Check("gpa.indian_to_american_rate", to_american, 1.0, 0.0, to_american == 1.0),
        Check("gpa.american_to_indian_rate", to_indian, 0.0, 0.0, to_indian == 0.0),
        Check("gpa.posterior_american", freq, 1.0, 0.0, freq == 1.0),
    ]


def lemma_monte_carlo(rng, n=1_000_000, delta=0.01):
    samples = UniformUnitCircle().sample_n(rng, n)
    inside = np.count_nonzero(np.hypot(samples[:, 0] - 1.0, samples[:, 1]) < delta)
    p_hat = inside / n
    estimate = p_hat / (2 * delta)
    se = math.sqrt(p_hat * (1 - p_hat) / n) / (2 * delta)
    expected = 1 / (2 * math.pi)
    return [Check("lemma.neighborhood_mass", estimate, expected, 5 * se, abs(estimate - expected) <= 5 * se)]


def run_all(seed: int, tol: float = 1e-6, nodes: int = 512) -> list[Check]:
    streams = [np.random.default_rng(s) for s in np.random.SeedSequence(seed).spawn(8)]
    analytic, fd = min(ANALYTIC_TOL, tol), min(FD_TOL, tol)
    checks = []
    checks += ellipse_normalization(nodes, tol)
    checks += ellipse_closed_form(analytic)
    checks += conventional_rule_recovery(streams[0], analytic)
    checks += discrete_invariance(streams[1])
    checks += composition_commutation(streams[2], analytic, fd)
    checks += fast_path_agreement(streams[3], analytic, fd)
    checks += basis_invariance(streams[4], analytic)
    checks += algebra_case_tables()
    checks += smc_mixed_dimension(streams[5])
    checks += gpa_chain(streams[6])
    checks += lemma_monte_carlo(streams[7])
    return checks
