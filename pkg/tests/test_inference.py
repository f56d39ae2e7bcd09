import math

import numpy as np
import pytest
from scipy import stats

from basemeasure.algebra import DimensionedWeight
from basemeasure.distributions import StdNormal, UniformBox
from basemeasure.errors import UndefinedComparison, UndefinedResampling
from basemeasure.inference import (
    ChainStats,
    DistributionTarget,
    FlipProposal,
    GaussianRandomWalk,
    Particle,
    mh_chain,
    mh_step,
    smc_resample,
)
from basemeasure.models import AMERICAN, GPA_LABELS, INDIAN, GPATarget


def particles(*pairs):
    return [Particle(np.array([float(j)]), DimensionedWeight.from_weight(d, w)) for j, (d, w) in enumerate(pairs)]


class TestSMC:
    def test_mixed_dimensions(self, rng):
        n = 1000
        states, est = smc_resample(particles((0, 0.5), (1, 3.0), (0, 0.5)), n, rng)
        picked = np.array([s[0] for s in states])
        assert set(picked) <= {0.0, 2.0}
        assert est == DimensionedWeight(0, 0.0)
        assert abs(np.sum(picked == 0.0) - n / 2) < 5 * math.sqrt(n / 4)

    def test_all_same_dimension(self, rng):
        _, est = smc_resample(particles((2, 1.0), (2, 3.0)), 10, rng)
        assert est.dim == 2 and est.weight == pytest.approx(4.0)

    def test_zero_minimal_weights(self, rng):
        with pytest.raises(UndefinedResampling):
            smc_resample(particles((0, 0.0), (1, 2.0)), 10, rng)

    def test_infinite_higher_weight(self, rng):
        with pytest.raises(UndefinedResampling):
            smc_resample(particles((0, 0.5), (1, math.inf)), 10, rng)

    def test_infinite_minimal_weight(self, rng):
        with pytest.raises(UndefinedResampling):
            smc_resample(particles((0, math.inf), (0, 1.0)), 10, rng)

    def test_zero_weight_never_drawn(self, rng):
        states, _ = smc_resample(particles((1, 0.0), (1, 1.0)), 500, rng)
        assert all(s[0] == 1.0 for s in states)

    def test_chi_square_matches_multinomial(self, rng):
        w = np.array([0.1, 0.2, 0.3, 0.4, 1.0])
        n = 100_000
        states, _ = smc_resample(particles(*[(1, v) for v in w]), n, rng)
        counts = np.bincount([int(s[0]) for s in states], minlength=len(w))
        expected = n * w / w.sum()
        chi2 = float(np.sum((counts - expected) ** 2 / expected))
        k = len(w) - 1
        # 5 sigma upper quantile of the chi-square with k degrees of freedom
        assert chi2 < stats.chi2.isf(stats.norm.sf(5), k)

    def test_invalid_arguments(self, rng):
        with pytest.raises(ValueError):
            smc_resample([], 1, rng)
        with pytest.raises(ValueError):
            smc_resample(particles((0, 1.0)), 0, rng)

    def test_deterministic(self):
        p = particles((0, 0.2), (0, 0.8), (1, 1.0))
        a, _ = smc_resample(p, 50, np.random.default_rng(3))
        b, _ = smc_resample(p, 50, np.random.default_rng(3))
        np.testing.assert_array_equal(np.stack(a), np.stack(b))


class _Table:
    """Target given by a lookup from scalar state to dimensioned weight."""

    def __init__(self, table):
        self.table = table

    def evaluate(self, x):
        d, w = self.table[float(np.asarray(x).reshape(-1)[0])]
        return DimensionedWeight.from_weight(d, w)


class TestMH:
    def test_gpa_values(self):
        t = GPATarget()
        assert t.evaluate([INDIAN]).dim == 1 and t.evaluate([INDIAN]).weight == pytest.approx(0.05)
        assert t.evaluate([AMERICAN]).dim == 0 and t.evaluate([AMERICAN]).weight == pytest.approx(0.05)

    def test_indian_to_american_accepts(self, rng):
        for _ in range(100):
            x, accepted = mh_step(GPATarget(), FlipProposal(), [INDIAN], rng)
            assert accepted and x[0] == AMERICAN

    def test_american_to_indian_rejects(self, rng):
        for _ in range(100):
            x, accepted = mh_step(GPATarget(), FlipProposal(), [AMERICAN], rng)
            assert not accepted and x[0] == AMERICAN

    def test_equal_ratio_always_accepts(self, rng):
        target = _Table({0.0: (1, 0.3), 1.0: (1, 0.3)})
        assert all(mh_step(target, FlipProposal(), [0.0], rng)[1] for _ in range(200))

    def test_never_accepts_zero_density(self, rng):
        target = DistributionTarget(UniformBox([0.0], [1.0]))
        x = np.array([0.5])
        for _ in range(2000):
            x, _ = mh_step(target, GaussianRandomWalk(2.0), x, rng)
            assert 0.0 <= x[0] <= 1.0

    def test_undefined_equal_dimension(self, rng):
        target = _Table({0.0: (1, 0.0), 1.0: (1, 0.0)})
        with pytest.raises(UndefinedComparison):
            mh_step(target, FlipProposal(), [0.0], rng)

    def test_undefined_lower_dimension_zero(self, rng):
        target = _Table({0.0: (1, 0.5), 1.0: (0, 0.0)})
        with pytest.raises(UndefinedComparison):
            mh_step(target, FlipProposal(), [0.0], rng)

    def test_undefined_higher_dimension_infinite(self, rng):
        target = _Table({0.0: (0, 0.5), 1.0: (1, math.inf)})
        with pytest.raises(UndefinedComparison):
            mh_step(target, FlipProposal(), [0.0], rng)

    def test_standard_normal_chain(self):
        rng = np.random.default_rng(11)
        n = 100_000
        states, _ = mh_chain(DistributionTarget(StdNormal(1)), GaussianRandomWalk(2.4), [0.0], n, rng)
        x = states[1:, 0]
        # batch means absorb the autocorrelation of the chain
        batches = 100
        for values, truth in [(x, 0.0), (x * x, 1.0)]:
            means = values.reshape(batches, -1).mean(axis=1)
            se = means.std(ddof=1) / math.sqrt(batches)
            assert abs(values.mean() - truth) < 5 * se

    def test_gpa_chain(self, rng):
        label = lambda s: GPA_LABELS[float(s[0])]  # noqa: E731
        states, stats_ = mh_chain(GPATarget(), FlipProposal(), [INDIAN], 10_000, rng, label=label)
        assert np.all(states[1:, 0] == AMERICAN)
        assert stats_.acceptance_rate(("Indian", "American")) == 1.0
        assert stats_.proposed[("Indian", "American")] == 1
        assert stats_.acceptance_rate(("American", "Indian")) == 0.0
        assert stats_.proposed[("American", "Indian")] == 9_999

    def test_chain_of_one_step_from_american(self, rng):
        states, _ = mh_chain(GPATarget(), FlipProposal(), [AMERICAN], 1, rng)
        assert states[-1, 0] == AMERICAN

    def test_empty_stats_rate(self):
        assert math.isnan(ChainStats().acceptance_rate(("a", "b")))
