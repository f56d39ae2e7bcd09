import math

import numpy as np
import pytest

from basemeasure.bijectors import Affine, FiniteDifference, Identity, ScaleDiag, exp, fd_jvp, sinh
from basemeasure.errors import DegenerateBasis, NonFiniteDerivative
from basemeasure.tangent import (
    AxisAlignedTangent,
    FullTangent,
    GeneralTangent,
    ZeroTangent,
    general_volume_correction,
    gram_log_volume,
    pushforward_tangent,
    spans_equal,
    volume_correction,
)


def gram_oracle(v):
    """log sqrt(det(V V^T)) straight from the Gram matrix."""
    v = np.asarray(v, dtype=float)
    return 0.5 * math.log(np.linalg.det(v @ v.T))


class TestGramLogVolume:
    def test_full(self):
        assert gram_log_volume(FullTangent(2)) == 0.0

    def test_single_unit_vector(self):
        assert gram_log_volume(GeneralTangent([[0.0, 1.0]])) == pytest.approx(0.0, abs=1e-15)

    def test_scaled_pair(self):
        basis = [[1.0, 0.0, 0.0], [0.0, 2.0, 0.0]]
        assert gram_oracle(basis) == pytest.approx(math.log(2.0), rel=1e-15)
        assert gram_log_volume(GeneralTangent(basis)) == pytest.approx(gram_oracle(basis), rel=1e-12)

    def test_zero_is_vacuous(self):
        assert gram_log_volume(ZeroTangent(5)) == 0.0

    def test_axis_aligned_is_exactly_zero(self, rng):
        for _ in range(10):
            mask = rng.integers(0, 2, 6).astype(bool)
            assert gram_log_volume(AxisAlignedTangent(mask)) == 0.0

    def test_random_bases_match_oracle(self, rng):
        for _ in range(50):
            d = int(rng.integers(1, 5))
            v = rng.standard_normal((d, 5))
            assert gram_log_volume(GeneralTangent(v)) == pytest.approx(gram_oracle(v), rel=1e-10, abs=1e-12)


class TestTangentSpace:
    def test_dimensions(self):
        assert ZeroTangent(3).dimension() == 0
        assert FullTangent(3).dimension() == 3
        assert AxisAlignedTangent([1, 0, 1]).dimension() == 2
        assert GeneralTangent([[1.0, 2.0, 3.0]]).dimension() == 1

    def test_bases(self):
        np.testing.assert_array_equal(AxisAlignedTangent([1, 0, 1]).basis(), [[1, 0, 0], [0, 0, 1]])
        assert ZeroTangent(3).basis().shape == (0, 3)

    def test_rank_deficient_basis_rejected(self):
        with pytest.raises(DegenerateBasis):
            GeneralTangent([[1.0, 2.0], [2.0, 4.0]])
        with pytest.raises(DegenerateBasis):
            GeneralTangent([[0.0, 0.0]])
        with pytest.raises(DegenerateBasis):
            GeneralTangent(np.ones((3, 2)))

    def test_rank_test_is_scale_aware(self):
        # tiny but independent rows are fine
        GeneralTangent([[1e-200, 0.0], [0.0, 1e-200]])
        with pytest.raises(DegenerateBasis):
            GeneralTangent([[1.0, 0.0], [1.0, 1e-13]])

    def test_immutable(self):
        t = GeneralTangent([[1.0, 0.0]])
        with pytest.raises(ValueError):
            t.basis()[0, 0] = 3.0

    def test_spans_equal(self):
        assert spans_equal(GeneralTangent([[1.0, 1.0, 0.0]]), GeneralTangent([[-3.0, -3.0, 0.0]]))
        assert not spans_equal(GeneralTangent([[1.0, 1.0, 0.0]]), GeneralTangent([[1.0, 0.0, 0.0]]))
        assert spans_equal(FullTangent(2), GeneralTangent([[1.0, 2.0], [3.0, 1.0]]))
        assert not spans_equal(FullTangent(2), ZeroTangent(2))


class TestPushforwardTangent:
    def test_circle_tangent_under_scaling(self):
        t = pushforward_tangent(ScaleDiag([2.0, 20.0]), [0.0, 1.0], GeneralTangent([[-1.0, 0.0]]))
        assert isinstance(t, GeneralTangent)
        np.testing.assert_allclose(t.basis(), [[-2.0, 0.0]])

    def test_zero_stays_zero(self):
        t = pushforward_tangent(Affine([[1.0, 2.0], [0.0, 1.0]]), [0.3, 0.1], ZeroTangent(2))
        assert t == ZeroTangent(2)

    def test_coordinatewise_preserves_mask(self):
        mask = AxisAlignedTangent([1, 0, 1])
        t = pushforward_tangent(exp(3), [0.0, 0.0, 0.0], mask)
        assert t == mask
        assert volume_correction(exp(3), [0.0, 0.0, 0.0], mask) == 0.0
        assert general_volume_correction(exp(3), [0.0, 0.0, 0.0], mask) == pytest.approx(0.0, abs=1e-15)

    def test_non_coordinatewise_breaks_mask(self):
        t = pushforward_tangent(Affine([[1.0, 1.0], [0.0, 1.0]]), [0.0, 0.0], AxisAlignedTangent([0, 1]))
        assert isinstance(t, GeneralTangent)
        np.testing.assert_allclose(t.basis(), [[1.0, 1.0]])

    def test_full_square_stays_full(self):
        assert pushforward_tangent(Affine([[1.0, 1.0], [0.0, 1.0]]), [0.0, 0.0], FullTangent(2)) == FullTangent(2)

    def test_non_finite_derivative(self):
        with pytest.raises(NonFiniteDerivative):
            pushforward_tangent(exp(1), [800.0], GeneralTangent([[1.0]]))

    def test_dimension_mismatch(self):
        with pytest.raises(ValueError):
            pushforward_tangent(exp(2), [0.0, 0.0], FullTangent(3))


class TestVolumeCorrection:
    def test_circle_under_scaling(self, rng):
        b = ScaleDiag([2.0, 20.0])
        for theta in rng.uniform(0, 2 * math.pi, 20):
            x, y = math.cos(theta), math.sin(theta)
            got = volume_correction(b, [x, y], GeneralTangent([[-y, x]]))
            assert got == pytest.approx(-math.log(math.sqrt(4 * y * y + 400 * x * x)), rel=1e-12)

    def test_full_uses_jacobian_determinant(self):
        assert volume_correction(ScaleDiag([2.0, 20.0]), [1.0, 0.0], FullTangent(2)) == pytest.approx(-math.log(40.0))

    @pytest.mark.parametrize("t", [ZeroTangent(3), FullTangent(3), AxisAlignedTangent([0, 1, 1]), GeneralTangent([[1.0, 2.0, 3.0]])])
    def test_identity_is_free(self, t):
        assert volume_correction(Identity(3), [0.2, -1.0, 4.0], t) == pytest.approx(0.0, abs=1e-15)

    def test_zero_dimension_neutral(self, rng):
        for b in (Affine(np.eye(3) + rng.standard_normal((3, 3))), exp(3), sinh(3), FiniteDifference(exp(3))):
            assert volume_correction(b, rng.standard_normal(3), ZeroTangent(3)) == 0.0

    def test_degenerate_pushed_basis(self):
        class Squash(ScaleDiag):
            # claims no capabilities, derivative vanishes along x
            is_coordinatewise = False
            has_jacobian_logdet = False

        b = Squash([1.0, 1.0])
        b.jvp = lambda x, v: np.asarray(v) * np.array([0.0, 1.0])
        with pytest.raises(DegenerateBasis):
            volume_correction(b, [0.0, 0.0], GeneralTangent([[1.0, 0.0]]))
        with pytest.raises(DegenerateBasis):
            volume_correction(b, [0.0, 0.0], FullTangent(2))

    def test_full_square_without_logdet_hook(self, rng):
        a = np.eye(3) + 0.4 * rng.standard_normal((3, 3))
        x = rng.standard_normal(3)
        got = volume_correction(FiniteDifference(Affine(a)), x, FullTangent(3))
        assert got == pytest.approx(-math.log(abs(np.linalg.det(a))), rel=1e-6)


class TestFastPathAgreement:
    def test_full(self, rng):
        for _ in range(50):
            b = Affine(np.eye(4) + 0.3 * rng.standard_normal((4, 4)), rng.standard_normal(4))
            x = rng.standard_normal(4)
            fast = volume_correction(b, x, FullTangent(4))
            assert fast == pytest.approx(general_volume_correction(b, x, FullTangent(4)), rel=1e-9, abs=1e-9)
            assert fast == pytest.approx(general_volume_correction(b, x, FullTangent(4), jvp=fd_jvp), rel=1e-5, abs=1e-5)

    def test_axis_aligned(self, rng):
        for _ in range(50):
            b = sinh(5)
            mask = AxisAlignedTangent(rng.integers(0, 2, 5))
            x = rng.standard_normal(5)
            fast = volume_correction(b, x, mask)
            assert fast == pytest.approx(general_volume_correction(b, x, mask), rel=1e-9, abs=1e-9)
            assert fast == pytest.approx(general_volume_correction(b, x, mask, jvp=fd_jvp), rel=1e-5, abs=1e-5)

    def test_zero(self, rng):
        b = Affine(np.eye(2) * 3.0)
        assert volume_correction(b, [1.0, 2.0], ZeroTangent(2)) == general_volume_correction(b, [1.0, 2.0], ZeroTangent(2))


def test_basis_invariance(rng):
    for _ in range(100):
        n = int(rng.integers(2, 6))
        d = int(rng.integers(1, n + 1))
        b = Affine(np.eye(n) + 0.3 * rng.standard_normal((n, n)))
        x = rng.standard_normal(n)
        v = rng.standard_normal((d, n))
        r = np.eye(d) + 0.5 * rng.standard_normal((d, d))
        ref = volume_correction(b, x, GeneralTangent(v))
        assert volume_correction(b, x, GeneralTangent(r @ v)) == pytest.approx(ref, rel=1e-9, abs=1e-9)
