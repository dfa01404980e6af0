"""Rotation-angle extraction and the forward reconstruction recursion."""

import numpy as np
import pytest

from gqsp import (
    GqspAngles,
    InvalidInputError,
    InvalidPairError,
    LaurentPoly,
    complete_via_optimization,
    compute_angles,
    reconstruct_polynomials,
    sup_norm_sq,
)
from gqsp.angles import wrap_angle


def random_angles(rng, d):
    return GqspAngles(
        theta=rng.uniform(0.0, np.pi / 2.0, d + 1),
        phi=rng.uniform(-np.pi, np.pi, d + 1),
        lam=float(rng.uniform(-np.pi, np.pi)),
    )


class TestWrapAngle:
    def test_identity_in_range(self):
        assert wrap_angle(0.5) == pytest.approx(0.5)

    def test_wraps_down(self):
        assert wrap_angle(2 * np.pi + 0.25) == pytest.approx(0.25)

    def test_pi_maps_to_pi(self):
        assert wrap_angle(np.pi) == pytest.approx(np.pi)
        assert wrap_angle(-np.pi) == pytest.approx(np.pi)


class TestGqspAngles:
    def test_degree(self):
        assert GqspAngles([0.1, 0.2], [0.0, 0.0], 0.0).degree == 1

    def test_length_mismatch_rejected(self):
        with pytest.raises(InvalidInputError):
            GqspAngles([0.1], [0.0, 0.0], 0.0)

    def test_non_finite_rejected(self):
        with pytest.raises(InvalidInputError):
            GqspAngles([np.nan], [0.0], 0.0)
        with pytest.raises(InvalidInputError):
            GqspAngles([0.1], [0.0], np.inf)

    def test_json_round_trip(self):
        ang = GqspAngles([0.3, 1.1], [-0.2, 2.0], 0.7)
        back = GqspAngles.from_json(ang.to_json())
        assert np.allclose(back.theta, ang.theta)
        assert np.allclose(back.phi, ang.phi)
        assert back.lam == pytest.approx(ang.lam)

    def test_json_uses_lambda_key(self):
        assert "lambda" in GqspAngles([0.1], [0.0], 0.0).to_json_dict()

    def test_malformed_json_rejected(self):
        with pytest.raises(InvalidInputError):
            GqspAngles.from_json("{}")


class TestComputeAngles:
    def test_monomial_all_zero_angles(self):
        ang = compute_angles([0.0, 0.0, 1.0], [0.0, 0.0, 0.0])
        assert np.allclose(ang.theta, 0.0)
        assert np.allclose(ang.phi, 0.0)
        assert ang.lam == pytest.approx(0.0)

    def test_average_pair(self):
        ang = compute_angles([0.5, 0.5], [-0.5, 0.5])
        assert np.allclose(ang.theta, [np.pi / 4, np.pi / 4])
        assert np.allclose(ang.phi, [0.0, 0.0])
        assert ang.lam == pytest.approx(0.0)

    def test_constant_pair(self):
        ang = compute_angles([0.6], [0.8])
        assert ang.theta[0] == pytest.approx(np.arctan2(0.8, 0.6))
        assert ang.phi[0] == pytest.approx(0.0)
        assert ang.lam == pytest.approx(0.0)

    def test_angle_ranges(self):
        rng = np.random.default_rng(0)
        for d in (1, 4, 16):
            p, q = reconstruct_polynomials(random_angles(rng, d))
            ang = compute_angles(p, q)
            assert np.all(ang.theta >= 0.0) and np.all(ang.theta <= np.pi / 2 + 1e-12)
            assert np.all(ang.phi > -np.pi - 1e-12) and np.all(ang.phi <= np.pi + 1e-12)
            assert -np.pi - 1e-12 < ang.lam <= np.pi + 1e-12

    def test_invalid_pair_rejected(self):
        # perturbing Q breaks |P|^2 + |Q|^2 = 1, so the recursion's dropped
        # boundary coefficients no longer cancel
        rng = np.random.default_rng(1)
        p, q = reconstruct_polynomials(random_angles(rng, 5))
        bad = q.coeffs.copy()
        bad[2] += 1e-3
        with pytest.raises(InvalidPairError):
            compute_angles(p, LaurentPoly(bad))

    def test_both_zero_rejected(self):
        with pytest.raises(InvalidPairError):
            compute_angles([0.0, 0.0], [0.0, 0.0])

    def test_laurent_input_rejected(self):
        p = LaurentPoly([1.0], min_degree=-1)
        with pytest.raises(InvalidInputError):
            compute_angles(p, [0.0])

    def test_padded_constant_pair(self):
        # trailing zeros (true degree below the array length) round-trip
        ang = compute_angles([0.6, 0.0], [0.8, 0.0])
        p, q = reconstruct_polynomials(ang)
        assert np.allclose(p.coeffs, [0.6, 0.0], atol=1e-12)
        assert np.allclose(q.coeffs, [0.8, 0.0], atol=1e-12)

    def test_unequal_lengths_padded(self):
        ang = compute_angles([0.0, 0.0, 1.0], [0.0])
        assert ang.degree == 2


class TestReconstruct:
    def test_constant(self):
        p, q = reconstruct_polynomials(GqspAngles([np.pi / 4], [0.3], 0.1))
        assert p.coeffs[0] == pytest.approx(np.exp(1j * 0.4) * np.cos(np.pi / 4))
        assert q.coeffs[0] == pytest.approx(np.exp(1j * 0.1) * np.sin(np.pi / 4))

    def test_pair_satisfies_norm_identity(self):
        rng = np.random.default_rng(2)
        for d in (1, 3, 10):
            p, q = reconstruct_polynomials(random_angles(rng, d))
            m = 256
            total = (np.abs(np.fft.fft(np.pad(p.coeffs, (0, m - d - 1))))**2
                     + np.abs(np.fft.fft(np.pad(q.coeffs, (0, m - d - 1))))**2)
            assert np.allclose(total, 1.0, atol=1e-12)

    def test_degrees_match_input(self):
        p, q = reconstruct_polynomials(GqspAngles([0.3, 0.4, 0.5], [0.0, 0.1, 0.2], 0.0))
        assert len(p.coeffs) == 3
        assert len(q.coeffs) == 3


class TestRoundTrip:
    @pytest.mark.parametrize("d", [1, 8, 64])
    def test_angles_to_polys_to_angles(self, d):
        rng = np.random.default_rng(d)
        for _ in range(10):
            ang = random_angles(rng, d)
            p, q = reconstruct_polynomials(ang)
            back = compute_angles(p, q)
            p2, q2 = reconstruct_polynomials(back)
            assert np.max(np.abs(p2.coeffs - p.coeffs)) <= 1e-10
            assert np.max(np.abs(q2.coeffs - q.coeffs)) <= 1e-10

    def test_completion_output_is_valid_pair(self):
        rng = np.random.default_rng(3)
        a = rng.standard_normal(13) + 1j * rng.standard_normal(13)
        a *= 0.99 / np.sqrt(sup_norm_sq(LaurentPoly(a)))
        b, _ = complete_via_optimization(a)
        ang = compute_angles(a, b)
        p, q = reconstruct_polynomials(ang)
        assert np.max(np.abs(p.coeffs - a)) <= 1e-9
        assert np.max(np.abs(q.coeffs - b)) <= 1e-9
