import math

import numpy as np
import pytest

from ancrad.acoustics import (
    ArrayGeometry,
    FrequencyPoint,
    Medium,
    RadiationModel,
    build_radiation_matrix,
    build_transfer_matrix,
    exterior_radiation_power,
    greens_function,
    make_radiation_model,
)
from ancrad.errors import DomainError, ShapeError, SingularityError
from ancrad.specfun import bessel_j0, bessel_y0

MEDIUM = Medium()  # c = 343 m/s, rho = 1.3 kg/m^3


def _ring(radius, count, offset_deg=0.0):
    ang = np.deg2rad(offset_deg) + 2 * np.pi * np.arange(count) / count
    return np.stack([radius * np.cos(ang), radius * np.sin(ang)], axis=1)


def default_secondaries():
    return np.vstack([_ring(1.0, 6, 0.0), _ring(1.2, 6, 30.0)])


class TestTypes:
    def test_medium_defaults(self):
        assert MEDIUM.c == 343.0
        assert MEDIUM.rho == 1.3

    def test_frequency_point_wavenumber(self):
        fp = FrequencyPoint.for_medium(500.0, MEDIUM)
        assert fp.wavenumber == pytest.approx(2 * math.pi * 500.0 / 343.0)

    def test_geometry_rejects_duplicates(self):
        with pytest.raises(DomainError):
            ArrayGeometry(
                dimension=2,
                primary_positions=np.array([[0.0, 0.0], [0.0, 0.0]]),
                secondary_positions=default_secondaries(),
                error_positions=np.array([[0.5, 0.5]]),
            )

    def test_geometry_counts(self):
        geo = ArrayGeometry(
            dimension=2,
            primary_positions=np.array([[-3.0, 0.5], [3.0, 0.0]]),
            secondary_positions=default_secondaries(),
            error_positions=np.array(
                [[0.5, 0.5], [0.5, -0.5], [-0.5, 0.5], [-0.5, -0.5]]),
        )
        assert geo.n_secondary == 12
        assert geo.n_error == 4
        assert geo.reference_count == 2


class TestGreensFunction:
    def test_3d_magnitude_law(self):
        d = 1.0 / (4 * math.pi)
        fp = FrequencyPoint(frequency=500.0, wavenumber=9.0)
        g = greens_function([0.0, 0.0, 0.0], [d, 0.0, 0.0], fp, MEDIUM,
                            dimension=3)
        assert abs(g) == pytest.approx(1.0, rel=1e-12)

    def test_3d_pinned_value(self):
        # k = 1, d = 1: (cos 1 + j sin 1)/(4 pi)
        fp = FrequencyPoint(frequency=1.0, wavenumber=1.0)
        g = greens_function([0.0, 0.0, 0.0], [1.0, 0.0, 0.0], fp, MEDIUM,
                            dimension=3)
        expected = complex(math.cos(1.0), math.sin(1.0)) / (4 * math.pi)
        assert g == pytest.approx(expected, rel=1e-12)
        assert g.real == pytest.approx(0.04300, abs=1e-5)
        assert g.imag == pytest.approx(0.06697, abs=1e-5)

    def test_2d_at_j0_zero_is_pure_real(self):
        kd = 2.404825557695773  # first J0 zero
        fp = FrequencyPoint(frequency=100.0, wavenumber=kd)
        g = greens_function([0.0, 0.0], [1.0, 0.0], fp, MEDIUM, dimension=2)
        assert g.real == pytest.approx(-bessel_y0(kd) / 4, rel=1e-9)
        assert abs(g.imag) < 1e-7  # j/4 * J0(kd) with J0 ~ 0

    def test_2d_formula(self):
        fp = FrequencyPoint(frequency=500.0, wavenumber=3.0)
        d = 0.7
        g = greens_function([0.0, 0.0], [d, 0.0], fp, MEDIUM)
        expected = 0.25j * complex(bessel_j0(3.0 * d), bessel_y0(3.0 * d))
        assert g == pytest.approx(expected, rel=1e-12)

    def test_3d_magnitude_decay(self):
        fp = FrequencyPoint(frequency=500.0, wavenumber=2.0)
        vals = []
        for d in (0.3, 1.0, 3.7, 10.0):
            g = greens_function([0.0, 0.0, 0.0], [0.0, d, 0.0], fp, MEDIUM,
                                dimension=3)
            vals.append(abs(g) * d)
        assert max(vals) - min(vals) <= 1e-12 * max(vals)

    def test_coincident_points_rejected(self):
        fp = FrequencyPoint(frequency=500.0, wavenumber=9.0)
        with pytest.raises(SingularityError):
            greens_function([1.0, 2.0], [1.0, 2.0], fp, MEDIUM)


class TestTransferMatrix:
    def test_single_pair_matches_greens(self):
        fp = FrequencyPoint.for_medium(500.0, MEDIUM)
        g = build_transfer_matrix([[0.0, 0.0]], [[1.0, 1.0]], fp, MEDIUM)
        assert g.shape == (1, 1)
        assert g[0, 0] == greens_function([0.0, 0.0], [1.0, 1.0], fp, MEDIUM)

    def test_default_scenario_shapes(self):
        fp = FrequencyPoint.for_medium(500.0, MEDIUM)
        err = [[0.5, 0.5], [0.5, -0.5], [-0.5, 0.5], [-0.5, -0.5]]
        G = build_transfer_matrix(default_secondaries(), err, fp, MEDIUM)
        P = build_transfer_matrix([[-3.0, 0.5], [3.0, 0.0]], err, fp, MEDIUM)
        assert G.shape == (4, 12)
        assert P.shape == (4, 2)

    def test_reciprocity_transpose(self):
        fp = FrequencyPoint.for_medium(500.0, MEDIUM)
        a = [[0.0, 0.0], [1.0, 0.3]]
        b = [[2.0, 1.0], [0.5, -1.2], [-0.7, 0.4]]
        m1 = build_transfer_matrix(a, b, fp, MEDIUM)
        m2 = build_transfer_matrix(b, a, fp, MEDIUM)
        assert np.allclose(m1, m2.T, rtol=1e-14)

    def test_singularity_reports_index(self):
        fp = FrequencyPoint.for_medium(500.0, MEDIUM)
        with pytest.raises(SingularityError):
            build_transfer_matrix([[0.0, 0.0]], [[0.0, 0.0]], fp, MEDIUM)


class TestRadiationMatrix:
    def test_single_speaker(self):
        fp = FrequencyPoint.for_medium(500.0, MEDIUM)
        model = build_radiation_matrix([[0.0, 0.0]], fp, MEDIUM)
        coef = 1.0 / (8 * MEDIUM.c * MEDIUM.rho * fp.wavenumber)
        assert model.A.shape == (1, 1)
        assert model.A[0, 0] == coef

    def test_diagonal_exact_at_500hz(self):
        fp = FrequencyPoint.for_medium(500.0, MEDIUM)
        model = build_radiation_matrix(default_secondaries(), fp, MEDIUM)
        coef = 1.0 / (8 * MEDIUM.c * MEDIUM.rho * fp.wavenumber)
        assert coef == pytest.approx(3.061e-5, rel=1e-3)
        assert np.all(np.diag(model.A) == coef)

    def test_exact_symmetry_before_regularization(self):
        fp = FrequencyPoint.for_medium(500.0, MEDIUM)
        model = build_radiation_matrix(default_secondaries(), fp, MEDIUM)
        assert np.array_equal(model.A, model.A.T)
        assert np.all(model.A.imag == 0.0)

    def test_offdiagonal_values(self):
        fp = FrequencyPoint.for_medium(500.0, MEDIUM)
        pos = np.array([[0.0, 0.0], [0.4, 0.0]])
        model = build_radiation_matrix(pos, fp, MEDIUM)
        coef = 1.0 / (8 * MEDIUM.c * MEDIUM.rho * fp.wavenumber)
        assert model.A[0, 1] == pytest.approx(
            coef * bessel_j0(fp.wavenumber * 0.4), rel=1e-12)

    def test_pd_after_policy_and_invariant(self):
        for freq in (200.0, 500.0, 1000.0):
            fp = FrequencyPoint.for_medium(freq, MEDIUM)
            model = build_radiation_matrix(default_secondaries(), fp, MEDIUM)
            w = np.linalg.eigvalsh(model.effective)
            assert w[0] > 0
            # A_tilde * C reconstructs the regularized matrix
            assert np.allclose(model.A_tilde * model.C,
                               model.A + model.delta * np.eye(model.size),
                               rtol=0, atol=1e-18)

    def test_with_target_power(self):
        fp = FrequencyPoint.for_medium(500.0, MEDIUM)
        model = build_radiation_matrix(default_secondaries(), fp, MEDIUM)
        m2 = model.with_target_power(2.5e-6)
        assert m2.C == 2.5e-6
        assert np.allclose(m2.A_tilde * m2.C,
                           m2.A + m2.delta * np.eye(m2.size),
                           rtol=0, atol=1e-18)
        assert np.array_equal(m2.A, model.A)


class TestExteriorRadiationPower:
    def test_zero_driving_signal(self):
        fp = FrequencyPoint.for_medium(500.0, MEDIUM)
        model = build_radiation_matrix(default_secondaries(), fp, MEDIUM)
        assert exterior_radiation_power(np.zeros(12, dtype=complex), model) == 0.0

    def test_identity_substitution_gives_signal_power(self):
        rng = np.random.default_rng(2)
        model = make_radiation_model(np.eye(4))
        for _ in range(20):
            y = rng.standard_normal(4) + 1j * rng.standard_normal(4)
            assert exterior_radiation_power(y, model) == pytest.approx(
                float(np.vdot(y, y).real), rel=1e-12)

    def test_two_speaker_hand_expansion(self):
        fp = FrequencyPoint.for_medium(500.0, MEDIUM)
        k = fp.wavenumber
        d = 0.9
        model = build_radiation_matrix([[0.0, 0.0], [d, 0.0]], fp, MEDIUM)
        coef = 1.0 / (8 * MEDIUM.c * MEDIUM.rho * k)
        y = np.array([1.0, 1.0], dtype=complex)
        expected = 2 * coef * (1 + bessel_j0(k * d)) + 2 * model.delta
        assert exterior_radiation_power(y, model) == pytest.approx(
            expected, rel=1e-12)

    def test_nonnegative_for_psd_model(self):
        rng = np.random.default_rng(7)
        for freq in (200.0, 500.0, 1000.0):
            fp = FrequencyPoint.for_medium(freq, MEDIUM)
            model = build_radiation_matrix(default_secondaries(), fp, MEDIUM)
            for _ in range(1000):
                y = rng.standard_normal(12) + 1j * rng.standard_normal(12)
                assert exterior_radiation_power(y, model) >= 0.0

    def test_shape_mismatch_rejected(self):
        fp = FrequencyPoint.for_medium(500.0, MEDIUM)
        model = build_radiation_matrix(default_secondaries(), fp, MEDIUM)
        with pytest.raises(ShapeError):
            exterior_radiation_power(np.zeros(5, dtype=complex), model)
