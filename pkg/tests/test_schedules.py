import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from forge.schedules import (
    Basis,
    CrabCoefficients,
    FourierZhouCoefficients,
    basis_value,
    crab_angle_jacobian,
    crab_angles,
    fourier_zhou_angles,
    fourier_zhou_jacobian,
    linear_dqa_angles,
    sample_noise,
)
from oracles import central_difference

BASES = list(Basis)


def _coeffs(rng, p, nc, basis):
    return CrabCoefficients(rng.normal(), rng.normal(size=nc), rng.normal(size=nc), sample_noise(nc, rng), basis, p)


def test_basis_examples():
    for n in (1, 2, 5):
        assert basis_value(Basis.FOURIER_SINE, n, 0.3, 0.0, 4.0) == 0.0
    assert basis_value(Basis.CHEBYSHEV_SIGNOMIAL, 1, 0.0, 1.2, 4.0) == pytest.approx(0.3)
    assert basis_value(Basis.CHEBYSHEV_SIGNOMIAL, 2, 0.0, 2.0, 4.0) == pytest.approx(-0.5)
    with pytest.raises(ValueError):
        basis_value(Basis.FOURIER_SINE, 1, 0.0, 5.0, 4.0)
    with pytest.raises(ValueError):
        basis_value(Basis.FOURIER_SINE, 0, 0.0, 1.0, 4.0)


@given(st.integers(1, 8), st.floats(0, 1))
def test_chebyshev_without_noise_is_chebyshev_polynomial(n, x):
    ref = np.polynomial.chebyshev.Chebyshev.basis(n)(x)
    assert basis_value(Basis.CHEBYSHEV_SIGNOMIAL, n, 0.0, x * 3.0, 3.0) == pytest.approx(ref, abs=1e-12)


def test_crab_linear_ramp_example():
    s = crab_angles(CrabCoefficients.linear(4, [], Basis.FOURIER_SINE))
    np.testing.assert_allclose(s.theta_z, [0.125, 0.375, 0.625, 0.875])
    np.testing.assert_allclose(s.theta_x, [0.875, 0.625, 0.375, 0.125])


def test_crab_single_mode_example():
    c = CrabCoefficients(0.0, [0.0], [1.0], [0.0], Basis.FOURIER_SINE, 2)
    assert crab_angles(c).theta_z[0] == pytest.approx(0.25 * np.sin(np.pi / 4))


@given(st.integers(1, 20), st.integers(0, 6), st.sampled_from(BASES), st.integers(0, 2**16))
def test_shared_envelope_identity(p, nc, basis, seed):
    rng = np.random.default_rng(seed)
    c = _coeffs(rng, p, nc, basis)
    c = CrabCoefficients(c.c0, c.cx, c.cx, c.noise, basis, p)
    s = crab_angles(c)
    m = np.arange(1, p + 1)
    np.testing.assert_allclose(s.theta_z * (p - m + 0.5), s.theta_x * (m - 0.5), atol=1e-12)


@given(st.integers(1, 16), st.integers(0, 5), st.sampled_from(BASES), st.integers(0, 2**16),
       st.floats(-2, 2), st.floats(-2, 2))
def test_crab_angles_are_linear_in_coefficients(p, nc, basis, seed, a, b):
    rng = np.random.default_rng(seed)
    c1 = _coeffs(rng, p, nc, basis)
    c2 = c1.with_vector(rng.normal(size=2 * nc + 1))
    mix = c1.with_vector(a * c1.as_vector() + b * c2.as_vector())
    lhs = crab_angles(mix).as_vector()
    rhs = a * crab_angles(c1).as_vector() + b * crab_angles(c2).as_vector()
    np.testing.assert_allclose(lhs, rhs, atol=1e-12)


def test_jacobian_closed_forms():
    c = CrabCoefficients(1.0, [0.0, 0.0], [0.0, 0.0], [0.1, -0.2], Basis.CHEBYSHEV_SIGNOMIAL, 4)
    jac = crab_angle_jacobian(c)
    assert jac.shape == (8, 5)
    assert (jac[0, 0], jac[4, 0]) == (0.875, 0.125)
    assert np.all(jac[:4, 3:] == 0) and np.all(jac[4:, 1:3] == 0)


@given(st.integers(1, 16), st.integers(0, 5), st.sampled_from(BASES), st.integers(0, 2**16))
def test_jacobian_matches_finite_differences(p, nc, basis, seed):
    rng = np.random.default_rng(seed)
    c = _coeffs(rng, p, nc, basis)
    fd = np.column_stack([
        central_difference(lambda v, k=k: crab_angles(c.with_vector(v)).as_vector()[k], c.as_vector(), 1e-4)
        for k in range(2 * p)
    ]).T
    np.testing.assert_allclose(crab_angle_jacobian(c), fd, atol=1e-8)


def test_boundary_structure_of_the_ramps():
    for p in (1, 4, 9):
        jac = crab_angle_jacobian(CrabCoefficients.linear(p, [0.0], Basis.FOURIER_SINE))
        m = np.arange(1, p + 1)
        # ramps extrapolate to zero at m = 1/2 (z) and m = P + 1/2 (x)
        np.testing.assert_allclose(jac[p:, 0], (m - 0.5) / p)
        np.testing.assert_allclose(jac[:p, 0], (p + 0.5 - m) / p)


def test_extension_pads_without_changing_angles(rng):
    c = _coeffs(rng, 12, 3, Basis.FOURIER_SINE)
    ext = c.extended([0.2, -0.4])
    assert ext.nc == 5
    np.testing.assert_array_equal(ext.noise[:3], c.noise)
    np.testing.assert_allclose(crab_angles(ext).as_vector(), crab_angles(c).as_vector(), atol=1e-15)


def test_coefficient_validation_and_serialization(tmp_path):
    with pytest.raises(ValueError):
        CrabCoefficients(1.0, [0.0], [0.0, 0.0], [0.0], Basis.FOURIER_SINE, 4)
    with pytest.raises(ValueError):
        CrabCoefficients(1.0, [0.0], [0.0], [0.7], Basis.FOURIER_SINE, 4)
    c = CrabCoefficients(1.0, [0.5], [0.25], [0.1], Basis.CHEBYSHEV_SIGNOMIAL, 4)
    back = CrabCoefficients.from_dict(c.to_dict())
    np.testing.assert_array_equal(back.as_vector(), c.as_vector())
    assert back.basis is Basis.CHEBYSHEV_SIGNOMIAL and back.noise.tolist() == [0.1]


def test_fourier_zhou_examples():
    zero = fourier_zhou_angles(FourierZhouCoefficients(np.zeros(3), np.zeros(3), 5))
    assert np.all(zero.as_vector() == 0)
    c = 0.8
    assert fourier_zhou_angles(FourierZhouCoefficients([0.0], [c], 1)).theta_z[0] == pytest.approx(c / np.sqrt(2))
    assert fourier_zhou_angles(FourierZhouCoefficients([c], [0.0], 1)).theta_x[0] == pytest.approx(c / np.sqrt(2))
    with pytest.raises(ValueError):
        FourierZhouCoefficients(np.zeros(3), np.zeros(3), 2)


def test_fourier_zhou_jacobian_is_the_design_matrix(rng):
    c = FourierZhouCoefficients(rng.normal(size=3), rng.normal(size=3), 7)
    np.testing.assert_allclose(fourier_zhou_jacobian(7, 3) @ c.as_vector(), fourier_zhou_angles(c).as_vector(),
                               atol=1e-14)


def test_linear_dqa_examples():
    s = linear_dqa_angles(1, 1.0)
    assert (s.theta_z[0], s.theta_x[0]) == (0.5, 0.5)
    s = linear_dqa_angles(64, 0.78)
    np.testing.assert_allclose(s.theta_x + s.theta_z, 0.78)
    assert s.theta_z[0] == pytest.approx(0.78 * 0.5 / 64)


def test_noise_is_bounded_and_reproducible():
    a = sample_noise(50, 1)
    assert np.all(np.abs(a) <= 0.5)
    np.testing.assert_array_equal(a, sample_noise(50, 1))
    assert not np.array_equal(a, sample_noise(50, 2))
