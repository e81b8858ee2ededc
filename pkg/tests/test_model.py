import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hypoestim.errors import InputError
from hypoestim.model import (
    DiffusionParam,
    DriftParams,
    ModelSpec,
    Path,
    design_matrix,
    force_basis,
    noise_matrix,
    potential,
    rough_drift,
)

finite = st.floats(-50, 50, allow_nan=False)


def test_force_basis_trig():
    np.testing.assert_array_equal(force_basis(ModelSpec.trig(2), 0.0, 3.0), [0.0, 0.0, 3.0])
    np.testing.assert_allclose(force_basis(ModelSpec.trig(2), math.pi / 2, 0.0), [1.0, 0.0, 0.0], atol=1e-16)


def test_force_basis_harmonic_and_growth():
    np.testing.assert_array_equal(force_basis(ModelSpec.harmonic(), 1.5, -2.0), [1.5, -2.0])
    np.testing.assert_array_equal(force_basis(ModelSpec.growth(), 0.3, 7.0), [7.0])


def test_rough_drift_examples():
    assert rough_drift(ModelSpec.growth(), DriftParams([]), 3.0, -1.0) == 0.0
    assert rough_drift(ModelSpec.harmonic(), DriftParams([4.0], 0.5), 1.0, 2.0) == -5.0
    assert rough_drift(ModelSpec.trig(3), DriftParams([1.0, -8.0, 8.0], 0.5), 0.0, 1.0) == -0.5


def test_rough_drift_dimension_mismatch():
    with pytest.raises(InputError):
        rough_drift(ModelSpec.trig(3), DriftParams([1.0, 2.0], 0.5), 0.0, 1.0)
    with pytest.raises(InputError):
        rough_drift(ModelSpec.growth(), DriftParams([], 0.3), 0.0, 1.0)


def test_rough_drift_is_minus_design_times_params():
    spec = ModelSpec.trig(4)
    theta = DriftParams([0.3, -1.0, 2.0, 0.7], 0.25)
    q = np.linspace(-4, 4, 17)
    p = np.cos(3 * q)
    np.testing.assert_allclose(rough_drift(spec, theta, q, p), -design_matrix(spec, q, p) @ theta.as_vector(),
                               rtol=1e-14, atol=1e-14)


@pytest.mark.parametrize(
    "dt, sigma, expected",
    [
        (1.0, 1.0, [[0.28867513459481287, 0.5], [0.0, 1.0]]),
        (0.0, 1.0, [[0.0, 0.0], [0.0, 1.0]]),
        (0.01, 2.0, [[0.005773502691896258, 0.01], [0.0, 2.0]]),
    ],
)
def test_noise_matrix(dt, sigma, expected):
    np.testing.assert_allclose(noise_matrix(dt, sigma), expected, rtol=1e-15)


@given(st.floats(1e-4, 2.0), st.floats(0.05, 5.0))
def test_noise_matrix_reproduces_growth_covariance(dt, sigma):
    R = noise_matrix(dt, sigma)
    exact = sigma**2 * np.array([[dt**3 / 3, dt**2 / 2], [dt**2 / 2, dt]])
    np.testing.assert_allclose(dt * R @ R.T, exact, rtol=1e-14)


@given(finite, finite, st.integers(1, 6))
def test_trig_basis_periodic(q, p, c):
    spec = ModelSpec.trig(c)
    np.testing.assert_allclose(force_basis(spec, q, p), force_basis(spec, q + 2 * math.pi, p), atol=1e-12)


@settings(max_examples=50)
@given(st.lists(finite, min_size=4, max_size=4), st.lists(finite, min_size=4, max_size=4), finite, finite,
       st.floats(-3, 3), st.floats(-3, 3))
def test_rough_drift_linear_in_params(u, v, q, p, a, b):
    spec = ModelSpec.trig(3)
    th_u = DriftParams.from_vector(spec, u)
    th_v = DriftParams.from_vector(spec, v)
    th_mix = DriftParams.from_vector(spec, a * np.array(u) + b * np.array(v))
    lhs = rough_drift(spec, th_mix, q, p)
    rhs = a * rough_drift(spec, th_u, q, p) + b * rough_drift(spec, th_v, q, p)
    assert lhs == pytest.approx(rhs, rel=1e-9, abs=1e-9)


def test_potential_derivative_matches_forces():
    spec = ModelSpec.trig(3)
    theta = DriftParams([1.0, -8.0, 8.0], 0.5)
    q = np.linspace(-3, 3, 41)
    h = 1e-6
    dV = (potential(theta, q + h) - potential(theta, q - h)) / (2 * h)
    # V' = sum D_j f_j = -(rough drift at p = 0)
    np.testing.assert_allclose(dV, -rough_drift(spec, theta, q, 0.0), atol=1e-7)


def test_spec_validation():
    with pytest.raises(InputError):
        ModelSpec.from_name("trig")
    with pytest.raises(InputError):
        ModelSpec("harmonic", 2)
    with pytest.raises(ValueError):
        ModelSpec.from_name("quartic", 2)
    assert ModelSpec.from_name("trig", 5).n_params == 6
    assert ModelSpec.growth().n_params == 0


def test_param_types_validate():
    with pytest.raises(InputError):
        DiffusionParam(0.0)
    with pytest.raises(InputError):
        DriftParams([np.nan], 0.1)
    with pytest.raises(InputError):
        Path(0.1, [0.0, 1.0], [0.0])
    with pytest.raises(InputError):
        Path(0.1, [0.0, np.inf])
    path = Path(0.5, [0.0, 1.0, 2.0])
    assert path.N == 2 and path.T == 1.0
    with pytest.raises(InputError):
        path.require_P()
