"""Tests for the limiting second-order operator and its Laguerre eigenpairs."""

import math

import numpy as np
import pytest

from random_billiards.laplacian import (
    apply_laplacian,
    laguerre_eigenpair,
    predicted_eigenvalue,
    scattering_moments,
)
from random_billiards.stats import make_stream
from random_billiards.two_masses import WallLaw, derive_params

Z_GRID = [0.1, 0.3, 0.7, 1.0, 1.8, 2.5, 3.3, 4.1, 5.0]


def test_eigen_identity_up_to_order_five():
    # L phi_n = -2 n phi_n pointwise, using closed-form derivatives
    for n in range(6):
        pair = laguerre_eigenpair(n)
        assert pair.eigenvalue == -2.0 * n
        for z in Z_GRID:
            lhs = apply_laplacian(
                pair, z, df=lambda x: pair.derivative(x, 1), d2f=lambda x: pair.derivative(x, 2)
            )
            rhs = -2.0 * n * pair(z)
            assert abs(lhs - rhs) <= 1e-10 * max(1.0, abs(rhs)), (n, z)


def test_eigenpair_small_orders_explicit():
    phi0 = laguerre_eigenpair(0)
    phi1 = laguerre_eigenpair(1)
    phi2 = laguerre_eigenpair(2)
    z = 1.7
    assert phi0(z) == 1.0
    assert np.isclose(phi1(z), 1.0 - z * z / 2.0, rtol=1e-14)
    assert np.isclose(phi2(z), 1.0 - z * z + z**4 / 8.0, rtol=1e-14)


def test_eigenpair_validation():
    with pytest.raises(ValueError):
        laguerre_eigenpair(-1)
    with pytest.raises(ValueError):
        laguerre_eigenpair(21)


def test_two_forms_agree_with_closed_form_derivatives():
    # expanded (1/z - z) f' + f'' and the flux form rho^-1 (rho f')' must
    # agree to 1e-8 when exact derivatives are supplied
    def f(z):
        return z**3 - 2.0 * z + 0.5

    def df(z):
        return 3.0 * z * z - 2.0

    def d2f(z):
        return 6.0 * z

    for z in Z_GRID:
        a = apply_laplacian(f, z, df=df, d2f=d2f, form="expanded")
        b = apply_laplacian(f, z, df=df, d2f=d2f, form="sturm_liouville")
        assert abs(a - b) <= 1e-8 * max(1.0, abs(a)), z


def test_two_forms_agree_with_fd_fallback():
    def f(z):
        return math.sin(z) + 0.3 * z * z

    for z in Z_GRID:
        a = apply_laplacian(f, z, form="expanded")
        b = apply_laplacian(f, z, form="sturm_liouville")
        assert abs(a - b) <= 2e-5 * max(1.0, abs(a)), z


def test_apply_laplacian_validation():
    with pytest.raises(ValueError):
        apply_laplacian(lambda z: z, 0.0)
    with pytest.raises(ValueError):
        apply_laplacian(lambda z: z, -1.0)
    with pytest.raises(ValueError):
        apply_laplacian(lambda z: z, 1.0, form="weak")


def test_predicted_eigenvalue():
    assert predicted_eigenvalue(0, 0.1) == 1.0
    assert np.isclose(predicted_eigenvalue(1, 0.1), 0.96, rtol=1e-14)
    assert np.isclose(predicted_eigenvalue(2, 0.05), 1.0 - 8 * 0.0025, rtol=1e-14)
    with pytest.raises(ValueError):
        predicted_eigenvalue(-1, 0.1)
    with pytest.raises(ValueError):
        predicted_eigenvalue(1, 0.8)


def test_scattering_moments_match_generator_coefficients():
    # E[Z - z] -> 2 gamma^2 (1/z - z) and E[(Z - z)^2] -> 4 gamma^2 as
    # gamma -> 0 under the +/- sigma wall law; check at small gamma within
    # Monte Carlo error plus the O(gamma^3) bias allowance
    gamma = 0.05
    params = derive_params(gamma)
    law = WallLaw.bernoulli(1.0)
    stream = make_stream(31)
    for i, z in enumerate((0.6, 1.0, 2.2)):
        est = scattering_moments(z, params, law, 200_000, stream.fork(i))
        drift = 2.0 * gamma**2 * (1.0 / z - z)
        diffusion = 4.0 * gamma**2
        assert abs(est.e1 - drift) < 4.0 * est.se1 + 2.0 * gamma**3
        assert abs(est.e2 - diffusion) < 4.0 * est.se2 + 10.0 * gamma**3
        # third moment is higher order in gamma
        assert abs(est.e3) < 4.0 * est.se3 + 10.0 * gamma**3


def test_scattering_moments_validation():
    params = derive_params(0.1)
    law = WallLaw.gaussian(1.0)
    with pytest.raises(ValueError):
        scattering_moments(0.0, params, law, 10**4, make_stream(0))
    with pytest.raises(ValueError):
        scattering_moments(1.0, params, law, 10**3, make_stream(0))
