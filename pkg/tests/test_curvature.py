import json
import math

import numpy as np
import pytest

from cdsphere import curvature as cv
from cdsphere.errors import ConvergenceError, DomainError, ParameterError
from cdsphere.measures import SphereParams


class TestAnalytic:
    @pytest.mark.parametrize("n,alpha,rho,N", [(5, -5, 4.0, 5.0), (2, 1, 0.25, -1.0), (10, -10, 9.0, 10.0)])
    def test_values(self, n, alpha, rho, N):
        cert = cv.analytic_cd(SphereParams(n, alpha))
        assert cert.rho_analytic == pytest.approx(rho, abs=1e-15)
        assert cert.N == N
        assert cert.N - n <= 0

    def test_out_of_range(self):
        with pytest.raises(ParameterError):
            cv.analytic_cd(SphereParams(3, -3.01))


class TestF:
    def test_examples(self):
        assert cv.F(0, 0) == 0.0
        assert cv.F(-1, 0) == pytest.approx(-0.25, abs=1e-15)
        assert cv.F(0.6, 0.8) == pytest.approx(-0.25, abs=1e-15)
        assert cv.F_p(2, -1, 0) == pytest.approx(-0.25, abs=1e-15)

    def test_singular(self):
        with pytest.raises(DomainError):
            cv.F(1.0, 0.0)
        with pytest.raises(DomainError):
            cv.F_p(2.0, 1.0, 0.0)

    def test_bad_p(self):
        with pytest.raises(ParameterError):
            cv.F_p(0.0, 0.2, 0.1)

    def test_p1_identity_grid(self):
        a, b = np.meshgrid(np.linspace(-1, 0.99, 100), np.linspace(-1, 1, 100))
        assert np.max(np.abs(cv.F_p(1.0, a, b) - cv.F(a, b))) <= 1e-14

    def test_unbounded_above(self):
        assert cv.F(1 - 1e-6, 0) > 1e5

    def test_p_half_unbounded_below(self):
        a = 1 - 1e-6
        assert cv.F_p(0.5, a, math.sqrt(1 - a * a)) < -1e4
        # the value keeps falling along the shrinking sequence
        vals = [cv.F_p(0.5, 1 - 10.0 ** -k, math.sqrt(1 - (1 - 10.0 ** -k) ** 2)) for k in range(2, 8)]
        assert all(x > y for x, y in zip(vals, vals[1:]))

    def test_boundary_constant(self):
        t = np.linspace(0, 2 * math.pi, 100, endpoint=False)
        t = t[np.abs(t) > 1e-9]
        vals = cv.F(np.cos(t), np.sin(t))
        assert np.max(np.abs(vals + 0.25)) <= 1e-12


class TestMinDisk:
    def test_unit(self):
        value, (a, b) = cv.min_F_disk(1.0, 1.0)
        assert value == pytest.approx(-0.25, abs=1e-9)
        assert (a, b) == pytest.approx((-1.0, 0.0), abs=1e-6)

    def test_zero(self):
        assert cv.min_F_disk(0.0) == (0.0, (0.0, 0.0))

    @pytest.mark.parametrize("radius,key", [(0.5, "min_F_disk_0.5"), (0.3, "min_F_disk_0.3")])
    def test_derived(self, radius, key, oracle):
        value, (a, b) = cv.min_F_disk(radius)
        assert value == pytest.approx(oracle[key], abs=1e-9)
        assert -0.25 < value < 0
        # closed form of the minimum: -r/(1+r)^2 at (-r, 0)
        assert value == pytest.approx(-radius / (1 + radius) ** 2, abs=1e-12)

    @pytest.mark.parametrize("p", [1.0, 1.5, 2.0, 4.0])
    def test_p_family(self, p):
        assert cv.min_F_disk(1.0, p)[0] == pytest.approx(-0.25, abs=1e-9)

    def test_validation(self):
        with pytest.raises(ParameterError):
            cv.min_F_disk(1.5)
        with pytest.raises(ParameterError):
            cv.min_F_disk(0.5, p=0.5)


class TestRicci:
    def test_constant_density(self):
        p = SphereParams(2, -2, 0.6)
        assert cv.generalized_ricci_quadform(p, 1.0, 0.3) == 1.0
        assert cv.fd_ricci_oracle(p, 1.0, 0.3) == pytest.approx(1.0, abs=1e-7)

    def test_equality_case(self):
        value = cv.generalized_ricci_quadform(SphereParams(2, 1, 1 - 1e-9), math.pi, 0.0)
        assert value == pytest.approx(0.25, abs=1e-6)

    @pytest.mark.parametrize("params,theta,phi,tol", [
        (SphereParams(3, 2, 0.8), math.pi / 3, math.pi / 4, 1e-5),
        (SphereParams(2, 1, 0.5), math.pi / 2, 0.0, 1e-6),
        (SphereParams(5, 3, 0.9), 2 * math.pi / 3, math.pi / 3, 1e-5),
    ])
    def test_fd_oracle(self, params, theta, phi, tol):
        closed = cv.generalized_ricci_quadform(params, theta, phi)
        fd = cv.fd_ricci_oracle(params, theta, phi, h=1e-4)
        assert fd == pytest.approx(closed, rel=tol, abs=tol)

    def test_in_plane_matches_F(self):
        # with the tangent in the (x, y) plane the ratio reduces to F(a, b)
        p = SphereParams(4, 1.5, 0.7)
        for theta in (0.3, 1.2, 2.5):
            a, b = p.s * math.cos(theta), p.s * math.sin(theta)
            expected = p.n - 1 + p.exponent * cv.F(a, b)
            assert cv.generalized_ricci_quadform(p, theta, 0.0) == pytest.approx(expected, rel=1e-13)

    def test_fd_step_range(self):
        with pytest.raises(ParameterError):
            cv.fd_ricci_oracle(SphereParams(2, 1, 0.5), 1.0, 0.0, h=1e-1)

    def test_fd_detects_unresolved_step(self):
        # y within 1e-3 of x: a step of 1e-2 cannot resolve the curvature of the density
        with pytest.raises(ConvergenceError) as info:
            cv.fd_ricci_oracle(SphereParams(3, 2, 0.999), 0.002, 0.0, h=1e-2)
        assert set(info.value.detail) == {"h", "ratio_h", "ratio_2h"}

    def test_angles(self):
        with pytest.raises(DomainError):
            cv.generalized_ricci_quadform(SphereParams(2, 1, 0.5), 1.0, 2.0)


class TestCertify:
    def test_uniform(self):
        cert = cv.certify(SphereParams(2, 1))
        assert cert.rho_numeric == pytest.approx(0.25, abs=1e-9)
        assert cert.search_radius == 1.0
        doc = json.loads(cert.to_json())
        assert set(doc) == {"rho_analytic", "N", "rho_numeric", "argmin", "search_radius"}

    def test_constant_density(self):
        assert cv.certify(SphereParams(3, -3, 0.4)).rho_numeric == 2.0

    def test_local(self, oracle):
        cert = cv.certify(SphereParams(3, 1, 0.3), uniform_in_x=False)
        assert cert.rho_numeric == pytest.approx(2 + 4 * oracle["min_F_disk_0.3"], abs=1e-9)
        assert cert.rho_numeric >= cert.rho_analytic


class TestNorms:
    def test_euclidean(self):
        res = cv.norm_epsilon(cv.euclidean_norm(), 3, samples=2000)
        assert res.epsilon == pytest.approx(1.0, abs=1e-6)
        rho, N = res.implied_certificate(1.0)
        assert rho == pytest.approx(2.0, abs=1e-5)
        assert N == -1.0

    def test_scale_invariant(self):
        a = cv.norm_epsilon(cv.euclidean_norm(), 3, samples=500, descent_steps=5).epsilon
        b = cv.norm_epsilon(cv.euclidean_norm(3.0), 3, samples=500, descent_steps=5).epsilon
        assert abs(a - b) <= 1e-9

    def test_ellipsoid(self, oracle):
        res = cv.norm_epsilon(cv.quadratic_norm(np.diag([1.0, 1.0, 4.0])), 2, samples=4000)
        # sampling bounds the infimum from above; the grid oracle carries FD error of ~1e-7
        assert res.epsilon == pytest.approx(oracle["ellipsoid_eps_n2"], abs=1e-4)
        assert res.epsilon >= 0.25 - 1e-6

    def test_rejects_non_homogeneous(self):
        bad = cv.NormSpec(lambda y: np.sum(y * y, axis=-1), name="squared")
        with pytest.raises(ParameterError):
            cv.norm_epsilon(bad, 2, samples=10)

    def test_admissible_range(self):
        res = cv.NormEpsilonResult(0.5, (1, 0, 0), (0, 1, 0), 3)
        assert res.admissible_alpha() == (-1.0, 1.0)
