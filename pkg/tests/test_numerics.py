import math

import numpy as np
import pytest

from spectralmc import (
    DomainError,
    GridCapError,
    NotPositiveDefiniteError,
    QuadratureGrid,
    RngStream,
    SpdMatrix,
    cholesky_solve_and_sqrt,
    gamma_reflected,
    log_gamma,
    quad_integrate,
    random_rotation,
)


class TestSpdMatrix:
    def test_identity_factor(self):
        s = SpdMatrix(np.eye(2))
        np.testing.assert_allclose(s.chol, np.eye(2))

    def test_diagonal_square_roots(self):
        s = SpdMatrix(np.diag([4.0, 9.0]))
        np.testing.assert_allclose(s.chol, np.diag([2.0, 3.0]))

    def test_roundtrip_2x2(self):
        s = SpdMatrix([[2.0, 1.0], [1.0, 2.0]])
        np.testing.assert_allclose(s.chol @ s.chol.T, s.entries, atol=1e-12)

    def test_roundtrip_random_spd(self):
        rng = np.random.default_rng(7)
        for _ in range(25):
            d = int(rng.integers(1, 6))
            a = rng.normal(size=(d, d))
            m = a.T @ a + 1e-3 * np.eye(d)
            s = SpdMatrix(m)
            err = np.max(np.abs(s.chol @ s.chol.T - s.entries))
            assert err < 1e-10 * np.max(np.abs(s.entries))

    def test_apply_inverse(self):
        s = SpdMatrix([[2.0, 1.0], [1.0, 2.0]])
        v = np.array([1.0, -3.0])
        np.testing.assert_allclose(s.apply(s.apply_inverse(v)), v, atol=1e-12)

    def test_not_positive_definite(self):
        with pytest.raises(NotPositiveDefiniteError, match="not positive definite"):
            SpdMatrix([[1.0, 2.0], [2.0, 1.0]])

    def test_asymmetric_rejected(self):
        with pytest.raises(DomainError):
            SpdMatrix([[1.0, 0.5], [0.2, 1.0]])

    def test_cholesky_solve_and_sqrt_wraps(self):
        s = cholesky_solve_and_sqrt([[4.0, 0.0], [0.0, 9.0]])
        assert isinstance(s, SpdMatrix)
        np.testing.assert_allclose(s.apply_inverse([4.0, 9.0]), [1.0, 1.0])


class TestRotation:
    def test_d1_is_plus_one(self):
        u = random_rotation(1, RngStream(3, 0))
        np.testing.assert_allclose(u, [[1.0]])

    def test_orthogonal_and_special(self):
        u = random_rotation(3, RngStream(3, 1))
        assert np.max(np.abs(u.T @ u - np.eye(3))) < 1e-10
        assert abs(np.linalg.det(u) - 1.0) < 1e-10

    def test_deterministic(self):
        a = random_rotation(4, RngStream(9, 5))
        b = random_rotation(4, RngStream(9, 5))
        np.testing.assert_array_equal(a, b)

    def test_preserves_lengths(self):
        rng = np.random.default_rng(11)
        u = random_rotation(5, RngStream(11, 0))
        for _ in range(20):
            x = rng.normal(size=5)
            assert abs(np.linalg.norm(u @ x) - np.linalg.norm(x)) < 1e-10


class TestRng:
    def test_equal_keys_equal_sequences(self):
        a = RngStream(123, 45).normal(64)
        b = RngStream(123, 45).normal(64)
        np.testing.assert_array_equal(a, b)

    def test_distinct_streams_differ(self):
        a = RngStream(123, 1).normal(8)
        b = RngStream(123, 2).normal(8)
        assert not np.array_equal(a, b)

    def test_bad_seed_rejected(self):
        with pytest.raises(DomainError):
            RngStream(-1)


class TestGamma:
    def test_half(self):
        assert math.isclose(gamma_reflected(0.5), math.sqrt(math.pi), rel_tol=1e-12)
        assert math.isclose(log_gamma(0.5), 0.5 * math.log(math.pi), rel_tol=1e-12)

    def test_minus_half_reflection(self):
        assert math.isclose(gamma_reflected(-0.5), -2.0 * math.sqrt(math.pi),
                            rel_tol=1e-12)

    def test_factorial(self):
        assert math.isclose(gamma_reflected(4.0), 6.0, rel_tol=1e-14)

    def test_poles(self):
        for z in (0.0, -1.0, -2.0):
            with pytest.raises(DomainError):
                gamma_reflected(z)
        with pytest.raises(DomainError):
            log_gamma(-0.5)


class TestQuadrature:
    def test_constant_on_unit_interval(self):
        grid = QuadratureGrid.uniform(0.0, 1.0, 101)
        out = quad_integrate(lambda u: 1.0 + 0.0j, grid)
        assert abs(out.value - 1.0) < 1e-13

    def test_gaussian_integral(self):
        grid = QuadratureGrid.uniform(-10.0, 10.0, 2001)
        out = quad_integrate(lambda u: complex(math.exp(-u[0] ** 2)), grid)
        assert abs(out.value - math.sqrt(math.pi)) < 1e-6

    def test_cosine_symmetry(self):
        grid = QuadratureGrid.uniform(-math.pi, math.pi, 2001)
        out = quad_integrate(lambda u: complex(math.cos(u[0])), grid)
        assert abs(out.value) < 1e-10

    def test_vectorized_matches_pointwise(self):
        grid = QuadratureGrid.uniform(-3.0, 3.0, 301, dim=2)
        f_vec = lambda pts: np.exp(-np.sum(pts ** 2, axis=-1)).astype(complex)
        f_pt = lambda p: complex(math.exp(-float(p @ p)))
        a = quad_integrate(f_vec, grid, vectorized=True)
        b = quad_integrate(f_pt, grid)
        assert a.value == b.value

    def test_error_proxy_bounds_refinement(self):
        # doubling the node count moves the result by less than the proxy
        for nodes in (51, 101, 201):
            grid = QuadratureGrid.uniform(-5.0, 5.0, nodes)
            f = lambda pts: np.exp(-pts[:, 0] ** 2).astype(complex)
            coarse = quad_integrate(f, grid, vectorized=True)
            fine = quad_integrate(
                f, QuadratureGrid.uniform(-5.0, 5.0, 2 * nodes - 1), vectorized=True)
            assert abs(fine.value - coarse.value) < coarse.error

    def test_gauss_legendre_rule(self):
        grid = QuadratureGrid.uniform(0.0, 1.0, 12, rule="gauss-legendre")
        out = quad_integrate(lambda pts: pts[:, 0] ** 7 + 0j, grid, vectorized=True)
        assert abs(out.value - 0.125) < 1e-14

    def test_node_cap_refused(self):
        with pytest.raises(GridCapError):
            QuadratureGrid.uniform(-1.0, 1.0, 3000, dim=3)

    def test_dim_cap_refused(self):
        with pytest.raises(GridCapError):
            QuadratureGrid.uniform(-1.0, 1.0, 5, dim=4)

    def test_non_finite_integrand_rejected(self):
        grid = QuadratureGrid.uniform(-1.0, 1.0, 11)
        f = lambda u: complex(math.inf) if u[0] == 0.0 else complex(1.0 / u[0])
        with pytest.raises(DomainError):
            quad_integrate(f, grid)
