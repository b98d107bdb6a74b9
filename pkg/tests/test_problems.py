import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from saddlebench import (DiracGan, NoUniqueSolutionError, PrimalDualPoint,
                         QuadraticSaddle, conditioned_matrix, eval_oracle,
                         load_matrix, make_dirac, make_quadratic,
                         make_smooth_lasso, phi_s, phi_s_prime, phi_s_second,
                         quadratic_solution, save_matrix)
from saddlebench.problems import GENERAL, SYM_NEG_DEF, SYM_POS_DEF


def central_diff_value(problem, z, v, h=1e-6):
    return (problem.value(z + h * v) - problem.value(z - h * v)) / (2 * h)


def central_diff_grad(problem, z, v, h=1e-6):
    return (problem.grad(z + h * v) - problem.grad(z - h * v)) / (2 * h)


def small_problems():
    rng = np.random.default_rng(42)
    quad = make_quadratic(12, 7, kappa_x=50.0, kappa_y=5.0, kappa_c=20.0, seed=1)
    bil = make_quadratic(6, 6, kappa_c=10.0, bilinear=True, seed=2)
    lasso = make_smooth_lasso(m_rows=20, n_feat=15, seed=3)
    dirac = make_dirac(9, seed=4)
    return [("quadratic", quad), ("bilinear", bil), ("lasso", lasso),
            ("dirac", dirac)], rng


class TestPrimalDualPoint:
    def test_concat_and_dims(self):
        p = PrimalDualPoint([1.0, 2.0], [3.0])
        assert p.dims == (2, 1)
        np.testing.assert_array_equal(p.z, [1.0, 2.0, 3.0])

    def test_rejects_nonfinite(self):
        with pytest.raises(ValueError):
            PrimalDualPoint([np.nan], [1.0])
        with pytest.raises(ValueError):
            PrimalDualPoint([1.0], [np.inf])

    def test_rejects_empty(self):
        with pytest.raises(ValueError):
            PrimalDualPoint(np.zeros(0), [1.0])

    def test_from_concat_roundtrip(self):
        p = PrimalDualPoint.from_concat(np.arange(5.0), (3, 2))
        np.testing.assert_array_equal(p.x, [0, 1, 2])
        np.testing.assert_array_equal(p.y, [3, 4])
        with pytest.raises(ValueError):
            PrimalDualPoint.from_concat(np.arange(4.0), (3, 2))


class TestConditionedMatrix:
    def test_kappa_one_symmetric_has_equal_spectrum(self):
        a = conditioned_matrix(3, 3, 1.0, seed=9, mode=SYM_POS_DEF)
        eig = np.linalg.eigvalsh(a)
        np.testing.assert_allclose(eig, np.ones(3), rtol=1e-12)

    def test_realized_condition_number_exact(self):
        # independent eigendecomposition oracle
        a = conditioned_matrix(100, 100, 1e3, seed=7, mode=SYM_POS_DEF)
        eig = np.linalg.eigvalsh(a)
        assert eig.min() > 0
        assert abs(eig.max() / eig.min() - 1e3) <= 1e-6 * 1e3

    def test_general_rectangular_shape_and_kappa(self):
        c = conditioned_matrix(1500, 500, 1e3, seed=5, mode=GENERAL)
        assert c.shape == (1500, 500)
        sv = np.linalg.svd(c, compute_uv=False)
        assert abs(sv.max() / sv.min() - 1e3) <= 1e-6 * 1e3

    def test_sym_neg_def(self):
        a = conditioned_matrix(8, 8, 12.0, seed=1, mode=SYM_NEG_DEF)
        eig = np.linalg.eigvalsh(a)
        assert eig.max() < 0
        np.testing.assert_allclose(a, a.T, atol=1e-14)

    def test_seed_is_bit_reproducible(self):
        a = conditioned_matrix(20, 10, 30.0, seed=123, mode=GENERAL)
        b = conditioned_matrix(20, 10, 30.0, seed=123, mode=GENERAL)
        assert np.array_equal(a, b)

    def test_invalid_parameters(self):
        with pytest.raises(ValueError):
            conditioned_matrix(3, 3, 0.5, seed=0)
        with pytest.raises(ValueError):
            conditioned_matrix(3, 4, 2.0, seed=0, mode=SYM_POS_DEF)
        with pytest.raises(ValueError):
            conditioned_matrix(1, 5, 2.0, seed=0, mode=GENERAL)
        with pytest.raises(ValueError):
            conditioned_matrix(0, 3, 2.0, seed=0)


class TestMakeQuadratic:
    def test_separable_setting(self):
        # the large separable configuration: definite blocks, no coupling
        p = make_quadratic(1500, 500, kappa_x=1e3, kappa_y=1e2, seed=11)
        assert p.dims == (1500, 500)
        assert not p.C.any()
        eig_x = np.linalg.eigvalsh(p.A_x)
        eig_y = np.linalg.eigvalsh(p.A_y)
        assert eig_x.min() > 0 and eig_y.max() < 0
        assert abs(eig_x.max() / eig_x.min() - 1e3) <= 1e-6 * 1e3
        assert abs(eig_y.min() / eig_y.max() - 1e2) <= 1e-6 * 1e2

    def test_bilinear_setting(self):
        p = make_quadratic(1000, 1000, kappa_c=1e2, bilinear=True, seed=12)
        assert not p.A_x.any() and not p.A_y.any()
        assert not p.b_x.any() and not p.b_y.any()
        sv = np.linalg.svd(p.C, compute_uv=False)
        assert sv.min() > 0  # full rank
        assert abs(sv.max() / sv.min() - 1e2) <= 1e-6 * 1e2

    def test_bilinear_requires_square(self):
        with pytest.raises(ValueError):
            make_quadratic(4, 5, kappa_c=10.0, bilinear=True, seed=0)

    def test_desk_scale_hand_expansion(self):
        p = QuadraticSaddle(np.zeros((2, 2)), np.zeros((2, 2)), np.eye(2),
                            np.zeros(2), np.zeros(2))
        z = np.array([1.0, 2.0, 3.0, 4.0])
        assert p.value(z) == pytest.approx(1 * 3 + 2 * 4)
        np.testing.assert_allclose(p.grad(z), [3, 4, 1, 2])

    def test_missing_kappas_raise(self):
        with pytest.raises(ValueError):
            make_quadratic(3, 3, seed=0)


class TestQuadraticSolution:
    def test_bilinear_identity_origin(self):
        p = QuadraticSaddle(np.zeros((3, 3)), np.zeros((3, 3)), np.eye(3),
                            np.zeros(3), np.zeros(3))
        zs = quadratic_solution(p)
        np.testing.assert_allclose(zs.z, np.zeros(6), atol=1e-14)

    def test_separable_closed_form(self):
        e1 = np.array([1.0, 0.0])
        p = QuadraticSaddle(np.eye(2), -np.eye(2), np.zeros((2, 2)), -e1,
                            np.zeros(2))
        zs = quadratic_solution(p)
        np.testing.assert_allclose(zs.x, e1, atol=1e-14)
        np.testing.assert_allclose(zs.y, np.zeros(2), atol=1e-14)

    def test_random_instance_residual(self):
        p = make_quadratic(10, 10, kappa_x=30.0, kappa_y=10.0, kappa_c=5.0, seed=8)
        zs = quadratic_solution(p)
        # independent dense-solve oracle on the stacked system
        K = np.block([[p.A_x, p.C], [p.C.T, p.A_y]])
        rhs = -np.concatenate([p.b_x, p.b_y])
        assert np.linalg.norm(K @ zs.z - rhs) <= 1e-10
        assert np.linalg.norm(p.grad(zs.z)) <= 1e-8 * (1 + np.linalg.norm(rhs))

    def test_singular_system_raises(self):
        p = QuadraticSaddle(np.zeros((2, 2)), np.zeros((2, 2)),
                            np.zeros((2, 2)), np.zeros(2), np.zeros(2))
        with pytest.raises(NoUniqueSolutionError):
            quadratic_solution(p)


class TestPhiS:
    def test_origin(self):
        for s in (1e-3, 0.1, 1.0, 10.0):
            assert phi_s(0.0, s) == 0.0
            assert phi_s_prime(0.0, s) == 0.0

    def test_unit_values(self):
        assert phi_s(1.0, 1.0) == pytest.approx(1.0 - np.log(2.0), abs=1e-12)
        assert phi_s_prime(1.0, 1.0) == pytest.approx(0.5)

    def test_small_s_approaches_absolute_value(self):
        assert abs(phi_s(1.0, 1e-6) - 1.0) <= 2e-5

    def test_invalid_s(self):
        for fn in (phi_s, phi_s_prime, phi_s_second):
            with pytest.raises(ValueError):
                fn(1.0, 0.0)
            with pytest.raises(ValueError):
                fn(1.0, -1.0)

    @given(t=st.floats(-1e6, 1e6), s=st.floats(1e-6, 1e3))
    @settings(max_examples=200, deadline=None)
    def test_derivative_properties(self, t, s):
        # odd, bounded slope; positive curvature; squeezed between 0 and |t|
        assert phi_s_prime(-t, s) == pytest.approx(-phi_s_prime(t, s), abs=1e-12)
        assert abs(phi_s_prime(t, s)) < 1.0
        assert phi_s_second(t, s) > 0.0
        assert phi_s(t, s) <= abs(t) + 1e-12
        assert phi_s(t, s) >= -1e-12 * max(abs(t), s)  # roundoff floor
        # the gap to |t| is exactly s*ln(1 + |t|/s)
        assert phi_s(t, s) == pytest.approx(abs(t) - s * np.log1p(abs(t) / s), rel=1e-12)


class TestOracles:
    def test_quadratic_grad_matches_matrix_arithmetic(self):
        p = make_quadratic(8, 5, kappa_x=10.0, kappa_y=4.0, kappa_c=3.0, seed=6)
        rng = np.random.default_rng(0)
        for _ in range(10):
            z = rng.standard_normal(13)
            x, y = z[:8], z[8:]
            expected = np.concatenate([p.A_x @ x + p.C @ y + p.b_x,
                                       p.A_y @ y + p.C.T @ x + p.b_y])
            np.testing.assert_allclose(p.grad(z), expected, atol=1e-12)

    def test_eval_oracle_trivial_quadratic(self):
        p = QuadraticSaddle(np.eye(2), -np.eye(2), np.zeros((2, 2)),
                            np.zeros(2), np.zeros(2))
        value, grad, hvp = eval_oracle(p, np.zeros(4))
        assert value == 0.0
        np.testing.assert_array_equal(grad, np.zeros(4))
        np.testing.assert_allclose(hvp(np.array([1.0, 0, 0, 0])),
                                   [1.0, 0, 0, 0])

    def test_eval_oracle_dimension_mismatch(self):
        p = make_dirac(4, seed=0)
        with pytest.raises(ValueError):
            eval_oracle(p, np.zeros(5))
        _, _, hvp = eval_oracle(p, np.zeros(8))
        with pytest.raises(ValueError):
            hvp(np.zeros(3))

    def test_dirac_stationary_point(self):
        for n in (3, 100, 1000):
            p = make_dirac(n, seed=n)
            z_star = np.concatenate([p.c_data, np.zeros(n)])
            assert np.linalg.norm(p.grad(z_star)) <= 1e-12

    def test_lasso_reduces_to_least_squares(self):
        p = make_smooth_lasso(m_rows=12, n_feat=6, lam=0.0, seed=5)
        rng = np.random.default_rng(2)
        x = rng.standard_normal(6)
        z = np.concatenate([x, x, np.zeros(6)])  # w = x, y = 0
        r = p.A @ x - p.b
        assert p.value(z) == pytest.approx(0.5 * r @ r, rel=1e-12)

    @pytest.mark.parametrize("name,problem", small_problems()[0])
    def test_grad_matches_value_fd(self, name, problem):
        rng = np.random.default_rng(hash(name) % 2**32)
        size = problem.size
        for _ in range(100):
            z = rng.standard_normal(size)
            v = rng.standard_normal(size)
            v /= np.linalg.norm(v)
            fd = central_diff_value(problem, z, v)
            an = problem.grad(z) @ v
            assert abs(fd - an) <= 1e-5 * (1.0 + abs(an)), name

    @pytest.mark.parametrize("name,problem", small_problems()[0])
    def test_hvp_matches_grad_fd(self, name, problem):
        rng = np.random.default_rng((hash(name) + 1) % 2**32)
        size = problem.size
        for _ in range(100):
            z = rng.standard_normal(size)
            v = rng.standard_normal(size)
            v /= np.linalg.norm(v)
            fd = central_diff_grad(problem, z, v)
            an = problem.hvp(z, v)
            assert np.linalg.norm(fd - an) <= 1e-5 * (1.0 + np.linalg.norm(an)), name

    @pytest.mark.parametrize("name,problem", small_problems()[0])
    def test_hvp_linear_and_symmetric(self, name, problem):
        rng = np.random.default_rng((hash(name) + 2) % 2**32)
        size = problem.size
        for _ in range(20):
            z = rng.standard_normal(size)
            u = rng.standard_normal(size)
            v = rng.standard_normal(size)
            a, b = rng.standard_normal(2)
            lin = problem.hvp(z, a * u + b * v)
            ref = a * problem.hvp(z, u) + b * problem.hvp(z, v)
            assert np.linalg.norm(lin - ref) <= 1e-12 * (1 + np.linalg.norm(ref))
            s1 = u @ problem.hvp(z, v)
            s2 = v @ problem.hvp(z, u)
            assert abs(s1 - s2) <= 1e-10 * (1 + abs(s1))


class TestMatrixDump:
    def test_roundtrip_and_header(self, tmp_path):
        rng = np.random.default_rng(3)
        a = rng.standard_normal((7, 4))
        path = tmp_path / "a.mat"
        save_matrix(path, a)
        raw = path.read_bytes()
        assert len(raw) == 16 + 7 * 4 * 8
        assert raw[:8] == b"SBMATRIX"
        b = load_matrix(path)
        assert np.array_equal(a, b)

    def test_rejects_bad_magic(self, tmp_path):
        path = tmp_path / "bad.mat"
        path.write_bytes(b"NOTMAGIC" + b"\x00" * 16)
        with pytest.raises(ValueError):
            load_matrix(path)
