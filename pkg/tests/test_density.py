import math

import numpy as np
import pytest
from scipy.integrate import quad

from matrixbs.density import (
    Convention,
    ElementwiseParams,
    logpdf_T,
    logpdf_T_congruence,
    logpdf_T_inverse,
    logpdf_V,
    logpdf_elementwise,
    logpdf_sqrt_gbs,
    logpdf_uni_gbs,
    trace_argument,
)
from matrixbs.errors import (
    DegenerateEigenvaluesError,
    DomainError,
    OutsideSupportError,
    SingularMatrixError,
)
from matrixbs.kernels import gaussian_kernel, kotz_kernel
from matrixbs.transform import GbsParams

from conftest import rand_spd

AP = Convention.AS_PUBLISHED
BN = Convention.BRANCH_NORMALIZED

G11 = gaussian_kernel(1, 1)
K11 = kotz_kernel(2.0, 1.0, 1.0, 1, 1)


class TestUnivariate:
    def test_value_at_scale(self):
        # at t = beta the generator argument vanishes
        assert logpdf_uni_gbs(1.0, 1.0, 1.0, G11) == pytest.approx(
            math.log(1.0 / math.sqrt(2 * math.pi)), abs=1e-12)

    @pytest.mark.parametrize("alpha,beta", [(0.5, 1.0), (1.0, 2.0), (2.0, 5.0)])
    def test_normalization(self, alpha, beta):
        total, _ = quad(lambda t: math.exp(logpdf_uni_gbs(t, alpha, beta, G11)),
                        0.0, np.inf, limit=300)
        assert total == pytest.approx(1.0, abs=1e-8)

    @pytest.mark.parametrize("alpha,beta", [(0.5, 1.0), (1.0, 2.0), (2.0, 5.0)])
    def test_median_at_scale(self, alpha, beta):
        below, _ = quad(lambda t: math.exp(logpdf_uni_gbs(t, alpha, beta, G11)),
                        0.0, beta, limit=300)
        assert below == pytest.approx(0.5, abs=1e-6)

    def test_kotz_normalization(self):
        total, _ = quad(lambda t: math.exp(logpdf_uni_gbs(t, 0.8, 2.0, K11)),
                        0.0, np.inf, limit=300)
        assert total == pytest.approx(1.0, abs=1e-8)

    def test_domain(self):
        with pytest.raises(DomainError):
            logpdf_uni_gbs(-1.0, 1.0, 1.0, G11)
        with pytest.raises(DomainError):
            logpdf_uni_gbs(1.0, 0.0, 1.0, G11)


class TestSquareRoot:
    def test_change_of_variable_against_univariate(self):
        for v in np.linspace(0.2, 3.0, 29):
            lhs = logpdf_sqrt_gbs(float(v), 0.7, 1.5, G11)
            rhs = logpdf_uni_gbs(float(v) ** 2, 0.7, 1.5, G11) + math.log(2 * v)
            assert lhs == pytest.approx(rhs, abs=1e-12)

    def test_value_at_scale(self):
        assert logpdf_sqrt_gbs(1.0, 1.0, 1.0, G11) == pytest.approx(
            math.log(2.0 / math.sqrt(2 * math.pi)), abs=1e-12)

    def test_normalization(self):
        total, _ = quad(lambda v: math.exp(logpdf_sqrt_gbs(v, 0.9, 1.3, G11)),
                        0.0, np.inf, limit=300)
        assert total == pytest.approx(1.0, abs=1e-8)


class TestElementwise:
    def test_reduces_to_univariate(self):
        p = ElementwiseParams(alpha=np.array([[0.7]]), beta=np.array([[1.4]]))
        for t in (0.3, 1.0, 2.2):
            lhs = logpdf_elementwise(np.array([[t]]), p, G11)
            assert lhs == pytest.approx(logpdf_uni_gbs(t, 0.7, 1.4, G11), abs=1e-14)

    def test_value_at_scale_matrix(self):
        A = np.array([[0.5, 1.0], [1.5, 2.0]])
        B = np.array([[1.0, 2.0], [0.5, 3.0]])
        p = ElementwiseParams(alpha=A, beta=B)
        val = logpdf_elementwise(B, p, gaussian_kernel(2, 2))
        expected = float(np.sum(-np.log(A * B))) - 2.0 * math.log(2 * math.pi)
        assert val == pytest.approx(expected, abs=1e-12)

    def test_two_dim_normalization(self):
        p = ElementwiseParams(alpha=np.array([[0.8], [1.2]]),
                              beta=np.array([[1.0], [2.0]]))
        k = gaussian_kernel(2, 1)

        def pdf(t1, t2):
            return math.exp(logpdf_elementwise(np.array([[t1], [t2]]), p, k))

        def inner(t1):
            val, _ = quad(lambda t2: pdf(t1, t2), 0.0, np.inf, limit=200)
            return val

        total, _ = quad(inner, 0.0, np.inf, limit=200, epsabs=1e-9)
        assert total == pytest.approx(1.0, abs=1e-6)

    def test_positivity_required(self):
        p = ElementwiseParams(alpha=np.ones((1, 1)), beta=np.ones((1, 1)))
        with pytest.raises(DomainError):
            logpdf_elementwise(np.array([[-0.5]]), p, G11)
        with pytest.raises(DomainError):
            ElementwiseParams(alpha=np.array([[0.0]]), beta=np.ones((1, 1)))


class TestVDensity:
    def test_scalar_assembly(self):
        p = GbsParams(n=1, xi=np.eye(1), beta=np.eye(1))
        z = 2.0 - 0.5
        expected = math.log(1.25) + (-0.5 * math.log(2 * math.pi) - 0.5 * z * z)
        assert logpdf_V([[2.0]], p, G11, AP) == pytest.approx(expected, abs=1e-12)

    def test_jacobian_paths_agree(self, rng):
        for _ in range(100):
            n = int(rng.integers(1, 5))
            m = int(rng.integers(1, n + 1))
            p = GbsParams(n=n, xi=rand_spd(m, rng), beta=rand_spd(m, rng))
            V = rng.normal(size=(n, m)) * rng.uniform(0.5, 2.0)
            kern = gaussian_kernel(n, m)
            a = logpdf_V(V, p, kern, AP, jacobian="sv")
            b = logpdf_V(V, p, kern, AP, jacobian="det")
            assert a == pytest.approx(b, abs=1e-10)

    def test_scalar_case_equals_sqrt_law(self):
        p = GbsParams(n=1, xi=np.array([[0.7]]), beta=np.array([[1.8]]))
        for v in np.linspace(0.3, 3.0, 21):
            lhs = logpdf_V([[float(v)]], p, G11, AP)
            rhs = logpdf_sqrt_gbs(float(v), 0.7, 1.8, G11)
            assert lhs == pytest.approx(rhs, abs=1e-12)

    def test_branch_support_enforced(self, rng):
        p = GbsParams(n=3, xi=np.eye(1), beta=np.eye(1))
        with pytest.raises(OutsideSupportError):
            logpdf_V(np.array([[0.5], [0.0], [0.0]]), p, gaussian_kernel(3, 1), BN)

    def test_branch_adds_constant(self, rng):
        p = GbsParams(n=4, xi=rand_spd(2, rng), beta=rand_spd(2, rng))
        U, _, Vt = np.linalg.svd(rng.normal(size=(4, 2)), full_matrices=False)
        V = (U * np.array([2.5, 1.6])) @ Vt @ p.delta
        kern = gaussian_kernel(4, 2)
        ap = logpdf_V(V, p, kern, AP)
        bn = logpdf_V(V, p, kern, BN)
        assert bn - ap == pytest.approx(2 * math.log(2.0), abs=1e-12)


class TestTDensity:
    @pytest.mark.parametrize("kernel", [G11, K11])
    @pytest.mark.parametrize("alpha,beta", [(0.5, 1.0), (1.0, 2.0), (2.0, 5.0)])
    def test_univariate_reduction(self, kernel, alpha, beta):
        p = GbsParams(n=1, xi=np.array([[alpha]]), beta=np.array([[beta]]))
        for t in np.linspace(0.1 * beta, 5.0 * beta, 50):
            a = logpdf_T(np.array([[float(t)]]), p, kernel, AP)
            b = logpdf_uni_gbs(float(t), alpha, beta, kernel)
            assert a == pytest.approx(b, abs=1e-12)

    def test_zero_at_scale_matrix(self, rng):
        beta = rand_spd(2, rng, 1.0, 3.0)
        p = GbsParams(n=6, xi=rand_spd(2, rng), beta=beta)
        assert logpdf_T(beta, p, gaussian_kernel(6, 2), AP) == -math.inf

    def test_kernel_identity_m2(self, rng):
        p = GbsParams(n=6, xi=rand_spd(2, rng), beta=rand_spd(2, rng))
        gk = gaussian_kernel(6, 2)
        kk = kotz_kernel(1.0, 0.5, 1.0, 6, 2)
        for _ in range(40):
            T = rand_spd(2, rng, 0.8, 6.0)
            assert logpdf_T(T, p, gk, AP) == pytest.approx(
                logpdf_T(T, p, kk, AP), abs=1e-10)

    @pytest.mark.parametrize("n", [1, 2, 3, 5])
    def test_branch_normalization_scalar(self, n):
        beta = 1.5
        p = GbsParams(n=n, xi=np.array([[0.8]]), beta=np.array([[beta]]))
        kern = gaussian_kernel(n, 1)

        def pdf(t):
            return math.exp(logpdf_T(np.array([[t]]), p, kern, BN))

        total, _ = quad(pdf, beta, np.inf, limit=300)
        assert total == pytest.approx(1.0, abs=1e-6)

    def test_branch_normalization_kotz(self):
        beta = 2.0
        p = GbsParams(n=2, xi=np.array([[1.1]]), beta=np.array([[beta]]))
        kern = kotz_kernel(2.0, 1.0, 1.0, 2, 1)

        def pdf(t):
            return math.exp(logpdf_T(np.array([[t]]), p, kern, BN))

        total, _ = quad(pdf, beta, np.inf, limit=300)
        assert total == pytest.approx(1.0, abs=1e-6)

    def test_scalar_path_equals_general(self, rng):
        p = GbsParams(n=6, xi=rand_spd(2, rng), beta=2.5 * np.eye(2))
        kern = gaussian_kernel(6, 2)
        for _ in range(20):
            T = rand_spd(2, rng, 1.0, 8.0)
            a = logpdf_T(T, p, kern, AP, path="scalar")
            b = logpdf_T(T, p, kern, AP, path="general")
            assert a == pytest.approx(b, abs=1e-10)

    def test_convention_constant(self, rng):
        p = GbsParams(n=6, xi=rand_spd(2, rng), beta=np.eye(2))
        kern = gaussian_kernel(6, 2)
        T = np.eye(2) * 3.0 + np.array([[0.0, 0.4], [0.4, 0.0]])
        assert (logpdf_T(T, p, kern, BN) - logpdf_T(T, p, kern, AP)
                == pytest.approx(2 * math.log(2.0), abs=1e-12))

    def test_outside_support_raises(self):
        p = GbsParams(n=6, xi=np.eye(2), beta=np.eye(2))
        T = np.diag([0.5, 3.0])  # one eigenvalue below the scale
        with pytest.raises(OutsideSupportError):
            logpdf_T(T, p, gaussian_kernel(6, 2), BN)

    def test_tied_eigenvalues_raise(self):
        p = GbsParams(n=6, xi=np.eye(2), beta=np.eye(2))
        with pytest.raises(DegenerateEigenvaluesError):
            logpdf_T(3.0 * np.eye(2), p, gaussian_kernel(6, 2), AP)

    def test_reduction_chain_on_grid(self):
        # matrix law, univariate law and 1x1 element-wise law coincide
        for kernel in (G11, K11):
            alpha, beta = 0.8, 1.7
            p = GbsParams(n=1, xi=np.array([[alpha]]), beta=np.array([[beta]]))
            ep = ElementwiseParams(alpha=np.array([[alpha]]),
                                   beta=np.array([[beta]]))
            for t in np.linspace(0.1 * beta, 5.0 * beta, 50):
                a = logpdf_T(np.array([[float(t)]]), p, kernel, AP)
                b = logpdf_uni_gbs(float(t), alpha, beta, kernel)
                c = logpdf_elementwise(np.array([[float(t)]]), ep, kernel)
                assert a == pytest.approx(b, abs=1e-12)
                assert b == pytest.approx(c, abs=1e-12)

    def test_gfactor_sign_diagnostic(self, rng):
        from matrixbs.density import gfactor_sign
        beta = rand_spd(2, rng, 1.0, 2.0)
        p = GbsParams(n=5, xi=np.eye(2), beta=beta)  # n - m odd
        inside = p.delta @ np.diag([2.5, 1.8]) @ p.delta
        assert gfactor_sign(0.5 * (inside + inside.T), p) == 1
        outside = p.delta @ np.diag([2.5, 0.6]) @ p.delta
        assert gfactor_sign(0.5 * (outside + outside.T), p) == -1
        assert gfactor_sign(beta, p) == 0  # zero set at the boundary

    def test_trace_argument_symmetry(self, rng):
        # invariant under T -> beta T^{-1} beta
        for _ in range(20):
            p = GbsParams(n=6, xi=rand_spd(2, rng), beta=rand_spd(2, rng))
            T = rand_spd(2, rng, 0.5, 5.0)
            dinv = np.linalg.inv(p.delta)
            W = dinv @ T @ dinv
            u1 = trace_argument(W, p.xi)
            T2 = p.beta @ np.linalg.inv(T) @ p.beta
            W2 = dinv @ T2 @ dinv
            u2 = trace_argument(W2, p.xi)
            assert u1 == pytest.approx(u2, abs=1e-10 * max(1.0, u1))


class TestTransformationLaws:
    def test_inverse_scalar_change_of_variables(self):
        p = GbsParams(n=1, xi=np.array([[0.9]]), beta=np.array([[1.7]]))
        for s in np.linspace(0.2, 2.5, 25):
            lhs = logpdf_T_inverse(np.array([[float(s)]]), p, G11, AP)
            rhs = logpdf_T(np.array([[1.0 / s]]), p, G11, AP) - 2.0 * math.log(s)
            assert lhs == pytest.approx(rhs, abs=1e-11)

    def test_inverse_consistency_m2(self, rng):
        kern = gaussian_kernel(6, 2)
        for _ in range(100):
            p = GbsParams(n=6, xi=rand_spd(2, rng), beta=rand_spd(2, rng, 0.8, 2.0))
            S = rand_spd(2, rng, 0.2, 1.5)
            _, logdet_S = np.linalg.slogdet(S)
            lhs = logpdf_T_inverse(S, p, kern, AP)
            rhs = logpdf_T(np.linalg.inv(S), p, kern, AP) - 3.0 * logdet_S
            assert lhs == pytest.approx(rhs, abs=1e-10)

    def test_inverse_boundary(self, rng):
        beta = rand_spd(2, rng, 1.0, 2.0)
        p = GbsParams(n=6, xi=np.eye(2), beta=beta)
        assert logpdf_T_inverse(np.linalg.inv(beta), p, gaussian_kernel(6, 2), AP) == -math.inf

    def test_congruence_identity_matrix(self, rng):
        p = GbsParams(n=6, xi=rand_spd(2, rng), beta=rand_spd(2, rng))
        kern = gaussian_kernel(6, 2)
        T = rand_spd(2, rng, 1.0, 5.0)
        assert logpdf_T_congruence(T, np.eye(2), p, kern, AP) == pytest.approx(
            logpdf_T(T, p, kern, AP), abs=1e-12)

    def test_congruence_scaling_relates_to_scale_change(self, rng):
        # C = c I turns the law of T into the law with scale c^2 beta
        c = 1.7
        xi = rand_spd(2, rng)
        beta = rand_spd(2, rng)
        p = GbsParams(n=6, xi=xi, beta=beta)
        p_scaled = GbsParams(n=6, xi=xi, beta=c * c * beta)
        kern = gaussian_kernel(6, 2)
        for _ in range(10):
            Y = rand_spd(2, rng, 1.0, 6.0)
            lhs = logpdf_T_congruence(Y, c * np.eye(2), p, kern, AP)
            rhs = logpdf_T(Y, p_scaled, kern, AP)
            assert lhs == pytest.approx(rhs, abs=1e-10)

    def test_congruence_consistency_random_c(self, rng):
        kern = gaussian_kernel(6, 2)
        for _ in range(100):
            p = GbsParams(n=6, xi=rand_spd(2, rng), beta=rand_spd(2, rng, 0.8, 2.0))
            T = rand_spd(2, rng, 1.0, 5.0)
            U, _, Vt = np.linalg.svd(rng.normal(size=(2, 2)))
            C = U @ np.diag(rng.uniform(0.3, 3.0, size=2)) @ Vt
            _, logdet_C = np.linalg.slogdet(C)
            Y = C.T @ T @ C
            Y = 0.5 * (Y + Y.T)
            lhs = logpdf_T_congruence(Y, C, p, kern, AP)
            rhs = logpdf_T(T, p, kern, AP) - 3.0 * logdet_C
            assert lhs == pytest.approx(rhs, abs=1e-10)

    def test_singular_c_rejected(self, rng):
        p = GbsParams(n=6, xi=np.eye(2), beta=np.eye(2))
        with pytest.raises(SingularMatrixError):
            logpdf_T_congruence(3.0 * np.eye(2) + 0.1, np.ones((2, 2)), p,
                                gaussian_kernel(6, 2), AP)


class TestKernelIdentityEverywhere:
    def test_all_density_ops(self, rng):
        # Gaussian kernel and Kotz(1, 1/2, 1) agree on every operation
        checks = 0
        for _ in range(100):
            n = int(rng.integers(1, 7))
            m = int(rng.integers(1, min(n, 3) + 1))
            gk = gaussian_kernel(n, m)
            kk = kotz_kernel(1.0, 0.5, 1.0, n, m)
            p = GbsParams(n=n, xi=rand_spd(m, rng), beta=rand_spd(m, rng))
            V = rng.normal(size=(n, m)) * rng.uniform(0.6, 1.8)
            assert logpdf_V(V, p, gk, AP) == pytest.approx(
                logpdf_V(V, p, kk, AP), abs=1e-10)
            T = rand_spd(m, rng, 0.7, 5.0)
            assert logpdf_T(T, p, gk, AP) == pytest.approx(
                logpdf_T(T, p, kk, AP), abs=1e-10)
            assert logpdf_T_inverse(np.linalg.inv(T), p, gk, AP) == pytest.approx(
                logpdf_T_inverse(np.linalg.inv(T), p, kk, AP), abs=1e-10)
            checks += 1
            if m == 1:
                g1, k1 = gaussian_kernel(1, 1), kotz_kernel(1.0, 0.5, 1.0, 1, 1)
                t = float(rng.uniform(0.2, 4.0))
                assert logpdf_uni_gbs(t, 0.8, 1.5, g1) == pytest.approx(
                    logpdf_uni_gbs(t, 0.8, 1.5, k1), abs=1e-10)
                assert logpdf_sqrt_gbs(t, 0.8, 1.5, g1) == pytest.approx(
                    logpdf_sqrt_gbs(t, 0.8, 1.5, k1), abs=1e-10)
            ep = ElementwiseParams(alpha=np.full((n, m), 0.9),
                                   beta=np.full((n, m), 1.2))
            Tpos = rng.uniform(0.4, 3.0, size=(n, m))
            assert logpdf_elementwise(Tpos, ep, gk) == pytest.approx(
                logpdf_elementwise(Tpos, ep, kk), abs=1e-10)
        assert checks == 100
