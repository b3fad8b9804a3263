"""Log densities of the generalised Birnbaum-Saunders family.

Covers the univariate and square-root laws, the element-wise matrix
construction, and the matrix-transformation laws for the rectangular
factor V and the positive definite matrix T = V'V, together with the
inverse and congruence transformation properties of T.

Two normalisation conventions ship for the V- and T-densities.
AS_PUBLISHED evaluates the product-form constant verbatim; for m >= 1 its
T-density integrates to 2^{-m} over the branch region (all eigenvalues of
beta^{-1} T above 1).  BRANCH_NORMALIZED multiplies by 2^m and restricts
support to the branch region, which makes the T-density the exact law of
the shipped sampler; it is the default.  The choice shifts log values by
the parameter-free constant m ln 2, so likelihood maximisers and model
comparisons are unaffected.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from .errors import (
    DegenerateEigenvaluesError,
    DomainError,
    NotSpdError,
    OutsideSupportError,
    SingularMatrixError,
)
from .kernels import KernelSpec, log_h
from .linalg import as_matrix, check_spd, log_mv_gamma, sym_part
from .transform import (
    GbsParams,
    TIE_TOL,
    branch_eigs,
    jacobian_det_form,
    log_abs_gfactor,
)

__all__ = ["Convention", "ElementwiseParams", "gfactor_sign", "logpdf_T",
           "logpdf_T_congruence", "logpdf_T_inverse", "logpdf_V",
           "logpdf_elementwise", "logpdf_sqrt_gbs", "logpdf_uni_gbs",
           "trace_argument"]


class Convention(enum.Enum):
    """Normalisation convention for the V- and T-densities."""

    AS_PUBLISHED = "as-published"
    BRANCH_NORMALIZED = "branch"


@dataclass(frozen=True)
class ElementwiseParams:
    """Entry-wise shape and scale matrices for the element-by-element law."""

    alpha: np.ndarray
    beta: np.ndarray

    def __post_init__(self):
        alpha = as_matrix(self.alpha, "alpha")
        beta = as_matrix(self.beta, "beta")
        if alpha.shape != beta.shape:
            raise DomainError(f"alpha {alpha.shape} and beta {beta.shape} differ in shape")
        if alpha.min() <= 0.0 or beta.min() <= 0.0:
            raise DomainError("alpha and beta entries must be strictly positive")
        object.__setattr__(self, "alpha", alpha)
        object.__setattr__(self, "beta", beta)


def _check_kernel_dims(kernel: KernelSpec, n: int, m: int):
    if (kernel.n, kernel.m) != (n, m):
        raise DomainError(
            f"kernel normalised for dims ({kernel.n}, {kernel.m}), expected ({n}, {m})")


def _uni_u(t: float, alpha: float, beta: float) -> float:
    return max(t / beta + beta / t - 2.0, 0.0) / alpha**2


def logpdf_uni_gbs(t: float, alpha: float, beta: float, kernel: KernelSpec) -> float:
    """Univariate generalised Birnbaum-Saunders log density at t > 0."""
    if t <= 0.0:
        raise DomainError(f"t must be positive, got {t}")
    if alpha <= 0.0 or beta <= 0.0:
        raise DomainError("alpha and beta must be positive")
    _check_kernel_dims(kernel, 1, 1)
    prefactor = (-1.5 * math.log(t) + math.log(t + beta)
                 - math.log(2.0) - math.log(alpha) - 0.5 * math.log(beta))
    return prefactor + log_h(kernel, _uni_u(t, alpha, beta))


def logpdf_sqrt_gbs(v: float, alpha: float, beta: float, kernel: KernelSpec) -> float:
    """Square-root variant: law of v = sqrt(t) on v > 0."""
    if v <= 0.0:
        raise DomainError(f"v must be positive, got {v}")
    if alpha <= 0.0 or beta <= 0.0:
        raise DomainError("alpha and beta must be positive")
    _check_kernel_dims(kernel, 1, 1)
    prefactor = (math.log1p(beta / v**2) - math.log(alpha) - 0.5 * math.log(beta))
    return prefactor + log_h(kernel, _uni_u(v * v, alpha, beta))


def logpdf_elementwise(T, params: ElementwiseParams, kernel: KernelSpec) -> float:
    """Element-by-element matrix law: entry-wise transforms with a joint kernel."""
    T = as_matrix(T, "T")
    if T.shape != params.alpha.shape:
        raise DomainError(f"T {T.shape} does not match parameters {params.alpha.shape}")
    if T.min() <= 0.0:
        raise DomainError("all entries of T must be strictly positive")
    _check_kernel_dims(kernel, *T.shape)
    A, B = params.alpha, params.beta
    prefactor = float(np.sum(-1.5 * np.log(T) + np.log(T + B)
                             - math.log(2.0) - np.log(A) - 0.5 * np.log(B)))
    u = float(np.sum(np.maximum(T / B + B / T - 2.0, 0.0) / A**2))
    return prefactor + log_h(kernel, u)


def trace_argument(W: np.ndarray, xi: np.ndarray) -> float:
    """tr Xi^{-2} (W + W^{-1} - 2 I) for symmetric positive definite W.

    Invariant under W -> W^{-1}; nonnegative, zero exactly at W = I.
    """
    W = sym_part(W)
    w, P = np.linalg.eigh(W)
    if w.min() <= 0.0:
        raise NotSpdError(f"trace argument needs SPD input, min eigenvalue {w.min():g}")
    return _trace_argument_spectral(w, P, xi)


def _trace_argument_spectral(w: np.ndarray, P: np.ndarray, xi: np.ndarray) -> float:
    inner = sym_part((P * (w + 1.0 / w - 2.0)) @ P.T)
    M = np.linalg.inv(xi @ xi)
    return max(float(np.sum(M * inner)), 0.0)


def _whitened_spectrum(Y: np.ndarray, A: np.ndarray):
    """Eigen-system of A^{-T} Y A^{-1} for SPD Y, computed stably.

    Factors Y = L L' and takes the SVD of L' A^{-1}, so the conditioning of
    A enters only linearly.  Returns (eigenvalues descending, eigenvectors).
    """
    L = np.linalg.cholesky(Y)
    G = np.linalg.solve(A.T, L).T        # G = L' A^{-1}, W = G' G
    _, s, Vt = np.linalg.svd(G, full_matrices=False)
    return s * s, Vt.T


def _tie_check(values: np.ndarray):
    if values.size > 1:
        gaps = values[:-1] - values[1:]
        if gaps.min() < TIE_TOL * max(abs(values[0]), 1.0):
            raise DegenerateEigenvaluesError(
                f"tied eigenvalues at relative tolerance {TIE_TOL:g}")


def _t_const(params: GbsParams, kernel: KernelSpec) -> float:
    n, m = params.n, params.m
    _, logdet_beta = np.linalg.slogdet(params.beta)
    _, logdet_xi = np.linalg.slogdet(params.xi)
    return (0.5 * n * m * math.log(math.pi) - m * math.log(2.0)
            - log_mv_gamma(m, n / 2) - 0.5 * n * logdet_beta - n * logdet_xi)


def logpdf_V(V, params: GbsParams, kernel: KernelSpec,
             convention: Convention = Convention.BRANCH_NORMALIZED,
             jacobian: str = "sv") -> float:
    """Log density of the rectangular factor V (n x m, full column rank).

    jacobian: 'sv' uses the singular-value product form, 'det' the explicit
    determinant assembly; the two agree to rounding.
    """
    V = as_matrix(V, "V")
    _check_kernel_dims(kernel, params.n, params.m)
    n, m = params.n, params.m
    g2 = branch_eigs(V, params)
    if convention is Convention.BRANCH_NORMALIZED and g2[-1] <= 1.0:
        raise OutsideSupportError(
            f"smallest eigenvalue of beta^{{-1}}V'V is {g2[-1]:g}, not above 1")

    if jacobian == "sv":
        log_g, _ = log_abs_gfactor(g2, n, m, form="first")
        _, logdet_xi = np.linalg.slogdet(params.xi)
        _, logdet_beta = np.linalg.slogdet(params.beta)
        log_j = -n * logdet_xi - 0.5 * n * logdet_beta + log_g
    elif jacobian == "det":
        det_val = abs(jacobian_det_form(V, params))
        log_j = math.log(det_val) if det_val > 0.0 else -math.inf
    else:
        raise DomainError(f"jacobian must be 'sv' or 'det', got {jacobian!r}")

    dinv = np.linalg.inv(params.delta)
    u = trace_argument(dinv @ (V.T @ V) @ dinv, params.xi)
    value = log_j + log_h(kernel, u)
    if convention is Convention.BRANCH_NORMALIZED:
        value += m * math.log(2.0)
    return float(value)


def _logpdf_T_core(delta_eigs: np.ndarray, u: float, logdet_T: float,
                   params: GbsParams, kernel: KernelSpec,
                   convention: Convention, logdet_extra: float = 0.0,
                   t_exponent: float | None = None, tie_check: bool = False) -> float:
    n, m = params.n, params.m
    if convention is Convention.BRANCH_NORMALIZED and delta_eigs[-1] <= 1.0:
        raise OutsideSupportError(
            f"smallest scaled eigenvalue {delta_eigs[-1]:g} not above 1")
    log_g, _ = log_abs_gfactor(delta_eigs, n, m, form="first")
    if math.isinf(log_g):
        # zero of the product factor: density vanishes on this boundary set
        return -math.inf
    if tie_check:
        _tie_check(delta_eigs)
    exponent = (n - m - 1) / 2 if t_exponent is None else t_exponent
    value = (_t_const(params, kernel) + log_g + exponent * logdet_T
             + logdet_extra + log_h(kernel, u))
    if convention is Convention.BRANCH_NORMALIZED:
        value += m * math.log(2.0)
    return float(value)


def logpdf_T(T, params: GbsParams, kernel: KernelSpec,
             convention: Convention = Convention.BRANCH_NORMALIZED,
             path: str = "auto") -> float:
    """Log density of the SPD matrix T = V'V.

    path: 'auto' picks the scalar-scale shortcut when beta is a multiple of
    the identity, 'general' forces the congruence route, 'scalar' forces
    the shortcut (requires scalar beta).
    """
    T = check_spd(T, "T")
    _check_kernel_dims(kernel, params.n, params.m)
    if T.shape[0] != params.m:
        raise DomainError(f"T is {T.shape[0]}x{T.shape[0]}, expected m={params.m}")

    b = params.scalar_beta()
    if path == "auto":
        path = "scalar" if b is not None else "general"
    if path == "scalar":
        if b is None:
            raise DomainError("scalar path requires beta proportional to the identity")
        lam, P = np.linalg.eigh(T)
        deltas = (lam / b)[::-1].copy()
        logdet_T = float(np.sum(np.log(lam)))
        inner = sym_part((P * (lam / b + b / lam - 2.0)) @ P.T)
        M = np.linalg.inv(params.xi @ params.xi)
        u = max(float(np.sum(M * inner)), 0.0)
    elif path == "general":
        deltas, vecs = _whitened_spectrum(T, params.delta)
        u = _trace_argument_spectral(deltas, vecs, params.xi)
        _, logdet_T = np.linalg.slogdet(T)
    else:
        raise DomainError(f"path must be 'auto', 'scalar' or 'general', got {path!r}")
    return _logpdf_T_core(deltas, u, float(logdet_T), params, kernel, convention,
                          tie_check=True)


def gfactor_sign(T, params: GbsParams) -> int:
    """Sign of the as-published product factor at T: +1, -1, or 0 on its zero set.

    Negative values occur outside the branch region when n - m is odd; the
    log densities always use the magnitude, so this is the diagnostic for
    points where the as-published formula goes negative.
    """
    T = check_spd(T, "T")
    deltas, _ = _whitened_spectrum(T, params.delta)
    _, sign = log_abs_gfactor(deltas, params.n, params.m, form="first")
    return sign


def logpdf_T_inverse(S, params: GbsParams, kernel: KernelSpec,
                     convention: Convention = Convention.BRANCH_NORMALIZED) -> float:
    """Log density of S = T^{-1}.

    Agrees with logpdf_T(S^{-1}) - (m+1) log|det S| by the change of
    variables (dT) = |det S|^{-(m+1)} (dS).
    """
    S = check_spd(S, "S")
    _check_kernel_dims(kernel, params.n, params.m)
    n, m = params.n, params.m
    if S.shape[0] != m:
        raise DomainError(f"S is {S.shape[0]}x{S.shape[0]}, expected m={m}")
    Ws = sym_part(params.delta @ S @ params.delta)
    w = np.linalg.eigvalsh(Ws)
    if w.min() <= 0.0:
        raise NotSpdError("delta S delta is numerically singular")
    rhos = np.sort(1.0 / w)[::-1].copy()
    u = trace_argument(Ws, params.xi)
    _, logdet_S = np.linalg.slogdet(S)
    return _logpdf_T_core(rhos, u, float(logdet_S), params, kernel, convention,
                          t_exponent=-(n + m + 1) / 2)


def logpdf_T_congruence(Y, C, params: GbsParams, kernel: KernelSpec,
                        convention: Convention = Convention.BRANCH_NORMALIZED) -> float:
    """Log density of Y = C' T C for an invertible m x m matrix C.

    Agrees with logpdf_T(C'^{-1} Y C^{-1}) - (m+1) log|det C|.
    """
    Y = check_spd(Y, "Y")
    C = as_matrix(C, "C")
    _check_kernel_dims(kernel, params.n, params.m)
    n, m = params.n, params.m
    if Y.shape[0] != m or C.shape != (m, m):
        raise DomainError(f"Y and C must be {m}x{m}")
    sign_c, logdet_C = np.linalg.slogdet(C)
    if sign_c == 0:
        raise SingularMatrixError("C is singular")
    A = params.delta @ C
    thetas, vecs = _whitened_spectrum(Y, A)
    if thetas[-1] <= 0.0:
        raise NotSpdError("congruence-transformed Y is numerically singular")
    u = _trace_argument_spectral(thetas, vecs, params.xi)
    _, logdet_Y = np.linalg.slogdet(Y)
    return _logpdf_T_core(thetas, u, float(logdet_Y), params, kernel, convention,
                          logdet_extra=-n * float(logdet_C))
