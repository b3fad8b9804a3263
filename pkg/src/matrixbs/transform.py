"""The matrix square-root transformation, its branch inverse, and its Jacobian.

The forward map sends a full-column-rank n x m matrix V to

    Z = (V Delta^{-1} - V'^+ Delta) Xi^{-1},

with Delta the SPD square root of the scale matrix beta and Xi the SPD
shape matrix.  The map is 2^m-to-one; the shipped inverse always selects
the branch on which every singular value of V Delta^{-1} is >= 1.

Three independent Jacobian computations are provided: an explicit
nm x nm determinant assembly, two equivalent singular-value product
forms, and a central-difference oracle.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import (
    DegenerateEigenvaluesError,
    DomainError,
    RankDeficientError,
)
from .linalg import (
    as_matrix,
    check_spd,
    commutation,
    kron,
    pinv,
    spd_sqrt,
    sym_part,
    vec,
    _signed_thin_svd,
)

# Relative gap below which singular values count as tied.
TIE_TOL = 1e-10
# Distance from the unit singular value at which product-form Jacobians
# are treated as sitting on the zero boundary.
BOUNDARY_TOL = 1e-12

__all__ = ["GbsParams", "JacobianReport", "forward_map", "inverse_map_branch",
           "jacobian_det_form", "jacobian_fd_oracle", "jacobian_report",
           "jacobian_sv_form", "log_abs_gfactor"]


@dataclass(frozen=True)
class GbsParams:
    """Degrees n, SPD shape Xi, SPD scale beta, with Delta = beta^{1/2} cached."""

    n: int
    xi: np.ndarray
    beta: np.ndarray
    delta: np.ndarray = None

    def __post_init__(self):
        xi = check_spd(self.xi, "xi")
        m = xi.shape[0]
        beta = np.asarray(self.beta, dtype=float)
        if beta.ndim == 0:
            beta = float(beta) * np.eye(m)
        beta = check_spd(beta, "beta")
        if beta.shape[0] != m:
            raise DomainError(f"xi is {m}x{m} but beta is {beta.shape[0]}x{beta.shape[0]}")
        if self.n < m:
            raise DomainError(f"need degrees n >= m, got n={self.n}, m={m}")
        if self.delta is None:
            delta = spd_sqrt(beta)
        else:
            delta = np.asarray(self.delta, dtype=float)
            if np.abs(delta @ delta - beta).max() > 1e-10 * max(np.abs(beta).max(), 1.0):
                raise DomainError("supplied delta is not the square root of beta")
        object.__setattr__(self, "xi", xi)
        object.__setattr__(self, "beta", beta)
        object.__setattr__(self, "delta", delta)

    @classmethod
    def from_delta(cls, n: int, xi, delta) -> "GbsParams":
        delta = check_spd(delta, "delta")
        return cls(n=n, xi=np.asarray(xi, dtype=float), beta=delta @ delta, delta=delta)

    @property
    def m(self) -> int:
        return self.xi.shape[0]

    def scalar_beta(self, rtol: float = 1e-12) -> float | None:
        """beta as a scalar when beta = b * I within tolerance, else None."""
        b = self.beta[0, 0]
        if np.abs(self.beta - b * np.eye(self.m)).max() <= rtol * max(abs(b), 1.0):
            return float(b)
        return None


@dataclass(frozen=True)
class JacobianReport:
    """Cross-validated Jacobian values for one (V, params) instance."""

    det_form: float
    sv_form: float
    fd_form: float | None
    rel_disagreement: float
    sign: int  # sign of the product-form factor before taking absolute value


def _validate_v(V, params: GbsParams) -> np.ndarray:
    V = as_matrix(V, "V")
    n, m = V.shape
    if (n, m) != (params.n, params.m):
        raise DomainError(f"V has shape {V.shape}, params expect ({params.n}, {params.m})")
    return V


def forward_map(V, params: GbsParams) -> np.ndarray:
    """Z = (V Delta^{-1} - V'^+ Delta) Xi^{-1} for full-column-rank V."""
    V = _validate_v(V, params)
    vtp = pinv(V).T  # V'^+ = (V^+)' = V (V'V)^{-1}
    core = V @ np.linalg.inv(params.delta) - vtp @ params.delta
    return core @ np.linalg.inv(params.xi)


def inverse_map_branch(Z, params: GbsParams, tie_tol: float = TIE_TOL) -> np.ndarray:
    """Right inverse of forward_map on the branch with singular values >= 1.

    Factors Y = Z Xi as H1 diag(d) Q' and maps each singular value through
    l = (d + sqrt(d^2 + 4)) / 2 >= 1, returning V = H1 diag(l) Q' Delta.
    Z = 0 returns the canonical fixed point [I_m; 0] Delta.  Tied singular
    values of Z Xi are rejected (pass tie_tol=0 to disable the gate).
    """
    Z = as_matrix(Z, "Z")
    n, m = Z.shape
    if (n, m) != (params.n, params.m):
        raise DomainError(f"Z has shape {Z.shape}, params expect ({params.n}, {params.m})")
    if not Z.any():
        stacked = np.zeros((n, m))
        stacked[:m, :m] = np.eye(m)
        return stacked @ params.delta
    H1, d, Q = _signed_thin_svd(Z @ params.xi)
    if tie_tol > 0.0 and m > 1:
        gaps = d[:-1] - d[1:]
        if gaps.min() < tie_tol * max(d[0], 1.0):
            raise DegenerateEigenvaluesError(
                f"tied singular values (gap {gaps.min():g}) admit no unique inverse")
    ell = 0.5 * (d + np.sqrt(d * d + 4.0))
    return (H1 * ell) @ Q.T @ params.delta


def branch_eigs(V, params: GbsParams) -> np.ndarray:
    """Descending eigenvalues of beta^{-1} V'V, computed symmetrically.

    These are the squared singular values of V Delta^{-1}; the branch
    region is where all of them exceed 1.
    """
    V = _validate_v(V, params)
    dinv = np.linalg.inv(params.delta)
    g2 = np.linalg.eigvalsh(sym_part(dinv @ (V.T @ V) @ dinv))[::-1]
    if g2[-1] <= 0.0:
        raise RankDeficientError("V'V is numerically singular")
    return g2


def log_abs_gfactor(deltas: np.ndarray, n: int, m: int, form: str = "first",
                    boundary_tol: float = BOUNDARY_TOL):
    """log|G| and sign of the product-form Jacobian factor at eigenvalues deltas.

    first:   prod (1 - 1/d_i)^(n-m) (1 + 1/d_i) prod_{i<j} (1 - 1/(d_i d_j))
    second:  prod d_i^(-n) (d_i - 1)^(n-m) (1 + d_i) prod_{i<j} (d_i d_j - 1)

    Returns (log_abs, sign); sign = 0 with log_abs = -inf on the zero set,
    which includes anything within boundary_tol of d_i = 1 or d_i d_j = 1.
    """
    d = np.asarray(deltas, dtype=float)
    factors = []
    if form == "first":
        if n > m:
            factors.extend((1.0 - 1.0 / di) for di in d for _ in range(n - m))
        factors.extend((1.0 + 1.0 / di) for di in d)
        factors.extend(1.0 - 1.0 / (d[i] * d[j])
                       for i in range(m) for j in range(i + 1, m))
    elif form == "second":
        factors.extend(di ** (-float(n)) for di in d)
        if n > m:
            factors.extend((di - 1.0) for di in d for _ in range(n - m))
        factors.extend((1.0 + di) for di in d)
        factors.extend(d[i] * d[j] - 1.0 for i in range(m) for j in range(i + 1, m))
    else:
        raise DomainError(f"form must be 'first' or 'second', got {form!r}")

    log_abs, sign = 0.0, 1
    for f in factors:
        if abs(f) < boundary_tol:
            return -math.inf, 0
        if f < 0.0:
            sign = -sign
        log_abs += math.log(abs(f))
    return log_abs, sign


def jacobian_det_form(V, params: GbsParams) -> float:
    """|Jacobian| of forward_map from the explicit nm x nm determinant.

    Assembles |Xi|^{-n} |Delta^{-1} x I_n + (Delta x I_n)(K_{mn}(V'^+ x V^+)
    - (V'V)^{-1} x (I_n - V V^+))| with column-major vec conventions.
    """
    V = _validate_v(V, params)
    n, m = V.shape
    eye_n = np.eye(n)
    vp = pinv(V)                       # (V'V)^{-1} V'
    vtp = vp.T                         # V'^+ = V (V'V)^{-1}
    vtv_inv = np.linalg.inv(V.T @ V)
    dinv = np.linalg.inv(params.delta)
    inner = (kron(dinv, eye_n)
             + kron(params.delta, eye_n)
             @ (commutation(m, n) @ kron(vtp, vp) - kron(vtv_inv, eye_n - V @ vp)))
    sign_xi, logdet_xi = np.linalg.slogdet(params.xi)
    sign_in, logdet_in = np.linalg.slogdet(inner)
    if sign_in == 0:
        return 0.0
    return float(math.exp(-n * logdet_xi + logdet_in))


def _log_jacobian_sv(V, params: GbsParams, form: str, check: bool = True):
    n, m = params.n, params.m
    g2 = branch_eigs(V, params)
    if check:
        if m > 1:
            gaps = g2[:-1] - g2[1:]
            if gaps.min() < TIE_TOL * max(abs(g2[0]), 1.0):
                raise DegenerateEigenvaluesError(
                    f"tied eigenvalues of beta^{{-1}}V'V (gap {gaps.min():g})")
        if np.abs(np.sqrt(g2) - 1.0).min() < BOUNDARY_TOL:
            raise DegenerateEigenvaluesError(
                "singular value of V Delta^{-1} on the unit boundary; Jacobian is zero")
    log_g, sign = log_abs_gfactor(g2, n, m, form=form)
    _, logdet_xi = np.linalg.slogdet(params.xi)
    _, logdet_beta = np.linalg.slogdet(params.beta)
    return -n * logdet_xi - 0.5 * n * logdet_beta + log_g, sign


def jacobian_sv_form(V, params: GbsParams, variant: str = "first") -> float:
    """|Jacobian| of forward_map via the singular-value product form."""
    log_j, _ = _log_jacobian_sv(V, params, variant)
    return float(math.exp(log_j))


def jacobian_fd_oracle(V, params: GbsParams, step: float = 1e-5) -> float:
    """|Jacobian| by central differences of forward_map; independent check."""
    if not 1e-6 <= step <= 1e-4:
        raise DomainError(f"step must lie in [1e-6, 1e-4], got {step}")
    V = _validate_v(V, params)
    n, m = V.shape
    M = np.empty((n * m, n * m))
    for b in range(n * m):
        bump = np.zeros(n * m)
        bump[b] = step
        bump = bump.reshape((n, m), order="F")
        M[:, b] = (vec(forward_map(V + bump, params))
                   - vec(forward_map(V - bump, params))) / (2.0 * step)
    sign, logdet = np.linalg.slogdet(M)
    return 0.0 if sign == 0 else float(math.exp(logdet))


def jacobian_report(V, params: GbsParams, step: float | None = 1e-5) -> JacobianReport:
    """All Jacobian routes plus their worst pairwise relative disagreement."""
    det_val = abs(jacobian_det_form(V, params))
    log_sv, sign = _log_jacobian_sv(V, params, "first")
    sv_val = float(math.exp(log_sv))
    values = [det_val, sv_val, jacobian_sv_form(V, params, "second")]
    fd_val = None
    if step is not None:
        fd_val = jacobian_fd_oracle(V, params, step)
        values.append(fd_val)
    hi, lo = max(values), min(values)
    rel = 0.0 if hi == 0.0 else (hi - lo) / hi
    return JacobianReport(det_form=det_val, sv_form=sv_val, fd_form=fd_val,
                          rel_disagreement=float(rel), sign=sign)
