"""Maximum likelihood for Kotz-kernel Birnbaum-Saunders matrix models.

The model has a scalar scale beta (beta I_m), an SPD shape matrix Xi, and
for the Kotz family a fixed power s with free (r, q).  The log-likelihood
is the term-by-term expansion of the scalar-scale density in terms of the
per-observation eigenvalues; it is maximised with a derivative-free
simplex search in an unconstrained reparameterisation, from a moment-style
starting point plus jittered restarts.

Model comparison uses the modified criterion

    BIC* = -2 loglik_max + n_p (ln(K + 2) - ln 24),

where K is the sample size and n_p the number of free parameters
(1 + m(m+1)/2, plus 2 for the Kotz family).  Differences are graded
Weak / Positive / Strong / VeryStrong at thresholds 2, 6 and 10.
"""

from __future__ import annotations

import enum
import math
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize
from scipy.special import expit, gammaln, logit

from .density import Convention
from .errors import DegenerateDataWarning, DomainError, NegativeDiffError
from .kernels import GAUSSIAN, KOTZ, KernelSpec, gaussian_kernel, kotz_kernel
from .linalg import check_spd, log_mv_gamma, sym_part
from .sampling import SampleBatch

__all__ = ["EvidenceGrade", "FitResult", "FitSpec", "InitialGuess", "ProfileRow",
           "ProfileResult", "bic_star", "evidence_grade", "fit_mle", "init_guess",
           "loglik", "outside_support", "profile_s_grid", "DEFAULT_S_GRID"]

DEFAULT_S_GRID = (0.5, 0.75, 1.0, 1.25, 1.5, 1.75, 2.0, 3.0, 4.0, 5.0)

# beta stays below this fraction of the smallest observed eigenvalue so the
# branch-region logarithms stay defined.
BETA_MARGIN = 1.0 - 1e-6


def _as_stack(data) -> np.ndarray:
    if isinstance(data, SampleBatch):
        mats = data.matrices
    else:
        mats = np.asarray(data, dtype=float)
    if mats.ndim == 2:
        mats = mats[None, :, :]
    if mats.ndim != 3 or mats.shape[1] != mats.shape[2]:
        raise DomainError(f"data must be a (K, m, m) stack, got shape {mats.shape}")
    return mats


class _Prepared:
    """Per-dataset quantities that do not depend on the parameters."""

    def __init__(self, mats: np.ndarray):
        K, m, _ = mats.shape
        self.K, self.m = K, m
        self.T = np.array([check_spd(mats[k], f"T[{k}]") for k in range(K)])
        lam = np.linalg.eigvalsh(self.T)
        self.lam = lam  # (K, m), ascending
        self.sum_log_lam = float(np.sum(np.log(lam)))
        self.min_lam = float(lam.min())
        self.Tinv = np.linalg.inv(self.T)
        iu = np.triu_indices(m, k=1)
        # (K, npairs) products of eigenvalue pairs i < j
        self.pair_prod = (lam[:, :, None] * lam[:, None, :])[:, iu[0], iu[1]]

    def traces(self, beta: float, xi: np.ndarray) -> np.ndarray:
        M = np.linalg.inv(xi @ xi)
        tT = np.einsum("ij,kij->k", M, self.T)
        tI = np.einsum("ij,kij->k", M, self.Tinv)
        return np.maximum(tT / beta + beta * tI - 2.0 * np.trace(M), 0.0)


def _kotz_triplet(kernel: KernelSpec):
    if kernel.family == GAUSSIAN:
        return 1.0, 0.5, 1.0
    return kernel.q, kernel.r, kernel.s


def _loglik_prepared(prep: _Prepared, n: int, beta: float, xi: np.ndarray,
                     kernel: KernelSpec) -> float:
    K, m = prep.K, prep.m
    if beta <= 0.0:
        return -math.inf
    ratio = beta / prep.lam
    q, r, s = _kotz_triplet(kernel)
    a = (2.0 * q + n * m - 2.0) / (2.0 * s)

    value = K * (math.log(s) + a * math.log(r) + gammaln(n * m / 2) - gammaln(a))
    if n > m:
        # an eigenvalue at or below beta leaves log(1 - beta/lambda) undefined
        one_minus = 1.0 - ratio
        if one_minus.min() <= 0.0:
            return -math.inf
        value += (n - m) * float(np.sum(np.log(one_minus)))
    value += float(np.sum(np.log1p(ratio)))
    if m > 1:
        pair = 1.0 - beta * beta / prep.pair_prod
        if pair.min() <= 0.0:
            return -math.inf
        value += float(np.sum(np.log(pair)))
    sign_xi, logdet_xi = np.linalg.slogdet(xi)
    if sign_xi <= 0:
        return -math.inf
    value += (-K * m * math.log(2.0) - K * log_mv_gamma(m, n / 2)
              - K * n * m / 2 * math.log(beta) - K * n * logdet_xi
              + (n - m - 1) / 2 * prep.sum_log_lam)
    u = prep.traces(beta, xi)
    if q != 1.0:
        if u.min() <= 0.0:
            return -math.inf if q > 1.0 else math.inf
        value += (q - 1.0) * float(np.sum(np.log(u)))
    value -= r * float(np.sum(u**s))
    return value


def loglik(data, n: int, beta: float, xi, kernel: KernelSpec,
           convention: Convention = Convention.AS_PUBLISHED) -> float:
    """Sample log-likelihood of the scalar-scale model, expanded term by term.

    Matches the sum of logpdf_T over the batch (as-published convention); the
    branch convention only adds the constant K m ln 2.  Observations with
    an eigenvalue at or below beta are outside the branch support and pull
    the value to -inf.
    """
    mats = _as_stack(data)
    prep = _Prepared(mats)
    xi = check_spd(xi, "xi")
    if xi.shape[0] != prep.m:
        raise DomainError(f"xi is {xi.shape[0]}x{xi.shape[0]}, data has m={prep.m}")
    if (kernel.n, kernel.m) != (n, prep.m):
        raise DomainError(
            f"kernel dims ({kernel.n}, {kernel.m}) do not match (n={n}, m={prep.m})")
    value = _loglik_prepared(prep, n, float(beta), xi, kernel)
    if convention is Convention.BRANCH_NORMALIZED:
        value += prep.K * prep.m * math.log(2.0)
    return value


def outside_support(data, beta: float) -> list[int]:
    """Indices of observations with an eigenvalue at or below beta.

    These are the observations outside the branch region; for degrees
    n > m they contribute -inf to the expanded log-likelihood.
    """
    mats = _as_stack(data)
    lam_min = np.linalg.eigvalsh(mats)[:, 0]
    return [int(k) for k in np.nonzero(lam_min <= beta)[0]]


@dataclass(frozen=True)
class InitialGuess:
    beta0: float
    xi0: np.ndarray
    r0: float = 0.5
    q0: float = 1.0


def init_guess(data, n: int) -> InitialGuess:
    """Moment-style starting point from arithmetic and harmonic means.

    Diagonal series t_ii give the classical univariate estimates
    beta_i = sqrt(am * hm) and alpha_i = sqrt(2 (sqrt(am/hm) - 1)); beta0
    is their geometric mean, and off-diagonal shape entries are scaled by
    the correlation of the sample mean matrix.  The shape seed is floored
    to an SPD matrix.  Degenerate series (am = hm) fall back to alpha = 0.5.
    """
    mats = _as_stack(data)
    K, m, _ = mats.shape
    if K < 2:
        raise DomainError("initialisation needs at least two observations")
    diag = np.einsum("kii->ki", mats)
    if diag.min() <= 0.0:
        raise DomainError("diagonal entries must be positive")
    am = diag.mean(axis=0)
    hm = 1.0 / np.mean(1.0 / diag, axis=0)
    betas = np.sqrt(am * hm)
    alphas = np.empty(m)
    for i in range(m):
        ratio = am[i] / hm[i]
        if ratio <= 1.0 + 1e-12:
            warnings.warn(f"degenerate diagonal series {i}: falling back to alpha=0.5",
                          DegenerateDataWarning, stacklevel=2)
            alphas[i] = 0.5
        else:
            alphas[i] = math.sqrt(2.0 * (math.sqrt(ratio) - 1.0))
    beta0 = float(np.exp(np.mean(np.log(betas))))

    mean_T = mats.mean(axis=0)
    denom = np.sqrt(np.outer(np.diag(mean_T), np.diag(mean_T)))
    rho = mean_T / denom
    xi0 = rho * np.sqrt(np.outer(alphas, alphas))
    np.fill_diagonal(xi0, alphas)
    w, P = np.linalg.eigh(sym_part(xi0))
    xi0 = sym_part((P * np.maximum(w, 1e-3)) @ P.T)
    return InitialGuess(beta0=beta0, xi0=xi0)


@dataclass(frozen=True)
class FitSpec:
    """Model family and optimiser options for fit_mle."""

    family: str = GAUSSIAN
    s: float = 1.0                      # fixed Kotz power; ignored for Gaussian
    restarts: int = 5
    max_iter: int = 5000
    rel_ftol: float = 1e-10
    jitter: float = 0.25
    seed: int = 0
    convention: Convention = Convention.AS_PUBLISHED
    warm_start: dict | None = None      # {"beta":, "xi":, "r":, "q":} overrides

    def __post_init__(self):
        if self.family not in (GAUSSIAN, KOTZ):
            raise DomainError(f"unknown family {self.family!r}")
        if self.family == KOTZ and self.s <= 0.0:
            raise DomainError(f"fixed Kotz power s must be positive, got {self.s}")
        if self.restarts < 1:
            raise DomainError("need at least one start")


@dataclass
class FitResult:
    """Estimates and diagnostics from one maximum-likelihood fit."""

    family: str
    s: float | None
    beta: float
    xi: np.ndarray
    r: float | None
    q: float | None
    loglik_max: float
    n_params: int
    bic_star: float
    converged: bool
    iterations: int
    seed: int
    n: int
    m: int
    K: int
    convention: Convention = Convention.AS_PUBLISHED
    n_support_violations: int = 0

    def kernel(self) -> KernelSpec:
        if self.family == GAUSSIAN:
            return gaussian_kernel(self.n, self.m)
        return kotz_kernel(self.q, self.r, self.s, self.n, self.m)


def bic_star(loglik_max: float, n_p: int, K: int) -> float:
    """Modified information criterion -2 loglik + n_p (ln(K+2) - ln 24)."""
    if K < 1:
        raise DomainError(f"sample size must be at least 1, got {K}")
    return -2.0 * loglik_max + n_p * (math.log(K + 2) - math.log(24.0))


class EvidenceGrade(enum.Enum):
    WEAK = "Weak"
    POSITIVE = "Positive"
    STRONG = "Strong"
    VERY_STRONG = "Very strong"


def evidence_grade(diff: float) -> EvidenceGrade:
    """Grade an absolute BIC* difference: thresholds 2, 6, 10."""
    if diff < 0.0:
        raise NegativeDiffError(f"difference must be nonnegative, got {diff}")
    if diff < 2.0:
        return EvidenceGrade.WEAK
    if diff < 6.0:
        return EvidenceGrade.POSITIVE
    if diff < 10.0:
        return EvidenceGrade.STRONG
    return EvidenceGrade.VERY_STRONG


class _Packer:
    """Map model parameters to and from the unconstrained search vector.

    beta = beta_max * sigmoid(x0) keeps the scale below the smallest
    observed eigenvalue (log-scale behaviour far from the cap); Xi is a
    Cholesky factor with logged diagonal; Kotz adds ln r and
    ln(q - (2 - nm)/2).
    """

    def __init__(self, m: int, n: int, beta_max: float, kotz: bool, s: float):
        self.m, self.n = m, n
        self.beta_max = beta_max
        self.kotz = kotz
        self.s = s
        self.q_floor = (2.0 - n * m) / 2.0
        self.tril = [(i, j) for i in range(m) for j in range(i + 1)]
        self.dim = 1 + len(self.tril) + (2 if kotz else 0)

    def pack(self, beta: float, xi: np.ndarray, r: float, q: float) -> np.ndarray:
        x = np.empty(self.dim)
        frac = min(max(beta / self.beta_max, 1e-12), 1.0 - 1e-9)
        x[0] = logit(frac)
        L = np.linalg.cholesky(check_spd(xi, "xi"))
        for idx, (i, j) in enumerate(self.tril, start=1):
            x[idx] = math.log(L[i, i]) if i == j else L[i, j]
        if self.kotz:
            x[-2] = math.log(r)
            x[-1] = math.log(max(q - self.q_floor, 1e-12))
        return x

    def unpack(self, x: np.ndarray):
        beta = float(self.beta_max * expit(x[0]))
        L = np.zeros((self.m, self.m))
        for idx, (i, j) in enumerate(self.tril, start=1):
            L[i, j] = math.exp(min(x[idx], 200.0)) if i == j else x[idx]
        xi = L @ L.T
        if self.kotz:
            r = math.exp(min(x[-2], 200.0))
            q = self.q_floor + math.exp(min(x[-1], 200.0))
        else:
            r, q = 0.5, 1.0
        return beta, sym_part(xi), r, q


def _kernel_for(family: str, n: int, m: int, s: float, r: float, q: float) -> KernelSpec:
    if family == GAUSSIAN:
        return gaussian_kernel(n, m)
    return kotz_kernel(q, r, s, n, m)


def fit_mle(data, spec: FitSpec, n: int) -> FitResult:
    """Maximise the log-likelihood with a multi-start simplex search.

    Starts from the moment-style guess (plus an optional warm start and
    seeded jittered copies) and returns the best local optimum.  A fit that
    exhausts the iteration budget is returned flagged, not raised.
    """
    mats = _as_stack(data)
    prep = _Prepared(mats)
    K, m = prep.K, prep.m
    if K < 2:
        raise DomainError("fitting needs at least two observations")
    kotz = spec.family == KOTZ
    beta_max = BETA_MARGIN * prep.min_lam
    packer = _Packer(m, n, beta_max, kotz, spec.s)

    guess = init_guess(mats, n)
    starts = [packer.pack(min(guess.beta0, 0.9 * beta_max), guess.xi0,
                          guess.r0, guess.q0)]
    if spec.warm_start is not None:
        w = spec.warm_start
        starts.append(packer.pack(min(float(w["beta"]), 0.999 * beta_max),
                                  np.asarray(w["xi"], dtype=float),
                                  float(w.get("r", 0.5)), float(w.get("q", 1.0))))
    rng = np.random.default_rng(spec.seed)
    while len(starts) < spec.restarts:
        starts.append(starts[0] + rng.normal(0.0, spec.jitter, size=packer.dim))

    def objective(x):
        beta, xi, r, q = packer.unpack(x)
        try:
            kernel = _kernel_for(spec.family, n, m, spec.s, r, q)
        except DomainError:
            return math.inf
        value = _loglik_prepared(prep, n, beta, xi, kernel)
        return -value if math.isfinite(value) else math.inf

    best = None
    total_iters = 0
    for x0 in starts:
        f0 = objective(x0)
        fatol = spec.rel_ftol * max(1.0, abs(f0) if math.isfinite(f0) else 1.0)
        res = minimize(objective, x0, method="Nelder-Mead",
                       options={"maxiter": spec.max_iter, "maxfev": 2 * spec.max_iter,
                                "fatol": fatol, "xatol": 1e-8})
        total_iters += int(res.nit)
        if best is None or res.fun < best.fun:
            best = res
    beta, xi, r, q = packer.unpack(best.x)
    value = _loglik_prepared(prep, n, beta, xi,
                             _kernel_for(spec.family, n, m, spec.s, r, q))
    if spec.convention is Convention.BRANCH_NORMALIZED:
        value += K * m * math.log(2.0)
    n_p = 1 + m * (m + 1) // 2 + (2 if kotz else 0)
    return FitResult(
        family=spec.family, s=spec.s if kotz else None,
        beta=beta, xi=xi, r=r if kotz else None, q=q if kotz else None,
        loglik_max=float(value), n_params=n_p,
        bic_star=bic_star(float(value), n_p, K),
        converged=bool(best.success), iterations=total_iters,
        seed=spec.seed, n=n, m=m, K=K, convention=spec.convention,
        n_support_violations=len(outside_support(mats, beta)),
    )


@dataclass
class ProfileRow:
    s: float
    fit: FitResult
    bic_diff: float          # BIC*_Kotz - BIC*_Gaussian
    grade: EvidenceGrade


@dataclass
class ProfileResult:
    baseline: FitResult
    rows: list[ProfileRow] = field(default_factory=list)

    def column_names(self) -> tuple[str, ...]:
        m = self.baseline.m
        names = ["s", "beta"]
        names += [f"alpha{i + 1}{j + 1}" for i in range(m) for j in range(i, m)]
        names += ["r", "q", "bic_diff"]
        return tuple(names)

    def row_values(self, row: ProfileRow) -> list[float]:
        m = row.fit.m
        upper = [row.fit.xi[i, j] for i in range(m) for j in range(i, m)]
        return [row.s, row.fit.beta, *upper, row.fit.r, row.fit.q, row.bic_diff]


def _fit_row(mats, n, s, base_spec: FitSpec, warm: dict, row_seed: int) -> FitResult:
    spec = FitSpec(family=KOTZ, s=s, restarts=base_spec.restarts,
                   max_iter=base_spec.max_iter, rel_ftol=base_spec.rel_ftol,
                   jitter=base_spec.jitter, seed=row_seed,
                   convention=base_spec.convention, warm_start=warm)
    return fit_mle(mats, spec, n)


def profile_s_grid(data, s_values=DEFAULT_S_GRID, n: int = 6, *,
                   spec: FitSpec | None = None, jobs: int = 1) -> ProfileResult:
    """Fit the Gaussian baseline once, then one Kotz model per fixed s.

    Each Kotz fit is warm-started from the Gaussian optimum at (r, q) =
    (1/2, 1).  Rows that hit the iteration budget are kept with their
    converged flag down; the table is always emitted in full.
    """
    mats = _as_stack(data)
    s_values = [float(s) for s in s_values]
    if any(s <= 0.0 for s in s_values):
        raise DomainError("all grid powers must be positive")
    base = spec if spec is not None else FitSpec()
    gauss = fit_mle(mats, FitSpec(family=GAUSSIAN, restarts=base.restarts,
                                  max_iter=base.max_iter, rel_ftol=base.rel_ftol,
                                  jitter=base.jitter, seed=base.seed,
                                  convention=base.convention), n)
    warm = {"beta": gauss.beta, "xi": gauss.xi, "r": 0.5, "q": 1.0}
    tasks = [(mats, n, s, base, warm, base.seed + 1 + i)
             for i, s in enumerate(s_values)]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            fits = list(pool.map(_fit_row_star, tasks))
    else:
        fits = [_fit_row(*t) for t in tasks]
    rows = []
    for s, fit in zip(s_values, fits):
        diff = fit.bic_star - gauss.bic_star
        rows.append(ProfileRow(s=s, fit=fit, bic_diff=diff,
                               grade=evidence_grade(abs(diff))))
    return ProfileResult(baseline=gauss, rows=rows)


def _fit_row_star(args):
    return _fit_row(*args)
