"""Elliptical generator kernels with exact normalising constants.

Two families ship: the Gaussian kernel and the Kotz type kernel
h(u) proportional to u^(q-1) exp(-r u^s).  Each kernel carries its full
normalising constant for the ambient n x m matrix space, so that
exp(log_h(tr Z'Z)) is a probability density on R^(n x m).  Everything is
evaluated in the log domain; h itself is only exponentiated by callers.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, replace

import numpy as np
from scipy.special import gammaln

from .errors import DomainError, SingularKernelWarning

GAUSSIAN = "gaussian"
KOTZ = "kotz"

__all__ = ["KernelSpec", "gaussian_kernel", "kotz_kernel", "kernel_from_json",
           "kernel_to_json", "log_h", "sample_symmetric"]


@dataclass(frozen=True)
class KernelSpec:
    """Generator kernel family plus the ambient dimensions it normalises over."""

    family: str
    n: int
    m: int
    q: float | None = None
    r: float | None = None
    s: float | None = None

    def __post_init__(self):
        if self.n < 1 or self.m < 1:
            raise DomainError(f"ambient dimensions must be positive, got ({self.n}, {self.m})")
        if self.family == GAUSSIAN:
            if any(p is not None for p in (self.q, self.r, self.s)):
                raise DomainError("gaussian kernel takes no shape parameters")
        elif self.family == KOTZ:
            if any(p is None for p in (self.q, self.r, self.s)):
                raise DomainError("kotz kernel needs q, r, s")
            if self.r <= 0.0:
                raise DomainError(f"kotz r must be positive, got {self.r}")
            if self.s <= 0.0:
                raise DomainError(f"kotz s must be positive, got {self.s}")
            if 2 * self.q + self.m * self.n <= 2:
                raise DomainError(
                    f"kotz requires 2q + mn > 2, got q={self.q}, nm={self.n * self.m}")
        else:
            raise DomainError(f"unknown kernel family {self.family!r}")

    @property
    def nm(self) -> int:
        return self.n * self.m

    def with_dims(self, n: int, m: int) -> "KernelSpec":
        """Same family and shape parameters, re-normalised for new ambient dims."""
        return replace(self, n=n, m=m)

    def gamma_shape(self) -> float:
        """Shape of the Gamma radial transform W = r (tr Z'Z)^s."""
        if self.family == GAUSSIAN:
            return self.nm / 2
        return (2 * self.q + self.nm - 2) / (2 * self.s)


def gaussian_kernel(n: int, m: int) -> KernelSpec:
    return KernelSpec(family=GAUSSIAN, n=n, m=m)


def kotz_kernel(q: float, r: float, s: float, n: int, m: int) -> KernelSpec:
    return KernelSpec(family=KOTZ, n=n, m=m, q=q, r=r, s=s)


def log_h(kernel: KernelSpec, u: float) -> float:
    """log generator at u >= 0, normalising constant included.

    Kotz at u = 0 with q != 1 is degenerate: the density is 0 for q > 1
    (returns -inf) and diverges for q < 1 (returns +inf with a
    SingularKernelWarning).
    """
    if u < 0.0:
        raise DomainError(f"generator argument must be nonnegative, got {u}")
    nm = kernel.nm
    if kernel.family == GAUSSIAN:
        return -0.5 * nm * math.log(2 * math.pi) - 0.5 * u

    q, r, s = kernel.q, kernel.r, kernel.s
    a = (2 * q + nm - 2) / (2 * s)
    const = (math.log(s) + a * math.log(r) + gammaln(nm / 2)
             - 0.5 * nm * math.log(math.pi) - gammaln(a))
    if u == 0.0:
        if q > 1.0:
            return -math.inf
        if q < 1.0:
            warnings.warn("kotz kernel diverges at u = 0 for q < 1",
                          SingularKernelWarning, stacklevel=2)
            return math.inf
        return float(const)
    power_term = 0.0 if q == 1.0 else (q - 1.0) * math.log(u)
    return float(const + power_term - r * u**s)


def sample_symmetric(kernel: KernelSpec, rng: np.random.Generator) -> np.ndarray:
    """Draw one n x m matrix from the zero-mean, identity-scale elliptical family.

    Gaussian: i.i.d. standard normal entries.  Kotz: radius R with
    r R^(2s) ~ Gamma(shape, rate 1) times a uniform direction on the unit
    sphere in R^(nm).
    """
    n, m = kernel.n, kernel.m
    if kernel.family == GAUSSIAN:
        return rng.standard_normal((n, m))
    w = rng.standard_gamma(kernel.gamma_shape())
    radius = (w / kernel.r) ** (1.0 / (2.0 * kernel.s))
    g = rng.standard_normal(n * m)
    direction = g / np.linalg.norm(g)
    return (radius * direction).reshape(n, m)


def kernel_to_json(kernel: KernelSpec) -> dict:
    """Wire form: {"family": "gaussian"} or {"family": "kotz", "q":, "r":, "s":}."""
    if kernel.family == GAUSSIAN:
        return {"family": GAUSSIAN}
    return {"family": KOTZ, "q": kernel.q, "r": kernel.r, "s": kernel.s}


def kernel_from_json(obj: dict, n: int, m: int) -> KernelSpec:
    try:
        family = obj["family"]
    except (TypeError, KeyError):
        raise DomainError("kernel JSON must be an object with a 'family' key")
    if family == GAUSSIAN:
        return gaussian_kernel(n, m)
    if family == KOTZ:
        try:
            return kotz_kernel(float(obj["q"]), float(obj["r"]), float(obj["s"]), n, m)
        except KeyError as missing:
            raise DomainError(f"kotz kernel JSON missing {missing}")
    raise DomainError(f"unknown kernel family {family!r}")
