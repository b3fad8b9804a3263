"""Samplers for the matrix square-root law and for T = V'V.

The sampler draws Z from the elliptical kernel and applies the branch
inverse of the matrix transformation, so every draw lands in the branch
region (all eigenvalues of beta^{-1} T at least 1).  This is exactly the
population described by the BRANCH_NORMALIZED density convention; the
as-published constant describes the same shape at 2^{-m} of the mass.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DomainError
from .kernels import KernelSpec, sample_symmetric
from .linalg import sym_part
from .transform import GbsParams, inverse_map_branch

__all__ = ["SampleBatch", "sample_T", "sample_V", "sample_batch"]


@dataclass
class SampleBatch:
    """K observed SPD matrices of order m plus generation provenance."""

    m: int
    count: int
    matrices: np.ndarray  # (count, m, m)
    params: GbsParams | None = None
    kernel: KernelSpec | None = None
    seed: int | None = None

    def __post_init__(self):
        mats = np.asarray(self.matrices, dtype=float)
        if mats.ndim != 3 or mats.shape != (self.count, self.m, self.m):
            raise DomainError(
                f"matrices must have shape ({self.count}, {self.m}, {self.m}),"
                f" got {mats.shape}")
        if self.count < 1:
            raise DomainError("a batch holds at least one matrix")
        self.matrices = mats

    def __len__(self) -> int:
        return self.count


def sample_V(params: GbsParams, kernel: KernelSpec,
             rng: np.random.Generator) -> np.ndarray:
    """One draw of the rectangular factor V on the branch with singular
    values of V Delta^{-1} at least 1."""
    if (kernel.n, kernel.m) != (params.n, params.m):
        raise DomainError(
            f"kernel dims ({kernel.n}, {kernel.m}) do not match params"
            f" ({params.n}, {params.m})")
    Z = sample_symmetric(kernel, rng)
    # exact singular-value ties have probability zero; skip the uniqueness gate
    return inverse_map_branch(Z, params, tie_tol=0.0)


def sample_T(params: GbsParams, kernel: KernelSpec,
             rng: np.random.Generator) -> np.ndarray:
    """One SPD draw T = V'V with all eigenvalues of beta^{-1} T at least 1."""
    V = sample_V(params, kernel, rng)
    return sym_part(V.T @ V)


def sample_batch(params: GbsParams, kernel: KernelSpec, count: int,
                 rng: np.random.Generator | int) -> SampleBatch:
    """K independent draws of T, with provenance recorded for reproducibility.

    Passing an integer uses it as the seed of a fresh generator and records
    it in the batch; passing a generator records no seed.
    """
    if count < 1:
        raise DomainError(f"count must be at least 1, got {count}")
    seed = None
    if isinstance(rng, (int, np.integer)):
        seed = int(rng)
        rng = np.random.default_rng(seed)
    m = params.m
    mats = np.empty((count, m, m))
    for k in range(count):
        mats[k] = sample_T(params, kernel, rng)
    return SampleBatch(m=m, count=count, matrices=mats,
                       params=params, kernel=kernel, seed=seed)
