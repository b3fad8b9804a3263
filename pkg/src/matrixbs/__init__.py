"""Matrix-variate generalised Birnbaum-Saunders distributions.

Densities, transformation Jacobians, branch-consistent sampling,
Kotz-kernel maximum likelihood with scalar scale, and modified-BIC*
model comparison for symmetric positive definite data matrices.
"""

from .density import (
    Convention,
    ElementwiseParams,
    gfactor_sign,
    logpdf_T,
    logpdf_T_congruence,
    logpdf_T_inverse,
    logpdf_V,
    logpdf_elementwise,
    logpdf_sqrt_gbs,
    logpdf_uni_gbs,
)
from .fit import (
    EvidenceGrade,
    FitResult,
    FitSpec,
    ProfileResult,
    bic_star,
    evidence_grade,
    fit_mle,
    init_guess,
    loglik,
    profile_s_grid,
)
from .kernels import KernelSpec, gaussian_kernel, kotz_kernel, log_h, sample_symmetric
from .sampling import SampleBatch, sample_T, sample_V, sample_batch
from .transform import (
    GbsParams,
    JacobianReport,
    forward_map,
    inverse_map_branch,
    jacobian_det_form,
    jacobian_fd_oracle,
    jacobian_report,
    jacobian_sv_form,
)

__version__ = "0.1.0"

__all__ = [
    "Convention", "ElementwiseParams", "EvidenceGrade", "FitResult", "FitSpec",
    "GbsParams", "JacobianReport", "KernelSpec", "ProfileResult", "SampleBatch",
    "bic_star", "evidence_grade", "fit_mle", "forward_map", "gaussian_kernel",
    "gfactor_sign", "init_guess", "inverse_map_branch", "jacobian_det_form", "jacobian_fd_oracle",
    "jacobian_report", "jacobian_sv_form", "kotz_kernel", "log_h", "loglik",
    "logpdf_T", "logpdf_T_congruence", "logpdf_T_inverse", "logpdf_V",
    "logpdf_elementwise", "logpdf_sqrt_gbs", "logpdf_uni_gbs", "profile_s_grid",
    "sample_T", "sample_V", "sample_batch", "sample_symmetric",
]
