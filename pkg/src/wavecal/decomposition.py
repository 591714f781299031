"""End-to-end estimation of component curves from aggregated samples.

Pipeline: transform the observed M x I matrix to the wavelet domain column
by column, estimate the noise scale, shrink every detail coefficient, solve
a least-squares system for the component coefficients through the known
mixing weights, and invert the transform.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .shrinkage import LevelPolicy, RuleSpec, estimate_sigma, resolve_rule, shrink_pyramid
from .wavelet import Pyramid, WaveletFilter, transform_columns

__all__ = [
    "PipelineError",
    "RankDeficiencyError",
    "EstimationConfig",
    "solve_gamma",
    "estimate_components",
    "estimates_to_csv",
]

_RANK_RTOL = 1e-10


class PipelineError(RuntimeError):
    """Estimation failed; ``stage`` names the pipeline stage at fault."""

    def __init__(self, stage: str, message: str):
        super().__init__(f"[{stage}] {message}")
        self.stage = stage


class RankDeficiencyError(ValueError):
    """The mixing matrix does not have full row rank."""


@dataclass(frozen=True)
class EstimationConfig:
    """Configuration of the estimation pipeline.

    sigma_mode selects how the noise sd reaches the shrinkage rule:
    ``pooled`` averages the per-sample robust estimates into one value,
    ``per-column`` keeps one estimate per observed sample, and ``fixed``
    uses ``sigma_value`` verbatim.
    """

    filter: WaveletFilter
    rule: RuleSpec
    J0: int = 3
    policy: Optional[LevelPolicy] = None
    sigma_mode: str = "pooled"
    sigma_value: Optional[float] = None

    def __post_init__(self):
        if self.sigma_mode not in ("pooled", "per-column", "fixed"):
            raise ValueError(f"unknown sigma_mode {self.sigma_mode!r}")
        if self.sigma_mode == "fixed":
            if self.sigma_value is None or self.sigma_value < 0:
                raise ValueError("fixed sigma_mode needs a nonnegative sigma_value")
        elif self.sigma_value is not None:
            raise ValueError("sigma_value only applies to sigma_mode='fixed'")
        if self.J0 < 0:
            raise ValueError(f"J0 must be >= 0, got {self.J0}")


def solve_gamma(shrunk: np.ndarray, weights: np.ndarray) -> np.ndarray:
    """Least-squares recovery of component coefficients.

    Returns the M x L matrix minimizing ||shrunk - gamma @ weights||_F,
    computed through an orthogonal factorization of weights^T (never by
    forming (y y^T)^-1).  Raises RankDeficiencyError when the smallest
    singular value of the weights falls below 1e-10 times the largest.
    """
    D = np.asarray(shrunk, dtype=float)
    y = np.asarray(weights, dtype=float)
    if D.ndim != 2 or y.ndim != 2:
        raise ValueError("solve_gamma expects 2-D arrays")
    L, I = y.shape
    if D.shape[1] != I:
        raise ValueError(f"coefficient matrix has {D.shape[1]} columns, weights have {I}")
    if I < L:
        raise RankDeficiencyError(f"underdetermined mixing: L={L} components, I={I} samples")
    svals = np.linalg.svd(y, compute_uv=False)
    if svals[-1] < _RANK_RTOL * svals[0]:
        raise RankDeficiencyError(
            f"weights are rank deficient: singular values span "
            f"[{svals[-1]:.3e}, {svals[0]:.3e}], effective rank "
            f"{int(np.sum(svals >= _RANK_RTOL * svals[0]))} < {L}")
    gamma_t, _, rank, _ = np.linalg.lstsq(y.T, D.T, rcond=_RANK_RTOL)
    if rank < L:
        raise RankDeficiencyError(f"least-squares rank {rank} < {L}")
    return gamma_t.T


def _sigma_per_column(D: np.ndarray, J: int) -> np.ndarray:
    finest = D[2 ** (J - 1):]
    return np.array([estimate_sigma(finest[:, i]) for i in range(D.shape[1])])


def estimate_components(observed: np.ndarray, weights: np.ndarray,
                        config: EstimationConfig) -> np.ndarray:
    """Estimate the M x L component matrix from M x I aggregated samples.

    Stages: forward transform -> noise-scale estimation -> coefficientwise
    shrinkage -> least squares through the weights -> inverse transform.
    Errors carry the failing stage name.
    """
    A = np.asarray(observed, dtype=float)
    y = np.asarray(weights, dtype=float)
    if A.ndim != 2:
        raise PipelineError("input", f"observed matrix must be 2-D, got shape {A.shape}")
    if y.ndim != 2 or y.shape[1] != A.shape[1]:
        raise PipelineError("input", f"weights shape {y.shape} incompatible with "
                                     f"{A.shape[1]} observed samples")

    try:
        D = transform_columns(A, config.filter, config.J0, "forward")
    except ValueError as exc:
        raise PipelineError("transform", str(exc)) from exc

    J = int(np.log2(A.shape[0]))
    try:
        if config.sigma_mode == "fixed":
            sigmas = np.full(A.shape[1], float(config.sigma_value))
        else:
            per_col = _sigma_per_column(D, J)
            sigmas = per_col if config.sigma_mode == "per-column" \
                else np.full(A.shape[1], float(np.mean(per_col)))
    except ValueError as exc:
        raise PipelineError("sigma", str(exc)) from exc

    try:
        shrunk = np.empty_like(D)
        for i in range(D.shape[1]):
            pyr = Pyramid.from_flat(D[:, i], config.J0)
            rule = resolve_rule(config.rule, float(sigmas[i]), pyr)
            shrunk[:, i] = shrink_pyramid(pyr, rule, config.policy).to_flat()
    except (ValueError, TypeError) as exc:
        raise PipelineError("shrinkage", str(exc)) from exc

    try:
        gamma = solve_gamma(shrunk, y)
    except (ValueError, np.linalg.LinAlgError) as exc:
        raise PipelineError("least-squares", str(exc)) from exc

    try:
        return transform_columns(gamma, config.filter, config.J0, "inverse")
    except ValueError as exc:
        raise PipelineError("inverse-transform", str(exc)) from exc


def estimates_to_csv(alpha_hat: np.ndarray, grid: np.ndarray, path) -> None:
    """Write estimated component curves as rows (t, component_index, estimate)."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["t", "component_index", "estimate"])
        M, L = alpha_hat.shape
        for l in range(L):
            for m in range(M):
                writer.writerow([format(float(grid[m]), ".17g"), l,
                                 format(float(alpha_hat[m, l]), ".17g")])
