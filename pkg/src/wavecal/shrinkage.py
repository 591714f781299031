"""Bayesian shrinkage rules for empirical wavelet coefficients.

Five single-coefficient rules are provided, each the Bayes estimate of the
signal part of a noisy coefficient d = theta + eps, eps ~ N(0, sigma^2):

  - logistic_rule: posterior mean under a point mass at zero mixed with a
    logistic density (Sousa, 2020).
  - beta_rule: posterior mean under a point mass mixed with a symmetric-
    support beta density (Sousa et al., 2020).
  - lpm_rule: Large Posterior Mode thresholding (Cutillo et al., 2008).
  - abe_rule: Amplitude-scale invariant Bayes Estimator (Figueiredo and
    Nowak, 2001).
  - bams_rule: Bayesian Adaptive Multiresolution Smoother (Vidakovic and
    Ruggeri, 2001).

Rules accept a scalar or an array of coefficients and are pure functions of
their arguments.  `shrink_pyramid` applies a rule coefficientwise to the
detail blocks of a Pyramid, leaving the coarse block untouched.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import Optional, Union

import numpy as np
from scipy.special import beta as _beta_function

from .wavelet import Pyramid

__all__ = [
    "ShrinkageUnderflowWarning",
    "QuadratureSpec",
    "LevelPolicy",
    "Logistic",
    "Beta",
    "Lpm",
    "Abe",
    "Bams",
    "RuleSpec",
    "estimate_sigma",
    "logistic_rule",
    "beta_rule",
    "lpm_rule",
    "abe_rule",
    "bams_rule",
    "av_policy",
    "shrink_pyramid",
    "resolve_rule",
    "rule_defaults",
]

_SQRT_2PI = np.sqrt(2.0 * np.pi)
_BAMS_SINGULARITY_TOL = 1e-8

MAD_TO_SIGMA = 0.6745  # median absolute deviation of N(0,1), Donoho-Johnstone constant

DEFAULT_LOGISTIC_P = 0.9
DEFAULT_LOGISTIC_TAU = 1.0
DEFAULT_BETA_P = 0.9
DEFAULT_BETA_A = 2.0
DEFAULT_LPM_K = 1.0
DEFAULT_BAMS_ALPHA = 0.8
DEFAULT_GH_NODES = 64
DEFAULT_GL_NODES = 128


class ShrinkageUnderflowWarning(RuntimeWarning):
    """A rule denominator underflowed to zero; full shrinkage was applied."""


# ---------------------------------------------------------------------------
# quadrature
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class QuadratureSpec:
    """Fixed Gauss quadrature nodes and weights.

    ``gauss-hermite-standard-normal`` integrates f against the standard
    normal density (the density is absorbed into the weights, which sum
    to 1).  ``gauss-legendre-interval`` holds reference nodes on [-1, 1];
    callers map them onto the integration interval.
    """

    nodes: np.ndarray
    weights: np.ndarray
    kind: str

    def __post_init__(self):
        nodes = np.asarray(self.nodes, dtype=float)
        weights = np.asarray(self.weights, dtype=float)
        if nodes.shape != weights.shape or nodes.ndim != 1:
            raise ValueError("nodes and weights must be 1-D arrays of equal length")
        if np.any(weights <= 0):
            raise ValueError("quadrature weights must be positive")
        if self.kind == "gauss-hermite-standard-normal":
            if abs(weights.sum() - 1.0) > 1e-10:
                raise ValueError("standard-normal weights must sum to 1")
        elif self.kind != "gauss-legendre-interval":
            raise ValueError(f"unknown quadrature kind {self.kind!r}")
        nodes.flags.writeable = False
        weights.flags.writeable = False
        object.__setattr__(self, "nodes", nodes)
        object.__setattr__(self, "weights", weights)

    @classmethod
    def gauss_hermite_standard_normal(cls, n: int = DEFAULT_GH_NODES) -> "QuadratureSpec":
        """Nodes u_i and weights w_i with sum_i w_i f(u_i) ~ E[f(U)], U ~ N(0,1)."""
        v, w = np.polynomial.hermite.hermgauss(n)
        return cls(nodes=v * np.sqrt(2.0), weights=w / np.sqrt(np.pi),
                   kind="gauss-hermite-standard-normal")

    @classmethod
    def gauss_legendre_interval(cls, n: int = DEFAULT_GL_NODES) -> "QuadratureSpec":
        """Reference Gauss-Legendre rule on [-1, 1]."""
        x, w = np.polynomial.legendre.leggauss(n)
        return cls(nodes=x, weights=w, kind="gauss-legendre-interval")


_DEFAULT_GH: Optional[QuadratureSpec] = None
_DEFAULT_GL: Optional[QuadratureSpec] = None


def _default_gh() -> QuadratureSpec:
    global _DEFAULT_GH
    if _DEFAULT_GH is None:
        _DEFAULT_GH = QuadratureSpec.gauss_hermite_standard_normal()
    return _DEFAULT_GH


def _default_gl() -> QuadratureSpec:
    global _DEFAULT_GL
    if _DEFAULT_GL is None:
        _DEFAULT_GL = QuadratureSpec.gauss_legendre_interval()
    return _DEFAULT_GL


# ---------------------------------------------------------------------------
# rule parameter containers
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class LevelPolicy:
    """Level-dependent hyperparameters (Angelini and Vidakovic, 2004).

    At detail level j the mixture weight is p(j) = 1 - (j - J0 + 1)^(-gamma)
    and the beta half-support is m(j) = max_k |d_jk|.
    """

    gamma_exponent: float = 2.0
    J0: int = 0

    def __post_init__(self):
        if not self.gamma_exponent > 0:
            raise ValueError("gamma_exponent must be > 0")
        if self.J0 < 0:
            raise ValueError("J0 must be >= 0")


def _check_open(name: str, value: float, low: float = 0.0) -> None:
    if not value > low:
        raise ValueError(f"{name} must be > {low}, got {value}")


@dataclass(frozen=True)
class Logistic:
    """Point mass at zero mixed with a logistic prior of scale tau.

    ``sigma=None`` marks the noise sd as to-be-estimated; rule evaluation
    requires a resolved spec.
    """

    p: float = DEFAULT_LOGISTIC_P
    tau: float = DEFAULT_LOGISTIC_TAU
    sigma: Optional[float] = None

    def __post_init__(self):
        # p = 0 admitted: the level policy assigns it at the primary level
        if not 0.0 <= self.p < 1.0:
            raise ValueError(f"p must be in [0, 1), got {self.p}")
        _check_open("tau", self.tau)
        if self.sigma is not None:
            _check_open("sigma", self.sigma)


@dataclass(frozen=True)
class Beta:
    """Point mass at zero mixed with a beta prior on [-m, m].

    Shapes a < 1 are rejected: the density is unbounded at the endpoints
    and fixed-node quadrature is unreliable there.  ``m=None`` / ``sigma=None``
    mark values to be resolved from the data.
    """

    p: float = DEFAULT_BETA_P
    a: float = DEFAULT_BETA_A
    m: Optional[float] = None
    sigma: Optional[float] = None

    def __post_init__(self):
        if not 0.0 <= self.p < 1.0:
            raise ValueError(f"p must be in [0, 1), got {self.p}")
        if not self.a >= 1.0:
            raise ValueError(f"a must be >= 1, got {self.a}")
        if self.m is not None:
            _check_open("m", self.m)
        if self.sigma is not None:
            _check_open("sigma", self.sigma)


@dataclass(frozen=True)
class Lpm:
    """Large Posterior Mode thresholding with prior exponent k > 1/2.

    sigma = 0 is admitted (the rule degenerates to the identity), which the
    noise-free recovery paths rely on.
    """

    k: float = DEFAULT_LPM_K
    sigma: Optional[float] = None

    def __post_init__(self):
        if not self.k > 0.5:
            raise ValueError(f"k must be > 1/2, got {self.k}")
        if self.sigma is not None and self.sigma < 0:
            raise ValueError(f"sigma must be >= 0, got {self.sigma}")

    @property
    def threshold(self) -> float:
        """lambda = 2 sigma sqrt(2k - 1)."""
        if self.sigma is None:
            raise ValueError("sigma is unresolved")
        return 2.0 * self.sigma * np.sqrt(2.0 * self.k - 1.0)


@dataclass(frozen=True)
class Abe:
    """Amplitude-scale invariant Bayes Estimator; only needs the noise sd.

    sigma = 0 is admitted (identity rule) for noise-free recovery paths.
    """

    sigma: Optional[float] = None

    def __post_init__(self):
        if self.sigma is not None and self.sigma < 0:
            raise ValueError(f"sigma must be >= 0, got {self.sigma}")


@dataclass(frozen=True)
class Bams:
    """Point mass mixed with a double-exponential prior, exponential prior
    on the noise variance.

    The closed form degenerates on the manifold 2*mu*tau^2 = 1 (prior and
    marginal-noise scales coincide); parameter pairs within 1e-8 of it are
    rejected rather than implementing the analytic limit.
    """

    alpha: float = DEFAULT_BAMS_ALPHA
    tau: Optional[float] = None
    mu: Optional[float] = None

    def __post_init__(self):
        if not 0.0 < self.alpha < 1.0:
            raise ValueError(f"alpha must be in (0, 1), got {self.alpha}")
        if self.tau is not None:
            _check_open("tau", self.tau)
        if self.mu is not None:
            _check_open("mu", self.mu)
        if self.tau is not None and self.mu is not None:
            if abs(2.0 * self.mu * self.tau ** 2 - 1.0) <= _BAMS_SINGULARITY_TOL:
                raise ValueError(
                    f"parameters too close to the singular manifold "
                    f"2*mu*tau^2 = 1 (got {2.0 * self.mu * self.tau ** 2})")


RuleSpec = Union[Logistic, Beta, Lpm, Abe, Bams]


# ---------------------------------------------------------------------------
# noise scale
# ---------------------------------------------------------------------------

def estimate_sigma(finest_details: np.ndarray) -> float:
    """Robust noise-sd estimate: median(|d|) / 0.6745 over the finest-level
    detail coefficients (Donoho and Johnstone, 1994)."""
    d = np.asarray(finest_details, dtype=float)
    if d.size == 0:
        raise ValueError("cannot estimate sigma from an empty coefficient vector")
    return float(np.median(np.abs(d)) / MAD_TO_SIGMA)


# ---------------------------------------------------------------------------
# the five rules
# ---------------------------------------------------------------------------

def _phi(x):
    return np.exp(-0.5 * x * x) / _SQRT_2PI


def _logistic_pdf(x, tau):
    # exp(-x/tau) / (tau (1 + exp(-x/tau))^2), evaluated via |x| for stability;
    # the density is symmetric so this is exact.
    e = np.exp(-np.abs(x) / tau)
    return e / (tau * (1.0 + e) ** 2)


def _as_array(d):
    arr = np.asarray(d, dtype=float)
    return arr, arr.ndim == 0


def _ratio_or_zero(num, den, rule_name):
    """num/den elementwise, mapping den == 0 to full shrinkage with a warning."""
    den = np.asarray(den)
    bad = den == 0.0
    if np.any(bad):
        warnings.warn(
            f"{rule_name}: denominator underflowed for {int(np.count_nonzero(bad))} "
            f"coefficient(s); returning 0 (full shrinkage)",
            ShrinkageUnderflowWarning, stacklevel=3)
    safe = np.where(bad, 1.0, den)
    return np.where(bad, 0.0, num / safe)


def _require(value, name, rule):
    if value is None:
        raise ValueError(f"{rule} spec has unresolved {name}; call resolve_rule first")
    return value


def logistic_rule(d, spec: Logistic, quad: Optional[QuadratureSpec] = None):
    """Posterior mean under the logistic mixture prior.

    Both integrals (numerator and denominator) are approximated on the same
    Gauss-Hermite nodes adapted to the standard normal weight.
    """
    sigma = _require(spec.sigma, "sigma", "Logistic")
    if quad is None:
        quad = _default_gh()
    if quad.kind != "gauss-hermite-standard-normal":
        raise ValueError("logistic_rule needs a gauss-hermite-standard-normal rule")
    arr, scalar = _as_array(d)
    theta = sigma * quad.nodes + arr[..., None]
    g = _logistic_pdf(theta, spec.tau)
    num = (1.0 - spec.p) * (g * theta) @ quad.weights
    den = (spec.p / sigma) * _phi(arr / sigma) + (1.0 - spec.p) * g @ quad.weights
    out = _ratio_or_zero(num, den, "logistic_rule")
    return float(out) if scalar else out


def _beta_pdf(theta, a, m):
    return (m * m - theta * theta) ** (a - 1.0) / ((2.0 * m) ** (2.0 * a - 1.0)
                                                   * _beta_function(a, a))


def beta_rule(d, spec: Beta, quad: Optional[QuadratureSpec] = None):
    """Posterior mean under the symmetric beta mixture prior on [-m, m].

    The prior integrals are evaluated by Gauss-Legendre quadrature mapped
    onto [-m, m]; |result| <= m always.
    """
    sigma = _require(spec.sigma, "sigma", "Beta")
    m = _require(spec.m, "m", "Beta")
    if quad is None:
        quad = _default_gl()
    if quad.kind != "gauss-legendre-interval":
        raise ValueError("beta_rule needs a gauss-legendre-interval rule")
    arr, scalar = _as_array(d)
    theta = m * quad.nodes
    wt = m * quad.weights
    g = _beta_pdf(theta, spec.a, m)
    lik = _phi((arr[..., None] - theta) / sigma) / sigma
    num = (1.0 - spec.p) * lik @ (wt * theta * g)
    den = spec.p * _phi(arr / sigma) / sigma + (1.0 - spec.p) * lik @ (wt * g)
    out = _ratio_or_zero(num, den, "beta_rule")
    return float(out) if scalar else out


def lpm_rule(d, spec: Lpm):
    """Large Posterior Mode thresholding: zero below lambda = 2 sigma
    sqrt(2k-1), else the larger posterior mode (closed interval at lambda)."""
    sigma = _require(spec.sigma, "sigma", "Lpm")
    arr, scalar = _as_array(d)
    lam_sq = 4.0 * sigma * sigma * (2.0 * spec.k - 1.0)
    keep = arr * arr >= lam_sq
    disc = np.sqrt(np.maximum(arr * arr - lam_sq, 0.0))
    out = np.where(keep, 0.5 * (arr + np.sign(arr) * disc), 0.0)
    return float(out) if scalar else out


def abe_rule(d, spec: Abe):
    """Amplitude-scale invariant Bayes Estimator: (d^2 - 3 sigma^2)_+ / d,
    with the value at d = 0 defined as 0."""
    sigma = _require(spec.sigma, "sigma", "Abe")
    arr, scalar = _as_array(d)
    excess = arr * arr - 3.0 * sigma * sigma
    keep = excess > 0.0
    safe = np.where(arr == 0.0, 1.0, arr)
    out = np.where(keep & (arr != 0.0), excess / safe, 0.0)
    return float(out) if scalar else out


def bams_rule(d, spec: Bams):
    """BAMS posterior mean under the point-mass + double-exponential prior.

    With s = 1/sqrt(2 mu) the marginal noise is DE(0, s) and, for tau != s,

        delta(d) = [tau (tau^2-s^2) d e^{-|d|/tau}
                    + 2 s^2 tau^2 sgn(d) (e^{-|d|/s} - e^{-|d|/tau})]
                   / [(tau^2-s^2) (tau e^{-|d|/tau} - s e^{-|d|/s})]

        bams(d) = (1-alpha) m(d) delta(d)
                  / [(1-alpha) m(d) + alpha DE(d; 0, s)]

    where m(d) is the convolution of the two double exponentials.  The
    common exponential factor is cancelled analytically so the evaluation
    never under- or overflows for large |d|.
    """
    tau = _require(spec.tau, "tau", "Bams")
    mu = _require(spec.mu, "mu", "Bams")
    arr, scalar = _as_array(d)
    s = 1.0 / np.sqrt(2.0 * mu)
    ad = np.abs(arr)
    sgn = np.sign(arr)
    tqdiff = tau * tau - s * s
    if tau >= s:
        # divide everything by e^{-|d|/tau}; r = e^{-|d|(1/s - 1/tau)} in (0, 1]
        r = np.exp(-ad * (1.0 / s - 1.0 / tau))
        delta = (tau * tqdiff * arr + 2.0 * s * s * tau * tau * sgn * (r - 1.0)) \
            / (tqdiff * (tau - s * r))
        marg = (tau - s * r) / (2.0 * tqdiff)
        noise = r / (2.0 * s)
    else:
        # divide everything by e^{-|d|/s}; r = e^{-|d|(1/tau - 1/s)} in (0, 1]
        r = np.exp(-ad * (1.0 / tau - 1.0 / s))
        delta = (tau * tqdiff * arr * r + 2.0 * s * s * tau * tau * sgn * (1.0 - r)) \
            / (tqdiff * (tau * r - s))
        marg = (tau * r - s) / (2.0 * tqdiff)
        noise = 1.0 / (2.0 * s)
    weight = (1.0 - spec.alpha) * marg
    out = weight * delta / (weight + spec.alpha * noise)
    return float(out) if scalar else out


# ---------------------------------------------------------------------------
# level policy and pyramid application
# ---------------------------------------------------------------------------

def av_policy(j: int, detail_coefficients: np.ndarray,
              policy: LevelPolicy) -> tuple[float, float]:
    """Level-dependent (p, m) for resolution level j.

    p = 1 - (j - J0 + 1)^(-gamma), m = max_k |d_jk|.
    """
    if j < policy.J0:
        raise ValueError(f"level {j} below primary resolution level {policy.J0}")
    d = np.asarray(detail_coefficients, dtype=float)
    if d.size == 0:
        raise ValueError(f"no detail coefficients supplied for level {j}")
    p = 1.0 - (j - policy.J0 + 1) ** (-policy.gamma_exponent)
    m = float(np.max(np.abs(d)))
    return p, m


def _apply_rule(d: np.ndarray, rule: RuleSpec) -> np.ndarray:
    if isinstance(rule, Logistic):
        return logistic_rule(d, rule)
    if isinstance(rule, Beta):
        return beta_rule(d, rule)
    if isinstance(rule, Lpm):
        return lpm_rule(d, rule)
    if isinstance(rule, Abe):
        return abe_rule(d, rule)
    if isinstance(rule, Bams):
        return bams_rule(d, rule)
    raise TypeError(f"unknown rule spec {rule!r}")


def shrink_pyramid(pyr: Pyramid, rule: RuleSpec,
                   policy: Optional[LevelPolicy] = None) -> Pyramid:
    """Apply a shrinkage rule to every detail coefficient of a pyramid.

    Coarse scaling coefficients pass through unchanged.  When a LevelPolicy
    is supplied and the rule is Logistic or Beta, the mixture weight (and the
    beta half-support) are taken from the policy per level instead of the
    static spec values.
    """
    new_details = []
    for i, d in enumerate(pyr.details):
        j = pyr.J0 + i
        level_rule = rule
        if policy is not None and isinstance(rule, (Logistic, Beta)):
            if not np.any(d):
                # every rule maps 0 to 0; avoids a degenerate m(j) = 0 support
                new_details.append(np.zeros_like(d))
                continue
            p, m = av_policy(j, d, policy)
            if isinstance(rule, Logistic):
                level_rule = Logistic(p=p, tau=rule.tau, sigma=rule.sigma)
            else:
                level_rule = Beta(p=p, a=rule.a, m=m, sigma=rule.sigma)
        new_details.append(np.asarray(_apply_rule(d, level_rule)))
    return Pyramid(coarse=pyr.coarse.copy(), details=new_details,
                   J=pyr.J, J0=pyr.J0)


# ---------------------------------------------------------------------------
# resolution of data-dependent hyperparameters
# ---------------------------------------------------------------------------

def resolve_rule(spec: RuleSpec, sigma: float, pyr: Optional[Pyramid] = None) -> RuleSpec:
    """Fill the data-dependent fields of a rule spec.

    sigma plugs into Logistic/Beta/Lpm/Abe.  Unset Beta half-support becomes
    the max |d| over all detail levels of ``pyr``.  Unset BAMS scales become
    tau = 3 sigma and mu = 1/sigma^2, i.e. the prior mean of the noise
    variance (1/mu under this parameterization) matches the plug-in sigma^2.
    """
    if isinstance(spec, Logistic):
        return Logistic(p=spec.p, tau=spec.tau,
                        sigma=spec.sigma if spec.sigma is not None else sigma)
    if isinstance(spec, Beta):
        m = spec.m
        if m is None:
            if pyr is None:
                raise ValueError("resolving Beta.m requires a pyramid")
            m = max(float(np.max(np.abs(d))) for d in pyr.details)
            if m == 0.0:
                m = None  # all-zero details; shrink_pyramid short-circuits
        if m is None:
            m = 1.0
        return Beta(p=spec.p, a=spec.a, m=m,
                    sigma=spec.sigma if spec.sigma is not None else sigma)
    if isinstance(spec, Lpm):
        return Lpm(k=spec.k, sigma=spec.sigma if spec.sigma is not None else sigma)
    if isinstance(spec, Abe):
        return Abe(sigma=spec.sigma if spec.sigma is not None else sigma)
    if isinstance(spec, Bams):
        if sigma <= 0 and (spec.tau is None or spec.mu is None):
            raise ValueError("BAMS defaults require a positive sigma estimate")
        tau = spec.tau if spec.tau is not None else 3.0 * sigma
        mu = spec.mu if spec.mu is not None else 1.0 / sigma ** 2
        return Bams(alpha=spec.alpha, tau=tau, mu=mu)
    raise TypeError(f"unknown rule spec {spec!r}")


def rule_defaults() -> dict[str, dict[str, object]]:
    """Resolved default hyperparameters for each named rule (for reporting)."""
    return {
        "log": {"p": DEFAULT_LOGISTIC_P, "tau": DEFAULT_LOGISTIC_TAU,
                "sigma": "estimated", "policy": "p(j) = 1 - (j - J0 + 1)^-gamma"},
        "beta": {"p": DEFAULT_BETA_P, "a": DEFAULT_BETA_A,
                 "m": "max_k |d_jk|", "sigma": "estimated",
                 "policy": "p(j) = 1 - (j - J0 + 1)^-gamma, m(j) = max_k |d_jk|"},
        "lpm": {"k": DEFAULT_LPM_K, "sigma": "estimated",
                "threshold": "2 sigma sqrt(2k - 1)"},
        "abe": {"sigma": "estimated", "threshold": "sqrt(3) sigma"},
        "bams": {"alpha": DEFAULT_BAMS_ALPHA, "tau": "3 * sigma_hat",
                 "mu": "1 / sigma_hat^2"},
    }
