"""Method-of-moments Log-Normal fits and the closed-form outage probability."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import erfc

from .errors import DomainError, InfeasibleCorrelationError, InfeasibleMomentsError
from .moments import MomentSet

# relative slack before m2 < m1**2 counts as infeasible rather than rounding
_FEAS_RTOL = 1e-12


@dataclass(frozen=True)
class LogNormalParams:
    """Parameters of ln(V) ~ Normal(mu, sigma2)."""

    mu: float
    sigma2: float

    @property
    def sigma(self) -> float:
        return math.sqrt(self.sigma2)

    @property
    def mean(self) -> float:
        return math.exp(self.mu + self.sigma2 / 2)

    @property
    def second_moment(self) -> float:
        return math.exp(2 * self.mu + 2 * self.sigma2)

    @property
    def median(self) -> float:
        return math.exp(self.mu)


def fit_lognormal(m1: float, m2: float) -> LogNormalParams:
    """Match E[V] = m1 and E[V^2] = m2."""
    if not m1 > 0:
        raise DomainError(f"first moment must be positive, got {m1}")
    ratio = m2 / (m1 * m1)
    if ratio < 1.0:
        if ratio < 1.0 - _FEAS_RTOL:
            raise InfeasibleMomentsError(f"E[V^2]={m2} < E[V]^2={m1 * m1}")
        ratio = 1.0
    sigma2 = math.log(ratio)
    return LogNormalParams(mu=2 * math.log(m1) - 0.5 * math.log(m2), sigma2=sigma2)


def fit_lognormal_mv(mean: float, var: float) -> LogNormalParams:
    """Same fit from mean and variance; avoids cancelling E[V^2] - E[V]^2."""
    if not mean > 0:
        raise DomainError(f"mean must be positive, got {mean}")
    if var < 0:
        raise InfeasibleMomentsError(f"negative variance {var}")
    sigma2 = math.log1p(var / (mean * mean))
    return LogNormalParams(mu=math.log(mean) - sigma2 / 2, sigma2=sigma2)


def log_covariance(covXY: float, EX: float, EY: float) -> float:
    """Cov(ln X, ln Y) implied by Cov(X, Y) for a bivariate Log-Normal pair."""
    if not (EX > 0 and EY > 0):
        raise DomainError("means must be positive")
    r = covXY / (EX * EY)
    if r <= -1.0:
        raise DomainError(f"Cov(X,Y)/(E[X]E[Y]) = {r} <= -1")
    return math.log1p(r)


def ratio_params(px: LogNormalParams, py: LogNormalParams, cov_ln: float) -> LogNormalParams:
    """Parameters of X/Y when (ln X, ln Y) is jointly Gaussian."""
    s2 = px.sigma2 + py.sigma2 - 2.0 * cov_ln
    if s2 < 0:
        # tolerate rounding around an exactly degenerate ratio
        if s2 < -1e-12 * max(px.sigma2 + py.sigma2, 1.0):
            raise InfeasibleCorrelationError(
                f"negative SINR log-variance {s2:.6g} "
                f"(sigma2_X={px.sigma2:.6g}, sigma2_Y={py.sigma2:.6g}, cov={cov_ln:.6g})"
            )
        s2 = 0.0
    return LogNormalParams(px.mu - py.mu, s2)


def outage_probability(params: LogNormalParams, gamma_th):
    """P(gamma <= gamma_th) under the Log-Normal law; vectorized over gamma_th.

    With sigma2 == 0 the law is a point mass and the result is a step at
    exp(mu).
    """
    g = np.asarray(gamma_th, dtype=float)
    if np.any(~(g > 0)):
        raise DomainError("SINR threshold must be positive")
    if params.sigma2 == 0:
        out = (np.log(g) >= params.mu).astype(float)
    else:
        out = 0.5 * erfc(-(np.log(g) - params.mu) / (params.sigma * math.sqrt(2.0)))
        out = np.clip(out, 0.0, 1.0)
    return float(out) if out.ndim == 0 else out


def pdf(params: LogNormalParams, x):
    x = np.asarray(x, dtype=float)
    if np.any(~(x > 0)):
        raise DomainError("Log-Normal density needs x > 0")
    if not params.sigma2 > 0:
        raise DomainError("density undefined for sigma2 == 0")
    s = params.sigma
    out = np.exp(-((np.log(x) - params.mu) ** 2) / (2 * params.sigma2)) / (x * s * math.sqrt(2 * math.pi))
    return float(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class SinrFit:
    """Every intermediate of the two-step approximation for one user."""

    x: LogNormalParams
    y: LogNormalParams
    cov_ln: float
    gamma: LogNormalParams


def fit_sinr(moments: MomentSet) -> SinrFit:
    """Fit X and Y separately, then combine into the SINR ratio law.

    Var(Y) is taken as Var(Z) = E[Z^2] - E[Z]^2, which is exact and keeps
    precision when the noise power dwarfs the interference.
    """
    px = fit_lognormal(moments.EX, moments.EX2)
    py = fit_lognormal_mv(moments.EY, moments.EZ2 - moments.EZ**2)
    c = log_covariance(moments.CovXY, moments.EX, moments.EY)
    return SinrFit(px, py, c, ratio_params(px, py, c))
