"""One-dimensional model profile and the isoperimetric/concentration bounds it yields.

The model density is ``phi(t) = c / cosh(sqrt(delta) t)^(alpha+1)`` on the real
line. Substituting ``w = tanh^2(sqrt(delta) t)`` turns its distribution
function into a regularized incomplete beta function, which is how ``Phi``,
its inverse and the tail are evaluated (no truncated quadrature).
"""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass

import numpy as np
from scipy import special

from .errors import DomainError, ParameterError, TheoremViolation
from .measures import SphereParams, marginal

SLACK_TOL = 1e-8


@dataclass(frozen=True)
class ModelProfile:
    params: SphereParams
    rho: float
    delta: float
    c_norm: float

    @property
    def k(self) -> float:
        """Decay power ``alpha + 1`` of ``sech``."""
        return self.params.alpha + 1.0

    @property
    def sqrt_delta(self) -> float:
        return math.sqrt(self.delta)


def model_profile(params: SphereParams) -> ModelProfile:
    n, alpha = params.n, params.alpha
    if not -1.0 < alpha < 3 * n - 4:
        raise ParameterError(f"the model profile needs alpha in (-1, {3 * n - 4}), got {alpha}")
    rho = n - 1 - (n + alpha) / 4.0
    delta = rho / (alpha + 1.0)
    k = alpha + 1.0
    # int_R sech(u)^k du = B(k/2, 1/2)
    log_total = special.betaln(k / 2.0, 0.5) - 0.5 * math.log(delta)
    return ModelProfile(params, rho, delta, math.exp(-log_total))


def phi(profile: ModelProfile, t):
    """Model density, evaluated in log space so large ``|t|`` underflows cleanly."""
    u = profile.sqrt_delta * np.abs(np.asarray(t, dtype=np.float64))
    # log cosh(u) = u + log1p(exp(-2u)) - log 2
    log_cosh = u + np.log1p(np.exp(-2.0 * u)) - math.log(2.0)
    out = profile.c_norm * np.exp(-profile.k * log_cosh)
    return out[()] if out.ndim == 0 else out


def _upper_tail(profile: ModelProfile, r):
    # int_r^inf phi for r >= 0, two forms chosen for accuracy near 0 and in the far tail
    u = profile.sqrt_delta * np.asarray(r, dtype=np.float64)
    a, k = 0.5, profile.k / 2.0
    th2 = np.tanh(u) ** 2
    near = 0.5 * (1.0 - special.betainc(a, k, th2))
    # sech^2 u = 4 e^{-2u} / (1 + e^{-2u})^2
    e = np.exp(-2.0 * u)
    sech2 = 4.0 * e / (1.0 + e) ** 2
    far = 0.5 * special.betainc(k, a, sech2)
    # sech^2 underflows long before the tail does when alpha is near -1;
    # there I_x(k, 1/2) = x^k / (k B(k, 1/2)) to relative accuracy O(x)
    log_sech2 = math.log(4.0) - 2.0 * u - 2.0 * np.log1p(e)
    tiny = 0.5 * np.exp(k * log_sech2 - math.log(k) - special.betaln(k, a))
    far = np.where(sech2 < 1e-280, tiny, far)
    return np.where(th2 < 0.5, near, far)


def tail_bound(profile: ModelProfile, r):
    """``int_r^inf phi(t) dt``, the exact middle member of the two-level tail bound."""
    r = np.asarray(r, dtype=np.float64)
    if np.any(~(r >= 0.0)):
        raise DomainError("r must be non-negative")
    out = _upper_tail(profile, r)
    return out[()] if out.ndim == 0 else out


def Phi(profile: ModelProfile, t):
    t = np.asarray(t, dtype=np.float64)
    upper = _upper_tail(profile, np.abs(t))
    out = np.where(t >= 0.0, 1.0 - upper, upper)
    return out[()] if out.ndim == 0 else out


def Phi_inv(profile: ModelProfile, u):
    u = np.asarray(u, dtype=np.float64)
    if np.any(~((u > 0.0) & (u < 1.0))):
        raise DomainError("probability must lie in (0, 1)")
    a, k = 0.5, profile.k / 2.0
    tail = np.minimum(u, 1.0 - u)  # mass beyond |t|
    # central branch: tanh^2 = I^{-1}_{(1/2, k/2)}(1 - 2 tail)
    th2 = special.betaincinv(a, k, np.clip(1.0 - 2.0 * tail, 0.0, 1.0))
    with np.errstate(divide="ignore"):
        central = np.arctanh(np.sqrt(th2))
    # far branch: sech^2 = I^{-1}_{(k/2, 1/2)}(2 tail)
    sech2 = special.betaincinv(k, a, 2.0 * tail)
    with np.errstate(divide="ignore"):
        far = np.arccosh(1.0 / np.sqrt(sech2))
        # inverse of the leading-order tail when sech^2 underflows; sech^2 ~ 4 e^{-2u}
        log_sech2 = (np.log(2.0 * tail) + math.log(k) + special.betaln(k, a)) / k
    far = np.where(sech2 < 1e-280, 0.5 * (math.log(4.0) - log_sech2), far)
    mag = np.where(th2 < 0.5, central, far) / profile.sqrt_delta
    out = np.where(u >= 0.5, mag, -mag)
    return out[()] if out.ndim == 0 else out


def isop_lower(profile: ModelProfile, v):
    """Isoperimetric lower bound ``phi(Phi^{-1}(v))`` for a set of measure ``v``."""
    return phi(profile, Phi_inv(profile, v))


def cheeger_lower(profile: ModelProfile) -> float:
    """``sqrt(delta) / int_0^inf cosh(t)^-(1+alpha) dt``."""
    if profile.k <= 0:
        raise ParameterError("the Cheeger integral diverges for alpha <= -1")
    half = 0.5 * math.exp(special.betaln(profile.k / 2.0, 0.5))
    return profile.sqrt_delta / half


def two_level_tail(profile: ModelProfile, r, c: float, C: float):
    """Asymptotic two-regime tail shape with caller-supplied constants ``c``, ``C``.

    Intended for plotting overlays only; the constants are not known numerically.
    """
    r = np.asarray(r, dtype=np.float64)
    rho_, k = profile.rho, profile.k
    switch = math.sqrt(k / rho_)
    gauss = C * min(1.0, math.sqrt(k)) * np.exp(-c * rho_ * r * r) / (1.0 + math.sqrt(rho_) * r)
    expo = C * min(1.0, 1.0 / math.sqrt(k)) * np.exp(-c * math.sqrt(k * rho_) * r)
    out = np.where(r <= switch, gauss, expo)
    return out[()] if out.ndim == 0 else out


def cap_boundary_measure(params: SphereParams, theta0):
    """Minkowski boundary measure of the cap ``{theta <= theta0}``: the marginal density there."""
    theta0 = np.asarray(theta0, dtype=np.float64)
    if np.any(~((theta0 > 0.0) & (theta0 < math.pi))):
        raise DomainError("theta0 must lie in (0, pi)")
    return marginal(params).pdf(theta0)


@dataclass
class CapCheckReport:
    params: SphereParams
    theta0: np.ndarray
    v: np.ndarray
    boundary_measure: np.ndarray
    lower_bound: np.ndarray
    slack: np.ndarray
    tol: float = SLACK_TOL

    @property
    def worst_slack(self) -> float:
        return float(self.slack.min())

    @property
    def worst_theta0(self) -> float:
        return float(self.theta0[int(np.argmin(self.slack))])

    @property
    def passed(self) -> bool:
        return self.worst_slack >= -self.tol

    def rows(self):
        for row in zip(self.theta0, self.v, self.boundary_measure, self.lower_bound, self.slack):
            yield tuple(float(x) for x in row)

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["theta0", "v", "boundary_measure", "lower_bound", "slack"])
        writer.writerows(self.rows())
        return buf.getvalue()

    def summary(self) -> dict:
        return {
            "params": self.params.to_dict(),
            "points": int(self.theta0.size),
            "worst_slack": self.worst_slack,
            "worst_theta0": self.worst_theta0,
            "passed": self.passed,
        }


def isop_check_caps(params: SphereParams, grid_size: int = 200, raise_on_fail: bool = False) -> CapCheckReport:
    """Check the isoperimetric lower bound on geodesic caps around the pole direction.

    Both ``{theta <= theta0}`` (measure ``v``) and its complement (measure
    ``1 - v``) share the boundary measure; the model bound is symmetric, so
    the slack is the smaller of the two. Caps of measure within ``1e-15`` of
    0 or 1 are skipped because the model inverse is undefined there.
    """
    profile = model_profile(params)
    m = marginal(params)
    theta0 = np.linspace(0.0, math.pi, grid_size + 2)[1:-1]
    v = m.cdf(theta0)
    keep = (v > 1e-15) & (v < 1.0 - 1e-15)
    theta0, v = theta0[keep], v[keep]
    boundary = m.pdf(theta0)
    lower = np.minimum(isop_lower(profile, v), isop_lower(profile, 1.0 - v))
    report = CapCheckReport(params, theta0, v, boundary, lower, boundary - lower)
    if raise_on_fail and not report.passed:
        raise TheoremViolation(
            f"cap isoperimetry violated for {params}: slack {report.worst_slack:.3g}",
            report=report.summary(),
        )
    return report
