"""The measure family on S^n with density proportional to |y - x|^-(n+alpha).

Everything is parameterised by ``s = |x|``: the density only depends on the
angle ``theta(y)`` between ``y`` and ``x``, whose law on ``[0, pi]`` has density
proportional to ``sin^(n-1)(theta) q(theta)^(-(n+alpha)/2)`` with
``q(theta) = 1 - 2 s cos(theta) + s^2``.

The weight is evaluated as ``q = (1-s)^2 + 4 s sin^2(theta/2)`` and rescaled by
its largest possible value so that nothing overflows as ``s -> 1``.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy import integrate

from . import _kernels
from .errors import ConvergenceError, DomainError, ParameterError

S_MAX = 1.0 - 1e-9
QUAD_EPSREL = 1e-12
QUAD_LIMIT = 500
QUANTILE_TOL = 1e-10

_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(16)
_UNIFORM_PANELS = 512


@dataclass(frozen=True)
class SphereParams:
    """Identifies one measure: sphere dimension ``n``, exponent ``alpha``, pole distance ``s``."""

    n: int
    alpha: float
    s: float = 0.0

    def __post_init__(self):
        if isinstance(self.n, bool) or int(self.n) != self.n:
            raise ParameterError(f"n must be an integer, got {self.n!r}")
        object.__setattr__(self, "n", int(self.n))
        object.__setattr__(self, "alpha", float(self.alpha))
        object.__setattr__(self, "s", float(self.s))
        if self.n < 2:
            raise ParameterError(f"n must be >= 2, got {self.n}")
        if not math.isfinite(self.alpha):
            raise ParameterError(f"alpha must be finite, got {self.alpha}")
        if not (0.0 <= self.s <= S_MAX):
            raise ParameterError(f"s must lie in [0, {S_MAX!r}], got {self.s}")

    @property
    def exponent(self) -> float:
        """``n + alpha``, the power of ``|y - x|`` in the denominator."""
        return self.n + self.alpha

    @property
    def is_uniform(self) -> bool:
        """True when the density on S^n is constant (``s = 0`` or ``alpha = -n``)."""
        return self.s == 0.0 or self.exponent == 0.0

    def require_cd_range(self):
        if self.alpha < -self.n:
            raise ParameterError(
                f"alpha = {self.alpha} < -n = {-self.n}: no curvature-dimension bound is available"
            )

    def to_dict(self) -> dict:
        return {"n": self.n, "alpha": self.alpha, "s": self.s}

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_dict(cls, data: dict) -> "SphereParams":
        unknown = set(data) - {"n", "alpha", "s"}
        if unknown:
            raise ParameterError(f"unknown keys in SphereParams: {sorted(unknown)}")
        return cls(n=data["n"], alpha=data["alpha"], s=data.get("s", 0.0))

    @classmethod
    def from_json(cls, text: str) -> "SphereParams":
        return cls.from_dict(json.loads(text))


def sine_power_integral(n: int) -> float:
    """``int_0^pi sin^(n-1)(t) dt``."""
    return math.exp(0.5 * math.log(math.pi) + math.lgamma(n / 2) - math.lgamma((n + 1) / 2))


def _log_scale(params: SphereParams) -> float:
    # log of the largest value of q^(-(n+alpha)/2) over [0, pi]
    e = params.exponent
    if e > 0:
        return -e * math.log1p(-params.s)
    return -e * math.log1p(params.s)


def _panel_breaks(params: SphereParams) -> np.ndarray:
    breaks = [np.linspace(0.0, math.pi, _UNIFORM_PANELS + 1)]
    if params.s > 0.0 and params.exponent != 0.0:
        # geometric refinement around the scale 1 - s where the weight varies fastest
        length = 1.0 - params.s
        j = np.arange(-40, 200)
        geo = length * 2.0 ** (j / 4.0)
        breaks.append(geo[geo < math.pi])
    out = np.unique(np.concatenate(breaks))
    return out


@dataclass(frozen=True, eq=False)
class MarginalDensity:
    """Normalised law of ``theta(y)`` under the measure, with cached constants.

    Attributes
    ----------
    params : SphereParams
    log_scale : float
        The weight is stored divided by ``exp(log_scale)``.
    z_scaled : float
        ``int_0^pi`` of the rescaled weight, by adaptive quadrature.
    quad_error : float
        Error estimate reported by the quadrature.
    breaks, cum : ndarray
        Panel boundaries and the cumulative rescaled mass at each boundary.
    """

    params: SphereParams
    log_scale: float
    z_scaled: float
    quad_error: float
    breaks: np.ndarray
    cum: np.ndarray

    @property
    def log_Z(self) -> float:
        """Log of the unnormalised marginal mass ``Z``."""
        return math.log(self.z_scaled) + self.log_scale

    @property
    def Z(self) -> float:
        return math.exp(self.log_Z)

    @property
    def Z_sphere(self) -> float:
        """``int |y - x|^-(n+alpha) d sigma^n(y)`` over the Haar probability measure."""
        return math.exp(self.log_Z - math.log(sine_power_integral(self.params.n)))

    @property
    def normalization(self) -> float:
        """The constant ``c`` making ``c |y - x|^-(n+alpha) d sigma^n`` a probability."""
        return math.exp(math.log(sine_power_integral(self.params.n)) - self.log_Z)

    def log_unnormalized(self, theta):
        """``log(sin^(n-1) q^(-(n+alpha)/2))``; ``-inf`` at the endpoints."""
        theta = np.asarray(theta, dtype=np.float64)
        p = self.params
        sh = np.sin(0.5 * theta)
        q = (1.0 - p.s) ** 2 + 4.0 * p.s * sh * sh
        with np.errstate(divide="ignore"):
            return (p.n - 1) * np.log(np.sin(theta)) - 0.5 * p.exponent * np.log(q)

    def _weight(self, theta):
        p = self.params
        return _kernels.scaled_weight(theta, float(p.n), p.alpha, p.s, self.log_scale)

    def pdf(self, theta):
        theta = _check_angle(theta)
        out = self._weight(theta) / self.z_scaled
        out = np.where((theta == 0.0) | (theta == math.pi), 0.0, out)
        return out[()] if out.ndim == 0 else out

    def cdf(self, theta):
        theta = _check_angle(theta)
        p = self.params
        k = np.clip(np.searchsorted(self.breaks, theta, side="right") - 1, 0, len(self.breaks) - 2)
        part = _kernels.partial_panel_integral(
            self.breaks[k], theta, _GL_NODES, _GL_WEIGHTS, float(p.n), p.alpha, p.s, self.log_scale
        )
        out = np.clip((self.cum[k] + part) / self.cum[-1], 0.0, 1.0)
        out = np.where(theta == 0.0, 0.0, np.where(theta == math.pi, 1.0, out))
        return out[()] if out.ndim == 0 else out

    def quantile(self, u, tol: float = QUANTILE_TOL):
        u = np.asarray(u, dtype=np.float64)
        if np.any(~((u >= 0.0) & (u <= 1.0))):
            raise DomainError("probability must lie in [0, 1]")
        p = self.params
        shape = u.shape
        flat = u.reshape(-1)
        total = self.cum[-1]
        target = flat * total
        k = np.clip(np.searchsorted(self.cum, target, side="right") - 1, 0, len(self.breaks) - 2)
        theta, resid, a, b = _kernels.quantile_bisect(
            target - self.cum[k],
            self.breaks[k],
            self.breaks[k + 1],
            _GL_NODES,
            _GL_WEIGHTS,
            float(p.n),
            p.alpha,
            p.s,
            self.log_scale,
            200,
        )
        theta = np.where(flat == 0.0, 0.0, np.where(flat == 1.0, math.pi, theta))
        resid = np.where((flat == 0.0) | (flat == 1.0), 0.0, resid / total)
        worst = int(np.argmax(resid)) if resid.size else 0
        if resid.size and resid[worst] > tol:
            raise ConvergenceError(
                f"quantile tolerance {tol:g} not reached (residual {resid[worst]:.3g})",
                detail={"u": float(flat[worst]), "bracket": (float(a[worst]), float(b[worst]))},
            )
        theta = theta.reshape(shape)
        return theta[()] if theta.ndim == 0 else theta


def _check_angle(theta):
    theta = np.asarray(theta, dtype=np.float64)
    if np.any(~((theta >= 0.0) & (theta <= math.pi))):
        raise DomainError("angle must lie in [0, pi]")
    return theta


@lru_cache(maxsize=256)
def marginal(params: SphereParams) -> MarginalDensity:
    """Build (once per parameter triple) the normalised angular marginal."""
    log_scale = _log_scale(params)
    breaks = _panel_breaks(params)
    n, alpha, s = float(params.n), params.alpha, params.s

    panel_mass = _kernels.partial_panel_integral(
        breaks[:-1], breaks[1:], _GL_NODES, _GL_WEIGHTS, n, alpha, s, log_scale
    )
    cum = np.concatenate([[0.0], np.cumsum(panel_mass)])

    if params.is_uniform:
        z_scaled, err = sine_power_integral(params.n), 0.0
    else:
        # geometric breakpoints around 1 - s; without them QUADPACK can miss the
        # spike near theta = 0 while still reporting a tiny error
        length = 1.0 - s
        hints = length * 2.0 ** (np.arange(-8, 160) / 2.0)
        hints = hints[hints < math.pi]
        z_scaled, err, info = integrate.quad(
            lambda t: float(_kernels.scaled_weight(t, n, alpha, s, log_scale)),
            0.0,
            math.pi,
            points=hints,
            # the rescaled integral can be tiny as s -> 1, so only the relative tolerance binds
            epsabs=0.0,
            epsrel=QUAD_EPSREL,
            limit=max(QUAD_LIMIT, 4 * len(hints)),
            full_output=True,
        )[:3]
        if err > 1e-9 * z_scaled:
            raise ConvergenceError(
                f"normalisation quadrature did not converge for {params}", detail={"error": err}
            )
    if abs(cum[-1] - z_scaled) > 1e-9 * z_scaled:
        raise ConvergenceError(
            f"panel and adaptive normalisations disagree for {params}",
            detail={"panel": float(cum[-1]), "adaptive": z_scaled, "error": err},
        )
    return MarginalDensity(params, log_scale, z_scaled, err, breaks, cum)


def marginal_pdf(params: SphereParams, theta):
    """Density of ``theta(y)`` on ``[0, pi]``."""
    return marginal(params).pdf(theta)


def marginal_cdf(params: SphereParams, theta):
    return marginal(params).cdf(theta)


def marginal_quantile(params: SphereParams, u, tol: float = QUANTILE_TOL):
    """Inverse of :func:`marginal_cdf` by bracketed bisection."""
    return marginal(params).quantile(u, tol=tol)


def median_angle(params: SphereParams) -> float:
    return float(marginal_quantile(params, 0.5))


def sphere_normalization(params: SphereParams) -> float:
    """The constant ``c_x`` with ``c_x |y - x|^-(n+alpha) d sigma^n`` a probability measure."""
    return marginal(params).normalization
