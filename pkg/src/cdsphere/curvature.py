"""Curvature-dimension certificates for the weighted spheres.

The generalized Ricci form at ``y`` in the unit tangent direction ``v`` is::

    Ric(v, v) = (n - 1) + (n + alpha) <Hess_{S^n} |. - x| v, v> / |y - x|

and the ratio on the right is bounded below by ``F(a, b)`` with
``a = <x, y>``, ``b = <x, v>`` (equal to it when ``v`` lies in the plane of
``x`` and ``y``). Everything
here either evaluates that closed form, minimises ``F`` over a disk, or checks
it against an independent finite-difference Hessian along great circles.
"""
from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass

import numpy as np
from scipy import optimize

from .errors import ConvergenceError, DomainError, ParameterError, TheoremViolation
from .measures import SphereParams

FD_STEP = 1e-4
_SINGULAR_EPS = 1e-300


@dataclass(frozen=True)
class CdCertificate:
    """A curvature-dimension pair ``(rho, N)`` with the numerical evidence behind it."""

    params: SphereParams
    rho_analytic: float
    N: float
    rho_numeric: float | None = None
    argmin: tuple[float, float] | None = None
    search_radius: float | None = None

    def to_dict(self) -> dict:
        out = {
            "rho_analytic": self.rho_analytic,
            "N": self.N,
            "rho_numeric": self.rho_numeric,
            "argmin": list(self.argmin) if self.argmin is not None else None,
            "search_radius": self.search_radius,
        }
        return out

    def to_json(self) -> str:
        return json.dumps(self.to_dict())


def rho(n: int, alpha: float) -> float:
    """Curvature lower bound ``n - 1 - (n + alpha)/4``."""
    return n - 1 - (n + alpha) / 4.0


def analytic_cd(params: SphereParams) -> CdCertificate:
    params.require_cd_range()
    return CdCertificate(params, rho(params.n, params.alpha), -params.alpha)


def _denominator(a, b):
    d = (1.0 - a) ** 2 + b * b
    if np.any(d == 0.0):
        raise DomainError("F is singular at (a, b) = (1, 0)")
    return d


def F_p(p, a, b):
    """``(a d + (p - 2) b^2) / d^2`` with ``d = (1 - a)^2 + b^2``."""
    if p <= 0:
        raise ParameterError("p must be positive")
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    d = _denominator(a, b)
    out = (a * d + (p - 2.0) * b * b) / (d * d)
    return out[()] if out.ndim == 0 else out


def F(a, b):
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    d = _denominator(a, b)
    out = (a * d - b * b) / (d * d)
    return out[()] if out.ndim == 0 else out


def _safe_Fp(p, a, b):
    # F_p with the single singular point mapped to +inf (it is never a minimiser for p >= 1)
    d = (1.0 - a) ** 2 + b * b
    with np.errstate(divide="ignore", invalid="ignore"):
        val = (a * d + (p - 2.0) * b * b) / (d * d)
    return np.where(d > _SINGULAR_EPS, val, np.inf)


def _pick(values, a, b, tie=1e-9):
    # minimum with lexicographic tie-break on (a, b) among near-equal values
    best = values.min()
    cand = np.flatnonzero(values <= best + tie)
    order = np.lexsort((b[cand], a[cand]))
    i = cand[order[0]]
    return float(values[i]), float(a[i]), float(b[i])


def min_F_disk(radius: float, p: float = 1.0, n_angles: int = 1000, n_radii: int = 1000):
    """Global minimum of ``F_p`` over the closed disk ``a^2 + b^2 <= radius^2``.

    Dense polar grid followed by Nelder-Mead polishing from the ten best grid
    cells. Returns ``(min, (a, b))``.
    """
    if not 0.0 <= radius <= 1.0:
        raise ParameterError("radius must lie in [0, 1]")
    if p < 1.0:
        raise ParameterError("F_p is unbounded below on the unit disk for p < 1")
    if radius == 0.0:
        return float(_safe_Fp(p, np.array(0.0), np.array(0.0))), (0.0, 0.0)

    # angles include pi exactly so (-radius, 0) is a grid node
    phis = np.linspace(-math.pi, math.pi, n_angles + 1)[1:]
    rs = np.linspace(0.0, radius, n_radii + 1)[1:]
    R, PHI = np.meshgrid(rs, phis, indexing="ij")
    A = (R * np.cos(PHI)).ravel()
    B = (R * np.sin(PHI)).ravel()
    vals = _safe_Fp(p, A, B)
    A = np.append(A, 0.0)
    B = np.append(B, 0.0)
    vals = np.append(vals, _safe_Fp(p, np.array(0.0), np.array(0.0)))

    def objective(z):
        r = min(abs(z[0]), radius)
        return float(_safe_Fp(p, np.array(r * math.cos(z[1])), np.array(r * math.sin(z[1]))))

    cand_a, cand_b, cand_v = [A], [B], [vals]
    for i in np.argsort(vals, kind="stable")[:10]:
        r0 = math.hypot(A[i], B[i])
        x0 = [r0, math.atan2(B[i], A[i])]
        res = optimize.minimize(
            objective,
            x0,
            method="Nelder-Mead",
            options={"xatol": 1e-10, "fatol": 1e-14, "maxiter": 400},
        )
        r = min(abs(res.x[0]), radius)
        cand_a.append([r * math.cos(res.x[1])])
        cand_b.append([r * math.sin(res.x[1])])
        cand_v.append([res.fun])
    value, a, b = _pick(
        np.concatenate(cand_v), np.concatenate(cand_a), np.concatenate(cand_b)
    )
    return value, (a, b)


def _tangent_frame(n: int, s: float, theta_y: float, phi_dir: float):
    # x on the first axis; y in the (e1, e2) plane; v mixes the meridian with e3
    dim = n + 1
    x = np.zeros(dim)
    x[0] = s
    y = np.zeros(dim)
    y[0], y[1] = math.cos(theta_y), math.sin(theta_y)
    v = np.zeros(dim)
    v[0], v[1] = math.sin(theta_y) * math.cos(phi_dir), -math.cos(theta_y) * math.cos(phi_dir)
    v[2] = math.sin(phi_dir)
    return x, y, v


def _check_angles(theta_y, phi_dir):
    if not 0.0 < theta_y <= math.pi:
        raise DomainError("theta_y must lie in (0, pi]")
    if not 0.0 <= phi_dir <= math.pi / 2:
        raise DomainError("phi_dir must lie in [0, pi/2]")


def generalized_ricci_quadform(params: SphereParams, theta_y: float, phi_dir: float) -> float:
    """Closed-form ``Ric_{g,mu,N}(v, v)`` with ``N = -alpha``.

    ``y`` sits at angle ``theta_y`` from ``x``; the unit tangent ``v`` makes
    angle ``phi_dir`` with the meridian, tilting toward a direction orthogonal
    to the plane of ``x`` and ``y``.
    """
    params.require_cd_range()
    _check_angles(theta_y, phi_dir)
    if params.exponent == 0.0:
        return float(params.n - 1)
    a = params.s * math.cos(theta_y)
    b = params.s * math.sin(theta_y) * math.cos(phi_dir)
    return float(params.n - 1 + params.exponent * hessian_ratio(a, b, params.s))


def hessian_ratio(a, b, s):
    """``<Hess_{S^n} |. - x| v, v> / |y - x|`` from ``a = <x, y>``, ``b = <x, v>``, ``s = |x|``.

    Uses ``d = |y - x|^2 = 1 - 2a + s^2``. This equals ``F(a, b)`` only when
    ``a^2 + b^2 = s^2``, i.e. when ``v`` lies in the plane of ``x`` and ``y``;
    otherwise ``x`` has a component ``c^2 = s^2 - a^2 - b^2`` off that plane,
    which raises the value and so never undercuts ``F``'s minimum.
    """
    d = 1.0 - 2.0 * a + s * s
    return (a * d - b * b) / (d * d)


def _second_difference(f, h):
    return (f(h) - 2.0 * f(0.0) + f(-h)) / (h * h)


def fd_ricci_oracle(params: SphereParams, theta_y: float, phi_dir: float, h: float = FD_STEP) -> float:
    """``Ric_{g,mu,N}(v, v)`` from a central second difference along the great circle.

    Differentiates ``t -> Psi^(1/(N-n))(cos t y + sin t v)`` with
    ``Psi = |. - x|^-(n+alpha)``, the density up to a constant factor. Raises
    :class:`ConvergenceError` when the steps ``h`` and ``2h`` disagree by more
    than ``1e-3``.
    """
    params.require_cd_range()
    _check_angles(theta_y, phi_dir)
    if not 1e-6 <= h <= 1e-2:
        raise ParameterError("h must lie in [1e-6, 1e-2]")
    n = params.n
    if params.exponent == 0.0:
        return float(n - 1)
    x, y, v = _tangent_frame(n, params.s, theta_y, phi_dir)
    power = -1.0 / params.exponent  # 1/(N - n)

    def root_density(t):
        point = math.cos(t) * y + math.sin(t) * v
        psi = np.linalg.norm(point - x) ** (-params.exponent)
        return psi ** power

    f0 = root_density(0.0)
    ratio_h = _second_difference(root_density, h) / f0
    ratio_2h = _second_difference(root_density, 2 * h) / f0
    if abs(ratio_h - ratio_2h) > 1e-3 * max(1.0, abs(ratio_h)):
        raise ConvergenceError(
            "finite-difference Hessian unstable between h and 2h",
            detail={"h": h, "ratio_h": ratio_h, "ratio_2h": ratio_2h},
        )
    # N - n = -(n + alpha)
    return float(n - 1 + params.exponent * ratio_h)


def certify(params: SphereParams, uniform_in_x: bool = True) -> CdCertificate:
    """Analytic certificate plus the numerical minimum of the Ricci form.

    With ``uniform_in_x`` the minimum is taken over the whole unit disk (all
    ``|x| < 1``); otherwise over the disk of radius ``s``, which can only give a
    better constant.
    """
    cert = analytic_cd(params)
    radius = 1.0 if uniform_in_x else params.s
    if params.exponent == 0.0:
        value, arg = 0.0, (0.0, 0.0)
        rho_num = float(params.n - 1)
    else:
        value, arg = min_F_disk(radius, 1.0)
        rho_num = params.n - 1 + params.exponent * value
    tol = 1e-9 * max(1.0, params.exponent)
    if rho_num < cert.rho_analytic - tol:
        raise TheoremViolation(
            f"numeric curvature {rho_num} below analytic bound {cert.rho_analytic}",
            report={"params": params.to_dict(), "rho_numeric": rho_num, "argmin": arg},
        )
    return CdCertificate(params, cert.rho_analytic, cert.N, float(rho_num), arg, radius)


# ---------------------------------------------------------------------------
# general norms


class NormSpec:
    """A positively 1-homogeneous function on ``R^(n+1) \\ {0}``.

    ``evaluate`` must accept arrays of shape ``(..., n+1)`` and reduce over the
    last axis. Derivatives are taken by central differences with step ``h``.
    """

    def __init__(self, evaluate, h: float = 1e-2, name: str = "norm"):
        self.evaluate = evaluate
        self.h = h
        self.name = name

    def __call__(self, y):
        return self.evaluate(np.asarray(y, dtype=np.float64))

    def gradient(self, y):
        y = np.asarray(y, dtype=np.float64)
        dim = y.shape[-1]
        # first differences tolerate a much smaller step than second differences
        eye = np.eye(dim) * 1e-6
        plus = self(y[..., None, :] + eye)
        minus = self(y[..., None, :] - eye)
        return (plus - minus) / 2e-6

    def directional_second(self, y, v):
        """``<Hess(y) v, v>`` by Richardson-extrapolated central differences."""
        h = self.h
        base = self(y)

        # differencing the ratio to ||y|| keeps the result exactly scale-free in truncation
        def d2(step):
            return (self(y + step * v) / base - 2.0 + self(y - step * v) / base) / (step * step)

        return base * (4.0 * d2(h / 2) - d2(h)) / 3.0

    def validate(self, dim: int, tol: float = 1e-6, seed: int = 0):
        rng = np.random.default_rng(seed)
        y = rng.standard_normal((32, dim))
        y /= np.linalg.norm(y, axis=1, keepdims=True)
        base = self(y)
        if np.any(~(base > 0)):
            raise ParameterError(f"{self.name}: not positive on the sphere")
        for lam in (0.5, 2.0):
            if np.max(np.abs(self(lam * y) - lam * base)) > tol * np.max(base):
                raise ParameterError(f"{self.name}: not positively homogeneous of degree 1")
        euler = np.sum(self.gradient(y) * y, axis=-1)
        if np.max(np.abs(euler - base)) > tol * 10 * np.max(base):
            raise ParameterError(f"{self.name}: Euler identity <grad, y> = norm fails")


def euclidean_norm(scale: float = 1.0) -> NormSpec:
    return NormSpec(lambda y: scale * np.sqrt(np.sum(y * y, axis=-1)), name=f"{scale}*euclidean")


def quadratic_norm(matrix) -> NormSpec:
    """``<A y, y>^(1/2)`` for a symmetric positive definite ``A``."""
    A = np.asarray(matrix, dtype=np.float64)

    def evaluate(y):
        return np.sqrt(np.einsum("...i,ij,...j->...", y, A, y))

    return NormSpec(evaluate, name="quadratic")


@dataclass(frozen=True)
class NormEpsilonResult:
    epsilon: float
    witness_y: tuple
    witness_theta: tuple
    n: int

    def implied_rho(self, alpha: float) -> float:
        return self.n - 1 - (1.0 - self.epsilon) * (self.n + alpha)

    def implied_certificate(self, alpha: float) -> tuple[float, float]:
        """``(rho, N)`` implied for the weight ``||y||^-(n+alpha)``."""
        return self.implied_rho(alpha), -alpha

    def admissible_alpha(self) -> tuple[float, float]:
        """Range of alpha with positive curvature and ``N < 1``."""
        if self.epsilon >= 1.0:
            return (-1.0, math.inf)
        return (-1.0, (self.n - 1) / (1.0 - self.epsilon) - self.n)

    def to_dict(self) -> dict:
        out = asdict(self)
        out["witness_y"] = list(self.witness_y)
        out["witness_theta"] = list(self.witness_theta)
        lo, hi = self.admissible_alpha()
        out["admissible_alpha"] = [lo, hi if math.isfinite(hi) else None]
        return out


def _orthonormal_pairs(rng, count, dim):
    y = rng.standard_normal((count, dim))
    y /= np.linalg.norm(y, axis=1, keepdims=True)
    v = rng.standard_normal((count, dim))
    v -= np.sum(v * y, axis=1, keepdims=True) * y
    v /= np.linalg.norm(v, axis=1, keepdims=True)
    return y, v


def _reorthonormalize(y, v):
    y = y / np.linalg.norm(y)
    v = v - np.dot(v, y) * y
    return y, v / np.linalg.norm(v)


def norm_epsilon(
    norm: NormSpec,
    n: int,
    samples: int = 10_000,
    h: float | None = None,
    seed: int = 0,
    descent_steps: int = 50,
    step_size: float = 1e-2,
    starts: int = 10,
) -> NormEpsilonResult:
    """Estimate ``inf <Hess||y|| v, v> / ||y||`` over orthonormal ``y, v`` in ``R^(n+1)``.

    Random search followed by projected gradient descent from the best
    ``starts`` pairs. Sampling can only overestimate an infimum, so the result
    is an upper bound on the true epsilon. A negative value means the
    condition fails; it is returned, not raised.
    """
    if n < 2:
        raise ParameterError("n must be >= 2")
    if h is not None:
        norm = NormSpec(norm.evaluate, h=h, name=norm.name)
    dim = n + 1
    norm.validate(dim)
    rng = np.random.Generator(np.random.Philox(np.random.SeedSequence(seed)))

    def ratio(y, v):
        return norm.directional_second(y, v) / norm(y)

    Y, V = _orthonormal_pairs(rng, samples, dim)
    vals = ratio(Y, V)
    order = np.argsort(vals, kind="stable")
    best_val = float(vals[order[0]])
    best_y, best_v = Y[order[0]].copy(), V[order[0]].copy()

    g = 1e-5
    eye = np.eye(dim)
    for idx in order[:starts]:
        y, v = Y[idx].copy(), V[idx].copy()
        for _ in range(descent_steps):
            # gradient of the ratio in y and v by central differences
            gy = np.array([(ratio(y + g * e, v) - ratio(y - g * e, v)) / (2 * g) for e in eye])
            gv = np.array([(ratio(y, v + g * e) - ratio(y, v - g * e)) / (2 * g) for e in eye])
            y_new, v_new = _reorthonormalize(y - step_size * gy, v - step_size * gv)
            val = float(ratio(y_new, v_new))
            y, v = y_new, v_new
            if val < best_val:
                best_val, best_y, best_v = val, y.copy(), v.copy()
    return NormEpsilonResult(best_val, tuple(best_y.tolist()), tuple(best_v.tolist()), n)
