"""Seeded Monte-Carlo sampling and the checks built on it.

Every batch owns one random stream, a Philox generator seeded through
``numpy.random.SeedSequence(seed)``. Nothing touches global RNG state, so the
same ``(params, seed, count, method)`` always reproduces the same batch.
"""
from __future__ import annotations

import csv
import io
import logging
import math
import struct
from dataclasses import dataclass

import numpy as np
from scipy import stats

from . import _kernels
from .errors import ConvergenceError, DomainError, ParameterError, TheoremViolation
from .measures import SphereParams, marginal, median_angle
from .profiles import model_profile, tail_bound

log = logging.getLogger(__name__)

WOS_MAX_STEPS = 100_000
WOS_MAX_REJECT_FRACTION = 1e-3
BINARY_MAGIC = b"CDSP"
BINARY_VERSION = 1
_HEADER = struct.Struct("<4sIQ")


def make_rng(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(int(seed))))


@dataclass
class SampleBatch:
    params: SphereParams
    thetas: np.ndarray
    seed: int
    method: str
    points: np.ndarray | None = None
    axis: np.ndarray | None = None
    rejected: int = 0

    def __len__(self):
        return len(self.thetas)

    def check_invariants(self, fraction: float = 0.01, seed: int = 0):
        """Unit norm and angle consistency on a random subsample of the points."""
        if self.points is None:
            return
        rng = make_rng(seed)
        m = max(1, int(math.ceil(fraction * len(self.points))))
        idx = rng.choice(len(self.points), size=m, replace=False)
        pts = self.points[idx]
        if np.max(np.abs(np.linalg.norm(pts, axis=1) - 1.0)) > 1e-12:
            raise AssertionError("sample point off the unit sphere")
        axis = self.axis if self.axis is not None else _first_axis(pts.shape[1])
        theta = np.arccos(np.clip(pts @ axis, -1.0, 1.0))
        if np.max(np.abs(theta - self.thetas[idx])) > 1e-10:
            raise AssertionError("stored angle disagrees with point")

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["theta"])
        writer.writerows([repr(float(t))] for t in self.thetas)
        return buf.getvalue()

    def to_bytes(self) -> bytes:
        data = np.ascontiguousarray(self.thetas, dtype="<f8")
        return _HEADER.pack(BINARY_MAGIC, BINARY_VERSION, data.size) + data.tobytes()


def read_binary(blob: bytes) -> np.ndarray:
    """Decode the angles written by :meth:`SampleBatch.to_bytes`."""
    if len(blob) < _HEADER.size:
        raise ValueError("truncated header")
    magic, version, count = _HEADER.unpack_from(blob)
    if magic != BINARY_MAGIC:
        raise ValueError(f"bad magic {magic!r}")
    if version != BINARY_VERSION:
        raise ValueError(f"unsupported version {version}")
    body = blob[_HEADER.size:]
    if len(body) != 8 * count:
        raise ValueError(f"expected {count} values, found {len(body) / 8:g}")
    return np.frombuffer(body, dtype="<f8").copy()


def _first_axis(dim):
    e = np.zeros(dim)
    e[0] = 1.0
    return e


def sample_direct(params: SphereParams, count: int, seed: int, lift: bool = False) -> SampleBatch:
    """Inverse-CDF draws of the angle; ``lift`` also builds points on S^n.

    Lifted points are ``cos(theta) e1 + sin(theta) (0, omega)`` with ``omega``
    uniform on S^(n-1), the pole direction being the first axis.
    """
    if count < 1:
        raise ParameterError("count must be >= 1")
    rng = make_rng(seed)
    u = rng.random(count)
    thetas = np.asarray(marginal(params).quantile(u), dtype=np.float64).reshape(count)
    points = None
    if lift:
        omega = rng.standard_normal((count, params.n))
        omega /= np.linalg.norm(omega, axis=1, keepdims=True)
        points = np.empty((count, params.n + 1))
        points[:, 0] = np.cos(thetas)
        points[:, 1:] = np.sin(thetas)[:, None] * omega
    return SampleBatch(params, thetas, int(seed), "inverse-cdf", points, _first_axis(params.n + 1))


def walk_on_spheres(n: int, x, eps: float = 1e-6, seed: int = 0, count: int = 1) -> SampleBatch:
    """Brownian exit points from the unit ball started at ``x``, by walk on spheres.

    From ``z`` the walker jumps to a uniform point on the sphere of radius
    ``1 - |z|`` around ``z`` until it is within ``eps`` of the boundary, then
    is projected radially onto S^n. Walkers exceeding the step cap are
    dropped and logged; more than 0.1% dropped is an error.
    """
    x = np.asarray(x, dtype=np.float64)
    if x.shape != (n + 1,):
        raise ParameterError(f"x must have {n + 1} coordinates")
    s = float(np.linalg.norm(x))
    if not s < 1.0:
        raise DomainError("x must lie strictly inside the unit ball")
    if not 1e-8 <= eps <= 1e-3:
        raise ParameterError("eps must lie in [1e-8, 1e-3]")
    if count < 1:
        raise ParameterError("count must be >= 1")
    rng = make_rng(seed)
    z = np.tile(x, (count, 1))
    dist = np.full(count, 1.0 - s)
    steps = np.zeros(count, dtype=np.int64)
    active = np.flatnonzero(dist >= eps)
    while active.size:
        zs = np.ascontiguousarray(z[active])
        g = rng.standard_normal(zs.shape)
        d = _kernels.wos_advance(zs, g)
        z[active] = zs
        dist[active] = d
        steps[active] += 1
        keep = (d >= eps) & (steps[active] < WOS_MAX_STEPS)
        active = active[keep]
    rejected = dist >= eps
    n_rej = int(rejected.sum())
    if n_rej:
        log.warning("walk on spheres: %d walkers hit the %d step cap", n_rej, WOS_MAX_STEPS)
        if n_rej > WOS_MAX_REJECT_FRACTION * count:
            raise ConvergenceError(f"{n_rej} of {count} walkers rejected", detail={"rejected": n_rej})
    z = z[~rejected]
    points = z / np.linalg.norm(z, axis=1, keepdims=True)
    axis = x / s if s > 0 else _first_axis(n + 1)
    thetas = np.arccos(np.clip(points @ axis, -1.0, 1.0))
    params = SphereParams(n, 1.0, s)
    return SampleBatch(params, thetas, int(seed), "walk-on-spheres", points, axis, n_rej)


def ks_two_sample(a, b):
    """Two-sample Kolmogorov-Smirnov statistic and asymptotic p-value on the angles."""
    ta = a.thetas if isinstance(a, SampleBatch) else np.asarray(a)
    tb = b.thetas if isinstance(b, SampleBatch) else np.asarray(b)
    if len(ta) == 0 or len(tb) == 0:
        raise ParameterError("both samples must be non-empty")
    res = stats.ks_2samp(ta, tb, method="asymp")
    return float(res.statistic), float(res.pvalue)


def ks_one_sample(batch: SampleBatch, params: SphereParams | None = None):
    """KS test of the angles against the quadrature CDF of ``params``."""
    params = params or batch.params
    m = marginal(params)
    res = stats.kstest(batch.thetas, lambda t: m.cdf(np.clip(t, 0.0, math.pi)), method="asymp")
    return float(res.statistic), float(res.pvalue)


CONCENTRATION_COLUMNS = ["r", "exact", "empirical", "model_tail", "stderr"]


@dataclass
class ConcentrationResult:
    params: SphereParams
    median: float
    rows: list  # (r, exact, empirical, model_tail, stderr)
    count: int
    seed: int
    tol: float

    @property
    def dominated(self) -> bool:
        return all(exact <= model + self.tol for _, exact, _, model, _ in self.rows)

    def within_stderr(self, k: float = 3.0) -> bool:
        return all(abs(emp - exact) <= k * se for _, exact, emp, _, se in self.rows)

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(CONCENTRATION_COLUMNS)
        writer.writerows(self.rows)
        return buf.getvalue()

    def to_dict(self) -> dict:
        return {
            "params": self.params.to_dict(),
            "median": self.median,
            "count": self.count,
            "seed": self.seed,
            "dominated": self.dominated,
            "rows": [dict(zip(CONCENTRATION_COLUMNS, r)) for r in self.rows],
        }


def concentration_experiment(params: SphereParams, r_grid, count: int = 10_000, seed: int = 0,
                             tol: float = 1e-9, raise_on_fail: bool = False) -> ConcentrationResult:
    """Compare the half-mass cap's complement tail with the model tail.

    ``A`` is the cap ``{theta <= median}``; its ``r``-enlargement misses mass
    ``1 - F(median + r)``, which must not exceed ``int_r^inf phi``.
    """
    profile = model_profile(params)
    m = marginal(params)
    med = median_angle(params)
    batch = sample_direct(params, count, seed)
    rows = []
    for r in r_grid:
        r = float(r)
        if r < 0:
            raise DomainError("r must be non-negative")
        edge = min(med + r, math.pi)
        exact = float(1.0 - m.cdf(edge))
        empirical = float(np.mean(batch.thetas >= edge))
        se = math.sqrt(max(exact * (1.0 - exact), 0.0) / count)
        rows.append((r, exact, empirical, float(tail_bound(profile, r)), se))
    result = ConcentrationResult(params, med, rows, count, int(seed), tol)
    if raise_on_fail and not result.dominated:
        raise TheoremViolation(f"concentration tail exceeds model tail for {params}", report=result.to_dict())
    return result
