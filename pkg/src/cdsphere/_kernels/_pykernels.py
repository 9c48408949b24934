"""Pure NumPy implementations of the hot kernels.

These mirror ``_ckernels.pyx`` operation for operation. The walk-on-spheres
step is bit-identical across the two backends; the quadrature kernels go
through ``exp``/``log`` whose last-ulp behaviour differs between libm and
NumPy, so they agree only to rounding.
"""
import numpy as np

_TINY = 1e-300


def sturm_count(diag, off2, x):
    """Number of eigenvalues of the symmetric tridiagonal matrix below ``x``.

    ``off2`` holds the squared off-diagonal entries (length ``len(diag) - 1``).
    """
    count = 0
    q = diag[0] - x
    if q == 0.0:
        q = -_TINY
    if q < 0.0:
        count += 1
    for i in range(1, len(diag)):
        q = diag[i] - x - off2[i - 1] / q
        if q == 0.0:
            q = -_TINY
        if q < 0.0:
            count += 1
    return count


def _sturm_count_many(diag, off2, xs):
    # vectorised over shifts; same recurrence as sturm_count
    q = diag[0] - xs
    q = np.where(q == 0.0, -_TINY, q)
    count = (q < 0.0).astype(np.int64)
    for i in range(1, len(diag)):
        q = diag[i] - xs - off2[i - 1] / q
        q = np.where(q == 0.0, -_TINY, q)
        count += q < 0.0
    return count


def tridiag_eig_bisect(diag, off2, k, lo, hi, tol):
    """k-th smallest (0-based) eigenvalue by Sturm bisection on ``[lo, hi]``.

    The bracket is split into four sub-intervals per sweep so that each
    Python-level pass over the matrix does three counts at once.
    """
    diag = np.ascontiguousarray(diag, dtype=np.float64)
    off2 = np.ascontiguousarray(off2, dtype=np.float64)
    while hi - lo > tol * max(1.0, abs(lo) + abs(hi)):
        xs = lo + (hi - lo) * np.array([0.25, 0.5, 0.75])
        counts = _sturm_count_many(diag, off2, xs)
        # eigenvalue k lies where the count first exceeds k
        j = int(np.searchsorted(counts, k + 1))
        new_lo = lo if j == 0 else xs[j - 1]
        new_hi = hi if j == 3 else xs[j]
        if new_lo == lo and new_hi == hi:
            break
        lo, hi = new_lo, new_hi
    return 0.5 * (lo + hi)


def wos_advance(z, g):
    """One walk-on-spheres jump for every row of ``z``, in place.

    Each walker moves to ``z + (1 - |z|) g / |g|``. Returns the new distance
    to the unit sphere, ``1 - |z|``, per row.
    """
    d = z.shape[1]
    zz = z[:, 0] * z[:, 0]
    gg = g[:, 0] * g[:, 0]
    for j in range(1, d):
        zz += z[:, j] * z[:, j]
        gg += g[:, j] * g[:, j]
    scale = (1.0 - np.sqrt(zz)) / np.sqrt(gg)
    for j in range(d):
        z[:, j] += scale * g[:, j]
    zz = z[:, 0] * z[:, 0]
    for j in range(1, d):
        zz += z[:, j] * z[:, j]
    return 1.0 - np.sqrt(zz)


def scaled_weight(theta, n, alpha, s, log_scale):
    """``sin^(n-1)(t) q(t)^(-(n+alpha)/2) exp(-log_scale)`` with ``q`` in stable form."""
    theta = np.asarray(theta, dtype=np.float64)
    sh = np.sin(0.5 * theta)
    q = (1.0 - s) ** 2 + 4.0 * s * sh * sh
    sn = np.sin(theta)
    with np.errstate(divide="ignore"):
        logw = (n - 1) * np.log(sn) - 0.5 * (n + alpha) * np.log(q) - log_scale
    return np.exp(logw)


def partial_panel_integral(lo, theta, nodes, weights, n, alpha, s, log_scale):
    """Gauss-Legendre integral of the scaled weight over ``[lo, theta]`` (vectorised)."""
    lo = np.asarray(lo, dtype=np.float64)
    theta = np.asarray(theta, dtype=np.float64)
    half = 0.5 * (theta - lo)
    mid = 0.5 * (theta + lo)
    pts = mid[..., None] + half[..., None] * nodes
    return half * (scaled_weight(pts, n, alpha, s, log_scale) @ weights)


def quantile_bisect(targets, lo, hi, nodes, weights, n, alpha, s, log_scale, max_iter):
    """Solve ``int_lo^theta w = target`` for theta inside each panel ``[lo, hi]``.

    Safeguarded Newton: the integrand is the derivative, and any step that
    leaves the current bracket is replaced by bisection. Returns
    ``(theta, residual, bracket_lo, bracket_hi)`` arrays.
    """
    targets = np.asarray(targets, dtype=np.float64)
    a = np.array(lo, dtype=np.float64, copy=True)
    b = np.array(hi, dtype=np.float64, copy=True)
    base = np.array(lo, dtype=np.float64, copy=True)
    x = 0.5 * (a + b)
    active = np.ones(x.shape, dtype=bool)
    for _ in range(max_iter):
        if not active.any():
            break
        val = partial_panel_integral(base, x, nodes, weights, n, alpha, s, log_scale) - targets
        a = np.where(active & (val < 0), x, a)
        b = np.where(active & (val > 0), x, b)
        w = scaled_weight(x, n, alpha, s, log_scale)
        with np.errstate(divide="ignore", invalid="ignore"):
            step = x - val / w
            # converged; a correction this small may round back onto a bracket end
            small = (w > 0) & (np.abs(val / w) <= 1e-13 * (np.asarray(hi) - base) + 4e-16 * np.abs(x))
        inside = (w > 0) & (step > a) & (step < b)
        bisect = 0.5 * (a + b)
        nxt = np.where(inside, step, bisect)
        stuck = ~inside & ((bisect <= a) | (bisect >= b))
        move = active & (val != 0) & ((small & inside) | (~small & ~stuck))
        x = np.where(move, nxt, x)
        active &= ~((val == 0) | small | stuck)
    resid = partial_panel_integral(base, x, nodes, weights, n, alpha, s, log_scale) - targets
    return x, np.abs(resid), a, b
