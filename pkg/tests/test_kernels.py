"""The compiled and NumPy kernels must agree; the compiled one is skipped if not built."""
import os
import subprocess
import sys

import numpy as np
import pytest

from cdsphere import _kernels
from cdsphere._kernels import _pykernels as py
from cdsphere.measures import _GL_NODES, _GL_WEIGHTS, SphereParams, marginal
from cdsphere.spectral import sector_matrix

cy = _kernels.compiled
needs_cy = pytest.mark.skipif(cy is None, reason="compiled extension not built")


def test_backend_flag():
    assert _kernels.BACKEND in {"cython", "python"}
    assert (_kernels.BACKEND == "cython") == (cy is not None)


def test_forced_fallback():
    env = dict(os.environ, CDSPHERE_BACKEND="python")
    out = subprocess.run([sys.executable, "-c", "import cdsphere; print(cdsphere.BACKEND)"],
                         capture_output=True, text=True, env=env, check=True)
    assert out.stdout.strip() == "python"


def _matrix(ell=0, M=300):
    diag, off = sector_matrix(SphereParams(3, 1.5, 0.8), ell, M)
    return diag, off * off


def test_sturm_count_python_consistency():
    diag, off2 = _matrix()
    xs = np.array([-1.0, 0.5, 3.0, 50.0, 1e4])
    many = py._sturm_count_many(diag, off2, xs)
    assert list(many) == [py.sturm_count(diag, off2, x) for x in xs]
    assert many[0] == 0 and many[-1] <= len(diag)


def test_bisect_python_vs_lapack():
    from scipy.linalg import eigvalsh_tridiagonal

    diag, off2 = _matrix(1)
    ref = eigvalsh_tridiagonal(diag, np.sqrt(off2), select="i", select_range=(0, 3))
    for k in range(4):
        assert py.tridiag_eig_bisect(diag, off2, k, -10.0, 1e7, 1e-14) == pytest.approx(ref[k], rel=1e-11)


@needs_cy
def test_sturm_count_agree():
    diag, off2 = _matrix()
    for x in (-1.0, 0.0, 2.5, 17.0, 1e3, 1e6):
        assert cy.sturm_count(diag, off2, x) == py.sturm_count(diag, off2, x)


@needs_cy
def test_bisect_agree():
    diag, off2 = _matrix(2)
    for k in (0, 1, 5):
        a = cy.tridiag_eig_bisect(diag, off2, k, -10.0, 1e7, 1e-14)
        b = py.tridiag_eig_bisect(diag, off2, k, -10.0, 1e7, 1e-14)
        assert a == pytest.approx(b, rel=1e-12)


@needs_cy
def test_wos_bit_identical():
    rng = np.random.default_rng(1)
    z = rng.uniform(-0.5, 0.5, (1000, 4))
    g = rng.standard_normal((1000, 4))
    z1, z2 = z.copy(), z.copy()
    d1 = cy.wos_advance(z1, g)
    d2 = py.wos_advance(z2, g)
    assert z1.tobytes() == z2.tobytes()
    assert d1.tobytes() == d2.tobytes()


@needs_cy
def test_weight_agree():
    theta = np.linspace(0, np.pi, 1001)
    a = cy.scaled_weight(theta, 4.0, 2.5, 0.7, 1.3)
    b = py.scaled_weight(theta, 4.0, 2.5, 0.7, 1.3)
    np.testing.assert_allclose(a, b, rtol=1e-14, atol=0)
    assert np.ndim(cy.scaled_weight(0.3, 4.0, 2.5, 0.7, 1.3)) == 0


@needs_cy
def test_panel_integral_agree():
    lo = np.linspace(0, 3, 50)
    hi = lo + 0.1
    a = cy.partial_panel_integral(lo, hi, _GL_NODES, _GL_WEIGHTS, 3.0, 1.0, 0.5, 0.0)
    b = py.partial_panel_integral(lo, hi, _GL_NODES, _GL_WEIGHTS, 3.0, 1.0, 0.5, 0.0)
    np.testing.assert_allclose(a, b, rtol=1e-13)


@needs_cy
@pytest.mark.parametrize("params", [SphereParams(3, 2, 0.6), SphereParams(2, -1.9, 0.5), SphereParams(3, 1, 1 - 1e-9)])
def test_quantile_agree(params):
    m = marginal(params)
    u = np.random.default_rng(3).random(2000)
    target = u * m.cum[-1]
    k = np.clip(np.searchsorted(m.cum, target, side="right") - 1, 0, len(m.breaks) - 2)
    args = (target - m.cum[k], m.breaks[k], m.breaks[k + 1], _GL_NODES, _GL_WEIGHTS,
            float(params.n), params.alpha, params.s, m.log_scale, 200)
    ta, ra, _, _ = cy.quantile_bisect(*args)
    tb, rb, _, _ = py.quantile_bisect(*args)
    np.testing.assert_allclose(ta, tb, rtol=1e-12, atol=1e-15)
    assert ra.max() / m.cum[-1] < 1e-13 and rb.max() / m.cum[-1] < 1e-13
