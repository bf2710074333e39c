"""Hot numerical kernels, compiled with numba when available.

Every kernel exists in two versions: a numba ``@njit`` loop and a pure-numpy
implementation.  The backend is chosen once at import time: numpy is used
when numba cannot be imported or when the environment variable
``COHSETS_NO_NUMBA`` is set to a truthy value (``1``, ``true``, ``yes``,
``on``).  Both versions compute the same quantities; results may differ in
the last floating-point bits because summation order differs.

Only trajectory advection actually benefits from compilation; the score and
group-sum kernels are matmul-shaped and run faster through numpy's BLAS
bindings, so those stay on the numpy implementation on both backends (the
compiled variants remain importable for timing). See
``benchmarks/bench_kernels.py`` for measurements.
"""

from __future__ import annotations

import math
import os

import numpy as np


def _numba_disabled() -> bool:
    flag = os.environ.get("COHSETS_NO_NUMBA", "")
    return flag.strip().lower() in {"1", "true", "yes", "on"}


try:
    if _numba_disabled():
        raise ImportError("numba disabled via COHSETS_NO_NUMBA")
    from numba import njit

    HAVE_NUMBA = True
except ImportError:
    HAVE_NUMBA = False


def velocity_arrays(x, y, t, a, delta, omega):
    """Double-gyre velocity field, vectorized over point arrays.

    The stream function is psi = a sin(pi f(x,t)) sin(pi y) with
    f = dsin x^2 + (1 - 2 dsin) x and dsin = delta sin(omega t); the
    returned components are (-dpsi/dy, dpsi/dx).  ``t`` is a scalar.
    """
    sw = delta * math.sin(omega * t)
    f = sw * x * x + (1.0 - 2.0 * sw) * x
    dfdx = 2.0 * sw * x + 1.0 - 2.0 * sw
    u = -a * np.pi * np.sin(np.pi * f) * np.cos(np.pi * y)
    v = a * np.pi * np.cos(np.pi * f) * np.sin(np.pi * y) * dfdx
    return u, v


def _advect_rk4_numpy(xs, ys, t0, n_steps, h, a, delta, omega):
    x = np.array(xs, dtype=np.float64, copy=True)
    y = np.array(ys, dtype=np.float64, copy=True)
    for s in range(n_steps):
        t = t0 + s * h
        k1x, k1y = velocity_arrays(x, y, t, a, delta, omega)
        k2x, k2y = velocity_arrays(x + 0.5 * h * k1x, y + 0.5 * h * k1y, t + 0.5 * h, a, delta, omega)
        k3x, k3y = velocity_arrays(x + 0.5 * h * k2x, y + 0.5 * h * k2y, t + 0.5 * h, a, delta, omega)
        k4x, k4y = velocity_arrays(x + h * k3x, y + h * k3y, t + h, a, delta, omega)
        x = x + (h / 6.0) * (k1x + 2.0 * k2x + 2.0 * k3x + k4x)
        y = y + (h / 6.0) * (k1y + 2.0 * k2y + 2.0 * k3y + k4y)
    return x, y


def _advect_rk4_loop(xs, ys, t0, n_steps, h, a, delta, omega):
    # Same stage arithmetic as the numpy path; the velocity formula is
    # inlined because numba cannot call the vectorized helper.
    out_x = xs.copy()
    out_y = ys.copy()
    api = a * math.pi
    n = xs.shape[0]
    for s in range(n_steps):
        t = t0 + s * h
        sw1 = delta * math.sin(omega * t)
        sw2 = delta * math.sin(omega * (t + 0.5 * h))
        sw3 = delta * math.sin(omega * (t + h))
        for i in range(n):
            x = out_x[i]
            y = out_y[i]
            f = sw1 * x * x + (1.0 - 2.0 * sw1) * x
            df = 2.0 * sw1 * x + 1.0 - 2.0 * sw1
            k1x = -api * math.sin(math.pi * f) * math.cos(math.pi * y)
            k1y = api * math.cos(math.pi * f) * math.sin(math.pi * y) * df
            px = x + 0.5 * h * k1x
            py = y + 0.5 * h * k1y
            f = sw2 * px * px + (1.0 - 2.0 * sw2) * px
            df = 2.0 * sw2 * px + 1.0 - 2.0 * sw2
            k2x = -api * math.sin(math.pi * f) * math.cos(math.pi * py)
            k2y = api * math.cos(math.pi * f) * math.sin(math.pi * py) * df
            px = x + 0.5 * h * k2x
            py = y + 0.5 * h * k2y
            f = sw2 * px * px + (1.0 - 2.0 * sw2) * px
            df = 2.0 * sw2 * px + 1.0 - 2.0 * sw2
            k3x = -api * math.sin(math.pi * f) * math.cos(math.pi * py)
            k3y = api * math.cos(math.pi * f) * math.sin(math.pi * py) * df
            px = x + h * k3x
            py = y + h * k3y
            f = sw3 * px * px + (1.0 - 2.0 * sw3) * px
            df = 2.0 * sw3 * px + 1.0 - 2.0 * sw3
            k4x = -api * math.sin(math.pi * f) * math.cos(math.pi * py)
            k4y = api * math.cos(math.pi * f) * math.sin(math.pi * py) * df
            out_x[i] = x + (h / 6.0) * (k1x + 2.0 * k2x + 2.0 * k3x + k4x)
            out_y[i] = y + (h / 6.0) * (k1y + 2.0 * k2y + 2.0 * k3y + k4y)
    return out_x, out_y


def _latent_scores_numpy(counts, factor):
    """Score matrix s[k, j] = sum_i counts[i, j] * log(factor[i, k]).

    Entries where a positive count meets a zero factor entry are -inf.
    The clamped log is exact: a clamped entry contributes only where the
    paired count is zero, and those terms vanish.
    """
    safe_log = np.log(np.where(factor > 0.0, factor, 1.0))
    scores = safe_log.T @ counts
    invalid = (factor <= 0.0).T.astype(np.float64) @ (counts > 0.0)
    scores[invalid > 0.0] = -np.inf
    return scores


def _latent_scores_loop(counts, factor):
    m, n = counts.shape
    r = factor.shape[1]
    log_factor = np.empty((m, r))
    for i in range(m):
        for k in range(r):
            if factor[i, k] > 0.0:
                log_factor[i, k] = math.log(factor[i, k])
            else:
                log_factor[i, k] = -np.inf
    scores = np.empty((r, n))
    for j in range(n):
        for k in range(r):
            acc = 0.0
            for i in range(m):
                c = counts[i, j]
                if c > 0.0:
                    ll = log_factor[i, k]
                    if ll == -np.inf:
                        acc = -np.inf
                        break
                    acc += c * ll
            scores[k, j] = acc
    return scores


def _group_sums_numpy(counts, labels0, r):
    """Column sums of ``counts`` grouped by 0-based ``labels0`` (m x r)."""
    n = counts.shape[1]
    onehot = np.zeros((n, r))
    onehot[np.arange(n), labels0] = 1.0
    return counts @ onehot


def _group_sums_loop(counts, labels0, r):
    m, n = counts.shape
    out = np.zeros((m, r))
    for i in range(m):
        for j in range(n):
            c = counts[i, j]
            if c != 0.0:
                out[i, labels0[j]] += c
    return out


if HAVE_NUMBA:
    BACKEND = "numba"
    advect_rk4 = njit(cache=True)(_advect_rk4_loop)
    latent_scores_compiled = njit(cache=True)(_latent_scores_loop)
    group_sums_compiled = njit(cache=True)(_group_sums_loop)
else:
    BACKEND = "numpy"
    advect_rk4 = _advect_rk4_numpy
    latent_scores_compiled = None
    group_sums_compiled = None

latent_scores = _latent_scores_numpy
group_sums = _group_sums_numpy


def warmup() -> None:
    """Trigger jit compilation on tiny inputs so later timings are clean."""
    xs = np.array([0.5, 1.5])
    ys = np.array([0.25, 0.75])
    advect_rk4(xs, ys, 0.0, 2, 0.01, 0.25, 0.25, 2.0 * math.pi)
    counts = np.array([[1.0, 0.0], [1.0, 2.0]])
    factor = np.array([[0.5, 0.0], [0.5, 1.0]])
    if HAVE_NUMBA:
        latent_scores_compiled(counts, factor)
        group_sums_compiled(counts, np.array([0, 1]), 2)
