"""Hot loops: difference stencils, shrinkage and preconditioned CG.

Every kernel exists twice, an ``@njit`` version and a vectorized numpy
version with identical semantics.  The numba path is used when numba imports
and ``FRINGETV_NUMBA`` is not set to ``0``; ``backend()`` reports which one is
active.  Arrays are C-contiguous float64, scalar fields shaped ``(H, W)`` and
vector fields shaped ``(2, H, W)`` with component 0 along columns (x).
"""

from __future__ import annotations

import os

import numpy as np

try:
    import numba
    from numba import njit

    NUMBA_AVAILABLE = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    NUMBA_AVAILABLE = False

USE_NUMBA = NUMBA_AVAILABLE and os.environ.get("FRINGETV_NUMBA", "1") not in ("0", "false", "no")

# status codes returned by the CG kernels
CG_OK = 0
CG_NONFINITE = 1


def backend() -> str:
    return "numba" if USE_NUMBA else "numpy"


# ---------------------------------------------------------------------------
# numpy reference path
# ---------------------------------------------------------------------------


def grad_np(s):
    v = np.zeros((2,) + s.shape)
    v[0, :, :-1] = s[:, 1:] - s[:, :-1]
    v[1, :-1, :] = s[1:, :] - s[:-1, :]
    return v


def div_np(v):
    p1 = v[0]
    p2 = v[1]
    h, w = p1.shape
    d = np.zeros((h, w))
    if w > 1:
        d[:, :-1] += p1[:, :-1]
        d[:, 1:] -= p1[:, :-1]
    if h > 1:
        d[:-1, :] += p2[:-1, :]
        d[1:, :] -= p2[:-1, :]
    return d


def soft_threshold_np(w, r):
    mag = np.sqrt(w[0] * w[0] + w[1] * w[1])
    scale = np.zeros_like(mag)
    big = mag > 1.0
    scale[big] = (1.0 - 1.0 / mag[big]) / r
    return w * scale


def apply_np(coeff, r, kappa, d):
    g = grad_np(d)
    if kappa is not None:
        g *= kappa
    return coeff * d - r * div_np(g)


def diag_np(coeff, r, kappa):
    h, w = coeff.shape
    k = np.ones((h, w)) if kappa is None else kappa
    nb = np.zeros((h, w))
    if w > 1:
        nb[:, :-1] += k[:, :-1]
        nb[:, 1:] += k[:, :-1]
    if h > 1:
        nb[:-1, :] += k[:-1, :]
        nb[1:, :] += k[:-1, :]
    return coeff + r * nb


def _dot(x, y):
    return float(np.dot(x.ravel(), y.ravel()))


def pcg_np(coeff, r, kappa, rhs, x0, tol, maxit, jacobi):
    """Jacobi-preconditioned CG.  Returns (x, iters, residual history, status)."""
    hist = np.full(maxit + 1, np.nan)
    x = x0.copy()
    res = rhs - apply_np(coeff, r, kappa, x)
    bnorm = np.sqrt(_dot(rhs, rhs))
    rnorm = np.sqrt(_dot(res, res))
    hist[0] = rnorm
    target = tol * bnorm
    if not np.isfinite(rnorm):
        return x, 0, hist, CG_NONFINITE
    if rnorm <= target or rnorm == 0.0:
        return x, 0, hist, CG_OK
    dinv = 1.0 / diag_np(coeff, r, kappa) if jacobi else None
    z = res * dinv if jacobi else res.copy()
    p = z.copy()
    rz = _dot(res, z)
    for it in range(1, maxit + 1):
        ap = apply_np(coeff, r, kappa, p)
        pap = _dot(p, ap)
        alpha = rz / pap
        x += alpha * p
        res -= alpha * ap
        rnorm = np.sqrt(_dot(res, res))
        hist[it] = rnorm
        if not np.isfinite(rnorm):
            return x, it, hist, CG_NONFINITE
        if rnorm <= target:
            return x, it, hist, CG_OK
        z = res * dinv if jacobi else res
        rz_new = _dot(res, z)
        p = z + (rz_new / rz) * p
        rz = rz_new
    return x, maxit, hist, CG_OK


# ---------------------------------------------------------------------------
# numba path
# ---------------------------------------------------------------------------

if NUMBA_AVAILABLE:

    @njit(cache=True)
    def grad_nb(s):
        h, w = s.shape
        v = np.zeros((2, h, w))
        for j in range(h):
            for i in range(w):
                if i < w - 1:
                    v[0, j, i] = s[j, i + 1] - s[j, i]
                if j < h - 1:
                    v[1, j, i] = s[j + 1, i] - s[j, i]
        return v

    @njit(cache=True)
    def div_nb(v):
        h = v.shape[1]
        w = v.shape[2]
        d = np.zeros((h, w))
        for j in range(h):
            for i in range(w):
                acc = 0.0
                if i < w - 1:
                    acc += v[0, j, i]
                if i > 0:
                    acc -= v[0, j, i - 1]
                if j < h - 1:
                    acc += v[1, j, i]
                if j > 0:
                    acc -= v[1, j - 1, i]
                d[j, i] = acc
        return d

    @njit(cache=True)
    def soft_threshold_nb(w, r):
        h = w.shape[1]
        wd = w.shape[2]
        q = np.zeros((2, h, wd))
        for j in range(h):
            for i in range(wd):
                w1 = w[0, j, i]
                w2 = w[1, j, i]
                mag = np.sqrt(w1 * w1 + w2 * w2)
                if mag > 1.0:
                    scale = (1.0 - 1.0 / mag) / r
                    q[0, j, i] = w1 * scale
                    q[1, j, i] = w2 * scale
        return q

    @njit(cache=True)
    def _apply_into(coeff, r, kappa, has_kappa, d, out):
        h, w = d.shape
        for j in range(h):
            for i in range(w):
                c = d[j, i]
                acc = 0.0
                if i < w - 1:
                    k = kappa[j, i] if has_kappa else 1.0
                    acc += k * (d[j, i + 1] - c)
                if i > 0:
                    k = kappa[j, i - 1] if has_kappa else 1.0
                    acc -= k * (c - d[j, i - 1])
                if j < h - 1:
                    k = kappa[j, i] if has_kappa else 1.0
                    acc += k * (d[j + 1, i] - c)
                if j > 0:
                    k = kappa[j - 1, i] if has_kappa else 1.0
                    acc -= k * (c - d[j - 1, i])
                out[j, i] = coeff[j, i] * c - r * acc

    @njit(cache=True)
    def apply_nb(coeff, r, kappa, has_kappa, d):
        out = np.empty(d.shape)
        _apply_into(coeff, r, kappa, has_kappa, d, out)
        return out

    @njit(cache=True)
    def diag_nb(coeff, r, kappa, has_kappa):
        h, w = coeff.shape
        out = np.empty((h, w))
        for j in range(h):
            for i in range(w):
                nb = 0.0
                if i < w - 1:
                    nb += kappa[j, i] if has_kappa else 1.0
                if i > 0:
                    nb += kappa[j, i - 1] if has_kappa else 1.0
                if j < h - 1:
                    nb += kappa[j, i] if has_kappa else 1.0
                if j > 0:
                    nb += kappa[j - 1, i] if has_kappa else 1.0
                out[j, i] = coeff[j, i] + r * nb
        return out

    @njit(cache=True)
    def pcg_nb(coeff, r, kappa, has_kappa, rhs, x0, tol, maxit, jacobi):
        h, w = rhs.shape
        n = h * w
        hist = np.full(maxit + 1, np.nan)
        x = x0.copy()
        ap = np.empty((h, w))
        _apply_into(coeff, r, kappa, has_kappa, x, ap)
        xf = x.reshape(n)
        res = (rhs - ap).reshape(n)
        bf = rhs.reshape(n)
        bnorm = 0.0
        rr = 0.0
        for k in range(n):
            bnorm += bf[k] * bf[k]
            rr += res[k] * res[k]
        bnorm = np.sqrt(bnorm)
        rnorm = np.sqrt(rr)
        hist[0] = rnorm
        target = tol * bnorm
        if not np.isfinite(rnorm):
            return x, 0, hist, 1
        if rnorm <= target or rnorm == 0.0:
            return x, 0, hist, 0
        if jacobi:
            dinv = (1.0 / diag_nb(coeff, r, kappa, has_kappa)).reshape(n)
        else:
            dinv = np.ones(n)
        z = res * dinv
        pf = z.copy()
        p2 = pf.reshape((h, w))
        apf = ap.reshape(n)
        rz = 0.0
        for k in range(n):
            rz += res[k] * z[k]
        for it in range(1, maxit + 1):
            _apply_into(coeff, r, kappa, has_kappa, p2, ap)
            pap = 0.0
            for k in range(n):
                pap += pf[k] * apf[k]
            alpha = rz / pap
            rr = 0.0
            for k in range(n):
                xf[k] += alpha * pf[k]
                res[k] -= alpha * apf[k]
                rr += res[k] * res[k]
            rnorm = np.sqrt(rr)
            hist[it] = rnorm
            if not np.isfinite(rnorm):
                return x, it, hist, 1
            if rnorm <= target:
                return x, it, hist, 0
            rz_new = 0.0
            for k in range(n):
                z[k] = res[k] * dinv[k]
                rz_new += res[k] * z[k]
            beta = rz_new / rz
            for k in range(n):
                pf[k] = z[k] + beta * pf[k]
            rz = rz_new
        return x, maxit, hist, 0


_EMPTY = np.ones((1, 1))


def grad(s):
    return grad_nb(s) if USE_NUMBA else grad_np(s)


def div(v):
    return div_nb(v) if USE_NUMBA else div_np(v)


def soft_threshold(w, r):
    return soft_threshold_nb(w, float(r)) if USE_NUMBA else soft_threshold_np(w, float(r))


def apply(coeff, r, kappa, d):
    if USE_NUMBA:
        has = kappa is not None
        return apply_nb(coeff, float(r), kappa if has else _EMPTY, has, d)
    return apply_np(coeff, r, kappa, d)


def pcg(coeff, r, kappa, rhs, x0, tol, maxit, jacobi=True):
    if USE_NUMBA:
        has = kappa is not None
        return pcg_nb(coeff, float(r), kappa if has else _EMPTY, has, rhs, x0,
                      float(tol), int(maxit), bool(jacobi))
    return pcg_np(coeff, r, kappa, rhs, x0, tol, maxit, jacobi)
