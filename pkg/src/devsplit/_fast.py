"""Tight inner loops for affine forward-backward maps.

When both operators are affine the forward-backward application collapses to
``p = W y + w`` with a precomputed matrix; the closed-form iterations then
run as scalar loops, JIT-compiled with numba when available (pure-Python
fallbacks keep the exact same arithmetic, just slower).

Each kernel returns ``(count, converged, rows_written, max_rate_gap)`` where
``count`` is the number of forward-backward applications performed,
``converged`` reports whether the stopping tolerance was met, and
``max_rate_gap`` tracks the worst violation of the optional residual-rate
envelope (`-inf` when not requested). Traces are written into preallocated
arrays at the given stride; callers run a counting pass first to size them.
"""

from __future__ import annotations

import numpy as np

try:
    import numba

    def _jit(fn):
        return numba.njit(cache=True, nogil=True)(fn)

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    def _jit(fn):
        return fn

    HAVE_NUMBA = False

__all__ = ["HAVE_NUMBA", "tunable_kernel", "constant_kappa_kernel",
           "accel_fb_kernel", "halpern_kernel"]

# stopping-criterion codes
STOP_NONE = 0
STOP_DIST = 1       # Euclidean distance of p to x_star
STOP_DIST_M = 2     # metric distance of p to x_star
STOP_FPRES = 3      # metric norm of p - y


def _make_tunable():
    def kernel(W, w, M, y0, x_star, lam0, e, gb, tol, stop_kind, max_iter,
               stride, tp, ty, tn, p_out, y_out, rate_c):
        d = y0.shape[0]
        y_prev = y0.copy()
        y = y0.copy()
        p_prev = y0.copy()
        p = np.empty(d)
        c3 = (4.0 - gb) / 2.0
        lam = lam0
        rows = 0
        cap = tn.shape[0]
        max_gap = -np.inf
        count = 0
        converged = 0
        for n in range(max_iter):
            for i in range(d):
                acc = w[i]
                for j in range(d):
                    acc += W[i, j] * y[j]
                p[i] = acc
            count = n + 1
            for i in range(d):
                p_out[i] = p[i]
                y_out[i] = y[i]
            fp_sq = 0.0
            for i in range(d):
                for j in range(d):
                    fp_sq += (p[i] - y[i]) * M[i, j] * (p[j] - y[j])
            if rate_c > 0.0:
                gap = fp_sq - rate_c * (1.0 + n) ** (-2.0 * e)
                if gap > max_gap:
                    max_gap = gap
            if stride > 0 and n % stride == 0 and rows < cap:
                tn[rows] = n
                for i in range(d):
                    tp[rows, i] = p[i]
                    ty[rows, i] = y[i]
                rows += 1
            if stop_kind == STOP_DIST:
                s = 0.0
                for i in range(d):
                    dd = p[i] - x_star[i]
                    s += dd * dd
                if np.sqrt(s) <= tol:
                    converged = 1
                    break
            elif stop_kind == STOP_DIST_M:
                s = 0.0
                for i in range(d):
                    for j in range(d):
                        s += (p[i] - x_star[i]) * M[i, j] * (p[j] - x_star[j])
                if np.sqrt(s) <= tol:
                    converged = 1
                    break
            elif stop_kind == STOP_FPRES:
                if np.sqrt(fp_sq) <= tol:
                    converged = 1
                    break
            lam_next = lam0 * (2.0 + n) ** e
            c1 = (lam0 * lam / lam_next
                  + (lam_next - lam0) / lam_next * (4.0 - gb - 2.0 * lam0) / 2.0)
            c2 = (lam - lam0) / lam_next
            for i in range(d):
                y_new = y[i] + c1 * (p[i] - y[i]) + c2 * ((y[i] - y_prev[i])
                                                          + c3 * (y_prev[i] - p_prev[i]))
                y_prev[i] = y[i]
                y[i] = y_new
                p_prev[i] = p[i]
            lam = lam_next
        return count, converged, rows, max_gap

    return kernel


def _make_constant_kappa():
    def kernel(W, w, M, p_init, x_star, kappa, gb, tol, stop_kind, max_iter,
               stride, tp, ty, tn, p_out, y_out):
        d = p_init.shape[0]
        p_prev = p_init.copy()
        u_prev = np.zeros(d)
        u = np.zeros(d)
        y = np.empty(d)
        p = np.empty(d)
        rows = 0
        cap = tn.shape[0]
        count = 0
        converged = 0
        for n in range(max_iter):
            for i in range(d):
                y[i] = p_prev[i] + u[i] - u_prev[i]
            for i in range(d):
                acc = w[i]
                for j in range(d):
                    acc += W[i, j] * y[j]
                p[i] = acc
            count = n + 1
            for i in range(d):
                p_out[i] = p[i]
                y_out[i] = y[i]
            if stride > 0 and n % stride == 0 and rows < cap:
                tn[rows] = n
                for i in range(d):
                    tp[rows, i] = p[i]
                    ty[rows, i] = y[i]
                rows += 1
            if stop_kind == STOP_DIST:
                s = 0.0
                for i in range(d):
                    dd = p[i] - x_star[i]
                    s += dd * dd
                if np.sqrt(s) <= tol:
                    converged = 1
                    break
            elif stop_kind == STOP_DIST_M:
                s = 0.0
                for i in range(d):
                    for j in range(d):
                        s += (p[i] - x_star[i]) * M[i, j] * (p[j] - x_star[j])
                if np.sqrt(s) <= tol:
                    converged = 1
                    break
            elif stop_kind == STOP_FPRES:
                s = 0.0
                for i in range(d):
                    for j in range(d):
                        s += (p[i] - y[i]) * M[i, j] * (p[j] - y[j])
                if np.sqrt(s) <= tol:
                    converged = 1
                    break
            for i in range(d):
                u_new = kappa * ((2.0 - gb) / 2.0 * (p[i] - p_prev[i] + u_prev[i])
                                 + gb / 2.0 * u[i])
                p_prev[i] = p[i]
                u_prev[i] = u[i]
                u[i] = u_new
        return count, converged, rows

    return kernel


def _make_accel_fb():
    def kernel(W, w, M, y0, x_star, gb, tol, stop_kind, max_iter,
               stride, tp, ty, tn, p_out, y_out, rate_c):
        d = y0.shape[0]
        y_prev = y0.copy()
        y = y0.copy()
        p_prev = y0.copy()
        p = np.empty(d)
        rows = 0
        cap = tn.shape[0]
        max_gap = -np.inf
        count = 0
        converged = 0
        for n in range(max_iter):
            for i in range(d):
                acc = w[i]
                for j in range(d):
                    acc += W[i, j] * y[j]
                p[i] = acc
            count = n + 1
            for i in range(d):
                p_out[i] = p[i]
                y_out[i] = y[i]
            fp_sq = 0.0
            for i in range(d):
                for j in range(d):
                    fp_sq += (p[i] - y[i]) * M[i, j] * (p[j] - y[j])
            if rate_c > 0.0:
                gap = fp_sq - rate_c / ((1.0 + n) * (1.0 + n))
                if gap > max_gap:
                    max_gap = gap
            if stride > 0 and n % stride == 0 and rows < cap:
                tn[rows] = n
                for i in range(d):
                    tp[rows, i] = p[i]
                    ty[rows, i] = y[i]
                rows += 1
            if stop_kind == STOP_DIST:
                s = 0.0
                for i in range(d):
                    dd = p[i] - x_star[i]
                    s += dd * dd
                if np.sqrt(s) <= tol:
                    converged = 1
                    break
            elif stop_kind == STOP_DIST_M:
                s = 0.0
                for i in range(d):
                    for j in range(d):
                        s += (p[i] - x_star[i]) * M[i, j] * (p[j] - x_star[j])
                if np.sqrt(s) <= tol:
                    converged = 1
                    break
            elif stop_kind == STOP_FPRES:
                if np.sqrt(fp_sq) <= tol:
                    converged = 1
                    break
            den = 4.0 + 2.0 * n
            cy = gb * (1.0 + n) / den
            cy_prev = n * (2.0 - gb) / den
            cp = (1.0 + n) * (4.0 - gb) / den
            cp_prev = n * (4.0 - gb) / den
            for i in range(d):
                y_new = cy * y[i] + cy_prev * y_prev[i] + cp * p[i] - cp_prev * p_prev[i]
                y_prev[i] = y[i]
                y[i] = y_new
                p_prev[i] = p[i]
        return count, converged, rows, max_gap

    return kernel


def _make_halpern():
    def kernel(W, w, M, y0, x_star, tol, stop_kind, max_iter,
               stride, tp, ty, tn, p_out, y_out, rate_c):
        d = y0.shape[0]
        y = y0.copy()
        p = np.empty(d)
        rows = 0
        cap = tn.shape[0]
        max_gap = -np.inf
        count = 0
        converged = 0
        for n in range(max_iter):
            for i in range(d):
                acc = w[i]
                for j in range(d):
                    acc += W[i, j] * y[j]
                p[i] = acc
            count = n + 1
            for i in range(d):
                p_out[i] = p[i]
                y_out[i] = y[i]
            fp_sq = 0.0
            for i in range(d):
                for j in range(d):
                    fp_sq += (p[i] - y[i]) * M[i, j] * (p[j] - y[j])
            if rate_c > 0.0:
                gap = fp_sq - rate_c / ((1.0 + n) * (1.0 + n))
                if gap > max_gap:
                    max_gap = gap
            if stride > 0 and n % stride == 0 and rows < cap:
                tn[rows] = n
                for i in range(d):
                    tp[rows, i] = p[i]
                    ty[rows, i] = y[i]
                rows += 1
            if stop_kind == STOP_DIST:
                s = 0.0
                for i in range(d):
                    dd = p[i] - x_star[i]
                    s += dd * dd
                if np.sqrt(s) <= tol:
                    converged = 1
                    break
            elif stop_kind == STOP_DIST_M:
                s = 0.0
                for i in range(d):
                    for j in range(d):
                        s += (p[i] - x_star[i]) * M[i, j] * (p[j] - x_star[j])
                if np.sqrt(s) <= tol:
                    converged = 1
                    break
            elif stop_kind == STOP_FPRES:
                if np.sqrt(fp_sq) <= tol:
                    converged = 1
                    break
            anchor = 1.0 / (n + 2.0)
            carry = (n + 1.0) / (n + 2.0)
            for i in range(d):
                y[i] = anchor * y0[i] + carry * p[i]
        return count, converged, rows, max_gap

    return kernel


tunable_kernel = _jit(_make_tunable())
constant_kappa_kernel = _jit(_make_constant_kappa())
accel_fb_kernel = _jit(_make_accel_fb())
halpern_kernel = _jit(_make_halpern())
