"""Limited-memory BFGS with a strong-Wolfe line search.

Kept in-repo (rather than delegating to scipy) so the sequence of function
evaluations is fixed and reproducible.  The line search is the bracketing /
zoom scheme with safeguarded cubic interpolation.
"""
from __future__ import annotations

import math
from collections import deque
from typing import Callable, NamedTuple

import numpy as np


class LBFGSResult(NamedTuple):
    x: np.ndarray
    f: float
    g: np.ndarray
    n_iter: int
    n_eval: int
    converged: bool
    message: str
    f_trace: list


class LineSearchError(RuntimeError):
    def __init__(self, message, evals=0):
        super().__init__(message)
        self.evals = evals


def _cubic_min(a, fa, ga, b, fb, gb):
    """Minimizer of the cubic interpolating (a, fa, ga) and (b, fb, gb), or None."""
    if not (np.isfinite(fa) and np.isfinite(fb) and np.isfinite(ga) and np.isfinite(gb)):
        return None
    d1 = ga + gb - 3 * (fa - fb) / (a - b)
    disc = d1 * d1 - ga * gb
    if disc < 0:
        return None
    d2 = math.copysign(math.sqrt(disc), b - a)
    denom = gb - ga + 2 * d2
    if denom == 0:
        return None
    t = b - (b - a) * (gb + d2 - d1) / denom
    return t if np.isfinite(t) else None


def _approx_wolfe(f, g, f0, g0, c1, c2, eps):
    # Near a minimum the decrease drops below the rounding level of f, and
    # the Armijo test is decided by noise.  The approximate Wolfe conditions
    # then use the slope alone, allowing f to rise by at most eps |f0|.
    return np.isfinite(f) and f <= f0 + eps * abs(f0) and c2 * g0 <= g <= (1 - 2 * c1) * -g0


def strong_wolfe(phi, f0, g0, step0, c1=1e-4, c2=0.9, max_evals=30, step_max=1e10, eps=1e-14):
    """Find a step satisfying the strong Wolfe conditions.

    ``phi(t)`` returns ``(f, dphi, payload)``.  Returns ``(t, f, payload, evals)``.
    Steps meeting the approximate Wolfe conditions (slope test, ``f`` within
    ``eps |f0|`` of ``f0``) are also accepted.
    Raises :class:`LineSearchError` if no acceptable step was found.
    """
    if not g0 < 0:
        raise LineSearchError("not a descent direction")
    evals = 0
    t_prev, f_prev, g_prev = 0.0, f0, g0
    t = step0
    best = None
    while evals < max_evals:
        f, g, payload = phi(t)
        evals += 1
        if np.isfinite(f) and (best is None or f < best[1]):
            best = (t, f, payload)
        if _approx_wolfe(f, g, f0, g0, c1, c2, eps) and f > f0 + c1 * t * g0:
            return t, f, payload, evals
        if not np.isfinite(f) or f > f0 + c1 * t * g0 or (evals > 1 and f >= f_prev):
            return _zoom(phi, f0, g0, t_prev, f_prev, g_prev, t, f, g, c1, c2,
                         max_evals - evals, evals, best, eps)
        if abs(g) <= -c2 * g0:
            return t, f, payload, evals
        if g >= 0:
            return _zoom(phi, f0, g0, t, f, g, t_prev, f_prev, g_prev, c1, c2,
                         max_evals - evals, evals, best, eps)
        t_prev, f_prev, g_prev = t, f, g
        t = min(4 * t, step_max)
    raise LineSearchError("bracketing phase exhausted its evaluations", evals)


def _zoom(phi, f0, g0, lo, flo, glo, hi, fhi, ghi, c1, c2, budget, evals, best, eps):
    for _ in range(max(budget, 0)):
        t = _cubic_min(lo, flo, glo, hi, fhi, ghi)
        width = abs(hi - lo)
        left, right = min(lo, hi), max(lo, hi)
        if t is None or not (left + 0.1 * width <= t <= right - 0.1 * width):
            t = 0.5 * (lo + hi)
        f, g, payload = phi(t)
        evals += 1
        if np.isfinite(f) and (best is None or f < best[1]):
            best = (t, f, payload)
        if _approx_wolfe(f, g, f0, g0, c1, c2, eps) and f > f0 + c1 * t * g0:
            return t, f, payload, evals
        if not np.isfinite(f) or f > f0 + c1 * t * g0 or f >= flo:
            hi, fhi, ghi = t, f, g
        else:
            if abs(g) <= -c2 * g0:
                return t, f, payload, evals
            if g * (hi - lo) >= 0:
                hi, fhi, ghi = lo, flo, glo
            lo, flo, glo = t, f, g
        if abs(hi - lo) <= 1e-16 * max(1.0, abs(lo)):
            break
    # sufficient decrease without curvature is still a usable step
    if best is not None and best[1] <= f0 + c1 * best[0] * g0 and best[0] > 0:
        return best[0], best[1], best[2], evals
    raise LineSearchError("zoom phase failed", evals)


def minimize_lbfgs(fun: Callable, x0, history: int = 10, c1: float = 1e-4, c2: float = 0.9,
                   gtol: float = 1e-8, max_evals: int = 5000, max_iter: int = None,
                   ftol: float = 0.0, ftol_patience: int = 5, gweights=None) -> LBFGSResult:
    """Minimize ``fun(x) -> (f, grad)``.

    Stops when ``max|w * grad| <= gtol * (1 + |f|)`` or the evaluation budget
    is spent; the weights ``w = gweights`` (default 1) let a caller that
    rescaled its variables test the gradient in the original ones.  With ``ftol > 0`` it also stops once ``ftol_patience``
    consecutive steps each reduce ``f`` by less than ``ftol * max(|f|, 1)``.
    A line-search failure resets the curvature memory and retries
    once along the steepest-descent direction; a second failure returns the
    best point seen with ``converged=False``.
    """
    x = np.array(x0, dtype=float)
    f, g = fun(x)
    n_eval = 1
    if not np.isfinite(f):
        raise FloatingPointError("objective is not finite at the starting point")
    mem = deque(maxlen=history)
    f_trace = [f]
    n_iter = 0
    restarted = False
    stalled = 0
    max_iter = max_iter if max_iter is not None else max_evals
    w = 1.0 if gweights is None else np.asarray(gweights, dtype=float)

    def phi_factory(x, d):
        def phi(t):
            xt = x + t * d
            ft, gt = fun(xt)
            if not np.isfinite(ft) or not np.all(np.isfinite(gt)):
                return math.inf, math.nan, (xt, ft, gt)
            return ft, float(gt @ d), (xt, ft, gt)
        return phi

    while True:
        if np.max(np.abs(w * g)) <= gtol * (1 + abs(f)):
            return LBFGSResult(x, f, g, n_iter, n_eval, True, "gradient tolerance reached", f_trace)
        if n_eval >= max_evals or n_iter >= max_iter:
            return LBFGSResult(x, f, g, n_iter, n_eval, False, "evaluation budget exhausted", f_trace)

        d = -_two_loop(g, mem)
        gd = float(g @ d)
        if not gd < 0:
            mem.clear()
            d = -g
            gd = float(g @ d)
        step0 = 1.0 if mem else min(1.0, 1.0 / max(np.max(np.abs(g)), 1e-300))
        try:
            t, f_new, (x_new, _, g_new), used = strong_wolfe(
                phi_factory(x, d), f, gd, step0, c1=c1, c2=c2,
                max_evals=min(30, max(1, max_evals - n_eval)))
        except LineSearchError as exc:
            n_eval += exc.evals
            if restarted or not mem:
                return LBFGSResult(x, f, g, n_iter, n_eval, False,
                                   f"line search failed: {exc}", f_trace)
            mem.clear()
            restarted = True
            continue
        n_eval += used
        restarted = False
        s_vec = x_new - x
        y_vec = g_new - g
        sy = float(s_vec @ y_vec)
        if sy > 1e-12 * float(y_vec @ y_vec) and sy > 0:
            mem.append((s_vec, y_vec, 1.0 / sy))
        stalled = stalled + 1 if f - f_new <= ftol * max(abs(f_new), 1.0) else 0
        x, f, g = x_new, f_new, g_new
        f_trace.append(f)
        n_iter += 1
        if ftol > 0 and stalled >= ftol_patience:
            return LBFGSResult(x, f, g, n_iter, n_eval, True, "relative reduction below ftol", f_trace)


def _two_loop(g, mem):
    q = g.copy()
    alphas = []
    for s, y, rho in reversed(mem):
        a = rho * float(s @ q)
        alphas.append(a)
        q -= a * y
    if mem:
        s, y, _ = mem[-1]
        q *= float(s @ y) / float(y @ y)
    for (s, y, rho), a in zip(mem, reversed(alphas)):
        b = rho * float(y @ q)
        q += (a - b) * s
    return q
