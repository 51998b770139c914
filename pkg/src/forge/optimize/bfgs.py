"""Dense BFGS with a strong-Wolfe line search.

Kept in-repo (rather than delegating to scipy) so that iterates, evaluation
counts and the energy trace are fully under our control and bit-reproducible.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

FunGrad = Callable[[np.ndarray], tuple[float, np.ndarray]]


@dataclass
class BFGSResult:
    x: np.ndarray
    fun: float
    grad: np.ndarray
    n_iter: int
    n_evaluations: int
    trace: list[tuple[int, float]] = field(default_factory=list)
    converged: bool = False
    degraded: bool = False
    message: str = ""

    @property
    def grad_norm(self) -> float:
        return float(np.linalg.norm(self.grad))


class _Counter:
    def __init__(self, fg: FunGrad):
        self.fg = fg
        self.count = 0

    def __call__(self, x):
        self.count += 1
        f, g = self.fg(x)
        return float(f), np.asarray(g, dtype=np.float64)


def _cubic_min(a, fa, da, b, fb, db):
    """Minimizer of the cubic through (a, fa, da), (b, fb, db); None if ill-posed."""
    d1 = da + db - 3.0 * (fa - fb) / (a - b)
    disc = d1 * d1 - da * db
    if not np.isfinite(disc) or disc < 0:
        return None
    d2 = np.copysign(np.sqrt(disc), b - a)
    denom = db - da + 2.0 * d2
    if denom == 0:
        return None
    return b - (b - a) * (db + d2 - d1) / denom


def wolfe_line_search(fg, x, f0, g0, d, alpha0=1.0, c1=1e-4, c2=0.9, max_iter=40, alpha_max=1e10):
    """Strong-Wolfe search along ``d`` (Nocedal & Wright, Algs. 3.5/3.6).

    Returns ``(alpha, f, g)``; ``alpha`` is None on failure. If the search fails
    but some trial achieved sufficient decrease, that trial is returned.
    """
    dphi0 = float(g0 @ d)
    best = (None, f0, g0)

    def zoom(lo, flo, dlo, glo, hi, fhi, dhi):
        nonlocal best
        for _ in range(max_iter):
            width = hi - lo
            a = _cubic_min(lo, flo, dlo, hi, fhi, dhi)
            left, right = min(lo, hi), max(lo, hi)
            if a is None or not (left + 0.1 * abs(width) <= a <= right - 0.1 * abs(width)):
                a = lo + 0.5 * width
            f, g = fg(x + a * d)
            da = float(g @ d)
            if f > f0 + c1 * a * dphi0 or f >= flo:
                hi, fhi, dhi = a, f, da
            else:
                if f < best[1]:
                    best = (a, f, g)
                if abs(da) <= -c2 * dphi0:
                    return a, f, g
                if da * (hi - lo) >= 0:
                    hi, fhi, dhi = lo, flo, dlo
                lo, flo, dlo, glo = a, f, da, g
            if abs(hi - lo) <= 1e-16 * max(1.0, abs(lo)):
                break
        return best

    a_prev, f_prev, d_prev, g_prev = 0.0, f0, dphi0, g0
    a = alpha0
    for i in range(max_iter):
        f, g = fg(x + a * d)
        da = float(g @ d)
        if not np.isfinite(f):
            a = 0.5 * (a_prev + a)
            continue
        if f > f0 + c1 * a * dphi0 or (i > 0 and f >= f_prev):
            return zoom(a_prev, f_prev, d_prev, g_prev, a, f, da)
        if f < best[1]:
            best = (a, f, g)
        if abs(da) <= -c2 * dphi0:
            return a, f, g
        if da >= 0:
            return zoom(a, f, da, g, a_prev, f_prev, d_prev)
        a_prev, f_prev, d_prev, g_prev = a, f, da, g
        a = min(2.0 * a, alpha_max)
    return best


def bfgs_minimize(fun_and_grad: FunGrad, x0, gtol: float = 1e-8, ftol: float = 1e-12,
                  max_iter: int = 1000, c1: float = 1e-4, c2: float = 0.9) -> BFGSResult:
    """Minimize with BFGS (inverse-Hessian form).

    Stops when ``||g||_2 <= gtol``, when the relative change of ``f`` over an
    accepted step is ``<= ftol``, or after ``max_iter`` iterations. A failed
    line search never raises: the best point seen so far is returned with
    ``degraded=True``.
    """
    fg = _Counter(fun_and_grad)
    x = np.array(x0, dtype=np.float64)
    f, g = fg(x)
    trace = [(0, f)]
    k = x.size
    eye = np.eye(k)
    hinv = eye.copy()
    scaled = False
    if not np.isfinite(f):
        raise ValueError("objective is not finite at the starting point")
    if np.linalg.norm(g) <= gtol:
        return BFGSResult(x, f, g, 0, fg.count, trace, converged=True, message="gtol at x0")

    it = 0
    message = "max_iter reached"
    converged = degraded = False
    while it < max_iter:
        d = -hinv @ g
        if not g @ d < 0:
            hinv = eye.copy()
            d = -g
        alpha0 = 1.0 if scaled else min(1.0, 1.0 / max(np.linalg.norm(g), 1e-300))
        a, f_new, g_new = wolfe_line_search(fg, x, f, g, d, alpha0=alpha0, c1=c1, c2=c2)
        if a is None and not np.array_equal(d, -g):
            hinv = eye.copy()
            d = -g
            a, f_new, g_new = wolfe_line_search(fg, x, f, g, d, alpha0=min(1.0, 1.0 / np.linalg.norm(g)),
                                                c1=c1, c2=c2)
        if a is None:
            degraded = True
            message = "line search failed"
            break
        it += 1
        s = a * d
        y = g_new - g
        x = x + s
        f_old, f, g = f, f_new, g_new
        trace.append((it, f))
        if np.linalg.norm(g) <= gtol:
            converged = True
            message = "gtol"
            break
        if abs(f_old - f) <= ftol * max(abs(f_old), abs(f), 1.0):
            converged = True
            message = "ftol"
            break
        sy = float(s @ y)
        if sy > 1e-12 * np.linalg.norm(s) * np.linalg.norm(y):
            if not scaled:
                hinv = eye * (sy / float(y @ y))
                scaled = True
            rho = 1.0 / sy
            hy = hinv @ y
            # (I - rho s y^T) H (I - rho y s^T) + rho s s^T, expanded
            hinv = hinv - rho * (np.outer(s, hy) + np.outer(hy, s)) + (rho * rho * float(y @ hy) + rho) * np.outer(s, s)
    return BFGSResult(x, f, g, it, fg.count, trace, converged, degraded, message)
