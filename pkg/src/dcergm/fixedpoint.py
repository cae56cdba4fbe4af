"""The double-well potential q_a(x) = theta x^2 - log cosh(2 theta x + a) and its minimizer."""
from __future__ import annotations

import math

import numpy as np


def logcosh(x):
    ax = np.abs(x)
    return ax + np.log1p(np.exp(-2 * ax)) - math.log(2)


def q_value(x, theta: float, a: float = 0.0):
    return theta * np.square(x) - logcosh(2 * theta * np.asarray(x, dtype=float) + a)


def _g(x: float, theta: float, a: float) -> float:
    return x - math.tanh(2 * theta * x + a)


def _bisect(lo: float, hi: float, theta: float, a: float) -> float:
    # g(lo) < 0 <= g(hi)
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if _g(mid, theta, a) < 0:
            lo = mid
        else:
            hi = mid
        if hi - lo < 1e-16:
            break
    return 0.5 * (lo + hi)


def _polish(x: float, theta: float, a: float) -> float:
    for _ in range(8):
        th = math.tanh(2 * theta * x + a)
        dg = 1 - 2 * theta * (1 - th * th)
        if dg <= 0:
            break
        step = (x - th) / dg
        x -= step
        if abs(step) < 1e-17:
            break
    return x


def find_t_shifted(theta: float, a: float = 0.0) -> float:
    """Largest root of x = tanh(2 theta x + a); the minimizer of q_a on [0, inf).

    For theta <= 1/2 with a = 0 the only root is 0, which is rejected.  With
    a > 0 the largest root is positive for every theta > 0.
    """
    theta = float(theta)
    a = float(a)
    if theta <= 0:
        raise ValueError("theta must be positive")
    if a < 0:
        raise ValueError("shift a must be >= 0")
    if a == 0 and theta <= 0.5:
        raise ValueError("x = tanh(2 theta x) has no positive root for theta <= 1/2")
    # g(x) = x - tanh(2 theta x + a) is convex beyond the point x* where
    # 2 theta sech^2(2 theta x + a) = 1, and g(1) > 0.
    hi = 1.0
    if 2 * theta > 1:
        xstar = (math.acosh(math.sqrt(2 * theta)) - a) / (2 * theta)
    else:
        xstar = -math.inf
    lo = max(xstar, 0.0)
    if _g(lo, theta, a) >= 0:
        # no sign change on [x*, 1]; scan for the last sign change from below
        grid = np.linspace(0.0, 1.0, 4097)
        gv = grid - np.tanh(2 * theta * grid + a)
        neg = np.flatnonzero(gv < 0)
        if neg.size == 0:
            raise ValueError(f"no positive root for theta={theta}, a={a}")
        lo = float(grid[neg[-1]])
        hi = float(grid[neg[-1] + 1])
    x = _polish(_bisect(lo, hi, theta, a), theta, a)
    if abs(_g(x, theta, a)) >= 1e-12:
        raise ArithmeticError(f"root polish failed for theta={theta}, a={a}")
    return x


def find_t(theta: float) -> float:
    return find_t_shifted(theta, 0.0)
