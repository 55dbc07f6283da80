"""Shared numerical helpers: stable elementwise maps and small quadratures."""

import numpy as np


def sigmoid(x):
    """Numerically stable logistic function, elementwise."""
    x = np.asarray(x, dtype=np.float64)
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


def softplus(x):
    """log(1 + e^x) without overflow on either tail."""
    return np.logaddexp(0.0, np.asarray(x, dtype=np.float64))


def composite_simpson(f, a, b, n):
    """Composite Simpson rule with n subintervals (n made even if odd)."""
    if b <= a:
        return 0.0
    if n % 2:
        n += 1
    t = np.linspace(a, b, n + 1)
    y = np.asarray(f(t), dtype=np.float64)
    h = (b - a) / n
    return h / 3.0 * (y[0] + y[-1] + 4.0 * y[1:-1:2].sum() + 2.0 * y[2:-1:2].sum())


def central_fd(f, x, h):
    """Central finite difference of a scalar function of a scalar."""
    return (f(x + h) - f(x - h)) / (2.0 * h)


def ks_statistic(u):
    """Kolmogorov-Smirnov distance of a sample to Uniform(0, 1)."""
    u = np.sort(np.asarray(u, dtype=np.float64))
    n = u.size
    grid = np.arange(1, n + 1) / n
    return float(max(np.max(grid - u), np.max(u - (grid - 1.0 / n))))
