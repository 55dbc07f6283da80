"""Activation functions with exact first and second derivatives.

Five kinds are supported: "sigmoid", "tanh", "linear", "relu" and "exp".
All of them have nonnegative first derivative everywhere, which is what
makes positive-weighted networks monotone. Only "exp" has nonnegative
derivatives of every order; it is offered for completeness but kept out
of default training setups because it explodes or vanishes easily.
"""

import numpy as np

from .errors import ContractError, DomainError
from .numerics import sigmoid

KINDS = ("sigmoid", "tanh", "linear", "relu", "exp")


def _check(kind, x):
    if kind not in KINDS:
        raise ContractError(f"unknown activation kind {kind!r}; expected one of {KINDS}")
    x = np.asarray(x, dtype=np.float64)
    if not np.all(np.isfinite(x)):
        raise DomainError(f"non-finite input to activation {kind!r}")
    return x


def act_eval(kind, x):
    """Evaluate the activation z(x)."""
    x = _check(kind, x)
    if kind == "sigmoid":
        out = sigmoid(x)
    elif kind == "tanh":
        out = np.tanh(x)
    elif kind == "linear":
        out = x.copy()
    elif kind == "relu":
        out = np.maximum(x, 0.0)
    else:
        out = np.exp(x)
    return out if out.ndim else float(out)


def act_d1(kind, x):
    """First derivative z'(x). Nonnegative for every kind.

    ReLU uses the subgradient 0 at x = 0, which keeps the derivative
    deterministic and nonnegative.
    """
    x = _check(kind, x)
    if kind == "sigmoid":
        s = sigmoid(x)
        out = s * (1.0 - s)
    elif kind == "tanh":
        t = np.tanh(x)
        out = 1.0 - t * t
    elif kind == "linear":
        out = np.ones_like(x)
    elif kind == "relu":
        out = (x > 0).astype(np.float64)
    else:
        out = np.exp(x)
    return out if out.ndim else float(out)


def act_d2(kind, x):
    """Second derivative z''(x). Exactly zero for linear and ReLU.

    For sigmoid the sign equals the sign of (1 - 2*sigmoid(x)), so it is
    negative whenever the pre-activation is positive; tanh behaves the
    same way around zero. This sign flip is the root cause of why a
    multi-input positive-weighted network cannot serve as a joint CDF
    (see the miso module).
    """
    x = _check(kind, x)
    if kind == "sigmoid":
        s = sigmoid(x)
        out = s * (1.0 - s) * (1.0 - 2.0 * s)
    elif kind == "tanh":
        t = np.tanh(x)
        out = -2.0 * t * (1.0 - t * t)
    elif kind in ("linear", "relu"):
        out = np.zeros_like(x)
    else:
        out = np.exp(x)
    return out if out.ndim else float(out)
