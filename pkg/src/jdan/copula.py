"""Joint CDF/density built from marginal CDF units and pairwise correlations.

The joint CDF over D dimensions is the product of the D marginal CDFs times
the average, over all D*(D-1)/2 dimension pairs (d, i), of the bracket

    C_di * (1 - F_d) * (1 - F_i) + 1,

with each effective correlation C_di = tanh(raw_di) in (-1, 1). Averaging
over pairs (rather than summing) is what keeps the construction a valid
CDF for every parameter value: the upper corner evaluates to exactly 1 and
the implied density stays positive because the per-pair perturbations
|C_di (1 - 2u_d) (1 - 2u_i)| < 1 average to something strictly above -1.

Differentiating through all coordinates gives the closed-form density

    c(u) = 1 + mean over pairs of C_di * (1 - 2 u_d) * (1 - 2 u_i)

on the unit cube, bounded by (0, 2), and the joint density is c at the
marginal CDF values times the product of marginal densities. A finite
difference mixed-partial oracle is included so the closed form can always
be checked against the CDF it claims to differentiate.
"""

import itertools
from dataclasses import dataclass, field

import numpy as np

from .errors import BracketError, ContractError
from .marginal import (
    Bounds,
    MarginalNetParams,
    inverse_cdf,
    normalized_cdf,
    normalized_pdf,
)

MAX_DIM = 12  # pairs grow quadratically; desk-scale cap


def n_pairs(dim):
    return dim * (dim - 1) // 2


def pair_indices(dim):
    """Row-major upper-triangular order: (0,1), (0,2), ..., (1,2), ..."""
    return list(itertools.combinations(range(dim), 2))


@dataclass
class CorrelationParams:
    """Unconstrained pairwise parameters; tanh squashes them into (-1, 1)."""

    raw: np.ndarray

    def __post_init__(self):
        self.raw = np.asarray(self.raw, dtype=np.float64).reshape(-1)

    def effective(self):
        return np.tanh(self.raw)


@dataclass
class JdanModel:
    """D marginal CDF units, pairwise correlations and per-dimension bounds."""

    dim: int
    marginals: list
    correlations: CorrelationParams
    bounds: list = field(default_factory=list)

    def __post_init__(self):
        if self.dim < 2:
            raise ContractError("joint models need at least 2 dimensions")
        if self.dim > MAX_DIM:
            raise ContractError(f"dimension {self.dim} exceeds the supported cap {MAX_DIM}")
        if len(self.marginals) != self.dim or len(self.bounds) != self.dim:
            raise ContractError("need one marginal net and one bounds pair per dimension")
        if self.correlations.raw.size != n_pairs(self.dim):
            raise ContractError(
                f"expected {n_pairs(self.dim)} correlation parameters, "
                f"got {self.correlations.raw.size}"
            )

    def box_lower(self):
        return np.array([b.lower for b in self.bounds])

    def box_upper(self):
        return np.array([b.upper for b in self.bounds])


def _as_points(y, dim):
    y = np.asarray(y, dtype=np.float64)
    scalar = y.ndim == 1
    pts = np.atleast_2d(y)
    if pts.shape[1] != dim:
        raise ContractError(f"points must have {dim} coordinates, got shape {y.shape}")
    return pts, scalar


def marginal_cdf_values(model: JdanModel, y):
    """Per-dimension CDF values F_d(y_d), clamping to the box."""
    pts, scalar = _as_points(y, model.dim)
    u = np.column_stack(
        [normalized_cdf(model.marginals[d], pts[:, d], model.bounds[d]) for d in range(model.dim)]
    )
    return u[0] if scalar else u


def copula_cdf(corr: CorrelationParams, u):
    """The combiner itself, evaluated on unit-cube coordinates."""
    u = np.asarray(u, dtype=np.float64)
    scalar = u.ndim == 1
    pts = np.atleast_2d(u)
    dim = pts.shape[1]
    pairs = pair_indices(dim)
    if corr.raw.size != len(pairs):
        raise ContractError("correlation size does not match point dimension")
    c = corr.effective()
    v = 1.0 - pts
    s = np.zeros(pts.shape[0])
    for k, (d, i) in enumerate(pairs):
        s += c[k] * v[:, d] * v[:, i]
    out = pts.prod(axis=1) * (1.0 + s / len(pairs))
    return float(out[0]) if scalar else out


def copula_density(corr: CorrelationParams, u):
    """Mixed partial of the combiner over all coordinates; lies in (0, 2)."""
    u = np.asarray(u, dtype=np.float64)
    scalar = u.ndim == 1
    pts = np.atleast_2d(u)
    dim = pts.shape[1]
    pairs = pair_indices(dim)
    if corr.raw.size != len(pairs):
        raise ContractError("correlation size does not match point dimension")
    c = corr.effective()
    m = 1.0 - 2.0 * pts
    s = np.zeros(pts.shape[0])
    for k, (d, i) in enumerate(pairs):
        s += c[k] * m[:, d] * m[:, i]
    out = 1.0 + s / len(pairs)
    return float(out[0]) if scalar else out


def joint_cdf(model: JdanModel, y):
    """Joint CDF at y; coordinates are clamped into the box first."""
    return copula_cdf(model.correlations, marginal_cdf_values(model, y))


def joint_pdf(model: JdanModel, y):
    """Joint density: copula density at the CDF values times marginal densities."""
    pts, scalar = _as_points(y, model.dim)
    u = marginal_cdf_values(model, pts)
    dens = copula_density(model.correlations, u)
    for d in range(model.dim):
        dens = dens * normalized_pdf(model.marginals[d], pts[:, d], model.bounds[d])
    return float(dens[0]) if scalar else dens


def mixed_partial_fd(model: JdanModel, y, h):
    """Central-difference estimate of the all-coordinates mixed partial of the CDF.

    h is the absolute step, either a scalar shared by every dimension or one
    step per dimension. The 2^D stencil with signs (-1)^(#minus sides) agrees
    with joint_pdf to O(h^2); it exists purely to cross-check the closed form.
    """
    y = np.asarray(y, dtype=np.float64)
    if y.ndim != 1 or y.size != model.dim:
        raise ContractError("mixed_partial_fd expects a single point")
    steps = np.broadcast_to(np.asarray(h, dtype=np.float64), (model.dim,))
    lo, up = model.box_lower(), model.box_upper()
    if np.any(y - steps < lo) or np.any(y + steps > up):
        raise BracketError("stencil leaves the box; move the point inward or shrink h")
    signs = np.array(list(itertools.product((-1.0, 1.0), repeat=model.dim)))
    vals = joint_cdf(model, y[None, :] + signs * steps[None, :])
    weights = signs.prod(axis=1)
    return float((weights * vals).sum() / np.prod(2.0 * steps))


def sample(model: JdanModel, n, seed):
    """Draw n rows from the joint density, reproducibly for a given seed.

    Unit-cube proposals are rejection-sampled against the copula density with
    the provable envelope constant 2 (acceptance rate at least one half), then
    pushed through each marginal quantile function.
    """
    if n < 1:
        raise ContractError("need at least one sample")
    rng = np.random.default_rng(seed)
    accepted = []
    have = 0
    while have < n:
        m = int(np.ceil((n - have) * 2.2)) + 16
        u = rng.uniform(size=(m, model.dim))
        keep = rng.uniform(size=m) < copula_density(model.correlations, u) / 2.0
        kept = u[keep]
        accepted.append(kept)
        have += kept.shape[0]
    u = np.concatenate(accepted, axis=0)[:n]
    cols = [
        inverse_cdf(model.marginals[d], u[:, d], model.bounds[d]) for d in range(model.dim)
    ]
    return np.column_stack(cols)
