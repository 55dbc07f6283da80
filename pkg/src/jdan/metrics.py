"""Probabilistic-forecast evaluation: log score, CRPS, PIT, energy score.

Bounds policy: the model's support is fixed at training time. Test targets
outside it are excluded from the log score (and counted) and clamped to
the support for the CDF-based metrics, so a stray observation degrades the
scores instead of corrupting them with boundary densities.
"""

import json
from dataclasses import dataclass, field

import numpy as np

from .copula import joint_pdf, sample as copula_sample
from .data import clamp_to_bounds, in_bounds_mask
from .errors import ContractError
from .hypernet import Forecaster
from .marginal import normalized_cdf
from .numerics import composite_simpson, ks_statistic
from .parallel import ordered_map
from .training import LOG_EPS

CRPS_INTERVALS = 256  # total Simpson subintervals per observation


@dataclass
class MetricsReport:
    log_score: float
    crps: list
    pit_ks: list
    energy_score: float
    n_evaluated: int
    n_excluded: int = 0

    def to_dict(self):
        return {
            "log_score": self.log_score,
            "crps": list(self.crps),
            "pit_ks": list(self.pit_ks),
            "energy_score": self.energy_score,
            "n_evaluated": self.n_evaluated,
            "n_excluded": self.n_excluded,
        }

    def to_json(self, **kw):
        return json.dumps(self.to_dict(), indent=2, **kw)

    def format_table(self):
        lines = [
            f"{'log score':<14}{self.log_score: .6f}",
            f"{'energy score':<14}"
            + (f"{self.energy_score: .6f}" if self.energy_score is not None else "  (skipped)"),
        ]
        for d, (c, k) in enumerate(zip(self.crps, self.pit_ks), start=1):
            ks_text = f"{k: .6f}" if k is not None else " (n < 20)"
            lines.append(f"{'y%d' % d:<14}CRPS { c: .6f}   PIT-KS {ks_text}")
        lines.append(f"{'evaluated':<14}{self.n_evaluated}   excluded {self.n_excluded}")
        return "\n".join(lines)


def _models_for(fc: Forecaster, features, n):
    """One model per row (shared instance when unconditional)."""
    if not fc.conditional:
        m = fc.model_for()
        return [m] * n
    if features is None:
        raise ContractError("conditional forecaster needs features")
    return ordered_map(lambda x: fc.model_for(x), list(np.atleast_2d(features)))


def log_score(fc: Forecaster, targets, features=None):
    """(mean log density, n_evaluated, n_excluded); higher is better.

    Equals -nll_loss on the same rows when none are excluded.
    """
    targets = np.atleast_2d(np.asarray(targets, dtype=np.float64))
    bounds = fc.arch.bounds
    keep = in_bounds_mask(targets, bounds)
    n_excluded = int((~keep).sum())
    targets = targets[keep]
    feats = None if features is None else np.atleast_2d(features)[keep]
    if targets.shape[0] == 0:
        raise ContractError("no in-bounds rows to score")
    models = _models_for(fc, feats, targets.shape[0])
    if not fc.conditional:
        dens = joint_pdf(models[0], targets)
    else:
        dens = np.array(
            ordered_map(lambda mi: float(joint_pdf(mi[0], mi[1])), list(zip(models, targets)))
        )
    value = float(np.mean(np.log(dens + LOG_EPS)))
    return value, targets.shape[0], n_excluded


def crps_marginal(fc: Forecaster, targets, dim, features=None):
    """Mean integral of (CDF(t) - step at y)^2 over the dim-th bounds.

    The integrand has a jump at the observation, so Simpson is applied
    separately below and above it (half the subintervals each); quadrature
    across the kink would waste its accuracy.
    """
    targets = clamp_to_bounds(np.atleast_2d(targets), fc.arch.bounds)
    b = fc.arch.bounds[dim]
    models = _models_for(fc, features, targets.shape[0])

    def one(args):
        model, y = args
        params = model.marginals[dim]
        yd = float(y[dim])
        below = composite_simpson(
            lambda t: normalized_cdf(params, t, b) ** 2,
            b.lower, yd, CRPS_INTERVALS // 2,
        )
        above = composite_simpson(
            lambda t: (normalized_cdf(params, t, b) - 1.0) ** 2,
            yd, b.upper, CRPS_INTERVALS // 2,
        )
        return below + above

    return float(np.mean(ordered_map(one, list(zip(models, targets)))))


def pit_values(fc: Forecaster, targets, features=None):
    """Matrix of per-dimension PIT values: u[i, d] = CDF_d(y[i, d])."""
    targets = clamp_to_bounds(np.atleast_2d(targets), fc.arch.bounds)
    n, dimension = targets.shape
    models = _models_for(fc, features, n)
    if not fc.conditional:
        m = models[0]
        cols = [
            normalized_cdf(m.marginals[d], targets[:, d], fc.arch.bounds[d])
            for d in range(dimension)
        ]
        return np.column_stack(cols)
    rows = ordered_map(
        lambda mi: [
            normalized_cdf(mi[0].marginals[d], float(mi[1][d]), fc.arch.bounds[d])
            for d in range(dimension)
        ],
        list(zip(models, targets)),
    )
    return np.asarray(rows, dtype=np.float64)


def pit_ks(fc: Forecaster, targets, dim, features=None):
    """KS distance of the dim-th PIT sample to Uniform(0,1). Needs n >= 20."""
    targets = np.atleast_2d(targets)
    if targets.shape[0] < 20:
        raise ContractError("PIT calibration needs at least 20 rows")
    return ks_statistic(pit_values(fc, targets, features)[:, dim])


def energy_score(fc: Forecaster, targets, features=None, m_samples=200, seed=0):
    """Sample-based multivariate proper score; lower is better.

    Per row: mean ||s_j - y|| - (1/2m^2) sum ||s_j - s_k||, with the m
    forecast samples drawn from that row's model under a per-row child
    seed, so the result is deterministic in (seed, row order).
    """
    if m_samples < 2:
        raise ContractError("energy score needs m_samples >= 2")
    targets = np.atleast_2d(np.asarray(targets, dtype=np.float64))
    n = targets.shape[0]
    models = _models_for(fc, features, n)
    row_seeds = np.random.SeedSequence(seed).spawn(n)

    def one(i):
        s = copula_sample(models[i], m_samples, row_seeds[i])
        to_obs = np.linalg.norm(s - targets[i], axis=1).mean()
        pairwise = np.linalg.norm(s[:, None, :] - s[None, :, :], axis=2).sum()
        return to_obs - pairwise / (2.0 * m_samples**2)

    return float(np.mean(ordered_map(one, range(n))))


def evaluate_forecaster(
    fc: Forecaster, targets, features=None, m_samples=200, seed=0, with_energy=True
):
    """Full metric battery as a MetricsReport."""
    targets = np.atleast_2d(np.asarray(targets, dtype=np.float64))
    ls, n_eval, n_excl = log_score(fc, targets, features)
    crps = [crps_marginal(fc, targets, d, features) for d in range(fc.arch.dim)]
    if targets.shape[0] >= 20:
        pit = pit_values(fc, targets, features)
        ks = [ks_statistic(pit[:, d]) for d in range(fc.arch.dim)]
    else:
        ks = [None] * fc.arch.dim  # PIT needs n >= 20
    es = (
        energy_score(fc, targets, features, m_samples=m_samples, seed=seed)
        if with_energy
        else None
    )
    return MetricsReport(
        log_score=ls,
        crps=crps,
        pit_ks=ks,
        energy_score=es,
        n_evaluated=n_eval,
        n_excluded=n_excl,
    )
