"""Shared helpers: random model/architecture construction for the suite."""

import numpy as np

from jdan.hypernet import ArchitectureDescriptor, materialize


def unit_arch(dim, hidden=(8,), feature_dim=0, activation="sigmoid", hyper=(16,)):
    """Architecture on the unit box with one shared hidden spec."""
    return ArchitectureDescriptor(
        dim=dim,
        bounds=[(0.0, 1.0)] * dim,
        marginal_hidden=[list(hidden)] * dim,
        activations=[activation] * dim,
        feature_dim=feature_dim,
        hypernet_hidden=list(hyper),
    )


def random_model(rng, dim, hidden=(8,), scale=1.0, activation="sigmoid", bounds=None):
    """Materialize a model from raw ~ N(0, scale); total for any draw."""
    if bounds is None:
        arch = unit_arch(dim, hidden, activation=activation)
    else:
        arch = ArchitectureDescriptor(
            dim=dim,
            bounds=list(bounds),
            marginal_hidden=[list(hidden)] * dim,
            activations=[activation] * dim,
        )
    raw = rng.normal(0.0, scale, size=arch.param_count())
    return materialize(raw, arch), arch


def interior_points(rng, model, n, margin=0.05):
    """Points inside the box, at least margin*width from each face."""
    lo = model.box_lower()
    hi = model.box_upper()
    span = hi - lo
    return lo + span * (margin + (1 - 2 * margin) * rng.random((n, model.dim)))
