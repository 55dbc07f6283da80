"""Maximum-likelihood fitting of the joint density model.

The whole objective — conditioning net, positivity map, monotone marginal
nets and their input-derivatives, pair combiner, log — is rebuilt on the
reverse-mode tape in ``autodiff`` so one backward pass yields exact
gradients for every trainable array. ``grad_check`` compares those against
central finite differences and is the standing correctness oracle.

The batch is vectorized through the tape as a single graph, so the
"reduction" over per-sample gradients is a sum in fixed index order:
results are bitwise reproducible for a given seed and batch order.
"""

import math
import time
import warnings
from dataclasses import dataclass, field

import numpy as np

from . import autodiff as ad
from .copula import n_pairs, pair_indices
from .errors import (
    ConfigError,
    ContractError,
    DegenerateMarginalError,
    EvaluationError,
    NonFiniteLossError,
    TrainingError,
)
from .hypernet import ArchitectureDescriptor, ConditioningNet, initialize_net
from .marginal import DENOM_EPS, WEIGHT_EPS

LOG_EPS = 1e-12  # density can be exactly 0 on the support boundary


@dataclass
class TrainConfig:
    learning_rate: float = 1e-3
    batch_size: int = 64
    max_epochs: int = 500
    patience: int = 20
    seed: int = 0
    grad_clip: float = 10.0
    validation_fraction: float = 0.2

    def __post_init__(self):
        if self.learning_rate <= 0 or self.grad_clip <= 0:
            raise ConfigError("learning_rate and grad_clip must be positive")
        if min(self.batch_size, self.max_epochs, self.patience) < 1:
            raise ConfigError("batch_size, max_epochs and patience must be >= 1")
        if not 0.0 < self.validation_fraction < 1.0:
            raise ConfigError("validation_fraction must lie in (0, 1)")


@dataclass
class TrainReport:
    train_nll: list = field(default_factory=list)
    val_nll: list = field(default_factory=list)
    stopped_epoch: int = 0
    best_epoch: int = 0
    best_validation_nll: float = math.nan
    wall_time: float = 0.0
    # optimizer state at stop (parameters themselves are at the best epoch);
    # saved into model checkpoints, not part of the history CSV
    optimizer_state: dict = None


def _tape_act(kind, z):
    """Activation value and its input-derivative, both as tape nodes.

    The derivative is expressed through the value (s(1-s), 1-t^2, ...) so
    the tape differentiates it with respect to the parameters for free.
    None means the derivative is identically 1 (linear).
    """
    if kind == "sigmoid":
        a = ad.sigmoid(z)
        return a, a * (1.0 - a)
    if kind == "tanh":
        a = ad.tanh(z)
        return a, 1.0 - a * a
    if kind == "relu":
        return ad.relu(z), ad.step(z)
    if kind == "exp":
        a = ad.exp(z)
        return a, a
    if kind == "linear":
        return z, None
    raise ContractError(f"unknown activation {kind!r}")


def _marginal_pass(weights, biases, activation, y_col, per_sample, with_deriv):
    """Monotone-net forward and (optionally) d/dy on the tape.

    weights[k]: (out,in) shared or (n,out,in) per-sample, already positive.
    y_col: constant tape node, (m,1). Returns (value, deriv) nodes, (m,1).
    """
    a = y_col
    deriv = ad.Tensor(np.ones((y_col.data.shape[0], 1))) if with_deriv else None
    last = len(weights) - 1
    for k, (w, b) in enumerate(zip(weights, biases)):
        if per_sample:
            z = ad.bmv(w, a) + b
            jz = ad.bmv(w, deriv) if with_deriv else None
        else:
            wt = ad.transpose(w)
            z = ad.matmul(a, wt) + b
            jz = ad.matmul(deriv, wt) if with_deriv else None
        if k == last:
            a, deriv = z, jz  # linear output layer
        else:
            a, d1 = _tape_act(activation, z)
            if with_deriv:
                deriv = jz if d1 is None else d1 * jz
    return a, deriv


def _net_raw(net: ConditioningNet, leaves, features):
    """Raw-vector tape node: (P,) unconditional or (n,P) from the hypernet."""
    if net.input_dim == 0:
        return leaves[0], False
    a = ad.Tensor(np.asarray(features, dtype=np.float64))
    last = len(net.weights) - 1
    for k in range(len(net.weights)):
        w, b = leaves[2 * k], leaves[2 * k + 1]
        z = ad.matmul(a, ad.transpose(w)) + b
        a = z if k == last else _tape_act(net.activation, z)[0]
    return a, True


def _slice_raw(raw, per_sample, lo, hi, shape=None):
    if per_sample:
        piece = ad.getitem(raw, (slice(None), slice(lo, hi)))
        if shape is not None:
            piece = ad.reshape(piece, (raw.data.shape[0],) + shape)
    else:
        piece = ad.getitem(raw, slice(lo, hi))
        if shape is not None:
            piece = ad.reshape(piece, shape)
    return piece


def _per_sample_loss(net, arch, targets, features):
    """Tape graph of the per-sample negative log joint density.

    Returns (loss_vec, leaves): the (n,1) loss node and the parameter
    leaves in net.parameters() order, for gradient read-out.
    """
    targets = np.asarray(targets, dtype=np.float64)
    if targets.ndim != 2 or targets.shape[1] != arch.dim:
        raise ContractError("targets must be (n, dim)")
    n = targets.shape[0]
    if n == 0:
        raise ContractError("batch must be nonempty")
    leaves = [ad.leaf(p) for p in net.parameters()]
    raw, per_sample = _net_raw(net, leaves, features)
    spans, corr_span = arch.partition()

    dens_terms = None
    pdf_prod = None
    margins = []  # (1-2u) per dimension, for the pair sum
    for d, (w_spans, b_spans) in enumerate(spans):
        weights = [
            ad.softplus(_slice_raw(raw, per_sample, lo, hi, shape)) + WEIGHT_EPS
            for lo, hi, shape in w_spans
        ]
        biases = [_slice_raw(raw, per_sample, lo, hi) for lo, hi in b_spans]
        act = arch.activations[d]
        b = arch.bounds[d]
        y_col = ad.Tensor(targets[:, d:d + 1])
        if np.any(targets[:, d] < b.lower) or np.any(targets[:, d] > b.upper):
            bad = int(np.argmax((targets[:, d] < b.lower) | (targets[:, d] > b.upper)))
            raise ContractError(
                f"target sample {bad} lies outside bounds in dimension {d}"
            )
        m = n if per_sample else 1
        lo_col = ad.Tensor(np.full((m, 1), b.lower))
        hi_col = ad.Tensor(np.full((m, 1), b.upper))
        psi_y, dpsi = _marginal_pass(weights, biases, act, y_col, per_sample, True)
        psi_lo, _ = _marginal_pass(weights, biases, act, lo_col, per_sample, False)
        psi_hi, _ = _marginal_pass(weights, biases, act, hi_col, per_sample, False)
        denom = psi_hi - psi_lo
        if np.min(denom.data) <= DENOM_EPS:
            raise DegenerateMarginalError(
                f"marginal {d} is flat over its bounds (denominator <= {DENOM_EPS})"
            )
        u = (psi_y - psi_lo) / denom
        pdf = dpsi / denom
        margins.append(1.0 - 2.0 * u)
        pdf_prod = pdf if pdf_prod is None else pdf_prod * pdf

    corr = ad.tanh(_slice_raw(raw, per_sample, corr_span[0], corr_span[1]))
    for k, (d, i) in enumerate(pair_indices(arch.dim)):
        c = _slice_raw(corr, per_sample, k, k + 1) if per_sample else ad.getitem(corr, k)
        term = c * (margins[d] * margins[i])
        dens_terms = term if dens_terms is None else dens_terms + term
    density = 1.0 + dens_terms * (1.0 / n_pairs(arch.dim))
    return -ad.log(density * pdf_prod + LOG_EPS), leaves


def _check_finite(loss_vec):
    finite = np.isfinite(loss_vec.data.reshape(-1))
    if not finite.all():
        idx = int(np.argmin(finite))
        raise NonFiniteLossError(f"non-finite loss at sample {idx}", sample_index=idx)


def nll_loss(net, arch, targets, features=None):
    """Mean of -log(joint_pdf + 1e-12) over the batch."""
    vec, _ = _per_sample_loss(net, arch, targets, features)
    _check_finite(vec)
    return float(vec.data.mean())


def nll_grad(net, arch, targets, features=None):
    """(loss, flat gradient) over net.parameters() in order, raveled."""
    vec, leaves = _per_sample_loss(net, arch, targets, features)
    _check_finite(vec)
    loss = ad.mean(vec)
    ad.backward(loss)
    grads = [
        np.zeros(leaf.data.size) if leaf.grad is None else leaf.grad.reshape(-1)
        for leaf in leaves
    ]
    return float(loss.data), np.concatenate(grads)


def flat_parameters(net) -> np.ndarray:
    return np.concatenate([p.reshape(-1) for p in net.parameters()])


def set_flat_parameters(net, vec):
    vec = np.asarray(vec, dtype=np.float64)
    params = net.parameters()
    if vec.size != sum(p.size for p in params):
        raise ContractError("flat vector length does not match the net")
    pos = 0
    for p in params:
        p[...] = vec[pos:pos + p.size].reshape(p.shape)
        pos += p.size


def grad_check(net, arch, targets, features=None, h=1e-5, max_coords=None, seed=0):
    """Max relative error of the tape gradient vs central finite differences.

    Coordinates with |analytic| <= 1e-8 are skipped (FD noise dominates
    there). When max_coords is given, a seeded random subset of that size
    is compared instead of every coordinate.
    """
    if h <= 0:
        raise ContractError("h must be positive")
    _, g = nll_grad(net, arch, targets, features)
    idx = np.arange(g.size)
    if max_coords is not None and g.size > max_coords:
        idx = np.random.default_rng(seed).choice(g.size, size=max_coords, replace=False)
    theta = flat_parameters(net)
    worst = 0.0
    for i in idx:
        if abs(g[i]) <= 1e-8:
            continue
        saved = theta[i]
        theta[i] = saved + h
        set_flat_parameters(net, theta)
        up = nll_loss(net, arch, targets, features)
        theta[i] = saved - h
        set_flat_parameters(net, theta)
        down = nll_loss(net, arch, targets, features)
        theta[i] = saved
        set_flat_parameters(net, theta)
        fd = (up - down) / (2.0 * h)
        worst = max(worst, abs(g[i] - fd) / max(abs(g[i]), abs(fd)))
    return worst


def _adam_update(theta, g, m, v, t, cfg: TrainConfig):
    norm = float(np.linalg.norm(g))
    if norm > cfg.grad_clip:
        g = g * (cfg.grad_clip / norm)
    m *= 0.9
    m += 0.1 * g
    v *= 0.999
    v += 0.001 * g * g
    mhat = m / (1.0 - 0.9 ** t)
    vhat = v / (1.0 - 0.999 ** t)
    theta -= cfg.learning_rate * mhat / (np.sqrt(vhat) + 1e-8)


def train(arch: ArchitectureDescriptor, targets, features=None, config=None, log=None):
    """Fit by Adam on mean NLL; returns (net, TrainReport).

    Deterministic for a fixed (config.seed, data): the split, the
    initialization, and every shuffle are drawn from spawned child
    streams of that one seed. Early stopping watches validation NLL and
    the returned parameters are the best-validation ones.
    """
    cfg = config or TrainConfig()
    targets = np.asarray(targets, dtype=np.float64)
    n = targets.shape[0]
    if features is not None:
        features = np.asarray(features, dtype=np.float64)
        if features.shape[0] != n:
            raise ContractError("features and targets disagree on n")
    if arch.feature_dim > 0 and features is None:
        raise ContractError("a conditional architecture needs features")
    if n < 10 * cfg.batch_size:
        warnings.warn(
            f"only {n} samples for batch_size={cfg.batch_size}; "
            "recommend at least 10 batches per epoch",
            stacklevel=2,
        )
    ss_split, ss_init, ss_shuffle = np.random.SeedSequence(cfg.seed).spawn(3)
    perm = np.random.default_rng(ss_split).permutation(n)
    n_val = max(1, int(round(cfg.validation_fraction * n)))
    if n - n_val < 1:
        raise ConfigError("dataset too small for the requested validation fraction")
    val_idx, tr_idx = perm[:n_val], perm[n_val:]
    y_tr, y_val = targets[tr_idx], targets[val_idx]
    x_tr = features[tr_idx] if features is not None else None
    x_val = features[val_idx] if features is not None else None

    net = initialize_net(arch, ss_init)
    theta = flat_parameters(net)
    m = np.zeros_like(theta)
    v = np.zeros_like(theta)
    t = 0
    shuffle_rng = np.random.default_rng(ss_shuffle)
    report = TrainReport()
    best = nll_loss(net, arch, y_val, x_val)  # epoch-0 baseline
    best_theta = theta.copy()
    report.best_validation_nll = best
    since_best = 0
    start = time.perf_counter()
    n_tr = len(tr_idx)

    for epoch in range(1, cfg.max_epochs + 1):
        order = shuffle_rng.permutation(n_tr)
        epoch_loss = 0.0
        for lo in range(0, n_tr, cfg.batch_size):
            rows = order[lo:lo + cfg.batch_size]
            xb = x_tr[rows] if x_tr is not None else None
            try:
                loss, g = nll_grad(net, arch, y_tr[rows], xb)
                if not np.all(np.isfinite(g)):
                    raise NonFiniteLossError("non-finite gradient")
            except (NonFiniteLossError, DegenerateMarginalError, EvaluationError) as exc:
                # the step broke evaluation (overflow, flattened marginal);
                # hand back the last good parameters with the partial report
                set_flat_parameters(net, best_theta)
                report.stopped_epoch = epoch
                report.wall_time = time.perf_counter() - start
                raise TrainingError(
                    f"epoch {epoch}: {exc}; parameters restored to the best "
                    "checkpoint so far",
                    report=report,
                ) from exc
            t += 1
            _adam_update(theta, g, m, v, t, cfg)
            set_flat_parameters(net, theta)
            epoch_loss += loss * len(rows)
        train_nll = epoch_loss / n_tr
        val_nll = nll_loss(net, arch, y_val, x_val)
        report.train_nll.append(train_nll)
        report.val_nll.append(val_nll)
        report.stopped_epoch = epoch
        if log is not None:
            log(f"epoch {epoch:4d}  train nll {train_nll: .6f}  val nll {val_nll: .6f}")
        if val_nll < best:
            best = val_nll
            best_theta = theta.copy()
            report.best_epoch = epoch
            report.best_validation_nll = best
            since_best = 0
        else:
            since_best += 1
            if since_best >= cfg.patience:
                break
    set_flat_parameters(net, best_theta)
    report.wall_time = time.perf_counter() - start
    report.optimizer_state = {"adam_m": m, "adam_v": v, "adam_t": t, "epoch": report.stopped_epoch}
    return net, report


def write_history_csv(report: TrainReport, path):
    """epoch,train_nll,val_nll rows, full float precision."""
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("epoch,train_nll,val_nll\n")
        for i, (tr, va) in enumerate(zip(report.train_nll, report.val_nll), start=1):
            fh.write(f"{i},{tr:.17g},{va:.17g}\n")
