"""Gibbs sampling for MaxMachine layers.

One sweep visits every unclamped ``z[n, l]`` (row-major) and then every
unclamped ``u[l, d]`` (row-major), drawing each from its exact full
conditional. After each sweep the reliabilities are set to their MAP value
given the cells each dimension currently wins.

Only cells a dimension would *win* enter its conditional: if ``p_l`` does
not exceed the best reliability among the other active dimensions, flipping
the bit leaves that cell's likelihood unchanged. The kernels keep the top
two active dimensions per cell so this test is O(1).

Uniform draws for a sweep are taken up front (all of Z, then all of U) so
the row-parallel kernels consume exactly the same stream as the sequential
ones.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.special import logit

from . import _kernels
from .binmat import BinaryMatrix
from .errors import ConfigError, ContractError
from .model import FactorLayer, Sample, counts_log_likelihood, map_reliability, observed_words

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class GibbsConfig:
    max_sweeps: int = 500
    burn_in: int | None = None  # None: stop burn-in once the log-likelihood settles
    n_samples: int = 20
    seed: int = 0
    convergence_eps: float = 1e-4
    convergence_window: int = 10
    parallel: bool = False
    sample_stride: int = 1
    update_reliabilities: bool = True

    def __post_init__(self):
        if self.n_samples < 1:
            raise ConfigError("n_samples must be at least 1")
        if self.convergence_window < 2:
            raise ConfigError("convergence_window must be at least 2")
        if self.sample_stride < 1:
            raise ConfigError("sample_stride must be at least 1")
        if self.max_sweeps < 0:
            raise ConfigError("max_sweeps must be nonnegative")
        if self.burn_in is not None and self.burn_in < 0:
            raise ConfigError("burn_in must be nonnegative")


@dataclass
class PosteriorTrace:
    """Retained samples and the per-sweep training log-likelihood.

    ``samples`` hold the bottom layer; ``upper_samples`` the layer above it
    when the model is hierarchical. A run that never reached convergence
    keeps its final state as the only sample.
    """

    samples: list = field(default_factory=list)
    train_ll_history: list = field(default_factory=list)
    sweep_count: int = 0
    converged: bool = False
    upper_samples: list = field(default_factory=list)


# conditionals -------------------------------------------------------------


def _loglik_delta(rel, l, m, x, prune):
    q0 = m
    q1 = np.maximum(m, rel[l])
    with np.errstate(divide="ignore"):
        term = np.where(x == 1, np.log(q1) - np.log(q0), np.log1p(-q1) - np.log1p(-q0))
    if prune:
        term = np.where(rel[l] > m, term, 0.0)
    return float(term.sum())


def _max_excluding(rel, active, l):
    """Per-column max reliability over active rows other than ``l``, floor included."""
    active = active.copy()
    active[l] = 0
    L = active.shape[0]
    m = np.full(active.shape[1], rel[L])
    if L:
        m = np.maximum(m, (rel[:L, None] * active).max(axis=0))
    return m


def conditional_log_odds_z(layer: FactorLayer, X: BinaryMatrix, mask, n: int, l: int,
                           prior_logit: float | None = None, prune: bool = True) -> float:
    """Log-odds of ``z[n, l] = 1`` given everything else."""
    if layer.clamp_z.get(n, l):
        raise ContractError(f"z[{n}, {l}] is clamped")
    if prior_logit is None:
        prior_logit = float(logit(layer.priors.q_z))
    obs = BinaryMatrix(X.rows, X.cols, observed_words(mask, X.rows, X.cols)).row(n).astype(bool)
    U = layer.U.to_dense()
    cols = (U[l] == 1) & obs
    active = layer.Z.row(n)[:, None] & U
    m = _max_excluding(layer.reliabilities, active, l)[cols]
    return prior_logit + _loglik_delta(layer.reliabilities, l, m, X.row(n)[cols], prune)


def conditional_log_odds_u(layer: FactorLayer, X: BinaryMatrix, mask, l: int, d: int,
                           prior_logit: float | None = None, prune: bool = True) -> float:
    """Log-odds of ``u[l, d] = 1`` given everything else."""
    if layer.clamp_u.get(l, d):
        raise ContractError(f"u[{l}, {d}] is clamped")
    if prior_logit is None:
        prior_logit = float(logit(layer.priors.q_u))
    obs = BinaryMatrix(X.rows, X.cols, observed_words(mask, X.rows, X.cols)).to_dense()[:, d].astype(bool)
    Z = layer.Z.to_dense()
    rows = (Z[:, l] == 1) & obs
    active = Z.T & layer.U.to_dense()[:, d][:, None]
    m = _max_excluding(layer.reliabilities, active, l)[rows]
    return prior_logit + _loglik_delta(layer.reliabilities, l, m, X.to_dense()[rows, d], prune)


# sweeps -------------------------------------------------------------------


def _as_prior(prior, shape, default):
    if prior is None:
        prior = default
    prior = np.asarray(prior, dtype=np.float64)
    if prior.ndim == 0:
        return np.full(shape, float(prior))
    if prior.shape != shape:
        raise ConfigError(f"prior logits have shape {prior.shape}, expected {shape}")
    return np.ascontiguousarray(prior)


def draw_thresholds(rng, N, L, D, greedy=False):
    """Logit-scale acceptance thresholds: a bit is set iff its log-odds exceed them."""
    if greedy:
        return np.zeros((N, L)), np.zeros((L, D))
    with np.errstate(divide="ignore"):
        tz = logit(rng.random((N, L)))
        tu = logit(rng.random((L, D)))
    return tz, tu


def sweep(layer: FactorLayer, X: BinaryMatrix, mask=None, rng=None, prior_logit_z=None,
          prior_logit_u=None, greedy: bool = False, parallel: bool = False,
          thresholds=None) -> FactorLayer:
    """Resample every unclamped entry of Z and then U once, in place.

    ``greedy`` sets each bit to its more probable value instead of sampling.
    """
    N, D, L = layer.N, layer.D, layer.L
    if X.shape != (N, D):
        raise ConfigError(f"data is {X.shape}, layer expects {(N, D)}")
    if thresholds is None:
        thresholds = draw_thresholds(np.random.default_rng(rng), N, L, D, greedy)
    tz, tu = thresholds
    pz = _as_prior(prior_logit_z, (N, L), logit(layer.priors.q_z))
    pu = _as_prior(prior_logit_u, (L, D), logit(layer.priors.q_u))
    obs = observed_words(mask, N, D)
    rel = layer.reliabilities
    lr, l1r = np.log(rel), np.log1p(-rel)
    if L == 0:
        return layer
    _kernels.z_sweep(layer.Z.words, layer.U.words, X.words, obs, layer.clamp_z.words,
                     rel, lr, l1r, pz, tz, N, D, L, parallel=parallel)
    _kernels.u_sweep(layer.Z.words, layer.U.words, X.words, obs, layer.clamp_u.words,
                     rel, lr, l1r, pu, tu, N, D, L, parallel=parallel)
    return layer


def winner_counts(layer: FactorLayer, X: BinaryMatrix, mask=None):
    """Cells won ``t`` and ones won ``c`` per dimension, plus the log-likelihood."""
    t, c = _kernels.winner_counts(layer.Z.words, layer.U.words, X.words,
                                  observed_words(mask, X.rows, X.cols),
                                  layer.reliabilities, X.rows, X.cols, layer.L)
    return t, c, counts_log_likelihood(t, c, layer.reliabilities)


def update_reliabilities_map(layer: FactorLayer, X: BinaryMatrix, mask=None) -> np.ndarray:
    """Set every reliability to its Beta-posterior mode, winners held fixed.

    Winners are taken under the current reliabilities and all dimensions are
    updated together.
    """
    t, c, _ = winner_counts(layer, X, mask)
    a, b = layer.priors.beta_params(layer.L)
    layer.reliabilities = map_reliability(a, b, c, t)
    return layer.reliabilities


# initialization -----------------------------------------------------------


def association_init(X: BinaryMatrix, L: int, mask=None, threshold: float = 0.8):
    """Greedy cover by attribute-association candidates.

    Each attribute ``i`` proposes the code ``{j : P(x_j = 1 | x_i = 1) >= threshold}``.
    ``L`` times, the candidate whose per-row coverage (uncovered ones minus
    zeros) has the largest positive total is taken as the next code, and the
    rows that gain from it are assigned to it. Returns dense ``U`` and ``Z``.
    """
    N, D = X.shape
    obs = BinaryMatrix(N, D, observed_words(mask, N, D)).to_dense().astype(np.float32)
    ones = X.to_dense().astype(np.float32) * obs
    zeros = obs - ones
    freq = ones.sum(axis=0)
    conf = (ones.T @ ones) / np.maximum(freq[:, None], 1.0)
    cand = np.unique((conf >= threshold).astype(np.float32), axis=0)
    cand = cand[cand.sum(axis=1) > 0]
    U = np.zeros((L, D), dtype=np.uint8)
    Z = np.zeros((N, L), dtype=np.uint8)
    if not len(cand):
        return U, Z
    zero_hits = zeros @ cand.T
    uncovered = ones.copy()
    for l in range(L):
        gain = uncovered @ cand.T - zero_hits
        total = np.maximum(gain, 0).sum(axis=0)
        k = int(np.argmax(total))
        if total[k] <= 0:
            break
        U[l] = cand[k]
        Z[:, l] = gain[:, k] > 0
        uncovered[np.ix_(Z[:, l] == 1, U[l] == 1)] = 0
    return U, Z


def initialize(layer: FactorLayer, X: BinaryMatrix, mask=None, method: str = "association",
               rng=None, threshold: float = 0.8) -> FactorLayer:
    """Set the unclamped entries of ``layer`` and fit its reliabilities to them.

    ``method="association"`` uses :func:`association_init`; ``"random"``
    draws iid Bernoulli(0.5) entries. Reliabilities are then set by one MAP
    update.
    """
    if method == "association":
        U, Z = association_init(X, layer.L, mask, threshold)
    elif method == "random":
        rng = np.random.default_rng(rng)
        Z = rng.random((layer.N, layer.L)) < 0.5
        U = rng.random((layer.L, layer.D)) < 0.5
    else:
        raise ConfigError(f"unknown init method {method!r}")
    for name, new, clamp in (("U", U, layer.clamp_u), ("Z", Z, layer.clamp_z)):
        cur = getattr(layer, name)
        words = BinaryMatrix.from_dense(new).words
        cur.words[:] = (words & ~clamp.words) | (cur.words & clamp.words)
    update_reliabilities_map(layer, X, mask)
    return layer


# driver -------------------------------------------------------------------


def has_converged(history, eps: float, window: int) -> bool:
    """True when the mean log-likelihood of the last ``window`` sweeps differs
    from that of the ``window`` sweeps before by a relative amount below ``eps``.

    Comparing window means rather than consecutive sweeps keeps the test from
    being dominated by ordinary Gibbs fluctuations.
    """
    if len(history) < 2 * window:
        return False
    h = np.asarray(history[-2 * window:])
    prev, last = h[:window].mean(), h[window:].mean()
    return bool(abs(last - prev) <= eps * max(abs(prev), 1e-300))


def drive(step: Callable[[np.random.Generator], float], snapshot: Callable[[], object],
          config: GibbsConfig, rng: np.random.Generator) -> tuple[PosteriorTrace, list]:
    """Burn in, then collect snapshots. ``step`` performs one sweep and returns the log-likelihood."""
    trace = PosteriorTrace()
    snaps = []
    history = trace.train_ll_history
    limit = config.max_sweeps if config.burn_in is None else min(config.burn_in, config.max_sweeps)
    while trace.sweep_count < limit:
        history.append(step(rng))
        trace.sweep_count += 1
        if config.burn_in is None and has_converged(
                history, config.convergence_eps, config.convergence_window):
            break
    trace.converged = has_converged(history, config.convergence_eps, config.convergence_window)
    if trace.converged or config.burn_in is not None:
        k = 0
        while len(snaps) < config.n_samples and trace.sweep_count < config.max_sweeps:
            history.append(step(rng))
            trace.sweep_count += 1
            k += 1
            if k % config.sample_stride == 0:
                snaps.append(snapshot())
    if not snaps:
        log.warning("no post-burn-in samples collected; keeping the final state")
        snaps.append(snapshot())
    return trace, snaps


def run(layer: FactorLayer, X: BinaryMatrix, mask=None, config: GibbsConfig | None = None,
        prior_logit_z=None) -> PosteriorTrace:
    """Run the Gibbs chain on ``layer`` (mutated in place) and return its trace."""
    config = config or GibbsConfig()
    rng = np.random.default_rng(config.seed)

    def step(rng):
        sweep(layer, X, mask, rng, prior_logit_z=prior_logit_z, parallel=config.parallel)
        if config.update_reliabilities:
            update_reliabilities_map(layer, X, mask)
        return float(winner_counts(layer, X, mask)[2])

    trace, snaps = drive(step, lambda: Sample.of(layer), config, rng)
    trace.samples = snaps
    return trace
