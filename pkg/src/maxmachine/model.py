"""MaxMachine layers: likelihood, winners, predictive and per-dimension stats.

A cell ``(n, d)`` is generated by the most reliable of its active
dimensions ``{l : z[n, l] = u[l, d] = 1}`` plus an always-active clamped
dimension whose reliability is the noise floor. Reliabilities are kept in
probability space; since the logistic function is monotone, taking the max
there is the same as taking it over the logits.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import expit, logit

from . import _kernels
from .binmat import BinaryMatrix, boolean_or_product
from .errors import ConfigError, ShapeError, StateError

CLIP = 1e-6


def clip_reliability(p):
    return np.clip(p, CLIP, 1.0 - CLIP)


@dataclass(frozen=True)
class PriorConfig:
    q_u: float = 0.1
    q_z: float = 0.5
    beta_a: float = 10.0
    beta_b: float = 1.0
    beta_a_clamp: float = 1.0
    beta_b_clamp: float = 1.0

    def __post_init__(self):
        for name in ("q_u", "q_z"):
            v = getattr(self, name)
            if not 0.0 < v < 1.0:
                raise ConfigError(f"{name} must lie in (0, 1), got {v}")
        for name in ("beta_a", "beta_b", "beta_a_clamp", "beta_b_clamp"):
            if not getattr(self, name) > 0:
                raise ConfigError(f"{name} must be positive")

    def beta_params(self, L: int) -> tuple[np.ndarray, np.ndarray]:
        """Prior (a, b) vectors of length ``L + 1``; the last entry is the clamped dimension."""
        a = np.full(L + 1, self.beta_a)
        b = np.full(L + 1, self.beta_b)
        a[L], b[L] = self.beta_a_clamp, self.beta_b_clamp
        return a, b


@dataclass(frozen=True)
class BmfConfig:
    """Single global noise parameter of the Boolean (Or) variant."""

    lambda_global: float = 1.0

    def __post_init__(self):
        if not self.lambda_global >= 0:
            raise ConfigError("lambda_global must be nonnegative")


def map_reliability(a, b, c, t):
    """Mode of ``Beta(a + c, b + t - c)``, clipped away from 0 and 1.

    Where the mode is undefined (``a + b + t <= 2``) or ``a + c < 1``, the
    posterior mean is used instead.
    """
    a, b, c, t = np.broadcast_arrays(*(np.asarray(v, dtype=np.float64) for v in (a, b, c, t)))
    alpha = a + c
    total = a + b + t
    use_mode = (alpha >= 1) & (total > 2)
    with np.errstate(divide="ignore", invalid="ignore"):
        mode = (alpha - 1) / (total - 2)
        mean = alpha / total
    return clip_reliability(np.where(use_mode, mode, mean))


@dataclass
class FactorLayer:
    """One MaxMachine layer.

    ``reliabilities`` has ``L + 1`` entries; the last is the clamped
    dimension. The clamped all-ones row of ``U`` and column of ``Z`` are
    implicit and never stored.
    """

    U: BinaryMatrix
    Z: BinaryMatrix
    reliabilities: np.ndarray
    clamp_u: BinaryMatrix = None
    clamp_z: BinaryMatrix = None
    priors: PriorConfig = field(default_factory=PriorConfig)

    def __post_init__(self):
        if self.Z.cols != self.U.rows:
            raise ShapeError(f"Z is {self.Z.shape} but U is {self.U.shape}")
        self.reliabilities = np.asarray(self.reliabilities, dtype=np.float64).copy()
        if self.reliabilities.shape != (self.L + 1,):
            raise ShapeError(f"expected {self.L + 1} reliabilities, got {self.reliabilities.shape}")
        if not ((self.reliabilities > 0) & (self.reliabilities < 1)).all():
            raise ConfigError("reliabilities must lie strictly inside (0, 1)")
        if self.clamp_u is None:
            self.clamp_u = BinaryMatrix.zeros(*self.U.shape)
        if self.clamp_z is None:
            self.clamp_z = BinaryMatrix.zeros(*self.Z.shape)
        if self.clamp_u.shape != self.U.shape or self.clamp_z.shape != self.Z.shape:
            raise ShapeError("clamp masks must match their factor shapes")

    @classmethod
    def random(cls, N: int, D: int, L: int, priors: PriorConfig | None = None, rng=None, density=0.5):
        """Factors drawn iid Bernoulli(``density``), reliabilities at their prior modes."""
        priors = priors or PriorConfig()
        rng = np.random.default_rng(rng)
        Z = BinaryMatrix.from_dense(rng.random((N, L)) < density)
        U = BinaryMatrix.from_dense(rng.random((L, D)) < density)
        a, b = priors.beta_params(L)
        rel = map_reliability(a, b, 0, 0)
        return cls(U, Z, rel, priors=priors)

    @property
    def N(self) -> int:
        return self.Z.rows

    @property
    def D(self) -> int:
        return self.U.cols

    @property
    def L(self) -> int:
        return self.U.rows

    @property
    def floor(self) -> float:
        return float(self.reliabilities[-1])

    def copy(self) -> "FactorLayer":
        return FactorLayer(self.U.copy(), self.Z.copy(), self.reliabilities.copy(),
                           self.clamp_u.copy(), self.clamp_z.copy(), self.priors)

    def _check_cell(self, n: int, d: int) -> None:
        if not (0 <= n < self.N and 0 <= d < self.D):
            raise IndexError(f"cell ({n}, {d}) out of range for {self.N}x{self.D}")


@dataclass
class Sample:
    """Snapshot of one layer's state."""

    U: BinaryMatrix
    Z: BinaryMatrix
    reliabilities: np.ndarray

    @classmethod
    def of(cls, layer: FactorLayer) -> "Sample":
        return cls(layer.U.copy(), layer.Z.copy(), layer.reliabilities.copy())

    @property
    def L(self) -> int:
        return self.U.rows


@dataclass
class DimensionStats:
    nu: np.ndarray
    lambda_hat: np.ndarray
    cardinality: np.ndarray


# per-cell queries ---------------------------------------------------------


def active_set(layer: FactorLayer, n: int, d: int) -> set[int]:
    layer._check_cell(n, d)
    z = layer.Z.row(n)
    return {l for l in range(layer.L) if z[l] and layer.U.get(l, d)} | {layer.L}


def winner(layer: FactorLayer, n: int, d: int) -> int:
    """Most reliable active dimension; lowest index on ties, clamped last."""
    rel = layer.reliabilities
    return min(active_set(layer, n, d), key=lambda l: (-rel[l], l))


def point_prob(layer: FactorLayer, n: int, d: int, x: int = 1) -> float:
    """Probability of observing ``x`` at cell ``(n, d)``."""
    p = float(layer.reliabilities[winner(layer, n, d)])
    return p if x else 1.0 - p


def or_point_prob(cfg: BmfConfig, Z: BinaryMatrix, U: BinaryMatrix, n: int, d: int, x: int) -> float:
    """Boolean-factorization likelihood ``sigmoid(lambda * (2x-1) * (2a-1))``."""
    if not (0 <= n < Z.rows and 0 <= d < U.cols):
        raise IndexError(f"cell ({n}, {d}) out of range")
    a = any(Z.get(n, l) and U.get(l, d) for l in range(Z.cols))
    return float(expit(cfg.lambda_global * (2 * x - 1) * (2 * int(a) - 1)))


# whole-matrix queries -----------------------------------------------------


def observed_words(mask, N: int, D: int) -> np.ndarray:
    """Packed words with a one for every cell that is *not* held out."""
    if mask is None:
        return BinaryMatrix.ones(N, D).words
    bits = getattr(mask, "bits", mask)
    if not isinstance(bits, BinaryMatrix):
        raise TypeError("mask must be a HoldoutMask, BinaryMatrix or None")
    if bits.shape != (N, D):
        raise ShapeError(f"mask is {bits.shape}, data is {(N, D)}")
    return bits.invert().words


def _check_data(layer_or_sample, X: BinaryMatrix) -> None:
    if X.shape != (layer_or_sample.Z.rows, layer_or_sample.U.cols):
        raise ShapeError(f"data is {X.shape}, model is {(layer_or_sample.Z.rows, layer_or_sample.U.cols)}")


def cell_winners(layer: FactorLayer | Sample) -> np.ndarray:
    """``(N, D)`` array of winning dimension indices."""
    return _kernels.cell_winners(layer.Z.words, layer.U.words, layer.reliabilities,
                                 layer.Z.rows, layer.U.cols, layer.U.rows)


def cell_probabilities(layer: FactorLayer | Sample) -> np.ndarray:
    """``(N, D)`` array of ``p(x = 1)``."""
    return layer.reliabilities[cell_winners(layer)]


def counts_log_likelihood(t, c, rel) -> float:
    """Log-likelihood from per-dimension won cells ``t`` and won ones ``c``.

    Terms are added with ``math.fsum`` so the result does not depend on the
    order of the dimensions.
    """
    rel = np.asarray(rel, dtype=np.float64)
    won = np.asarray(t) > 0
    c = np.asarray(c)[won]
    return math.fsum(np.concatenate([c * np.log(rel[won]), (np.asarray(t)[won] - c) * np.log1p(-rel[won])]))


def log_likelihood(layer: FactorLayer | Sample, X: BinaryMatrix, mask=None) -> float:
    """Log-likelihood of ``X`` summed over the cells not held out by ``mask``."""
    _check_data(layer, X)
    t, c = _kernels.winner_counts(layer.Z.words, layer.U.words, X.words,
                                  observed_words(mask, X.rows, X.cols),
                                  layer.reliabilities, X.rows, X.cols, layer.U.rows)
    return counts_log_likelihood(t, c, layer.reliabilities)


def noiseless_reconstruction(layer: FactorLayer) -> BinaryMatrix:
    return boolean_or_product(layer.Z, layer.U)


def _samples(trace) -> list:
    samples = getattr(trace, "samples", trace)
    if not samples:
        raise StateError("posterior trace holds no samples")
    return samples


def posterior_predictive(trace, cells=None) -> np.ndarray:
    """Monte Carlo mean of ``p(x = 1)`` over the retained samples.

    With ``cells=None`` the full ``(N, D)`` matrix is returned, otherwise a
    vector aligned with the given ``(n, d)`` pairs.
    """
    samples = _samples(trace)
    if cells is not None:
        cells = np.asarray(cells, dtype=np.int64).reshape(-1, 2)
    total = None
    for s in samples:
        p = cell_probabilities(s)
        if cells is not None:
            p = p[cells[:, 0], cells[:, 1]]
        total = p if total is None else total + p
    return total / len(samples)


def dimension_stats(trace, X: BinaryMatrix, mask=None) -> DimensionStats:
    """Share of observed ones won by each dimension, mean reliabilities and code sizes."""
    samples = _samples(trace)
    L = samples[0].L
    nu = np.zeros(L + 1)
    lam = np.zeros(L + 1)
    card = np.zeros(L + 1)
    obs = observed_words(mask, X.rows, X.cols)
    ones = int(np.bitwise_count(X.words & obs).sum())
    for s in samples:
        _check_data(s, X)
        _, c = _kernels.winner_counts(s.Z.words, s.U.words, X.words, obs,
                                         s.reliabilities, X.rows, X.cols, L)
        if ones:
            nu += c / ones
        lam += s.reliabilities
        card[:L] += s.U.row_counts()
        card[L] += X.cols
    k = len(samples)
    return DimensionStats(nu / k, lam / k, card / k)


__all__ = [
    "BmfConfig", "DimensionStats", "FactorLayer", "PriorConfig", "Sample",
    "active_set", "cell_probabilities", "cell_winners", "clip_reliability",
    "counts_log_likelihood", "dimension_stats", "expit", "log_likelihood", "logit", "map_reliability",
    "or_point_prob", "point_prob", "posterior_predictive", "winner",
]
