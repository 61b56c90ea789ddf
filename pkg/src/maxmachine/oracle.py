"""Planted-factor data generation and brute-force posteriors for tiny models.

The enumeration code here deliberately shares nothing with the sampler
kernels: likelihoods are recomputed from dense arrays so the two paths can
check each other.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np

from .binmat import BinaryMatrix
from .errors import ConfigError

MAX_STATE_BITS = 16


@dataclass(frozen=True)
class SynthConfig:
    """Forward-model settings for a planted two-layer dataset.

    ``type_reliability_range`` and ``type_floor`` govern how faithfully
    objects of a type switch on the type's dimensions; they default to the
    bottom-layer values. ``dims_per_type``, when given, plants an exact
    number of dimensions per type (drawn uniformly from the inclusive range)
    instead of Bernoulli(``type_dim_density``) entries.
    """

    N: int = 200
    D: int = 30
    L: int = 4
    T: int = 4
    reliability_range: tuple = (0.93, 0.98)
    noise_floor: float = 0.02
    q_u: float = 0.1
    type_dim_density: float = 0.3
    seed: int = 0
    type_reliability_range: tuple | None = None
    type_floor: float | None = None
    dims_per_type: tuple | None = None
    min_code_size: int = 0

    def __post_init__(self):
        lo, hi = self.reliability_range
        if not (0 <= lo <= hi <= 1):
            raise ConfigError("reliability_range must be an interval inside [0, 1]")
        for name in ("noise_floor", "q_u", "type_dim_density"):
            if not 0 < getattr(self, name) < 1:
                raise ConfigError(f"{name} must lie in (0, 1)")
        if not self.N >= self.T >= 1:
            raise ConfigError("need N >= T >= 1")
        if min(self.N, self.D, self.L) < 0:
            raise ConfigError("sizes must be nonnegative")


@dataclass
class SynthData:
    X: BinaryMatrix
    U: BinaryMatrix
    Z: BinaryMatrix
    V: BinaryMatrix
    reliabilities: np.ndarray  # L planted reliabilities followed by the floor
    type_reliabilities: np.ndarray
    type_of: np.ndarray
    config: SynthConfig
    object_ids: list = field(default_factory=list)
    attribute_ids: list = field(default_factory=list)

    @property
    def type_names(self) -> list:
        return [f"type{t}" for t in range(self.config.T)]

    def dataset(self):
        from .data import TripletDataset

        return TripletDataset.from_matrix(self.X, [self.type_names[t] for t in self.type_of],
                                          self.object_ids, self.attribute_ids)


def _squeeze(p):
    return np.clip(p, 1e-9, 1 - 1e-9)


def max_active(Z, U, rel, floor):
    """Dense ``p(x = 1)``: max reliability over active dimensions and the floor."""
    Z = np.asarray(Z, dtype=bool)
    U = np.asarray(U, dtype=bool)
    act = Z[:, :, None] & U[None, :, :]
    p = np.where(act, np.asarray(rel)[None, :, None], 0.0).max(axis=1, initial=0.0)
    return np.maximum(p, floor)


def generate(cfg: SynthConfig) -> SynthData:
    """Sample V, Z, U, reliabilities and X forward through both layers."""
    rng = np.random.default_rng(cfg.seed)
    N, D, L, T = cfg.N, cfg.D, cfg.L, cfg.T
    if cfg.dims_per_type is None:
        V = rng.random((T, L)) < cfg.type_dim_density
    else:
        lo, hi = cfg.dims_per_type
        V = np.zeros((T, L), dtype=bool)
        for t in range(T):
            k = min(L, int(rng.integers(lo, hi + 1)))
            V[t, rng.choice(L, size=k, replace=False)] = True
    type_of = np.arange(N) % T
    trange = cfg.type_reliability_range or cfg.reliability_range
    tfloor = cfg.type_floor if cfg.type_floor is not None else cfg.noise_floor
    type_rel = _squeeze(rng.uniform(*trange, size=T))
    pz = max_active(np.eye(T, dtype=bool)[type_of], V, type_rel, _squeeze(tfloor))
    Z = rng.random((N, L)) < pz
    U = rng.random((L, D)) < cfg.q_u
    for l in range(L):
        short = cfg.min_code_size - U[l].sum()
        if short > 0:
            U[l, rng.choice(np.flatnonzero(~U[l]), size=short, replace=False)] = True
    rel = _squeeze(rng.uniform(*cfg.reliability_range, size=L))
    floor = float(_squeeze(cfg.noise_floor))
    X = rng.random((N, D)) < max_active(Z, U, rel, floor)
    return SynthData(
        X=BinaryMatrix.from_dense(X), U=BinaryMatrix.from_dense(U), Z=BinaryMatrix.from_dense(Z),
        V=BinaryMatrix.from_dense(V), reliabilities=np.append(rel, floor),
        type_reliabilities=np.append(type_rel, _squeeze(tfloor)), type_of=type_of, config=cfg,
        object_ids=[f"o{n}" for n in range(N)], attribute_ids=[f"a{d}" for d in range(D)])


# enumeration --------------------------------------------------------------


def _dense(m):
    return m.to_dense() if isinstance(m, BinaryMatrix) else np.asarray(m, dtype=np.uint8)


def _observed(mask, shape):
    if mask is None:
        return np.ones(shape, dtype=bool)
    bits = getattr(mask, "bits", mask)
    return ~_dense(bits).astype(bool)


def layer_log_lik(X, Z, U, rel, observed=None) -> float:
    """Naive log-likelihood of one layer from explicit loops."""
    X, Z, U = _dense(X), _dense(Z), _dense(U)
    N, D = X.shape
    L = U.shape[0]
    total = 0.0
    for n in range(N):
        for d in range(D):
            if observed is not None and not observed[n, d]:
                continue
            p = rel[L]
            for l in range(L):
                if Z[n, l] and U[l, d] and rel[l] > p:
                    p = rel[l]
            total += np.log(p) if X[n, d] else np.log(1.0 - p)
    return float(total)


def _bern_log(bits, q):
    bits = np.asarray(bits)
    return float((bits * np.log(q) + (1 - bits) * np.log1p(-q)).sum())


@dataclass
class TinyLayer:
    """Dense state of one layer for the oracle."""

    Z: np.ndarray
    U: np.ndarray
    rel: np.ndarray
    q_u: float = 0.1
    q_z: float = 0.5

    @classmethod
    def of(cls, layer) -> "TinyLayer":
        return cls(layer.Z.to_dense().copy(), layer.U.to_dense().copy(), np.array(layer.reliabilities),
                   layer.priors.q_u, layer.priors.q_z)


def joint_log_prob(X, layers, mask=None) -> float:
    """log p(X, all factors) for a stack of :class:`TinyLayer` (bottom first)."""
    X = _dense(X)
    total = layer_log_lik(X, layers[0].Z, layers[0].U, layers[0].rel, _observed(mask, X.shape))
    for k, lay in enumerate(layers):
        total += _bern_log(lay.U, lay.q_u)
        if k + 1 < len(layers):
            up = layers[k + 1]
            total += layer_log_lik(lay.Z, up.Z, up.U, up.rel)
        else:
            total += _bern_log(lay.Z, lay.q_z)
    return total


def exact_conditional(X, layers, target, mask=None) -> float:
    """``p(bit = 1 | rest)`` for ``target = (layer, 'U'|'Z', i, j)``."""
    k, which, i, j = target
    weights = []
    for v in (0, 1):
        state = [TinyLayer(l.Z.copy(), l.U.copy(), l.rel, l.q_u, l.q_z) for l in layers]
        getattr(state[k], which)[i, j] = v
        weights.append(joint_log_prob(X, state, mask))
    w0, w1 = weights
    return float(1.0 / (1.0 + np.exp(w0 - w1)))


@dataclass
class ExactPosterior:
    z_marginals: np.ndarray
    u_marginals: np.ndarray
    predictive: np.ndarray
    total_weight: float


def exact_posterior(X, L: int, reliabilities, q_u: float = 0.1, q_z: float = 0.5, mask=None,
                    z_prior=None, clamp_z=None, clamp_u=None, Z0=None, U0=None) -> ExactPosterior:
    """Enumerate every unclamped configuration of Z and U with reliabilities fixed.

    ``z_prior`` optionally gives per-entry ``p(z = 1)`` in place of ``q_z``.
    Clamped entries keep their values from ``Z0``/``U0``.
    """
    X = _dense(X).astype(np.int64)
    N, D = X.shape
    rel = np.asarray(reliabilities, dtype=np.float64)
    obs = _observed(mask, X.shape)
    cz = np.zeros((N, L), bool) if clamp_z is None else _dense(clamp_z).astype(bool)
    cu = np.zeros((L, D), bool) if clamp_u is None else _dense(clamp_u).astype(bool)
    Z0 = np.zeros((N, L), np.int64) if Z0 is None else _dense(Z0).astype(np.int64)
    U0 = np.zeros((L, D), np.int64) if U0 is None else _dense(U0).astype(np.int64)
    free = [("Z", n, l) for n in range(N) for l in range(L) if not cz[n, l]]
    free += [("U", l, d) for l in range(L) for d in range(D) if not cu[l, d]]
    if len(free) > MAX_STATE_BITS:
        raise ConfigError(f"{len(free)} free bits exceed the enumeration limit of {MAX_STATE_BITS}")
    pz = np.full((N, L), q_z) if z_prior is None else np.asarray(z_prior, dtype=np.float64)

    configs = np.array(list(itertools.product((0, 1), repeat=len(free))), dtype=np.int64)
    S = len(configs)
    Zs = np.broadcast_to(Z0, (S, N, L)).copy()
    Us = np.broadcast_to(U0, (S, L, D)).copy()
    for k, (which, i, j) in enumerate(free):
        (Zs if which == "Z" else Us)[:, i, j] = configs[:, k]
    act = Zs[:, :, :, None] * Us[:, None, :, :]  # S, N, L, D
    p = np.where(act == 1, rel[:L][None, None, :, None], 0.0).max(axis=2, initial=0.0)
    p = np.maximum(p, rel[L])
    cell = np.where(X[None] == 1, np.log(p), np.log1p(-p)) * obs[None]
    logw = cell.sum(axis=(1, 2))
    logw += (Zs * np.log(pz) + (1 - Zs) * np.log1p(-pz)).sum(axis=(1, 2))
    logw += (Us * np.log(q_u) + (1 - Us) * np.log1p(-q_u)).sum(axis=(1, 2))
    top = logw.max()
    w = np.exp(logw - top)
    total = w.sum()
    w /= total
    return ExactPosterior(
        z_marginals=np.tensordot(w, Zs, axes=1),
        u_marginals=np.tensordot(w, Us, axes=1),
        predictive=np.tensordot(w, p, axes=1),
        total_weight=float(total * np.exp(top)),
    )
