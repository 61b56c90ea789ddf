"""Stacked MaxMachine layers and clamping.

Layer ``k + 1`` treats the assignment matrix ``Z`` of layer ``k`` as its
data, so its point probabilities act as the prior on that ``Z``. For side
information such as product types, the object-side factor of the upper
layer is fixed to a one-hot encoding of the type and never resampled.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass

import numpy as np
from scipy.special import logit

from .binmat import BinaryMatrix
from .errors import ContractError, ShapeError
from .model import FactorLayer, PriorConfig, Sample, cell_probabilities, map_reliability, point_prob
from .sampler import (GibbsConfig, PosteriorTrace, draw_thresholds, drive, initialize, sweep,
                      update_reliabilities_map, winner_counts)

UNKNOWN_TYPE = "<unknown>"


@dataclass
class TypeClamp:
    """One type label per object, with its one-hot ``N x T`` encoding."""

    type_of: np.ndarray
    names: list

    def __post_init__(self):
        self.type_of = np.asarray(self.type_of, dtype=np.int64)
        if len(self.names) < 1:
            raise ShapeError("at least one type is required")
        if len(self.type_of) and (self.type_of.min() < 0 or self.type_of.max() >= len(self.names)):
            raise ShapeError("type index out of range")

    @classmethod
    def from_labels(cls, labels) -> "TypeClamp":
        """Types numbered in order of first appearance; missing labels become ``<unknown>``."""
        names, index, codes = [], {}, []
        for lab in labels:
            lab = UNKNOWN_TYPE if lab is None or lab == "" else str(lab)
            if lab not in index:
                index[lab] = len(names)
                names.append(lab)
            codes.append(index[lab])
        return cls(np.array(codes, dtype=np.int64), names)

    @property
    def T(self) -> int:
        return len(self.names)

    @property
    def one_hot(self) -> BinaryMatrix:
        cells = np.column_stack([np.arange(len(self.type_of)), self.type_of])
        return BinaryMatrix.from_cells(len(self.type_of), self.T, cells)


class HierarchicalModel:
    """A stack of layers where ``layers[k + 1]`` models ``layers[k].Z``.

    With two layers and a :class:`TypeClamp`, ``layers[1].Z`` is the one-hot
    type matrix (fully clamped) and ``layers[1].U`` is the ``T x L`` matrix
    ``V`` of type-to-dimension codes.
    """

    def __init__(self, layers: list[FactorLayer], types: TypeClamp | None = None):
        for lower, upper in zip(layers, layers[1:]):
            if upper.N != lower.N or upper.D != lower.L:
                raise ShapeError(
                    f"layer of shape {upper.N}x{upper.D} cannot model a Z of shape {lower.N}x{lower.L}")
        self.layers = layers
        self.types = types

    @classmethod
    def with_types(cls, N: int, D: int, L: int, types: TypeClamp, priors: PriorConfig | None = None,
                   upper_priors: PriorConfig | None = None, rng=None) -> "HierarchicalModel":
        rng = np.random.default_rng(rng)
        priors = priors or PriorConfig()
        upper_priors = upper_priors or priors
        if len(types.type_of) != N:
            raise ShapeError(f"{len(types.type_of)} type labels for {N} objects")
        lower = FactorLayer.random(N, D, L, priors, rng)
        T = types.T
        V = BinaryMatrix.from_dense(rng.random((T, L)) < 0.5)
        a, b = upper_priors.beta_params(T)
        one_hot = types.one_hot
        upper = FactorLayer(V, one_hot, map_reliability(a, b, 0, 0),
                            clamp_z=BinaryMatrix.ones(N, T), priors=upper_priors)
        return cls([lower, upper], types)

    @property
    def layer1(self) -> FactorLayer:
        return self.layers[0]

    @property
    def layer2(self) -> FactorLayer | None:
        return self.layers[1] if len(self.layers) > 1 else None

    def copy(self) -> "HierarchicalModel":
        return HierarchicalModel([l.copy() for l in self.layers], self.types)

    def data_of(self, k: int, X: BinaryMatrix) -> BinaryMatrix:
        return X if k == 0 else self.layers[k - 1].Z

    def z_prior_logits(self, k: int = 0) -> np.ndarray:
        """Prior log-odds for every entry of ``layers[k].Z``."""
        layer = self.layers[k]
        if k + 1 < len(self.layers):
            return logit(cell_probabilities(self.layers[k + 1]))
        return np.full((layer.N, layer.L), logit(layer.priors.q_z))


def prior_logit_from_above(model: HierarchicalModel, n: int, l: int) -> float:
    """Log-odds prior on ``z[n, l]`` of the bottom layer."""
    if model.layer2 is None:
        return float(logit(model.layer1.priors.q_z))
    return float(logit(point_prob(model.layer2, n, l)))


def joint_sweep(model: HierarchicalModel, X: BinaryMatrix, mask=None, rng=None,
                parallel: bool = False, update_reliabilities: bool = True) -> HierarchicalModel:
    """Sweep every layer bottom-up, then MAP-update all reliabilities.

    Returns the model, mutated in place.
    """
    rng = np.random.default_rng(rng)
    for k, layer in enumerate(model.layers):
        thresholds = draw_thresholds(rng, layer.N, layer.L, layer.D)
        sweep(layer, model.data_of(k, X), mask if k == 0 else None,
              prior_logit_z=model.z_prior_logits(k), parallel=parallel, thresholds=thresholds)
    if update_reliabilities:
        for k, layer in enumerate(model.layers):
            update_reliabilities_map(layer, model.data_of(k, X), mask if k == 0 else None)
    return model


def joint_log_likelihood(model: HierarchicalModel, X: BinaryMatrix, mask=None) -> float:
    """Data log-likelihood plus each upper layer's log-likelihood of the ``Z`` below it."""
    total = 0.0
    for k, layer in enumerate(model.layers):
        total += float(winner_counts(layer, model.data_of(k, X), mask if k == 0 else None)[2])
    return total


def run(model: HierarchicalModel, X: BinaryMatrix, mask=None,
        config: GibbsConfig | None = None) -> PosteriorTrace:
    """Gibbs chain over all layers; samples of the bottom and next layer are kept in step."""
    config = config or GibbsConfig()
    rng = np.random.default_rng(config.seed)

    def step(rng):
        joint_sweep(model, X, mask, rng, config.parallel, config.update_reliabilities)
        return joint_log_likelihood(model, X, mask)

    def snapshot():
        return tuple(Sample.of(layer) for layer in model.layers)

    trace, snaps = drive(step, snapshot, config, rng)
    trace.samples = [s[0] for s in snaps]
    if model.layer2 is not None:
        trace.upper_samples = [s[1] for s in snaps]
    return trace


def initialize_model(model: HierarchicalModel, X: BinaryMatrix, mask=None,
                     method: str = "association", rng=None, threshold: float = 0.8) -> HierarchicalModel:
    """Initialize every layer bottom-up from the data below it.

    An upper layer whose ``Z`` is fully clamped (the type layer) starts with
    ``U[t, l] = 1`` when most objects in group ``t`` have ``z[n, l] = 1``.
    """
    rng = np.random.default_rng(rng)
    for k, layer in enumerate(model.layers):
        data = model.data_of(k, X)
        if k > 0 and layer.clamp_z.count() == layer.N * layer.L:
            groups = layer.Z.to_dense().astype(np.float64)
            share = (groups.T @ data.to_dense()) / np.maximum(groups.sum(axis=0), 1)[:, None]
            fresh = BinaryMatrix.from_dense(share > 0.5).words
            layer.U.words[:] = (fresh & ~layer.clamp_u.words) | (layer.U.words & layer.clamp_u.words)
            update_reliabilities_map(layer, data)
        else:
            initialize(layer, data, mask if k == 0 else None, method, rng, threshold)
    return model


def fit(X: BinaryMatrix, L: int, types: TypeClamp | None = None, mask=None,
        priors: PriorConfig | None = None, upper_priors: PriorConfig | None = None,
        config: GibbsConfig | None = None, init: str = "association", restarts: int = 1,
        init_threshold: float = 0.8, prepare=None) -> tuple[HierarchicalModel, PosteriorTrace]:
    """Build, initialize and sample a model; keep the best of ``restarts`` chains.

    Chains are ranked by their mean log-likelihood over the sampling phase.
    Restart ``r`` uses seed ``config.seed + r``. ``prepare(model)`` runs
    after construction and before initialization, e.g. to clamp entries.
    """
    config = config or GibbsConfig()
    best = None
    for r in range(max(1, restarts)):
        seed = config.seed + r
        rng = np.random.default_rng(seed)
        if types is not None:
            model = HierarchicalModel.with_types(X.rows, X.cols, L, types, priors, upper_priors, rng)
        else:
            model = HierarchicalModel([FactorLayer.random(X.rows, X.cols, L, priors, rng)])
        if prepare is not None:
            prepare(model)
        initialize_model(model, X, mask, init, rng, init_threshold)
        trace = run(model, X, mask, dataclasses.replace(config, seed=seed))
        tail = trace.train_ll_history[-len(trace.samples):] or [-np.inf]
        score = float(np.mean(tail))
        if best is None or score > best[0]:
            best = (score, model, trace)
    return best[1], best[2]


# clamping -----------------------------------------------------------------


def _target(model: HierarchicalModel, layer: int, matrix: str):
    if matrix not in ("U", "Z"):
        raise ValueError("matrix must be 'U' or 'Z'")
    lay = model.layers[layer]
    return lay, (lay.U, lay.clamp_u) if matrix == "U" else (lay.Z, lay.clamp_z)


def clamp(model: HierarchicalModel, layer: int, matrix: str, entries, values) -> HierarchicalModel:
    """Fix ``entries`` of ``layers[layer].<matrix>`` to ``values``; sweeps skip them."""
    _, (target, mask) = _target(model, layer, matrix)
    entries = np.asarray(entries, dtype=np.int64).reshape(-1, 2)
    values = np.broadcast_to(np.asarray(values), (len(entries),))
    for (i, j), v in zip(entries, values):
        if layer > 0 and matrix == "Z" and model.types is not None and target.get(i, j) != int(v):
            raise ContractError("the one-hot type encoding cannot be changed")
        target.set(int(i), int(j), int(v))
        mask.set(int(i), int(j), 1)
    return model


def unclamp(model: HierarchicalModel, layer: int, matrix: str, entries) -> HierarchicalModel:
    if layer > 0 and matrix == "Z" and model.types is not None:
        raise ContractError("the one-hot type encoding is permanently clamped")
    _, (_, mask) = _target(model, layer, matrix)
    for i, j in np.asarray(entries, dtype=np.int64).reshape(-1, 2):
        mask.set(int(i), int(j), 0)
    return model
