"""Holdout masks, ROC-AUC, and model-versus-baseline reports."""

from __future__ import annotations

import contextlib
import csv
import math
import sys
from dataclasses import dataclass, field

import numpy as np
from scipy.stats import rankdata

from .binmat import BinaryMatrix
from .errors import ConfigError, ShapeError, UndefinedMetricError
from .model import posterior_predictive

NA = "NA"
REPORT_HEADER = ("cluster", "auc_model", "auc_baseline", "delta", "n_cells")
APPLICABILITY_HEADER = ("type", "mean_p", "mean_p_absent", "n_products")


@dataclass
class HoldoutMask:
    """Cells hidden from training, as sorted ``(n, d)`` pairs."""

    cells: np.ndarray
    shape: tuple
    fraction: float = float("nan")
    seed: int | None = None
    _bits: BinaryMatrix | None = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        N, D = self.shape
        cells = np.asarray(self.cells, dtype=np.int64).reshape(-1, 2)
        if len(cells) and (cells.min() < 0 or cells[:, 0].max() >= N or cells[:, 1].max() >= D):
            raise ShapeError("holdout cell out of range")
        flat = np.unique(cells[:, 0] * D + cells[:, 1])
        if len(flat) != len(cells):
            raise ConfigError("holdout cells must be unique")
        self.cells = np.column_stack([flat // D, flat % D]) if D else cells
        self.shape = (int(N), int(D))

    @classmethod
    def from_cells(cls, cells, shape) -> "HoldoutMask":
        return cls(cells, tuple(shape))

    @property
    def bits(self) -> BinaryMatrix:
        if self._bits is None:
            self._bits = BinaryMatrix.from_cells(*self.shape, self.cells)
        return self._bits

    def __len__(self) -> int:
        return len(self.cells)

    def labels(self, X: BinaryMatrix) -> np.ndarray:
        """Original 0/1 values of the held-out cells."""
        if X.shape != self.shape:
            raise ShapeError(f"mask is {self.shape}, data is {X.shape}")
        return X.to_dense()[self.cells[:, 0], self.cells[:, 1]].astype(np.int64)


def make_holdout(N: int, D: int, fraction: float, seed: int = 0) -> HoldoutMask:
    """Uniform sample of ``round(fraction * N * D)`` distinct cells."""
    if not 0 < fraction < 1:
        raise ConfigError(f"holdout fraction must lie in (0, 1), got {fraction}")
    k = int(round(fraction * N * D))
    rng = np.random.default_rng(seed)
    flat = np.sort(rng.choice(N * D, size=k, replace=False)) if k else np.empty(0, np.int64)
    cells = np.column_stack([flat // max(D, 1), flat % max(D, 1)])
    return HoldoutMask(cells, (N, D), float(fraction), seed)


def roc_auc(scores, labels) -> float:
    """Area under the ROC curve as a Mann-Whitney statistic; ties count one half."""
    scores = np.asarray(scores, dtype=np.float64).ravel()
    labels = np.asarray(labels).ravel()
    if scores.shape != labels.shape:
        raise ShapeError("scores and labels differ in length")
    if not np.isin(labels, (0, 1)).all():
        raise ValueError("labels must be 0 or 1")
    pos = labels == 1
    P = int(pos.sum())
    Q = len(labels) - P
    if P == 0 or Q == 0:
        raise UndefinedMetricError(f"AUC needs both classes, got {P} positives and {Q} negatives")
    ranks = rankdata(scores)
    return float((ranks[pos].sum() - P * (P + 1) / 2) / (P * Q))


@dataclass
class ClusterRow:
    cluster: str
    auc_model: float
    auc_baseline: float
    n_cells: int

    @property
    def delta(self) -> float:
        return self.auc_model - self.auc_baseline

    @property
    def skipped(self) -> bool:
        return math.isnan(self.auc_model)


@dataclass
class EvalReport:
    auc_model: float
    auc_baseline: float
    n_test_cells: int
    rows: list = field(default_factory=list)

    @property
    def delta(self) -> float:
        return self.auc_model - self.auc_baseline

    @property
    def skipped(self) -> list:
        return [r.cluster for r in self.rows if r.skipped]

    def all_rows(self) -> list:
        """The overall row (cluster ``all``) followed by the cluster rows."""
        return [ClusterRow("all", self.auc_model, self.auc_baseline, self.n_test_cells)] + self.rows


def _aucs(p_model, p_base, y):
    try:
        return roc_auc(p_model, y), roc_auc(p_base, y)
    except UndefinedMetricError:
        return float("nan"), float("nan")


def evaluate(trace, table, X: BinaryMatrix, mask: HoldoutMask, clusters=None) -> EvalReport:
    """Score the held-out cells with the posterior predictive and the baseline.

    ``clusters`` optionally maps object index to a cluster label (a dict or a
    sequence indexed by object). Objects without a label are left out of the
    per-cluster rows. Clusters whose test cells hold one class only are kept
    with ``nan`` AUCs and listed in :attr:`EvalReport.skipped`.
    """
    if mask is None or len(mask) == 0:
        raise ConfigError("evaluation needs a non-empty holdout mask")
    y = mask.labels(X)
    p_model = posterior_predictive(trace, mask.cells)
    p_base = table.predict_cells(mask.cells)
    auc_m, auc_b = roc_auc(p_model, y), roc_auc(p_base, y)
    rows = []
    if clusters is not None:
        get = clusters.get if isinstance(clusters, dict) else (lambda n: clusters[n])
        labels = np.array([get(int(n)) for n in mask.cells[:, 0]], dtype=object)
        names = sorted({str(c) for c in labels if c is not None})
        for c in names:
            sel = np.array([lab is not None and str(lab) == c for lab in labels])
            rows.append(ClusterRow(c, *_aucs(p_model[sel], p_base[sel], y[sel]), int(sel.sum())))
    return EvalReport(auc_m, auc_b, len(y), rows)


def _fmt(v) -> str:
    if v is None or (isinstance(v, float) and math.isnan(v)):
        return NA
    if isinstance(v, float):
        return repr(round(v, 12))
    return str(v)


@contextlib.contextmanager
def csv_writer(target):
    """CSV writer on a path, an open text file, or stdout for ``None`` / ``"-"``."""
    if target in (None, "-"):
        yield csv.writer(sys.stdout, lineterminator="\n")
    elif hasattr(target, "write"):
        yield csv.writer(target, lineterminator="\n")
    else:
        with open(target, "w", newline="") as fh:
            yield csv.writer(fh, lineterminator="\n")


def write_report(report: EvalReport, target) -> None:
    with csv_writer(target) as w:
        w.writerow(REPORT_HEADER)
        for r in report.all_rows():
            w.writerow([r.cluster, _fmt(r.auc_model), _fmt(r.auc_baseline), _fmt(r.delta), r.n_cells])


@dataclass
class ApplicabilityRow:
    type: str
    mean_p: float
    mean_p_absent: float | None  # None when every product of the type has the attribute
    n_products: int


def applicability_report(trace, data, attribute: str, top_k: int = 10) -> list[ApplicabilityRow]:
    """Types ranked by the mean predictive probability of one attribute.

    ``mean_p_absent`` restricts the mean to products currently lacking the
    attribute.
    """
    d = data.attribute_index(attribute)
    N = data.n_objects
    cells = np.column_stack([np.arange(N), np.full(N, d)])
    p = posterior_predictive(trace, cells)
    present = data.to_matrix().to_dense()[:, d].astype(bool)
    types = data.types()
    rows = []
    for t, name in enumerate(types.names):
        sel = types.type_of == t
        if not sel.any():
            continue
        absent = sel & ~present
        rows.append(ApplicabilityRow(name, float(p[sel].mean()),
                                     float(p[absent].mean()) if absent.any() else None, int(sel.sum())))
    rows.sort(key=lambda r: (-r.mean_p, r.type))
    return rows[:top_k]


def write_applicability(rows, target) -> None:
    with csv_writer(target) as w:
        w.writerow(APPLICABILITY_HEADER)
        for r in rows:
            w.writerow([r.type, _fmt(r.mean_p), _fmt(r.mean_p_absent), r.n_products])
