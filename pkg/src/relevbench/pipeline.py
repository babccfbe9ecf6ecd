"""Optional-PCA + classifier + codec pipeline with grouped rank prediction."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from relevbench import encoding, models


@dataclass
class PipelineConfig:
    model_kind: str                 # knn | sgd_linear
    codec: str = encoding.ONEHOT    # label scheme for sgd_linear
    knn: models.KnnConfig | None = None
    sgd: models.SgdLinearConfig | None = None
    pca: models.PcaConfig = field(default_factory=models.PcaConfig)

    def __post_init__(self):
        if self.model_kind not in ("knn", "sgd_linear"):
            raise models.ModelError(f"unknown model kind {self.model_kind!r}")
        if self.model_kind == "knn" and self.knn is None:
            self.knn = models.KnnConfig()
        if self.model_kind == "sgd_linear" and self.sgd is None:
            self.sgd = models.SgdLinearConfig()


class Pipeline:
    """Fit PCA (if configured) and the classifier; predict ranks per pair,
    with grouped thermometer readout when full groups are present."""

    def __init__(self, config: PipelineConfig):
        self.config = config
        self.pca: models.PcaTransform | None = None
        self.model = None

    def fit(self, X: np.ndarray, ranks: np.ndarray) -> "Pipeline":
        self.pca = models.fit_pca(X, self.config.pca)
        Xt = self.pca.apply(X)
        if self.config.model_kind == "knn":
            self.model = models.fit_knn(Xt, ranks, self.config.knn)
        else:
            self.model = models.fit_sgd_linear(
                Xt, ranks, self.config.sgd, self.config.codec
            )
        return self

    def predict_ranks(self, X: np.ndarray, groups=None,
                      candidate_indices=None) -> np.ndarray:
        """Predicted ranks per row.

        For a thermometer SGD model with group ids given, each complete
        4-candidate group goes through the grouped sum-and-rank readout;
        incomplete groups fall back to the ungrouped per-pair readout.
        """
        Xt = self.pca.apply(X)
        if self.config.model_kind == "knn":
            return self.model.predict(Xt)
        if self.config.codec != encoding.THERMOMETER or groups is None:
            return self.model.predict(Xt)
        scores = self.model.predict_scores(Xt)
        return grouped_thermometer_ranks(scores, groups, candidate_indices)


def grouped_thermometer_ranks(scores: np.ndarray, groups,
                              candidate_indices=None) -> np.ndarray:
    """Apply the grouped readout per 4-candidate group.

    Rows of each group are ordered by candidate index before readout so the
    tie rule (ascending candidate index) is honored regardless of row order.
    """
    groups = np.asarray(groups)
    if candidate_indices is None:
        candidate_indices = np.zeros(len(groups), dtype=np.int64)
    candidate_indices = np.asarray(candidate_indices)
    preds = np.empty(len(groups), dtype=np.int64)
    unique_groups, inverse = np.unique(groups, return_inverse=True)
    for g in range(len(unique_groups)):
        rows = np.flatnonzero(inverse == g)
        if len(rows) != 4:
            for r in rows:
                preds[r] = encoding.readout_thermometer_ungrouped(scores[r])
            continue
        ordered = rows[np.argsort(candidate_indices[rows], kind="stable")]
        ranks = encoding.readout_thermometer_grouped(scores[ordered])
        for row, rank in zip(ordered, ranks):
            preds[row] = rank
    return preds
