"""Native classifiers over pair feature vectors.

k-nearest-neighbors, stochastic-gradient linear models (4 one-vs-rest heads
for one-hot labels, 3 independent binary heads for thermometer labels), and
an optional PCA front-end.  All fits are deterministic given (data order,
config, seed).
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass, asdict

import numpy as np

from relevbench import encoding

DISTANCE_EPS = 1e-12


class ModelError(ValueError):
    pass


@dataclass(frozen=True)
class KnnConfig:
    n_neighbors: int = 5
    weights: str = "uniform"    # uniform | distance
    metric: str = "euclidean"   # euclidean | manhattan

    def __post_init__(self):
        if self.n_neighbors < 1:
            raise ModelError("n_neighbors must be >= 1")
        if self.weights not in ("uniform", "distance"):
            raise ModelError(f"unknown weights {self.weights!r}")
        if self.metric not in ("euclidean", "manhattan"):
            raise ModelError(f"unknown metric {self.metric!r}")


@dataclass(frozen=True)
class SgdLinearConfig:
    loss: str = "logistic"      # logistic | hinge
    penalty: str = "l2"         # l2 | l1 | elasticnet
    alpha: float = 1e-4
    max_iter: int = 20
    seed: int = 0
    l1_ratio: float = 0.15      # elasticnet mix only

    def __post_init__(self):
        if self.loss not in ("logistic", "hinge"):
            raise ModelError(f"unknown loss {self.loss!r}")
        if self.penalty not in ("l2", "l1", "elasticnet"):
            raise ModelError(f"unknown penalty {self.penalty!r}")
        if self.alpha <= 0:
            raise ModelError("alpha must be > 0")
        if self.max_iter < 1:
            raise ModelError("max_iter must be >= 1")


@dataclass(frozen=True)
class PcaConfig:
    n_components: int | None = None


class KnnModel:
    """Brute-force kNN over dense vectors; vote weight by rank, ties to the
    lowest rank."""

    kind = "knn"

    def __init__(self, config: KnnConfig, X: np.ndarray, ranks: np.ndarray):
        if len(X) == 0:
            raise ModelError("empty training set")
        if config.n_neighbors > len(X):
            raise ModelError(
                f"n_neighbors={config.n_neighbors} exceeds train size {len(X)}"
            )
        self.config = config
        self.X = np.asarray(X, dtype=np.float64)
        self.ranks = np.asarray(ranks, dtype=np.int64)
        self.feature_dim = self.X.shape[1]

    def _distances(self, Q: np.ndarray) -> np.ndarray:
        if self.config.metric == "euclidean":
            sq = (np.sum(Q ** 2, axis=1)[:, None]
                  + np.sum(self.X ** 2, axis=1)[None, :]
                  - 2.0 * Q @ self.X.T)
            return np.sqrt(np.maximum(sq, 0.0))
        return np.sum(np.abs(Q[:, :, None] - self.X.T[None, :, :]), axis=1)

    def predict(self, Q: np.ndarray) -> np.ndarray:
        Q = np.asarray(Q, dtype=np.float64)
        if Q.shape[1] != self.feature_dim:
            raise ModelError(
                f"feature dim {Q.shape[1]} does not match model dim {self.feature_dim}"
            )
        k = self.config.n_neighbors
        dists = self._distances(Q)
        # argsort (not argpartition) keeps neighbor choice deterministic on ties
        order = np.argsort(dists, axis=1, kind="stable")[:, :k]
        preds = np.empty(len(Q), dtype=np.int64)
        for i in range(len(Q)):
            nbr = order[i]
            if self.config.weights == "distance":
                w = 1.0 / (dists[i, nbr] + DISTANCE_EPS)
            else:
                w = np.ones(k)
            votes = np.zeros(4)
            np.add.at(votes, self.ranks[nbr], w)
            preds[i] = int(np.argmax(votes))  # first max = lowest rank on ties
        return preds


class SgdLinearModel:
    """Linear heads trained by plain SGD with schedule eta_t = 1/(alpha*(t0+t)).

    t0 is fixed at 1/alpha so the first step size is 1/(1 + alpha*t) scaled
    sensibly for any regularization weight.  One-hot codec trains 4
    one-vs-rest heads; thermometer trains 3 independent binary heads.
    """

    kind = "sgd_linear"
    T0_RULE = "1/alpha"

    def __init__(self, config: SgdLinearConfig, codec: str, feature_dim: int):
        if codec not in encoding.SCHEMES:
            raise ModelError(f"unknown codec {codec!r}")
        self.config = config
        self.codec = codec
        self.feature_dim = feature_dim
        n_heads = encoding.label_width(codec)
        self.W = np.zeros((n_heads, feature_dim))
        self.b = np.zeros(n_heads)

    def fit(self, X: np.ndarray, ranks: np.ndarray) -> "SgdLinearModel":
        X = np.asarray(X, dtype=np.float64)
        if not np.all(np.isfinite(X)):
            raise ModelError("non-finite features")
        if X.shape[1] != self.feature_dim:
            raise ModelError(
                f"feature dim {X.shape[1]} does not match model dim {self.feature_dim}"
            )
        Y = encoding.encode_labels(ranks, self.codec).astype(np.float64)
        cfg = self.config
        rng = np.random.default_rng(cfg.seed)
        t0 = 1.0 / cfg.alpha
        t = 0
        for _ in range(cfg.max_iter):
            for i in rng.permutation(len(X)):
                t += 1
                eta = 1.0 / (cfg.alpha * (t0 + t))
                x = X[i]
                z = self.W @ x + self.b
                if cfg.loss == "logistic":
                    # per-head binary cross-entropy, targets in {0,1}
                    grad_out = _sigmoid(z) - Y[i]
                else:
                    # hinge with targets in {-1,+1}
                    y = 2.0 * Y[i] - 1.0
                    grad_out = np.where(y * z < 1.0, -y, 0.0)
                self.W -= eta * (np.outer(grad_out, x) + self._penalty_grad())
                self.b -= eta * grad_out
        return self

    def _penalty_grad(self) -> np.ndarray:
        cfg = self.config
        if cfg.penalty == "l2":
            return cfg.alpha * self.W
        if cfg.penalty == "l1":
            return cfg.alpha * np.sign(self.W)
        return cfg.alpha * (cfg.l1_ratio * np.sign(self.W)
                            + (1.0 - cfg.l1_ratio) * self.W)

    def predict_scores(self, X: np.ndarray) -> np.ndarray:
        """Raw head scores for one-hot; logistic probabilities for thermometer."""
        X = np.asarray(X, dtype=np.float64)
        if X.shape[1] != self.feature_dim:
            raise ModelError(
                f"feature dim {X.shape[1]} does not match model dim {self.feature_dim}"
            )
        Z = X @ self.W.T + self.b
        if self.codec == encoding.THERMOMETER:
            return _sigmoid(Z)
        return Z

    def predict(self, X: np.ndarray) -> np.ndarray:
        """Per-pair rank via the codec's ungrouped readout."""
        scores = self.predict_scores(X)
        if self.codec == encoding.ONEHOT:
            return np.array([encoding.readout_onehot(s) for s in scores])
        return np.array([encoding.readout_thermometer_ungrouped(s) for s in scores])


def _sigmoid(z: np.ndarray) -> np.ndarray:
    out = np.empty_like(z, dtype=np.float64)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


class PcaTransform:
    """Mean-centering + top-k eigenvectors of the covariance matrix.

    Sign convention: each component's largest-magnitude entry is positive.
    n_components None is an identity pass-through.
    """

    def __init__(self, mean: np.ndarray | None, components: np.ndarray | None,
                 explained_variance: np.ndarray | None = None):
        self.mean = mean
        self.components = components  # shape (k, d); None = identity
        self.explained_variance = explained_variance

    @property
    def identity(self) -> bool:
        return self.components is None

    def apply(self, X: np.ndarray) -> np.ndarray:
        if self.identity:
            return np.asarray(X, dtype=np.float64)
        return (np.asarray(X, dtype=np.float64) - self.mean) @ self.components.T


def fit_pca(X: np.ndarray, config: PcaConfig) -> PcaTransform:
    if config.n_components is None:
        return PcaTransform(None, None)
    X = np.asarray(X, dtype=np.float64)
    n, d = X.shape
    if n < 2:
        raise ModelError("PCA needs at least 2 samples")
    if not 1 <= config.n_components <= d:
        raise ModelError(
            f"n_components must be in [1, {d}], got {config.n_components}"
        )
    mean = X.mean(axis=0)
    Xc = X - mean
    cov = Xc.T @ Xc / (n - 1)
    eigvals, eigvecs = np.linalg.eigh(cov)
    if eigvals[-1] <= 0:
        raise ModelError("degenerate data: all samples identical")
    order = np.argsort(eigvals)[::-1][: config.n_components]
    components = eigvecs[:, order].T
    # fix signs: largest-magnitude entry of each component is positive
    for row in components:
        if row[np.argmax(np.abs(row))] < 0:
            row *= -1.0
    return PcaTransform(mean, components, explained_variance=eigvals[order])


def fit_knn(X, ranks, config: KnnConfig) -> KnnModel:
    return KnnModel(config, X, ranks)


def fit_sgd_linear(X, ranks, config: SgdLinearConfig, codec: str) -> SgdLinearModel:
    X = np.asarray(X, dtype=np.float64)
    model = SgdLinearModel(config, codec, X.shape[1])
    return model.fit(X, ranks)


MODEL_MAGIC = b"RVM1"


def save_model(model, path, feature_mode: str = "joint",
               pca: PcaTransform | None = None) -> None:
    """Versioned binary container: magic, JSON metadata, f32-LE param blocks."""
    if isinstance(model, SgdLinearModel):
        meta = {
            "kind": model.kind,
            "codec": model.codec,
            "feature_dim": model.feature_dim,
            "feature_mode": feature_mode,
            "config": asdict(model.config),
        }
        blocks = [model.W.astype("<f4"), model.b.astype("<f4")]
        shapes = [list(model.W.shape), list(model.b.shape)]
    elif isinstance(model, KnnModel):
        meta = {
            "kind": model.kind,
            "codec": None,
            "feature_dim": model.feature_dim,
            "feature_mode": feature_mode,
            "config": asdict(model.config),
        }
        blocks = [model.X.astype("<f4"), model.ranks.astype("<f4")]
        shapes = [list(model.X.shape), list(model.ranks.shape)]
    else:
        raise ModelError(f"cannot persist model of type {type(model).__name__}")
    if pca is not None and not pca.identity:
        meta["pca_shapes"] = [list(pca.mean.shape), list(pca.components.shape)]
        blocks += [pca.mean.astype("<f4"), pca.components.astype("<f4")]
        shapes += meta["pca_shapes"]
    meta["shapes"] = shapes
    meta_bytes = json.dumps(meta, sort_keys=True).encode("utf-8")
    with open(path, "wb") as fh:
        fh.write(MODEL_MAGIC)
        fh.write(struct.pack("<I", len(meta_bytes)))
        fh.write(meta_bytes)
        for block in blocks:
            fh.write(block.tobytes())


def load_model(path):
    """Returns (model, pca_transform); the transform is identity if the model
    was saved without a PCA front-end."""
    with open(path, "rb") as fh:
        magic = fh.read(4)
        if magic != MODEL_MAGIC:
            raise ModelError(f"{path}: bad magic {magic!r}")
        (meta_len,) = struct.unpack("<I", fh.read(4))
        meta = json.loads(fh.read(meta_len).decode("utf-8"))
        payload = fh.read()
    shapes = [tuple(s) for s in meta["shapes"]]
    blocks = []
    offset = 0
    for shape in shapes:
        count = int(np.prod(shape))
        blocks.append(
            np.frombuffer(payload, dtype="<f4", count=count, offset=offset)
            .reshape(shape).astype(np.float64)
        )
        offset += count * 4
    if "pca_shapes" in meta:
        pca = PcaTransform(mean=blocks[-2], components=blocks[-1])
    else:
        pca = PcaTransform(None, None)
    if meta["kind"] == "sgd_linear":
        model = SgdLinearModel(
            SgdLinearConfig(**meta["config"]), meta["codec"], meta["feature_dim"]
        )
        model.W, model.b = blocks[0], blocks[1]
        return model, pca
    if meta["kind"] == "knn":
        model = KnnModel(
            KnnConfig(**meta["config"]), blocks[0], blocks[1].astype(np.int64)
        )
        return model, pca
    raise ModelError(f"unknown model kind {meta['kind']!r}")
