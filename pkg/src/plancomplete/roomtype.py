"""Room-type inference from zoning types with an edge-aware GAT.

All arithmetic is float64 so that gradients can be checked against finite
differences to tight tolerances.
"""

from __future__ import annotations

import copy
import csv
import math
from dataclasses import asdict, dataclass, fields

import numpy as np
import torch
from sklearn.base import BaseEstimator, ClassifierMixin

from .checkpoint import load_tensors, save_tensors
from .graph import CONNECTION_TYPES, AccessGraph, LabelVocabulary, default_vocabulary, one_hot_features, room_type_targets

DTYPE = torch.float64
EDGE_DIM = len(CONNECTION_TYPES)


@dataclass
class GatConfig:
    num_layers: int = 3
    hidden_dim: int = 64
    dropout_rate: float = 0.1
    learning_rate: float = 1e-3
    batch_size: int = 32
    max_epochs: int = 100
    early_stop_tolerance: int = 5
    seed: int = 0
    negative_slope: float = 0.2
    val_fraction: float = 0.2

    def __post_init__(self):
        for name in ("num_layers", "hidden_dim", "batch_size", "max_epochs", "early_stop_tolerance"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be >= 1")
        if not 0 <= self.dropout_rate < 1:
            raise ValueError("dropout_rate must be in [0, 1)")
        if self.learning_rate <= 0:
            raise ValueError("learning_rate must be positive")
        if not 0 <= self.val_fraction < 1:
            raise ValueError("val_fraction must be in [0, 1)")


# ---------------------------------------------------------------------------
# batching


@dataclass
class GraphBatch:
    """Disjoint union of graphs with directed message edges (both ways + self-loops)."""

    x: torch.Tensor  # (V, |Z|) zoning one-hots
    src: torch.Tensor  # (M,) message sender rows
    dst: torch.Tensor  # (M,) message receiver rows
    edge_attr: torch.Tensor  # (M, 3); zero on self-loops
    sizes: list  # nodes per graph
    y: torch.Tensor | None = None


def message_edges(n_nodes: int, pairs: np.ndarray, edge_x: np.ndarray):
    """Expand undirected pairs into both directions and append self-loops."""
    pairs = np.asarray(pairs, dtype=np.int64).reshape(-1, 2)
    loops = np.arange(n_nodes, dtype=np.int64)
    src = np.concatenate([pairs[:, 0], pairs[:, 1], loops])
    dst = np.concatenate([pairs[:, 1], pairs[:, 0], loops])
    attr = np.concatenate([edge_x, edge_x, np.zeros((n_nodes, edge_x.shape[1]))]) if len(edge_x) else np.zeros((n_nodes, EDGE_DIM))
    return src, dst, attr


def collate(graphs, vocab: LabelVocabulary, with_targets: bool = False) -> GraphBatch:
    xs, srcs, dsts, attrs, ys, sizes = [], [], [], [], [], []
    offset = 0
    for g in graphs:
        node_x, edge_x = one_hot_features(g, vocab)
        src, dst, attr = message_edges(len(g), g.edge_index(), edge_x)
        xs.append(node_x)
        srcs.append(src + offset)
        dsts.append(dst + offset)
        attrs.append(attr)
        if with_targets:
            ys.append(room_type_targets(g, vocab))
        sizes.append(len(g))
        offset += len(g)
    y = torch.as_tensor(np.concatenate(ys)) if with_targets else None
    return GraphBatch(
        torch.as_tensor(np.concatenate(xs), dtype=DTYPE),
        torch.as_tensor(np.concatenate(srcs)),
        torch.as_tensor(np.concatenate(dsts)),
        torch.as_tensor(np.concatenate(attrs), dtype=DTYPE),
        sizes,
        y,
    )


# ---------------------------------------------------------------------------
# parameters and forward pass


def init_params(config: GatConfig, n_zoning: int, n_room_types: int, seed: int | None = None) -> dict:
    gen = torch.Generator().manual_seed(config.seed if seed is None else seed)

    def glorot(*shape):
        fan_in, fan_out = shape[-1], shape[0]
        bound = math.sqrt(6.0 / (fan_in + fan_out))
        return (torch.rand(*shape, generator=gen, dtype=DTYPE) * 2 - 1) * bound

    params = {}
    d_in = n_zoning
    for layer in range(config.num_layers):
        h = config.hidden_dim
        params[f"gat{layer}.weight"] = glorot(h, d_in)
        params[f"gat{layer}.att_src"] = glorot(1, h)[0]
        params[f"gat{layer}.att_dst"] = glorot(1, h)[0]
        params[f"gat{layer}.att_edge"] = glorot(1, EDGE_DIM)[0]
        params[f"gat{layer}.bias"] = torch.zeros(h, dtype=DTYPE)
        d_in = h
    params["hidden.weight"] = glorot(config.hidden_dim, config.hidden_dim + n_zoning)
    params["hidden.bias"] = torch.zeros(config.hidden_dim, dtype=DTYPE)
    params["out.weight"] = glorot(n_room_types, config.hidden_dim)
    params["out.bias"] = torch.zeros(n_room_types, dtype=DTYPE)
    return params


def _check_finite(*tensors):
    for t in tensors:
        if not torch.isfinite(t).all():
            raise FloatingPointError("non-finite values in GAT input")


def attention_coefficients(h, src, dst, edge_attr, layer: dict, negative_slope: float = 0.2):
    """Per-message softmax weights, normalized over each receiver's incoming messages."""
    wh = h @ layer["weight"].T
    score = wh[dst] @ layer["att_dst"] + wh[src] @ layer["att_src"] + edge_attr @ layer["att_edge"]
    score = torch.nn.functional.leaky_relu(score, negative_slope)
    n = h.shape[0]
    peak = torch.full((n,), -torch.inf, dtype=score.dtype).scatter_reduce(0, dst, score, "amax")
    ex = torch.exp(score - peak[dst])
    denom = torch.zeros(n, dtype=score.dtype).index_add(0, dst, ex)
    return ex / denom[dst], wh


def gat_layer_forward(h, src, dst, edge_attr, layer: dict, negative_slope: float = 0.2):
    """``h'_i = sum_j alpha_ij W h_j + b`` over incoming messages ``j -> i``."""
    _check_finite(h, edge_attr)
    alpha, wh = attention_coefficients(h, src, dst, edge_attr, layer, negative_slope)
    out = torch.zeros(h.shape[0], wh.shape[1], dtype=wh.dtype).index_add(0, dst, alpha[:, None] * wh[src])
    return out + layer["bias"]


def _layer(params: dict, k: int) -> dict:
    prefix = f"gat{k}."
    return {name[len(prefix) :]: t for name, t in params.items() if name.startswith(prefix)}


def model_forward(batch: GraphBatch, params: dict, config: GatConfig, train_mode: bool = False, generator=None):
    """Logits ``(V, |room_types|)`` for every node of the batch."""
    p = config.dropout_rate if train_mode else 0.0

    def dropout(t):
        if p == 0.0:
            return t
        keep = torch.rand(t.shape, generator=generator, dtype=t.dtype) >= p
        return t * keep / (1.0 - p)

    h = batch.x
    for k in range(config.num_layers):
        h = gat_layer_forward(h, batch.src, batch.dst, batch.edge_attr, _layer(params, k), config.negative_slope)
        if k < config.num_layers - 1:
            h = dropout(torch.relu(h))
    z = torch.cat([batch.x, h], dim=1)
    z = dropout(torch.relu(z @ params["hidden.weight"].T + params["hidden.bias"]))
    return z @ params["out.weight"].T + params["out.bias"]


# ---------------------------------------------------------------------------
# training


def graph_accuracy(pred, truth) -> float:
    pred, truth = np.asarray(pred), np.asarray(truth)
    if pred.shape != truth.shape or pred.ndim != 1:
        raise ValueError("prediction and truth must be 1-D and of equal length")
    if len(pred) == 0:
        raise ValueError("accuracy of an empty graph is undefined")
    return float(np.mean(pred == truth))


def _split(graphs, config: GatConfig):
    rng = np.random.default_rng(config.seed)
    order = rng.permutation(len(graphs))
    n_val = int(round(config.val_fraction * len(graphs)))
    if n_val == 0 or n_val == len(graphs):
        return list(graphs), list(graphs)
    val = [graphs[i] for i in sorted(order[:n_val])]
    train = [graphs[i] for i in sorted(order[n_val:])]
    return train, val


def evaluate_split(graphs, params, config, vocab):
    """Mean node cross-entropy and mean per-graph accuracy (eval mode)."""
    batch = collate(graphs, vocab, with_targets=True)
    with torch.no_grad():
        logits = model_forward(batch, params, config, train_mode=False)
        loss = torch.nn.functional.cross_entropy(logits, batch.y).item()
    pred = argmax_lowest(logits.numpy())
    accs, start = [], 0
    for n in batch.sizes:
        accs.append(graph_accuracy(pred[start : start + n], batch.y.numpy()[start : start + n]))
        start += n
    return loss, float(np.mean(accs))


def argmax_lowest(logits: np.ndarray) -> np.ndarray:
    """Row-wise argmax; ties go to the lowest index."""
    return np.argmax(logits, axis=1)


def train(dataset, config: GatConfig, vocab: LabelVocabulary | None = None, val_dataset=None, params=None):
    """Mini-batch Adam on mean node cross-entropy with early stopping on val loss.

    Returns ``(best_params, history)``; history rows are dicts with ``epoch``,
    ``train_loss``, ``val_loss`` and ``mean_val_acc``.
    """
    dataset = list(dataset)
    if not dataset:
        raise ValueError("training set is empty")
    vocab = vocab or default_vocabulary()
    if val_dataset is None:
        train_set, val_set = _split(dataset, config)
    else:
        train_set, val_set = dataset, list(val_dataset)
        if not val_set:
            raise ValueError("validation set is empty")
    for g in train_set + val_set:
        room_type_targets(g, vocab)  # raises on missing targets

    torch.manual_seed(config.seed)
    rng = np.random.default_rng(config.seed)
    gen = torch.Generator().manual_seed(config.seed)
    if params is None:
        params = init_params(config, len(vocab.zoning_types), len(vocab.room_types))
    params = {k: v.detach().clone().requires_grad_(True) for k, v in params.items()}
    opt = torch.optim.Adam(params.values(), lr=config.learning_rate, betas=(0.9, 0.999))

    history = []
    best_loss, best_params, stale = math.inf, None, 0
    for epoch in range(1, config.max_epochs + 1):
        order = rng.permutation(len(train_set))
        total, count = 0.0, 0
        for start in range(0, len(order), config.batch_size):
            batch = collate([train_set[i] for i in order[start : start + config.batch_size]], vocab, with_targets=True)
            opt.zero_grad()
            logits = model_forward(batch, params, config, train_mode=True, generator=gen)
            loss = torch.nn.functional.cross_entropy(logits, batch.y)
            loss.backward()
            opt.step()
            total += loss.item() * len(batch.y)
            count += len(batch.y)
        val_loss, val_acc = evaluate_split(val_set, params, config, vocab)
        history.append({"epoch": epoch, "train_loss": total / count, "val_loss": val_loss, "mean_val_acc": val_acc})
        if val_loss < best_loss:
            best_loss, stale = val_loss, 0
            best_params = {k: v.detach().clone() for k, v in params.items()}
        else:
            stale += 1
            if stale >= config.early_stop_tolerance:
                break
    return best_params, history


def write_history(path, history) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=["epoch", "train_loss", "val_loss", "mean_val_acc"])
        writer.writeheader()
        for row in history:
            writer.writerow({k: (repr(v) if isinstance(v, float) else v) for k, v in row.items()})


def predict_room_types(graph: AccessGraph, params: dict, config: GatConfig, vocab: LabelVocabulary | None = None) -> AccessGraph:
    vocab = vocab or default_vocabulary()
    if len(graph) == 0:
        return graph
    with torch.no_grad():
        logits = model_forward(collate([graph], vocab), params, config, train_mode=False)
    idx = argmax_lowest(logits.numpy())
    return graph.with_room_types([vocab.room_types[i] for i in idx])


def save_model(path, params: dict, config: GatConfig, vocab: LabelVocabulary) -> None:
    save_tensors(path, params, {"kind": "gat", "config": asdict(config), "vocab": vocab.to_dict()})


def load_model(path):
    """Return ``(params, config, vocab)``."""
    arrays, meta = load_tensors(path)
    if meta.get("kind") != "gat":
        raise ValueError(f"{path} is not a room-type checkpoint")
    config = GatConfig(**meta["config"])
    vocab = LabelVocabulary.from_dict(meta["vocab"])
    params = {k: torch.as_tensor(v, dtype=DTYPE) for k, v in arrays.items()}
    expected = init_params(config, len(vocab.zoning_types), len(vocab.room_types))
    for k, t in expected.items():
        if k not in params or params[k].shape != t.shape:
            raise ValueError(f"{path}: tensor {k!r} missing or mis-shaped")
    return params, config, vocab


class RoomTypeClassifier(BaseEstimator, ClassifierMixin):
    """Graph-level estimator: ``fit`` on access graphs with room types, ``predict`` per node."""

    def __init__(
        self,
        num_layers=3,
        hidden_dim=64,
        dropout_rate=0.1,
        learning_rate=1e-3,
        batch_size=32,
        max_epochs=100,
        early_stop_tolerance=5,
        val_fraction=0.2,
        seed=0,
        vocab=None,
    ):
        self.num_layers = num_layers
        self.hidden_dim = hidden_dim
        self.dropout_rate = dropout_rate
        self.learning_rate = learning_rate
        self.batch_size = batch_size
        self.max_epochs = max_epochs
        self.early_stop_tolerance = early_stop_tolerance
        self.val_fraction = val_fraction
        self.seed = seed
        self.vocab = vocab

    def _config(self) -> GatConfig:
        names = {f.name for f in fields(GatConfig)}
        return GatConfig(**{k: v for k, v in self.get_params().items() if k in names})

    def fit(self, X, y=None, X_val=None):
        self.vocab_ = self.vocab or default_vocabulary()
        self.config_ = self._config()
        self.params_, self.history_ = train(list(X), self.config_, self.vocab_, val_dataset=X_val)
        self.classes_ = np.array(self.vocab_.room_types)
        return self

    def _check_fitted(self):
        if not hasattr(self, "params_"):
            from sklearn.exceptions import NotFittedError

            raise NotFittedError("RoomTypeClassifier is not fitted yet")

    def predict_graphs(self, X) -> list:
        self._check_fitted()
        return [predict_room_types(g, self.params_, self.config_, self.vocab_) for g in X]

    def predict(self, X) -> list:
        """Per graph, an array of predicted room-type names."""
        return [np.array([n.room_type for n in g.nodes]) for g in self.predict_graphs(X)]

    def score(self, X, y=None) -> float:
        """Mean per-graph accuracy."""
        X = list(X)
        preds = self.predict(X)
        truth = y if y is not None else [[n.room_type for n in g.nodes] for g in X]
        return float(np.mean([graph_accuracy(p, np.asarray(t)) for p, t in zip(preds, truth)]))

    def save(self, path) -> None:
        self._check_fitted()
        save_model(path, self.params_, self.config_, self.vocab_)

    @classmethod
    def load(cls, path) -> "RoomTypeClassifier":
        params, config, vocab = load_model(path)
        est = cls(vocab=vocab, **{f.name: getattr(config, f.name) for f in fields(GatConfig) if f.name != "negative_slope"})
        est.vocab_, est.config_, est.params_ = vocab, config, params
        est.classes_ = np.array(vocab.room_types)
        est.history_ = []
        return est
