"""Training loops for semi-supervised node classification and graph
classification at desk scale.

Node tasks run full batch; graph tasks accumulate gradients over the whole
training split each epoch. Both use Adam with decoupled weight decay on
weight matrices, early stopping on validation loss, and restore the
parameters of the best validation epoch. Everything is deterministic given
the config seed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DataError, NonFiniteLoss
from .graph import GraphSignal
from .model import NlsfConfig, NodeNlsf, PoolingNlsf, prepare_context
from .nn import AdamState, adam_step, cross_entropy


@dataclass(frozen=True)
class SplitSpec:
    """Node split recipe: per-class counts or global fractions."""

    kind: str = "per_class"          # "per_class" | "fraction"
    train_per_class: int = 20
    val_count: int = 500
    test_count: int | None = 1000    # None: all remaining nodes
    train_frac: float = 0.025
    val_frac: float = 0.025


@dataclass(frozen=True)
class TrainConfig:
    lr: float = 1e-2
    weight_decay: float = 0.0
    epochs: int = 400
    patience: int = 200              # graph tasks conventionally use 100
    seed: int = 0

    def __post_init__(self):
        if self.lr < 0:
            raise DataError("learning rate must be nonnegative")
        if self.patience > self.epochs:
            raise DataError("patience cannot exceed the epoch budget")


@dataclass
class Masks:
    train: np.ndarray
    val: np.ndarray
    test: np.ndarray


def split_nodes(g: GraphSignal, spec: SplitSpec, seed: int) -> Masks:
    """Deterministic, class-balanced node masks."""
    if g.labels is None or np.isscalar(g.labels):
        raise DataError("node splits need per-node labels")
    labels = np.asarray(g.labels)
    n = labels.shape[0]
    rng = np.random.default_rng(seed)
    train = np.zeros(n, dtype=bool)
    val = np.zeros(n, dtype=bool)
    test = np.zeros(n, dtype=bool)
    if spec.kind == "per_class":
        for cls in np.unique(labels):
            members = np.nonzero(labels == cls)[0]
            if members.size < spec.train_per_class:
                raise DataError(
                    f"class {cls} has {members.size} nodes, "
                    f"fewer than the {spec.train_per_class} requested for training"
                )
            picked = rng.permutation(members)[: spec.train_per_class]
            train[picked] = True
        rest = rng.permutation(np.nonzero(~train)[0])
        val_n = min(spec.val_count, rest.size)
        val[rest[:val_n]] = True
        remaining = rest[val_n:]
        if spec.test_count is None:
            test[remaining] = True
        else:
            test[remaining[: spec.test_count]] = True
    elif spec.kind == "fraction":
        order = rng.permutation(n)
        n_train = max(1, int(round(spec.train_frac * n)))
        n_val = max(1, int(round(spec.val_frac * n)))
        train[order[:n_train]] = True
        val[order[n_train:n_train + n_val]] = True
        test[order[n_train + n_val:]] = True
    else:
        raise DataError(f"unknown split kind {spec.kind!r}")
    return Masks(train, val, test)


def split_graphs(num_graphs: int, seed: int):
    """80/10/10 index split with at least one graph per part."""
    if num_graphs < 3:
        raise DataError("need at least three graphs to split")
    rng = np.random.default_rng(seed)
    order = rng.permutation(num_graphs)
    n_test = max(1, int(round(0.1 * num_graphs)))
    n_val = max(1, int(round(0.1 * num_graphs)))
    test = np.sort(order[:n_test])
    val = np.sort(order[n_test:n_test + n_val])
    train = np.sort(order[n_test + n_val:])
    return train, val, test


def _check_finite(loss: float, epoch: int):
    if not math.isfinite(loss):
        raise NonFiniteLoss(f"loss became {loss} at epoch {epoch}")


def _snapshot(params):
    return [p.copy() for p in params]


def _restore(params, snapshot):
    for p, s in zip(params, snapshot):
        p[:] = s


@dataclass
class TrainResult:
    history: list
    best_epoch: int
    test_acc: float
    test_loss: float


def _masked_metrics(logits, labels, mask):
    loss, _ = cross_entropy(logits[mask], labels[mask])
    acc = float((np.argmax(logits[mask], axis=1) == labels[mask]).mean())
    return loss, acc


def train_node(model: NodeNlsf, g: GraphSignal, masks: Masks,
               cfg: TrainConfig) -> TrainResult:
    """Full-batch training on masked cross-entropy with early stopping."""
    labels = np.asarray(g.labels)
    blocks = prepare_context(g, model.config)
    x = np.asarray(g.features)
    params = model.parameters()
    state = AdamState.for_params(params, lr=cfg.lr)
    best_val = np.inf
    best_epoch = -1
    best_params = _snapshot(params)
    history = []
    since_best = 0
    for epoch in range(cfg.epochs):
        logits, cache = model.forward(blocks, x)
        train_idx = np.nonzero(masks.train)[0]
        loss, grad_masked = cross_entropy(logits[train_idx], labels[train_idx])
        _check_finite(loss, epoch)
        gout = np.zeros_like(logits)
        gout[train_idx] = grad_masked
        grads, _ = model.backward(cache, gout)
        adam_step(state, params, grads, weight_decay=cfg.weight_decay)

        eval_logits, _ = model.forward(blocks, x)
        train_loss, train_acc = _masked_metrics(eval_logits, labels, masks.train)
        val_loss, val_acc = _masked_metrics(eval_logits, labels, masks.val)
        _check_finite(val_loss, epoch)
        history.append({"epoch": epoch, "train_loss": train_loss,
                        "val_loss": val_loss, "train_acc": train_acc,
                        "val_acc": val_acc})
        if val_loss < best_val:
            best_val = val_loss
            best_epoch = epoch
            best_params = _snapshot(params)
            since_best = 0
        else:
            since_best += 1
            if since_best >= cfg.patience:
                break
    _restore(params, best_params)
    logits, _ = model.forward(blocks, x)
    test_loss, test_acc = _masked_metrics(logits, labels, masks.test)
    return TrainResult(history, best_epoch, test_acc, test_loss)


def _graph_loss_and_grads(model: PoolingNlsf, contexts, dataset, indices):
    total_loss = 0.0
    grand = None
    for idx in indices:
        g = dataset[idx]
        out, cache = model.forward(contexts[idx], np.asarray(g.features))
        loss, grad = cross_entropy(out[None, :], np.array([int(g.labels)]))
        grads, _ = model.backward(cache, grad[0])
        total_loss += loss
        if grand is None:
            grand = [gr.copy() for gr in grads]
        else:
            for acc, gr in zip(grand, grads):
                acc += gr
    k = max(1, len(indices))
    for acc in grand:
        acc /= k
    return total_loss / k, grand


def _graph_metrics(model, contexts, dataset, indices):
    losses = []
    hits = 0
    for idx in indices:
        g = dataset[idx]
        out, _ = model.forward(contexts[idx], np.asarray(g.features))
        loss, _ = cross_entropy(out[None, :], np.array([int(g.labels)]))
        losses.append(loss)
        hits += int(np.argmax(out) == int(g.labels))
    return float(np.mean(losses)), hits / max(1, len(indices))


def train_graph(model: PoolingNlsf, dataset: list, splits, cfg: TrainConfig) -> TrainResult:
    """Per-graph gradient accumulation over the training split each epoch."""
    train_idx, val_idx, test_idx = splits
    contexts = [prepare_context(g, model.config) for g in dataset]
    params = model.parameters()
    state = AdamState.for_params(params, lr=cfg.lr)
    best_val = np.inf
    best_epoch = -1
    best_params = _snapshot(params)
    history = []
    since_best = 0
    for epoch in range(cfg.epochs):
        loss, grads = _graph_loss_and_grads(model, contexts, dataset, train_idx)
        _check_finite(loss, epoch)
        adam_step(state, params, grads, weight_decay=cfg.weight_decay)
        train_loss, train_acc = _graph_metrics(model, contexts, dataset, train_idx)
        val_loss, val_acc = _graph_metrics(model, contexts, dataset, val_idx)
        _check_finite(val_loss, epoch)
        history.append({"epoch": epoch, "train_loss": train_loss,
                        "val_loss": val_loss, "train_acc": train_acc,
                        "val_acc": val_acc})
        if val_loss < best_val:
            best_val = val_loss
            best_epoch = epoch
            best_params = _snapshot(params)
            since_best = 0
        else:
            since_best += 1
            if since_best >= cfg.patience:
                break
    _restore(params, best_params)
    test_loss, test_acc = _graph_metrics(model, contexts, dataset, test_idx)
    return TrainResult(history, best_epoch, test_acc, test_loss)


def evaluate(model, blocks, g: GraphSignal, mask: np.ndarray):
    """(accuracy, loss) of a node model over the masked nodes."""
    if not np.any(mask):
        raise DataError("evaluation mask is empty")
    labels = np.asarray(g.labels)
    logits, _ = model.forward(blocks, np.asarray(g.features))
    loss, acc = _masked_metrics(logits, labels, mask)
    return acc, loss
