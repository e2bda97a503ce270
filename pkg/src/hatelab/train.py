"""Mini-batch training with a linear warmup schedule and best-epoch selection."""
from __future__ import annotations

import json
import logging
import math
from dataclasses import asdict, dataclass, field
from typing import Callable, Sequence

import numpy as np

from . import autodiff as ad
from .embed import MAX_LEN, PAD_ID, Vocab
from .errors import TrainingError
from .metrics import Aggregate, ConfusionMatrix, ScoreReport, aggregate, evaluate
from .models import ModelState, predict_proba

log = logging.getLogger(__name__)


@dataclass
class TrainConfig:
    epochs: int = 6
    batch_size: int = 64
    base_lr: float = 3e-3
    warmup_fraction: float = 0.1
    seeds: tuple[int, ...] = (1, 2, 3)
    optimizer: str = "adam"
    schedule: bool = True
    beta1: float = 0.9
    beta2: float = 0.999
    adam_eps: float = 1e-8

    def __post_init__(self):
        self.seeds = tuple(int(s) for s in self.seeds)
        if self.epochs < 1 or self.batch_size < 1:
            raise ValueError("epochs and batch_size must be positive")
        if not 0.0 <= self.warmup_fraction < 1.0:
            raise ValueError("warmup_fraction must be in [0, 1)")
        if self.optimizer.lower() not in ("adam", "sgd"):
            raise ValueError(f"unknown optimizer {self.optimizer!r}")
        self.optimizer = self.optimizer.lower()


def lr_at(step: int, total_steps: int, warmup_steps: int, base_lr: float) -> float:
    """Linear ramp 0 -> base_lr over the warmup, then linear decay to 0 at ``total_steps``."""
    if not 0 <= warmup_steps < total_steps:
        raise ValueError("need 0 <= warmup_steps < total_steps")
    if not 0 <= step <= total_steps:
        raise ValueError(f"step {step} outside [0, {total_steps}]")
    if step < warmup_steps:
        return base_lr * step / warmup_steps
    return base_lr * (total_steps - step) / (total_steps - warmup_steps)


class Adam:
    def __init__(self, params: Sequence[ad.Tensor], beta1=0.9, beta2=0.999, eps=1e-8):
        self.params = list(params)
        self.beta1, self.beta2, self.eps = beta1, beta2, eps
        self.m = [np.zeros_like(p.data) for p in self.params]
        self.v = [np.zeros_like(p.data) for p in self.params]
        self.t = 0

    def step(self, grads: Sequence[np.ndarray], lr: float):
        self.t += 1
        b1, b2 = self.beta1, self.beta2
        c1 = 1 - b1**self.t
        c2 = 1 - b2**self.t
        for p, g, m, v in zip(self.params, grads, self.m, self.v):
            m *= b1
            m += (1 - b1) * g
            v *= b2
            v += (1 - b2) * g * g
            p.data -= lr * (m / c1) / (np.sqrt(v / c2) + self.eps)


class SGD:
    def __init__(self, params: Sequence[ad.Tensor]):
        self.params = list(params)

    def step(self, grads, lr: float):
        for p, g in zip(self.params, grads):
            p.data -= lr * g


@dataclass
class Encoded:
    ids: np.ndarray
    lengths: np.ndarray
    labels: np.ndarray

    def __len__(self) -> int:
        return len(self.labels)


def encode_corpus(corpus, vocab: Vocab, max_len: int = MAX_LEN) -> Encoded:
    ids, lengths = vocab.encode_batch((s.tokens for s in corpus), max_len)
    return Encoded(ids, lengths, corpus.label_indices())


@dataclass
class EpochRecord:
    epoch: int
    train_loss: float
    val_loss: float
    val_metrics: dict[str, float]


@dataclass
class RunHistory:
    seed: int
    epochs: list[EpochRecord] = field(default_factory=list)
    chosen_epoch: int = 0

    def to_jsonl(self) -> str:
        lines = [json.dumps({"seed": self.seed, **asdict(e)}) for e in self.epochs]
        lines.append(json.dumps({"seed": self.seed, "chosen_epoch": self.chosen_epoch}))
        return "\n".join(lines) + "\n"


def choose_epoch(val_losses: Sequence[float]) -> int:
    """1-based epoch of the lowest validation loss; the first one wins ties."""
    if not len(val_losses):
        raise ValueError("no epochs")
    return int(np.argmin(np.asarray(val_losses, dtype=np.float64))) + 1


def mean_loss(model: ModelState, data: Encoded, batch_size: int = 256) -> float:
    total = 0.0
    with ad.no_grad():
        for s in range(0, len(data), batch_size):
            z = model.logits(data.ids[s : s + batch_size], data.lengths[s : s + batch_size], training=False)
            total += ad.softmax_cross_entropy(z, data.labels[s : s + batch_size]).item() * len(z.data)
    return total / len(data)


def evaluate_model(model: ModelState, data: Encoded, classes: Sequence[str]) -> tuple[ConfusionMatrix, ScoreReport]:
    probs = predict_proba(model, data.ids, data.lengths)
    preds = probs.argmax(axis=1)
    return evaluate([classes[i] for i in data.labels], [classes[i] for i in preds], classes)


def train(
    model: ModelState,
    train_data: Encoded,
    dev_data: Encoded,
    cfg: TrainConfig,
    seed: int,
    classes: Sequence[str],
    on_epoch: Callable[[EpochRecord], None] | None = None,
) -> tuple[ModelState, RunHistory]:
    """Run ``cfg.epochs`` epochs and return the model restored to its best-dev-loss epoch."""
    if not len(dev_data):
        raise ValueError("dev set is empty")
    if not len(train_data):
        raise ValueError("training set is empty")
    rng = np.random.default_rng(seed)
    names = list(model.params)
    params = [model.params[n] for n in names]
    emb_idx = names.index("embedding")
    if cfg.optimizer == "adam":
        opt = Adam(params, cfg.beta1, cfg.beta2, cfg.adam_eps)
    else:
        opt = SGD(params)
    steps_per_epoch = math.ceil(len(train_data) / cfg.batch_size)
    total = cfg.epochs * steps_per_epoch
    warmup = int(cfg.warmup_fraction * total)
    history = RunHistory(seed)
    best_loss = math.inf
    best_state = model.snapshot()
    step = 0
    for epoch in range(1, cfg.epochs + 1):
        model.train()
        order = rng.permutation(len(train_data))
        loss_sum = 0.0
        for b in range(steps_per_epoch):
            idx = order[b * cfg.batch_size : (b + 1) * cfg.batch_size]
            z = model.logits(train_data.ids[idx], train_data.lengths[idx], rng=rng)
            loss = ad.softmax_cross_entropy(z, train_data.labels[idx])
            lval = loss.item()
            if not math.isfinite(lval):
                raise TrainingError(f"non-finite loss at epoch {epoch}, batch {b + 1}")
            grads = ad.backward(loss, params)
            gs = [grads[p] for p in params]
            gs[emb_idx] = gs[emb_idx].copy()
            gs[emb_idx][PAD_ID] = 0.0
            lr = lr_at(step, total, warmup, cfg.base_lr) if cfg.schedule else cfg.base_lr
            opt.step(gs, lr)
            step += 1
            loss_sum += lval * len(idx)
        model.eval()
        val_loss = mean_loss(model, dev_data)
        _, rep = evaluate_model(model, dev_data, classes)
        rec = EpochRecord(epoch, loss_sum / len(train_data), val_loss, rep.as_dict())
        history.epochs.append(rec)
        log.info("seed %d epoch %d train_loss %.4f val_loss %.4f val_macro_f1 %.4f", seed, epoch, rec.train_loss, val_loss, rep.macro_f1)
        if on_epoch:
            on_epoch(rec)
        if val_loss < best_loss:
            best_loss = val_loss
            best_state = model.snapshot()
    history.chosen_epoch = choose_epoch([e.val_loss for e in history.epochs])
    model.restore(best_state)
    model.eval()
    return model, history


@dataclass
class RunResult:
    seed: int
    model: ModelState
    history: RunHistory
    dev: ScoreReport
    test: ScoreReport | None
    test_confusion: ConfusionMatrix | None


@dataclass
class AggregatedResult:
    runs: list[RunResult]
    dev: dict[str, Aggregate]
    test: dict[str, Aggregate] | None

    def table_row(self, name: str) -> str:
        """Weighted/macro F1 cells in percent, dev then test."""
        cells = []
        for metric in ("weighted_f1", "macro_f1"):
            for split in (self.dev, self.test):
                cells.append(split[metric].render(100) if split else "-")
        return " | ".join([name, *cells])


def run_experiment(
    cfg: TrainConfig,
    model_factory: Callable[[int], ModelState],
    train_data: Encoded,
    dev_data: Encoded,
    classes: Sequence[str],
    test_data: Encoded | None = None,
    on_run: Callable[[RunResult], None] | None = None,
) -> AggregatedResult:
    """Train once per seed and aggregate dev/test scores (mean, population sd)."""
    if not cfg.seeds:
        raise ValueError("at least one seed required")
    runs = []
    for seed in cfg.seeds:
        model = model_factory(seed)
        model, hist = train(model, train_data, dev_data, cfg, seed, classes)
        _, dev_rep = evaluate_model(model, dev_data, classes)
        test_cm = test_rep = None
        if test_data is not None and len(test_data):
            test_cm, test_rep = evaluate_model(model, test_data, classes)
        run = RunResult(seed, model, hist, dev_rep, test_rep, test_cm)
        runs.append(run)
        if on_run:
            on_run(run)
    dev = aggregate([r.dev for r in runs])
    test = aggregate([r.test for r in runs]) if runs[0].test is not None else None
    return AggregatedResult(runs, dev, test)
