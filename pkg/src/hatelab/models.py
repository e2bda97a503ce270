"""BiLSTM and CNN sentence classifiers built on :mod:`hatelab.autodiff`."""
from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from . import autodiff as ad
from .autodiff import Tensor
from .embed import EMBED_DIM, MAX_LEN, PAD_ID, EmbeddingTable, Vocab
from .errors import ConfigError, EncodingError, HatelabError


@dataclass
class BiLstmConfig:
    embed_dim: int = EMBED_DIM
    hidden: int = 20
    layers: int = 2
    bidirectional: bool = True
    dropout_keep: float = 0.5
    num_classes: int = 2

    def validate(self):
        if not 0.0 < self.dropout_keep <= 1.0:
            raise ConfigError("dropout_keep must be in (0, 1]")
        if self.num_classes < 2 or self.hidden < 1 or self.layers < 1:
            raise ConfigError("num_classes >= 2, hidden >= 1 and layers >= 1 required")
        if not self.bidirectional:
            raise ConfigError("only the bidirectional LSTM is supported")


@dataclass
class CnnConfig:
    embed_dim: int = EMBED_DIM
    filter_widths: tuple[int, ...] = (2, 3, 4)
    filters_per_width: int = 100
    dropout_keep: float = 0.5
    num_classes: int = 2

    def __post_init__(self):
        self.filter_widths = tuple(self.filter_widths)

    def validate(self):
        if not 0.0 < self.dropout_keep <= 1.0:
            raise ConfigError("dropout_keep must be in (0, 1]")
        if self.num_classes < 2 or self.filters_per_width < 1 or not self.filter_widths:
            raise ConfigError("num_classes >= 2 and at least one filter width required")


def _uniform(rng: np.random.Generator, fan_in: int, shape) -> np.ndarray:
    bound = 1.0 / np.sqrt(fan_in)
    return rng.uniform(-bound, bound, size=shape)


class ModelState:
    """Architecture config, named parameters and a train/eval flag."""

    kind = ""

    def __init__(self, config, params: dict[str, Tensor], max_len: int = MAX_LEN):
        self.config = config
        self.params = params
        self.max_len = max_len
        self.training = False

    def train(self) -> "ModelState":
        self.training = True
        return self

    def eval(self) -> "ModelState":
        self.training = False
        return self

    @property
    def embedding(self) -> Tensor:
        return self.params["embedding"]

    @property
    def vocab_size(self) -> int:
        return self.embedding.shape[0]

    def check_ids(self, ids: np.ndarray):
        ids = np.asarray(ids)
        if ids.size and (ids.min() < 0 or ids.max() >= self.vocab_size):
            raise EncodingError(f"token id outside vocab of size {self.vocab_size}")

    def embed(self, ids: np.ndarray) -> Tensor:
        self.check_ids(ids)
        return ad.embedding_lookup(self.embedding, ids)

    def logits(self, ids, lengths, rng=None, training: bool | None = None) -> Tensor:
        ids = np.atleast_2d(np.asarray(ids, dtype=np.int64))
        lengths = np.atleast_1d(np.asarray(lengths, dtype=np.int64))
        return self.logits_from_embedded(self.embed(ids), lengths, rng, training)

    def logits_from_embedded(self, emb: Tensor, lengths, rng=None, training: bool | None = None) -> Tensor:
        raise NotImplementedError

    def _training(self, training):
        return self.training if training is None else training

    def snapshot(self) -> dict[str, np.ndarray]:
        return {k: v.data.copy() for k, v in self.params.items()}

    def restore(self, values: dict[str, np.ndarray]):
        for k, v in values.items():
            self.params[k].data = v.copy()


def _embedding_param(table: EmbeddingTable, embed_dim: int) -> Tensor:
    if table.dim != embed_dim:
        raise ConfigError(f"embedding table dim {table.dim} != config embed_dim {embed_dim}")
    mat = table.matrix.copy()
    mat[PAD_ID] = 0.0
    return Tensor(mat, requires_grad=True)


class BiLstmModel(ModelState):
    kind = "bilstm"

    def _direction(self, xp: Tensor, w_hh: Tensor, mask: np.ndarray, reverse: bool):
        batch, steps = xp.shape[0], xp.shape[1]
        hid = w_hh.shape[0]
        h = Tensor(np.zeros((batch, hid)))
        c = Tensor(np.zeros((batch, hid)))
        outs: list[Tensor | None] = [None] * steps
        order = range(steps - 1, -1, -1) if reverse else range(steps)
        for t in order:
            z = xp[:, t, :] + h @ w_hh
            i = ad.sigmoid(z[:, :hid])
            f = ad.sigmoid(z[:, hid : 2 * hid])
            g = ad.tanh(z[:, 2 * hid : 3 * hid])
            o = ad.sigmoid(z[:, 3 * hid :])
            c_new = f * c + i * g
            h_new = o * ad.tanh(c_new)
            m = mask[:, t : t + 1]
            if m.all():
                c, h = c_new, h_new
            else:
                # PAD steps carry the previous state through unchanged
                c = c_new * m + c * (1.0 - m)
                h = h_new * m + h * (1.0 - m)
            outs[t] = h
        return outs, h

    def logits_from_embedded(self, emb, lengths, rng=None, training=None):
        cfg = self.config
        training = self._training(training)
        lengths = np.atleast_1d(np.asarray(lengths, dtype=np.int64))
        steps = max(1, int(lengths.max()) if lengths.size else 1)
        steps = min(steps, emb.shape[1])
        x = emb[:, :steps, :] if steps < emb.shape[1] else emb
        mask = (np.arange(steps)[None, :] < lengths[:, None]).astype(np.float64)
        x = ad.dropout(x, cfg.dropout_keep, training, rng)
        p = self.params
        for layer in range(cfg.layers):
            finals = []
            seqs = []
            for d, rev in (("fw", False), ("bw", True)):
                pre = f"lstm.l{layer}.{d}"
                xp = x @ p[f"{pre}.W_ih"] + p[f"{pre}.b"]
                outs, last = self._direction(xp, p[f"{pre}.W_hh"], mask, rev)
                seqs.append(ad.stack(outs, axis=1))
                finals.append(last)
            x = ad.concat(seqs, axis=-1)
        feat = ad.concat(finals, axis=-1)
        feat = ad.dropout(feat, cfg.dropout_keep, training, rng)
        return feat @ p["out.W"] + p["out.b"]


class CnnModel(ModelState):
    kind = "cnn"

    def logits_from_embedded(self, emb, lengths, rng=None, training=None):
        cfg = self.config
        training = self._training(training)
        width = max(cfg.filter_widths)
        if emb.shape[1] < width:
            pad = Tensor(np.zeros((emb.shape[0], width - emb.shape[1], emb.shape[2])))
            emb = ad.concat([emb, pad], axis=1)
        x = ad.dropout(emb, cfg.dropout_keep, training, rng)
        steps = x.shape[1]
        p = self.params
        pooled = []
        for w in cfg.filter_widths:
            n = steps - w + 1
            windows = ad.concat([x[:, i : i + n, :] for i in range(w)], axis=-1) if w > 1 else x
            conv = ad.relu(windows @ p[f"conv{w}.W"] + p[f"conv{w}.b"])
            pooled.append(ad.max_over_time(conv))
        feat = ad.concat(pooled, axis=-1)
        feat = ad.dropout(feat, cfg.dropout_keep, training, rng)
        return feat @ p["out.W"] + p["out.b"]


def init_bilstm(config: BiLstmConfig, table: EmbeddingTable, seed: int, max_len: int = MAX_LEN) -> BiLstmModel:
    config.validate()
    rng = np.random.default_rng(seed)
    hid = config.hidden
    params = {"embedding": _embedding_param(table, config.embed_dim)}
    in_dim = config.embed_dim
    for layer in range(config.layers):
        for d in ("fw", "bw"):
            pre = f"lstm.l{layer}.{d}"
            params[f"{pre}.W_ih"] = Tensor(_uniform(rng, in_dim, (in_dim, 4 * hid)), True)
            params[f"{pre}.W_hh"] = Tensor(_uniform(rng, hid, (hid, 4 * hid)), True)
            bias = np.zeros(4 * hid)
            bias[hid : 2 * hid] = 1.0  # forget gate
            params[f"{pre}.b"] = Tensor(bias, True)
        in_dim = 2 * hid
    params["out.W"] = Tensor(_uniform(rng, 2 * hid, (2 * hid, config.num_classes)), True)
    params["out.b"] = Tensor(np.zeros(config.num_classes), True)
    return BiLstmModel(config, params, max_len)


def init_cnn(config: CnnConfig, table: EmbeddingTable, seed: int, max_len: int = MAX_LEN) -> CnnModel:
    config.validate()
    rng = np.random.default_rng(seed)
    params = {"embedding": _embedding_param(table, config.embed_dim)}
    nf = config.filters_per_width
    for w in config.filter_widths:
        fan_in = w * config.embed_dim
        params[f"conv{w}.W"] = Tensor(_uniform(rng, fan_in, (fan_in, nf)), True)
        params[f"conv{w}.b"] = Tensor(np.zeros(nf), True)
    feat = nf * len(config.filter_widths)
    params["out.W"] = Tensor(_uniform(rng, feat, (feat, config.num_classes)), True)
    params["out.b"] = Tensor(np.zeros(config.num_classes), True)
    return CnnModel(config, params, max_len)


def param_count(model: ModelState, trainable_only: bool = True) -> int:
    """Scalar parameter count; the frozen PAD embedding row is excluded unless ``trainable_only`` is False."""
    total = sum(t.size for t in model.params.values())
    if trainable_only:
        total -= model.embedding.shape[1]
    return total


def sequence_length(ids) -> int:
    """Length of an encoded sequence with trailing PAD ids stripped."""
    ids = np.asarray(ids)
    nz = np.flatnonzero(ids != PAD_ID)
    return int(nz[-1]) + 1 if nz.size else 0


def pad_ids(ids, max_len: int) -> np.ndarray:
    ids = np.asarray(ids, dtype=np.int64)[:max_len]
    out = np.full(max_len, PAD_ID, dtype=np.int64)
    out[: len(ids)] = ids
    return out


def predict_proba(model: ModelState, ids: np.ndarray, lengths: np.ndarray, batch_size: int = 256) -> np.ndarray:
    """Class probabilities for a batch of padded id rows, dropout disabled."""
    ids = np.atleast_2d(np.asarray(ids, dtype=np.int64))
    lengths = np.atleast_1d(np.asarray(lengths, dtype=np.int64))
    n_cls = model.params["out.b"].shape[0]
    out = np.zeros((len(ids), n_cls))
    with ad.no_grad():
        for s in range(0, len(ids), batch_size):
            z = model.logits(ids[s : s + batch_size], lengths[s : s + batch_size], training=False)
            out[s : s + batch_size] = ad.softmax(z.data)
    return out


def predict(model: ModelState, ids) -> np.ndarray:
    """Probability vector for one encoded sequence."""
    ids = np.asarray(ids, dtype=np.int64).reshape(-1)
    model.check_ids(ids)
    n = sequence_length(ids)
    return predict_proba(model, pad_ids(ids, max(model.max_len, n))[None, :], np.array([n]))[0]


# ---------------------------------------------------------------------------
# checkpoints

CHECKPOINT_FORMAT = "hatelab-checkpoint/1"


def save_checkpoint(path, model: ModelState, vocab: Vocab, label_set, extra: dict | None = None):
    """Write an ``.npz`` container: JSON metadata plus little-endian float64 arrays."""
    cfg = asdict(model.config)
    meta = {
        "format": CHECKPOINT_FORMAT,
        "kind": model.kind,
        "config": cfg,
        "max_len": model.max_len,
        "vocab": vocab.itos,
        "labels": list(label_set),
        "params": [{"name": k, "shape": list(v.shape)} for k, v in model.params.items()],
        "extra": extra or {},
    }
    arrays = {f"param:{k}": v.data.astype("<f8") for k, v in model.params.items()}
    path = Path(path)
    with path.open("wb") as fh:
        np.savez(fh, __meta__=np.array(json.dumps(meta)), **arrays)


@dataclass
class Checkpoint:
    model: ModelState
    vocab: Vocab
    labels: list[str]
    extra: dict = field(default_factory=dict)


def load_checkpoint(path) -> Checkpoint:
    path = Path(path)
    try:
        with np.load(path, allow_pickle=False) as npz:
            meta = json.loads(str(npz["__meta__"]))
            arrays = {k: npz[k] for k in npz.files if k.startswith("param:")}
    except (OSError, ValueError, KeyError) as exc:
        raise HatelabError(f"cannot read checkpoint {path}: {exc}") from exc
    if meta.get("format") != CHECKPOINT_FORMAT:
        raise HatelabError(f"{path}: not a hatelab checkpoint")
    params = {}
    for entry in meta["params"]:
        data = arrays[f"param:{entry['name']}"].astype(np.float64)
        if list(data.shape) != entry["shape"]:
            raise HatelabError(f"{path}: shape mismatch for {entry['name']}")
        params[entry["name"]] = Tensor(data, requires_grad=True)
    if meta["kind"] == "bilstm":
        model: ModelState = BiLstmModel(BiLstmConfig(**meta["config"]), params, meta["max_len"])
    elif meta["kind"] == "cnn":
        model = CnnModel(CnnConfig(**meta["config"]), params, meta["max_len"])
    else:
        raise HatelabError(f"{path}: unknown model kind {meta['kind']!r}")
    return Checkpoint(model.eval(), Vocab(meta["vocab"]), meta["labels"], meta.get("extra", {}))
