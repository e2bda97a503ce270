"""Integrated Gradients over input embeddings, with HTML rendering."""
from __future__ import annotations

import html
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from . import autodiff as ad
from .autodiff import Tensor
from .corpus import BENIGN_LABELS
from .embed import PAD_ID, Vocab
from .errors import StateError
from .models import ModelState, pad_ids, sequence_length


@dataclass
class IgConfig:
    steps: int = 50
    baseline: str = "pad_sequence"  # or "zero_embedding"
    target: int | None = None  # None -> predicted class

    def __post_init__(self):
        if self.steps < 1:
            raise ValueError("steps must be >= 1")
        if self.baseline not in ("pad_sequence", "zero_embedding"):
            raise ValueError(f"unknown baseline {self.baseline!r}")


def path_integral(forward: Callable[[Tensor], Tensor], x, baseline, steps: int) -> np.ndarray:
    """Right-endpoint Riemann approximation of Integrated Gradients.

    ``forward`` maps a stack of ``steps`` path points, shape ``(steps, *x.shape)``,
    to the ``steps`` scalar scores. The points are independent, so a single
    reverse pass over the summed scores yields every per-point gradient.
    """
    if steps < 1:
        raise ValueError("steps must be >= 1")
    x = np.asarray(x, dtype=np.float64)
    b = np.asarray(baseline, dtype=np.float64)
    alphas = np.arange(1, steps + 1, dtype=np.float64) / steps
    alphas = alphas.reshape((steps,) + (1,) * x.ndim)
    pts = Tensor(b[None] + alphas * (x - b)[None], requires_grad=True)
    out = forward(pts)
    grads = ad.backward(out.sum(), [pts])[pts]
    return (x - b) * (grads.sum(axis=0) / steps)


@dataclass
class AttributionReport:
    tokens: list[str]
    attributions: np.ndarray
    prediction: str
    target: str
    probabilities: np.ndarray
    score: float
    baseline_score: float
    model_kind: str = ""
    text: str = ""
    label: str | None = None
    notes: list[str] = field(default_factory=list)

    @property
    def residual(self) -> float:
        return abs(float(self.attributions.sum()) - (self.score - self.baseline_score))


def _inputs(model: ModelState, ids) -> tuple[np.ndarray, int]:
    ids = np.asarray(ids, dtype=np.int64).reshape(-1)
    model.check_ids(ids)
    n = sequence_length(ids)
    return pad_ids(ids, max(model.max_len, n)), n


def _baseline(model: ModelState, ids: np.ndarray, cfg: IgConfig) -> np.ndarray:
    if cfg.baseline == "zero_embedding":
        return np.zeros((len(ids), model.embedding.shape[1]))
    return model.embedding.data[np.full(len(ids), PAD_ID)]


def target_score(model: ModelState, emb: np.ndarray, length: int, target: int) -> float:
    with ad.no_grad():
        z = model.logits_from_embedded(Tensor(emb[None]), np.array([length]), training=False)
    return float(z.data[0, target])


def integrated_gradients(model: ModelState, ids, cfg: IgConfig | None = None) -> np.ndarray:
    """Per-position, per-dimension IG of the target-class logit.

    Returns an array shaped like the (padded) input embedding sequence;
    PAD positions carry no attribution.
    """
    cfg = cfg or IgConfig()
    if model.training:
        raise StateError("integrated_gradients needs the model in eval mode")
    ids, n = _inputs(model, ids)
    x = model.embedding.data[ids]
    b = _baseline(model, ids, cfg)
    target = cfg.target
    if target is None:
        with ad.no_grad():
            target = int(np.argmax(model.logits(ids[None], [n], training=False).data[0]))
    lengths = np.full(cfg.steps, n)

    def forward(pts: Tensor) -> Tensor:
        return model.logits_from_embedded(pts, lengths, training=False)[:, target]

    raw = path_integral(forward, x, b, cfg.steps)
    raw[n:] = 0.0
    return raw


def token_attributions(raw: np.ndarray, length: int | None = None) -> np.ndarray:
    """Sum over embedding dimensions; positions at or beyond ``length`` are zeroed."""
    scores = np.asarray(raw, dtype=np.float64).sum(axis=-1)
    if length is not None:
        scores = scores.copy()
        scores[length:] = 0.0
    return scores


def explain(model: ModelState, vocab: Vocab, labels: Sequence[str], tokens: Sequence[str], cfg: IgConfig | None = None, text: str = "") -> AttributionReport:
    cfg = cfg or IgConfig()
    ids, n = vocab.encode(tokens, model.max_len)
    x = model.embedding.data[ids]
    with ad.no_grad():
        logits = model.logits(ids[None], [n], training=False).data[0]
    pred = int(np.argmax(logits))
    target = pred if cfg.target is None else cfg.target
    run_cfg = IgConfig(cfg.steps, cfg.baseline, target)
    raw = integrated_gradients(model, ids, run_cfg)
    scores = token_attributions(raw, n)[:n]
    notes = []
    if model.kind == "cnn":
        notes.append("attributions for the CNN classifier (exploratory)")
    return AttributionReport(
        tokens=list(tokens)[:n],
        attributions=scores,
        prediction=labels[pred],
        target=labels[target],
        probabilities=ad.softmax(logits),
        score=float(logits[target]),
        baseline_score=target_score(model, _baseline(model, ids, run_cfg), n, target),
        model_kind=model.kind,
        text=text,
        notes=notes,
    )


# ---------------------------------------------------------------------------
# HTML

RED = (220, 38, 38)
GREEN = (22, 163, 74)


def token_colors(scores: Sequence[float], target: str, benign=BENIGN_LABELS) -> list[tuple[tuple[int, int, int] | None, float]]:
    """(rgb, alpha) per token; red pushes toward an offensive class, green away from it.

    A positive score supports ``target``, so the sign flips when the target
    is itself a benign label.
    """
    s = np.asarray(scores, dtype=np.float64)
    peak = np.abs(s).max() if s.size else 0.0
    sign = -1.0 if target in benign else 1.0
    out = []
    for v in s:
        if peak == 0 or v == 0:
            out.append((None, 0.0))
            continue
        toward_offensive = sign * v > 0
        out.append((RED if toward_offensive else GREEN, float(abs(v) / peak)))
    return out


_PAGE = """<!DOCTYPE html>
<html lang="en"><head><meta charset="utf-8"><title>{title}</title>
<style>
body {{ font-family: sans-serif; margin: 2em; }}
.tok {{ padding: 2px 4px; margin: 1px; border-radius: 3px; display: inline-block; }}
table.meta td {{ padding: 2px 12px 2px 0; }}
</style></head><body>
{body}
</body></html>
"""


def report_fragment(report: AttributionReport) -> str:
    spans = []
    for tok, score, (rgb, alpha) in zip(report.tokens, report.attributions, token_colors(report.attributions, report.target)):
        style = "" if rgb is None else f' style="background-color: rgba({rgb[0]},{rgb[1]},{rgb[2]},{alpha:.4f})"'
        spans.append(f'<span class="tok"{style} title="{score:.6f}">{html.escape(tok)}</span>')
    rows = [
        ("model", report.model_kind),
        ("prediction", report.prediction),
        ("target class", report.target),
        ("true label", report.label or "-"),
        ("F(input)", f"{report.score:.6f}"),
        ("F(baseline)", f"{report.baseline_score:.6f}"),
        ("sum of attributions", f"{float(report.attributions.sum()):.6f}"),
        ("completeness residual", f"{report.residual:.6f}"),
    ]
    meta = "".join(f"<tr><td>{html.escape(k)}</td><td>{html.escape(str(v))}</td></tr>" for k, v in rows)
    notes = "".join(f"<p><em>{html.escape(n)}</em></p>" for n in report.notes)
    src = f"<p>{html.escape(report.text)}</p>" if report.text else ""
    return f'<div class="report">{src}<p>{" ".join(spans)}</p><table class="meta">{meta}</table>{notes}</div>'


def render_report(report: AttributionReport, out) -> Path:
    out = Path(out)
    out.write_text(_PAGE.format(title="Attribution report", body=report_fragment(report)), encoding="utf-8")
    return out


def render_index(entries: Sequence[tuple[str, AttributionReport]], out) -> Path:
    """Index page linking to per-text reports, given (filename, report) pairs."""
    items = []
    for fname, rep in entries:
        label = html.escape(rep.text or " ".join(rep.tokens))
        items.append(f'<li><a href="{html.escape(fname)}">{label}</a> &rarr; {html.escape(rep.prediction)} '
                     f"(residual {rep.residual:.6f})</li>")
    out = Path(out)
    out.write_text(_PAGE.format(title="Attribution index", body="<ul>" + "".join(items) + "</ul>"), encoding="utf-8")
    return out
