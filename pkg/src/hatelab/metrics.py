"""Confusion matrices, precision/recall/F1 averages and multi-run aggregation."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np


@dataclass(frozen=True)
class ConfusionMatrix:
    classes: tuple[str, ...]
    counts: np.ndarray  # rows = true class, columns = predicted class

    @property
    def total(self) -> int:
        return int(self.counts.sum())

    def misclassification_rate(self, label: str) -> float:
        i = self.classes.index(label)
        row = self.counts[i]
        return float(row.sum() - row[i]) / row.sum() if row.sum() else 0.0

    def render(self) -> str:
        """Aligned integer grid with true classes as rows."""
        names = [str(c) for c in self.classes]
        width = max(len(n) for n in names + [str(self.counts.max() if self.counts.size else 0), "true\\pred"])
        head = "true\\pred".ljust(width) + " " + " ".join(n.rjust(width) for n in names)
        lines = [head]
        for name, row in zip(names, self.counts):
            lines.append(name.ljust(width) + " " + " ".join(str(int(v)).rjust(width) for v in row))
        return "\n".join(lines)


def confusion(labels: Sequence, preds: Sequence, classes: Sequence) -> ConfusionMatrix:
    if len(labels) != len(preds):
        raise ValueError(f"labels ({len(labels)}) and preds ({len(preds)}) differ in length")
    if not len(labels):
        raise ValueError("no samples to score")
    classes = tuple(classes)
    pos = {c: i for i, c in enumerate(classes)}
    counts = np.zeros((len(classes), len(classes)), dtype=np.int64)
    for y, p in zip(labels, preds):
        if y not in pos or p not in pos:
            raise ValueError(f"value outside classes {classes}: label={y!r} pred={p!r}")
        counts[pos[y], pos[p]] += 1
    return ConfusionMatrix(classes, counts)


def _safe_div(num, den):
    num = np.asarray(num, dtype=np.float64)
    den = np.asarray(den, dtype=np.float64)
    return np.divide(num, den, out=np.zeros_like(num), where=den != 0)


@dataclass(frozen=True)
class ScoreReport:
    classes: tuple[str, ...]
    precision: np.ndarray
    recall: np.ndarray
    f1: np.ndarray
    support: np.ndarray
    micro_f1: float
    macro_f1: float
    weighted_f1: float

    def as_dict(self) -> dict[str, float]:
        out = {"micro_f1": self.micro_f1, "macro_f1": self.macro_f1, "weighted_f1": self.weighted_f1}
        for i, c in enumerate(self.classes):
            out[f"precision[{c}]"] = float(self.precision[i])
            out[f"recall[{c}]"] = float(self.recall[i])
            out[f"f1[{c}]"] = float(self.f1[i])
        return out


def scores(cm: ConfusionMatrix) -> ScoreReport:
    """Per-class and averaged scores; any zero denominator yields 0."""
    c = cm.counts.astype(np.float64)
    if c.sum() <= 0:
        raise ValueError("empty confusion matrix")
    tp = np.diag(c)
    fp = c.sum(axis=0) - tp
    fn = c.sum(axis=1) - tp
    support = c.sum(axis=1)
    p = _safe_div(tp, tp + fp)
    r = _safe_div(tp, tp + fn)
    f1 = _safe_div(2 * p * r, p + r)
    gtp, gfp, gfn = tp.sum(), fp.sum(), fn.sum()
    mp = _safe_div(gtp, gtp + gfp)
    mr = _safe_div(gtp, gtp + gfn)
    micro = float(_safe_div(2 * mp * mr, mp + mr))
    return ScoreReport(
        classes=cm.classes,
        precision=p,
        recall=r,
        f1=f1,
        support=support.astype(np.int64),
        micro_f1=micro,
        macro_f1=float(f1.mean()),
        weighted_f1=float((f1 * support).sum() / support.sum()),
    )


def evaluate(labels: Sequence, preds: Sequence, classes: Sequence) -> tuple[ConfusionMatrix, ScoreReport]:
    cm = confusion(labels, preds, classes)
    return cm, scores(cm)


@dataclass(frozen=True)
class Aggregate:
    mean: float
    sd: float
    n: int

    def render(self, scale: float = 1.0) -> str:
        return format_mean_sd(self.mean * scale, self.sd * scale)


def mean_sd(values: Sequence[float]) -> Aggregate:
    """Arithmetic mean and population standard deviation."""
    v = np.asarray(values, dtype=np.float64)
    if v.size == 0:
        raise ValueError("need at least one value")
    return Aggregate(float(v.mean()), float(v.std(ddof=0)), int(v.size))


def format_mean_sd(mean: float, sd: float) -> str:
    """``"77.19 (0)"`` style cell: two decimals, a bare 0 for a zero sd."""
    sd_txt = "0" if round(sd, 2) == 0 else f"{sd:.2f}"
    return f"{mean:.2f} ({sd_txt})"


def aggregate(reports: Sequence[ScoreReport | dict]) -> dict[str, Aggregate]:
    """Mean and population sd of every metric across runs."""
    if not reports:
        raise ValueError("need at least one report")
    dicts = [r.as_dict() if isinstance(r, ScoreReport) else dict(r) for r in reports]
    keys = list(dicts[0])
    return {k: mean_sd([d[k] for d in dicts]) for k in keys}
