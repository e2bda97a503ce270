"""Flat ``section.key = value`` run configuration."""
from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

from .errors import ConfigError

DEFAULTS: dict[str, str] = {
    "data.train": "",
    "data.test": "",
    "data.task": "",
    "data.dev_fraction": "0.1",
    "data.split_seed": "0",
    "embed.glove": "",
    "embed.min_freq": "1",
    "embed.max_len": "64",
    "embed.seed": "0",
    "model.kind": "bilstm",
    "model.dropout_keep": "0.5",
    "model.hidden": "20",
    "model.layers": "2",
    "model.filters": "100",
    "model.filter_widths": "2,3,4",
    "train.epochs": "6",
    "train.batch_size": "64",
    "train.base_lr": "0.003",
    "train.warmup_fraction": "0.1",
    "train.optimizer": "adam",
    "train.schedule": "true",
    "train.seeds": "1,2,3",
    "augment.technique": "none",
    "augment.wordlist": "",
    "augment.removals": "",
    "augment.continuations": "",
    "output.dir": "runs/latest",
}

PATH_KEYS = ("data.train", "data.test", "embed.glove", "augment.wordlist", "augment.removals", "augment.continuations")


def parse_text(text: str, source: str = "<config>") -> dict[str, str]:
    values: dict[str, str] = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        key, sep, value = line.partition("=")
        key = key.strip()
        if not sep or not key:
            raise ConfigError(f"{source}:{lineno}: expected 'section.key = value'")
        if key not in DEFAULTS:
            raise ConfigError(f"{source}:{lineno}: unknown key {key!r}")
        values[key] = value.strip()
    return values


def _bool(key: str, v: str) -> bool:
    low = v.lower()
    if low in ("true", "yes", "1", "on"):
        return True
    if low in ("false", "no", "0", "off"):
        return False
    raise ConfigError(f"{key}: expected a boolean, got {v!r}")


def _num(key: str, v: str, kind):
    try:
        return kind(v)
    except ValueError:
        raise ConfigError(f"{key}: expected {kind.__name__}, got {v!r}") from None


def _ints(key: str, v: str) -> tuple[int, ...]:
    return tuple(_num(key, part.strip(), int) for part in v.split(",") if part.strip())


@dataclass
class RunConfig:
    raw: dict[str, str] = field(default_factory=dict)
    base_dir: Path = Path(".")

    def get(self, key: str) -> str:
        return self.raw.get(key, DEFAULTS[key])

    def path(self, key: str) -> Path | None:
        v = self.get(key)
        if not v:
            return None
        p = Path(v)
        return p if p.is_absolute() else self.base_dir / p

    def get_int(self, key: str) -> int:
        return _num(key, self.get(key), int)

    def get_float(self, key: str) -> float:
        return _num(key, self.get(key), float)

    def get_bool(self, key: str) -> bool:
        return _bool(key, self.get(key))

    def get_ints(self, key: str) -> tuple[int, ...]:
        return _ints(key, self.get(key))

    def resolved(self) -> dict[str, str]:
        return {k: self.get(k) for k in DEFAULTS}

    def validate(self) -> None:
        from .corpus import get_schema

        if not self.get("data.train"):
            raise ConfigError("data.train: required")
        try:
            get_schema(self.get("data.task"))
        except ValueError as exc:
            raise ConfigError(f"data.task: {exc}") from None
        for key in PATH_KEYS:
            p = self.path(key)
            if p is not None and not p.exists():
                raise ConfigError(f"{key}: file not found: {p}")
        if self.get("model.kind") not in ("bilstm", "cnn"):
            raise ConfigError("model.kind: must be 'bilstm' or 'cnn'")
        if not self.get_ints("train.seeds"):
            raise ConfigError("train.seeds: at least one seed required")
        frac = self.get_float("data.dev_fraction")
        if not 0 < frac < 1:
            raise ConfigError("data.dev_fraction: must lie in (0, 1)")
        tech = self.get("augment.technique")
        if tech not in ("none", "deletion", "generated"):
            raise ConfigError("augment.technique: must be none, deletion or generated")
        if tech == "deletion" and not self.get("augment.wordlist"):
            raise ConfigError("augment.wordlist: required for deletion")
        if tech == "generated" and not self.get("augment.continuations"):
            raise ConfigError("augment.continuations: required for generated")
        for key in ("train.epochs", "train.batch_size", "embed.max_len", "embed.min_freq", "model.hidden", "model.layers", "model.filters"):
            if self.get_int(key) < 1:
                raise ConfigError(f"{key}: must be >= 1")
        for key in ("train.base_lr", "model.dropout_keep", "train.warmup_fraction"):
            self.get_float(key)
        self.get_bool("train.schedule")
        self.get_ints("model.filter_widths")


def load(path) -> RunConfig:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    return RunConfig(parse_text(text, str(path)), path.parent)


def dump(cfg: RunConfig) -> str:
    """Every key with file paths made absolute, so the dump can be re-run from anywhere."""
    values = cfg.resolved()
    for key in PATH_KEYS:
        if values[key]:
            values[key] = str(cfg.path(key).resolve())
    return "".join(f"{k} = {v}\n" for k, v in values.items())
