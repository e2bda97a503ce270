"""Tweet cleaning and whitespace tokenization.

Rules run in a fixed order: URLs, emails and IPv4 addresses are cut out
while their punctuation is still intact, then digits, then every character
that is not an ASCII letter or whitespace, then case folding and whitespace
collapse. The output alphabet is ``[a-z ]``, which makes :func:`clean`
idempotent.
"""
from __future__ import annotations

import re

URL_RE = re.compile(r"(?:(?:https?|ftp)://|www\.)\S+|\bt\.co/\S*", re.IGNORECASE)
EMAIL_RE = re.compile(r"[\w.+-]+@[\w-]+(?:\.[\w-]+)+")
IPV4_RE = re.compile(r"\b(?:\d{1,3}\.){3}\d{1,3}\b")
DIGIT_RE = re.compile(r"\d+")
# '#', '@', punctuation, emoji and any non-ASCII letter
SYMBOL_RE = re.compile(r"[^A-Za-z\s]+")
SPACE_RE = re.compile(r"\s+")


def clean(raw: str) -> str:
    text = URL_RE.sub(" ", raw)
    text = EMAIL_RE.sub(" ", text)
    text = IPV4_RE.sub(" ", text)
    text = DIGIT_RE.sub("", text)
    text = SYMBOL_RE.sub("", text)
    text = text.lower()
    return SPACE_RE.sub(" ", text).strip()


def tokenize(text: str) -> list[str]:
    return [tok for tok in text.split(" ") if tok]


def clean_tokens(raw: str) -> list[str]:
    return tokenize(clean(raw))
