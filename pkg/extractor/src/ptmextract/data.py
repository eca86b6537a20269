"""Canonical JSON Lines dataset handling.

The input format is one sample per line:

    {"id": str, "tokens": [str, ...], "aspect": [start, end),
     "polarity": "positive" | "negative" | "neutral", "language": str}

which is the hand-off format of the tree-probing toolkit this package
feeds.  Only files are shared between the two packages, never code.
"""

from __future__ import annotations

import json
import random
from dataclasses import dataclass
from typing import Sequence

POLARITIES = ("negative", "neutral", "positive")
LABEL_OF = {p: i for i, p in enumerate(POLARITIES)}


class DataError(ValueError):
    pass


@dataclass(frozen=True)
class AspectSample:
    id: str
    tokens: tuple[str, ...]
    aspect: tuple[int, int]
    polarity: str
    language: str = "en"

    def __post_init__(self):
        s, e = self.aspect
        if not self.tokens or not (0 <= s < e <= len(self.tokens)):
            raise DataError(f"sample {self.id!r}: bad tokens/aspect")
        if self.polarity not in POLARITIES:
            raise DataError(f"sample {self.id!r}: unknown polarity {self.polarity!r}")

    @property
    def sentence(self) -> str:
        return " ".join(self.tokens)

    @property
    def aspect_text(self) -> str:
        return " ".join(self.tokens[self.aspect[0]:self.aspect[1]])

    @property
    def label(self) -> int:
        return LABEL_OF[self.polarity]


def load_canonical_jsonl(path) -> list[AspectSample]:
    samples = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                rec = json.loads(line)
                samples.append(AspectSample(
                    id=str(rec["id"]),
                    tokens=tuple(rec["tokens"]),
                    aspect=(int(rec["aspect"][0]), int(rec["aspect"][1])),
                    polarity=str(rec["polarity"]),
                    language=str(rec.get("language", "en")),
                ))
            except (json.JSONDecodeError, KeyError, IndexError, TypeError) as exc:
                raise DataError(f"{path}:{lineno}: malformed sample: {exc}") from exc
    if not samples:
        raise DataError(f"{path}: no samples")
    return samples


def dev_split(samples: Sequence[AspectSample], fraction: float, seed: int):
    """Deterministic shuffled split; same seed, same membership."""
    if not (0.0 < fraction < 1.0):
        raise DataError(f"dev fraction must be in (0, 1), got {fraction}")
    order = list(range(len(samples)))
    random.Random(seed).shuffle(order)
    n_dev = max(1, round(len(order) * fraction))
    dev_idx = set(order[:n_dev])
    train = [s for i, s in enumerate(samples) if i not in dev_idx]
    dev = [s for i, s in enumerate(samples) if i in dev_idx]
    return train, dev
