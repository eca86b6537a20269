"""Aspect-level sentiment corpus ingestion.

Three input formats are normalized into one canonical representation,
a (tokens, aspect span, polarity) sample:

* SemEval-2014 task-4 XML: ``<sentence>`` elements with ``<aspectTerm>``
  children carrying ``term``, ``polarity`` and character ``from``/``to``.
* Twitter triples: three lines per sample, a sentence with a ``$T$``
  placeholder, the aspect string, and a polarity in {-1, 0, 1}.
* Canonical JSON Lines, one sample per line:
  ``{"id", "tokens", "aspect": [s, e], "polarity", "language"}``.

Samples whose polarity is "conflict" or whose term is "NULL" are dropped
during ingestion.  Tokenization is deterministic: whitespace split, then
leading/trailing punctuation characters detached as separate tokens; the
resulting tokens are stored on the sample so every downstream stage
shares one segmentation.
"""

from __future__ import annotations

import csv
import io
import json
import string
import unicodedata
import warnings
import random
import xml.etree.ElementTree as ET
from dataclasses import dataclass, field, replace
from enum import Enum
from importlib import resources
from pathlib import Path
from typing import Iterable, Sequence

SPLITS = ("train", "test")

_ASCII_PUNCT = set(string.punctuation)


class CorpusFormatError(ValueError):
    """Malformed dataset input."""


class AspectAlignmentError(ValueError):
    """Aspect character offsets that do not land on token boundaries."""


class Polarity(Enum):
    POSITIVE = "positive"
    NEGATIVE = "negative"
    NEUTRAL = "neutral"

    @classmethod
    def from_string(cls, value: str) -> "Polarity":
        try:
            return cls(value)
        except ValueError:
            raise CorpusFormatError(f"unknown polarity {value!r}") from None


@dataclass(frozen=True)
class Sample:
    """One (sentence, aspect span, polarity) unit."""

    id: str
    tokens: tuple[str, ...]
    aspect: tuple[int, int]  # half-open token range
    polarity: Polarity
    language: str = "en"

    def __post_init__(self):
        object.__setattr__(self, "tokens", tuple(self.tokens))
        object.__setattr__(self, "aspect", (int(self.aspect[0]), int(self.aspect[1])))
        if len(self.tokens) < 1:
            raise CorpusFormatError(f"sample {self.id!r}: empty token list")
        if any(t == "" for t in self.tokens):
            raise CorpusFormatError(f"sample {self.id!r}: empty token")
        s, e = self.aspect
        if not (0 <= s < e <= len(self.tokens)):
            raise CorpusFormatError(
                f"sample {self.id!r}: aspect range [{s}, {e}) invalid for {len(self.tokens)} tokens"
            )

    @property
    def aspect_tokens(self) -> tuple[str, ...]:
        return self.tokens[self.aspect[0]:self.aspect[1]]


@dataclass
class Dataset:
    name: str
    split: str
    samples: list[Sample] = field(default_factory=list)

    def __post_init__(self):
        if self.split not in SPLITS:
            raise CorpusFormatError(f"split must be one of {SPLITS}, got {self.split!r}")
        seen = set()
        for s in self.samples:
            if s.id in seen:
                raise CorpusFormatError(f"duplicate sample id {s.id!r} in {self.name}/{self.split}")
            seen.add(s.id)

    def __len__(self) -> int:
        return len(self.samples)


# ---------------------------------------------------------------------------
# Tokenization
# ---------------------------------------------------------------------------

def _is_punct(ch: str) -> bool:
    return ch in _ASCII_PUNCT or unicodedata.category(ch).startswith("P")


def tokenize_with_spans(text: str) -> list[tuple[str, int, int]]:
    """Whitespace tokens with punctuation detached, plus char offsets.

    Leading and trailing punctuation characters of each whitespace chunk
    become one-character tokens; internal punctuation (don't, 3.5) stays
    attached.
    """
    out: list[tuple[str, int, int]] = []
    i = 0
    n = len(text)
    while i < n:
        if text[i].isspace():
            i += 1
            continue
        j = i
        while j < n and not text[j].isspace():
            j += 1
        a, b = i, j
        while a < b and _is_punct(text[a]):
            out.append((text[a], a, a + 1))
            a += 1
        trailing = []
        while b > a and _is_punct(text[b - 1]):
            trailing.append((text[b - 1], b - 1, b))
            b -= 1
        if a < b:
            out.append((text[a:b], a, b))
        out.extend(reversed(trailing))
        i = j
    return out


def tokenize(text: str) -> list[str]:
    return [tok for tok, _, _ in tokenize_with_spans(text)]


def align_char_span(
    spans: Sequence[tuple[str, int, int]],
    start: int,
    end: int,
    *,
    sentence_id: str,
    lenient: bool = False,
) -> tuple[int, int]:
    """Map a character range to the covering token range.

    Strict mode requires the range to land exactly on token boundaries;
    with ``lenient`` the range snaps outward to the enclosing tokens and a
    warning is emitted instead.
    """
    overlapping = [k for k, (_, s, e) in enumerate(spans) if s < end and e > start]
    if not overlapping:
        raise AspectAlignmentError(
            f"sentence {sentence_id!r}: no token overlaps characters [{start}, {end})"
        )
    lo, hi = overlapping[0], overlapping[-1]
    exact = spans[lo][1] == start and spans[hi][2] == end
    if not exact:
        if not lenient:
            raise AspectAlignmentError(
                f"sentence {sentence_id!r}: aspect characters [{start}, {end}) "
                f"do not align to token boundaries"
            )
        warnings.warn(
            f"sentence {sentence_id!r}: aspect [{start}, {end}) snapped outward to token boundaries",
            stacklevel=2,
        )
    return lo, hi + 1


# ---------------------------------------------------------------------------
# SemEval-2014 XML
# ---------------------------------------------------------------------------

def parse_semeval_xml(
    raw: bytes | str,
    name: str = "semeval",
    split: str = "train",
    language: str = "en",
    lenient_align: bool = False,
) -> Dataset:
    """One sample per aspect term; conflict polarities and NULL terms dropped."""
    try:
        root = ET.fromstring(raw)
    except ET.ParseError as exc:
        line, col = exc.position
        raise CorpusFormatError(f"malformed XML at line {line}, column {col}: {exc.msg}") from exc

    samples: list[Sample] = []
    for sent in root.iter("sentence"):
        sid = sent.get("id", f"s{len(samples)}")
        text_el = sent.find("text")
        if text_el is None or text_el.text is None:
            continue
        text = text_el.text
        spans = tokenize_with_spans(text)
        if not spans:
            continue
        tokens = tuple(tok for tok, _, _ in spans)
        terms = sent.find("aspectTerms")
        if terms is None:
            continue
        for k, term in enumerate(terms.findall("aspectTerm")):
            polarity = term.get("polarity", "")
            surface = term.get("term", "")
            if polarity == "conflict" or surface == "NULL":
                continue
            try:
                start = int(term.get("from"))
                end = int(term.get("to"))
            except (TypeError, ValueError):
                raise CorpusFormatError(
                    f"sentence {sid!r}: aspect term missing integer from/to offsets"
                ) from None
            s, e = align_char_span(
                spans, start, end, sentence_id=sid, lenient=lenient_align
            )
            samples.append(
                Sample(
                    id=f"{sid}:{k}",
                    tokens=tokens,
                    aspect=(s, e),
                    polarity=Polarity.from_string(polarity),
                    language=language,
                )
            )
    return Dataset(name=name, split=split, samples=samples)


# ---------------------------------------------------------------------------
# Twitter three-line format
# ---------------------------------------------------------------------------

_TWITTER_POLARITY = {"-1": Polarity.NEGATIVE, "0": Polarity.NEUTRAL, "1": Polarity.POSITIVE}


def parse_twitter(
    raw: str,
    name: str = "twitter",
    split: str = "train",
    language: str = "en",
) -> Dataset:
    """Three lines per sample: sentence with $T$, aspect, polarity."""
    lines = raw.splitlines()
    while lines and not lines[-1].strip():
        lines.pop()
    if len(lines) % 3 != 0:
        raise CorpusFormatError(
            f"line count {len(lines)} not divisible by 3 (dangling lines at the end)"
        )
    samples: list[Sample] = []
    for k in range(0, len(lines), 3):
        index = k // 3
        sentence, aspect_text, pol_line = lines[k], lines[k + 1].strip(), lines[k + 2].strip()
        left, placeholder, right = sentence.partition("$T$")
        if not placeholder:
            raise CorpusFormatError(f"sample {index}: sentence has no $T$ placeholder")
        polarity = _TWITTER_POLARITY.get(pol_line)
        if polarity is None:
            raise CorpusFormatError(f"sample {index}: polarity {pol_line!r} not in -1/0/1")
        left_tokens = tokenize(left)
        aspect_tokens = tokenize(aspect_text)
        right_tokens = tokenize(right)
        if not aspect_tokens:
            raise CorpusFormatError(f"sample {index}: empty aspect")
        tokens = tuple(left_tokens + aspect_tokens + right_tokens)
        s = len(left_tokens)
        samples.append(
            Sample(
                id=str(index),
                tokens=tokens,
                aspect=(s, s + len(aspect_tokens)),
                polarity=polarity,
                language=language,
            )
        )
    return Dataset(name=name, split=split, samples=samples)


# ---------------------------------------------------------------------------
# Canonical JSON Lines
# ---------------------------------------------------------------------------

def sample_to_record(sample: Sample) -> dict:
    return {
        "id": sample.id,
        "tokens": list(sample.tokens),
        "aspect": [sample.aspect[0], sample.aspect[1]],
        "polarity": sample.polarity.value,
        "language": sample.language,
    }


def sample_from_record(record: dict) -> Sample:
    try:
        return Sample(
            id=str(record["id"]),
            tokens=tuple(record["tokens"]),
            aspect=(record["aspect"][0], record["aspect"][1]),
            polarity=Polarity.from_string(record["polarity"]),
            language=str(record.get("language", "en")),
        )
    except (KeyError, IndexError, TypeError) as exc:
        raise CorpusFormatError(f"malformed sample record: {exc}") from exc


def write_jsonl(path, dataset: Dataset) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for sample in dataset.samples:
            fh.write(json.dumps(sample_to_record(sample), ensure_ascii=False) + "\n")


def read_jsonl(path, name: str = "dataset", split: str = "train") -> Dataset:
    samples = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                record = json.loads(line)
            except json.JSONDecodeError as exc:
                raise CorpusFormatError(f"{path}:{lineno}: invalid JSON: {exc}") from exc
            samples.append(sample_from_record(record))
    return Dataset(name=name, split=split, samples=samples)


# ---------------------------------------------------------------------------
# Statistics and splitting
# ---------------------------------------------------------------------------

def bundled_fixture_path() -> Path:
    """Path of the bundled 20-sentence fixture corpus (canonical JSONL)."""
    return Path(str(resources.files("treeprobe.data").joinpath("fixture_corpus.jsonl")))


def stats(dataset: Dataset) -> dict[str, int]:
    """Per-polarity sample counts; always lists all three labels."""
    counts = {p.value: 0 for p in Polarity}
    for sample in dataset.samples:
        counts[sample.polarity.value] += 1
    return counts


def stats_csv(datasets: Iterable[Dataset]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf)
    writer.writerow(["split", "positive", "negative", "neutral"])
    for d in datasets:
        c = stats(d)
        writer.writerow([d.split, c["positive"], c["negative"], c["neutral"]])
    return buf.getvalue()


def train_dev_split(dataset: Dataset, dev_fraction: float = 0.2, seed: int = 0) -> tuple[Dataset, Dataset]:
    """Deterministic shuffled split; the dev part takes the given fraction."""
    if not (0.0 < dev_fraction < 1.0):
        raise ValueError(f"dev_fraction must be in (0, 1), got {dev_fraction}")
    order = list(range(len(dataset.samples)))
    random.Random(seed).shuffle(order)
    n_dev = max(1, round(len(order) * dev_fraction)) if order else 0
    dev_idx = set(order[:n_dev])
    train = [s for i, s in enumerate(dataset.samples) if i not in dev_idx]
    dev = [s for i, s in enumerate(dataset.samples) if i in dev_idx]
    return (
        replace(dataset, samples=train),
        replace(dataset, name=f"{dataset.name}-dev", samples=dev),
    )
