"""Structural metrics over collections of dependency trees.

* neighboring proportion - fraction of non-root edges linking adjacent
  sentence positions (|i - head(i)| = 1), pooled over the corpus by
  default (per-sentence averaging available behind a flag);
* aspect-sentiment distance (AsD) - per sample, the mean undirected tree
  distance between aspect tokens and sentiment-lexicon tokens, averaged
  over the samples that contain at least one lexicon match;
* paired variant (pAsD) - same, but restricted to annotated
  (aspect, opinion-token) pairs;
* attachment agreement - fraction of tokens whose undirected neighbor
  set coincides between two aligned tree lists.

Distances are counted in edges on the undirected tree; the artificial
root attachment is not an edge.  Lexicon matching is lowercase exact
token match, one contribution per matching token occurrence.
"""

from __future__ import annotations

import json
import csv
import io
from collections import deque
from dataclasses import dataclass, field
from importlib import resources
from typing import Iterable, Mapping, Sequence

from .corpus import Sample
from .decode import DepTree


class MetricsError(ValueError):
    pass


@dataclass(frozen=True)
class SentimentLexicon:
    """Lowercase sentiment word lists, disjointly split by polarity."""

    positive: frozenset[str]
    negative: frozenset[str]

    def __post_init__(self):
        object.__setattr__(self, "positive", frozenset(w.lower() for w in self.positive))
        object.__setattr__(self, "negative", frozenset(w.lower() for w in self.negative))
        if not self.positive or not self.negative:
            raise MetricsError("lexicon partitions must be non-empty")
        overlap = self.positive & self.negative
        if overlap:
            raise MetricsError(f"lexicon partitions overlap: {sorted(overlap)}")

    @property
    def words(self) -> frozenset[str]:
        return self.positive | self.negative


def default_lexicon() -> SentimentLexicon:
    """The bundled lexicon used for the distance analyses."""
    text = resources.files("treeprobe.data").joinpath("sentiment_lexicon.json").read_text("utf-8")
    doc = json.loads(text)
    return SentimentLexicon(positive=frozenset(doc["positive"]), negative=frozenset(doc["negative"]))


def load_lexicon(path) -> SentimentLexicon:
    with open(path, encoding="utf-8") as fh:
        doc = json.load(fh)
    return SentimentLexicon(positive=frozenset(doc["positive"]), negative=frozenset(doc["negative"]))


# ---------------------------------------------------------------------------
# Neighboring-connection proportion
# ---------------------------------------------------------------------------

def neighboring_proportion(trees: Sequence[DepTree], per_sentence: bool = False) -> float:
    """Share of non-root edges connecting adjacent positions."""
    if not trees:
        raise MetricsError("no trees given")
    if per_sentence:
        values = []
        for t in trees:
            edges = t.edges()
            if edges:
                values.append(sum(abs(h - d) == 1 for h, d in edges) / len(edges))
        if not values:
            raise MetricsError("no edges in any tree (all single-word sentences)")
        return sum(values) / len(values)
    adjacent = total = 0
    for t in trees:
        for h, d in t.edges():
            total += 1
            adjacent += abs(h - d) == 1
    if total == 0:
        raise MetricsError("no edges in any tree (all single-word sentences)")
    return adjacent / total


# ---------------------------------------------------------------------------
# Aspect-sentiment distances
# ---------------------------------------------------------------------------

def _distances_from(tree_adj: list[set[int]], start: int) -> list[int]:
    dist = [-1] * len(tree_adj)
    dist[start] = 0
    queue = deque([start])
    while queue:
        u = queue.popleft()
        for v in tree_adj[u]:
            if dist[v] < 0:
                dist[v] = dist[u] + 1
                queue.append(v)
    return dist


def _check_aligned(samples: Sequence[Sample], trees: Sequence[DepTree]) -> None:
    if len(samples) != len(trees):
        raise MetricsError(f"{len(samples)} samples vs {len(trees)} trees")
    for sample, tree in zip(samples, trees):
        if len(sample.tokens) != tree.n:
            raise MetricsError(
                f"sample {sample.id!r}: {len(sample.tokens)} tokens but a {tree.n}-word tree"
            )


def sample_asd(sample: Sample, tree: DepTree, lexicon: SentimentLexicon) -> float | None:
    """Mean tree distance aspect-token x matched-sentiment-token.

    None when the sentence contains no lexicon word (the sample then does
    not contribute to the corpus average).
    """
    matched = [k for k, tok in enumerate(sample.tokens) if tok.lower() in lexicon.words]
    if not matched:
        return None
    adj = tree.neighbors()
    s, e = sample.aspect
    total = 0
    for w in range(s, e):
        dist = _distances_from(adj, w)
        total += sum(dist[c] for c in matched)
    return total / ((e - s) * len(matched))


def asd_details(
    samples: Sequence[Sample],
    trees: Sequence[DepTree],
    lexicon: SentimentLexicon,
) -> tuple[float, int]:
    """(corpus AsD, number of contributing samples)."""
    _check_aligned(samples, trees)
    values = []
    for sample, tree in zip(samples, trees):
        v = sample_asd(sample, tree, lexicon)
        if v is not None:
            values.append(v)
    if not values:
        raise MetricsError("no sample contains a lexicon word; AsD undefined")
    return sum(values) / len(values), len(values)


def asd(samples: Sequence[Sample], trees: Sequence[DepTree], lexicon: SentimentLexicon) -> float:
    return asd_details(samples, trees, lexicon)[0]


# pairs: per-sample list of ((start, end), opinion_index)
AspectOpinionPairs = Sequence[Sequence[tuple[tuple[int, int], int]]]


def sample_pasd(
    sample: Sample, tree: DepTree, pairs: Sequence[tuple[tuple[int, int], int]]
) -> float | None:
    if not pairs:
        return None
    adj = tree.neighbors()
    total = 0.0
    for (s, e), opinion in pairs:
        if not (0 <= s < e <= tree.n) or not (0 <= opinion < tree.n):
            raise MetricsError(
                f"sample {sample.id!r}: pair (({s}, {e}), {opinion}) out of range"
            )
        dist = _distances_from(adj, opinion)
        total += sum(dist[w] for w in range(s, e)) / (e - s)
    return total / len(pairs)


def pasd_details(
    samples: Sequence[Sample],
    trees: Sequence[DepTree],
    pairs: AspectOpinionPairs,
) -> tuple[float, int]:
    _check_aligned(samples, trees)
    if len(pairs) != len(samples):
        raise MetricsError(f"{len(samples)} samples vs {len(pairs)} pair lists")
    values = []
    for sample, tree, sample_pairs in zip(samples, trees, pairs):
        v = sample_pasd(sample, tree, sample_pairs)
        if v is not None:
            values.append(v)
    if not values:
        raise MetricsError("no sample has an annotated pair; pAsD undefined")
    return sum(values) / len(values), len(values)


def pasd(samples: Sequence[Sample], trees: Sequence[DepTree], pairs: AspectOpinionPairs) -> float:
    return pasd_details(samples, trees, pairs)[0]


# ---------------------------------------------------------------------------
# Attachment agreement
# ---------------------------------------------------------------------------

def attachment_agreement(a: Sequence[DepTree], b: Sequence[DepTree]) -> float:
    """Fraction of tokens with identical undirected neighbor sets."""
    if len(a) != len(b):
        raise MetricsError(f"{len(a)} vs {len(b)} trees")
    agree = total = 0
    for ta, tb in zip(a, b):
        if ta.n != tb.n:
            raise MetricsError(f"tree size mismatch: {ta.n} vs {tb.n}")
        na, nb = ta.neighbors(), tb.neighbors()
        total += ta.n
        agree += sum(na[i] == nb[i] for i in range(ta.n))
    if total == 0:
        raise MetricsError("no tokens")
    return agree / total


# ---------------------------------------------------------------------------
# Report assembly
# ---------------------------------------------------------------------------

@dataclass
class SourceMetrics:
    source: str
    neighboring: float
    asd: float | None = None
    pasd: float | None = None
    coverage: int = 0  # samples contributing to AsD
    n_trees: int = 0


@dataclass
class MetricsReport:
    per_source: dict[str, SourceMetrics] = field(default_factory=dict)
    agreement: dict[str, float] = field(default_factory=dict)  # "a|b" -> value


def build_report(
    samples: Sequence[Sample],
    trees_by_source: Mapping[str, Sequence[DepTree]],
    lexicon: SentimentLexicon | None = None,
    pairs: AspectOpinionPairs | None = None,
    per_sentence: bool = False,
) -> MetricsReport:
    lexicon = lexicon or default_lexicon()
    report = MetricsReport()
    for source, trees in trees_by_source.items():
        entry = SourceMetrics(
            source=source,
            neighboring=neighboring_proportion(trees, per_sentence=per_sentence),
            n_trees=len(trees),
        )
        try:
            entry.asd, entry.coverage = asd_details(samples, trees, lexicon)
        except MetricsError:
            entry.asd, entry.coverage = None, 0
        if pairs is not None:
            try:
                entry.pasd, _ = pasd_details(samples, trees, pairs)
            except MetricsError:
                entry.pasd = None
        report.per_source[source] = entry
    names = sorted(trees_by_source)
    for i, sa in enumerate(names):
        for sb in names[i + 1:]:
            report.agreement[f"{sa}|{sb}"] = attachment_agreement(
                trees_by_source[sa], trees_by_source[sb]
            )
    return report


def report_to_csv(report: MetricsReport) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf)
    writer.writerow(["source", "neighboring", "asd", "pasd", "coverage"])
    for source in sorted(report.per_source):
        m = report.per_source[source]
        writer.writerow([
            source,
            f"{m.neighboring:.6f}",
            "" if m.asd is None else f"{m.asd:.6f}",
            "" if m.pasd is None else f"{m.pasd:.6f}",
            m.coverage,
        ])
    return buf.getvalue()


def report_to_json(report: MetricsReport) -> str:
    doc = {
        "sources": {
            source: {
                "neighboring": m.neighboring,
                "asd": m.asd,
                "pasd": m.pasd,
                "coverage": m.coverage,
                "n_trees": m.n_trees,
            }
            for source, m in sorted(report.per_source.items())
        },
        "agreement": dict(sorted(report.agreement.items())),
    }
    return json.dumps(doc, indent=2, sort_keys=True)
