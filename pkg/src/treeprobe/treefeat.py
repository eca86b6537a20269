"""Tree-feature encodings consumed by tree-based sentiment classifiers.

Three encodings are derived from a dependency tree and an aspect span:

* adjacency  - symmetric 0/1 matrix with self-loops, for graph-conv models;
* proximity  - per-token shortest-path distance to the nearest aspect
  token, for proximity-weighting models;
* reshaped   - an aspect-oriented tree where every token attaches directly
  to its nearest aspect token, tagged "1:dep" at distance 1 (or the
  original relation label when one is available) and "d:con" beyond.
"""

from __future__ import annotations

import json
from collections import deque
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .corpus import Sample
from .decode import ROOT, DepTree


class FeatureError(ValueError):
    pass


def adjacency(tree: DepTree) -> np.ndarray:
    """Undirected adjacency with self-loops, as an n x n 0/1 array."""
    n = tree.n
    a = np.eye(n, dtype=np.int8)
    for h, d in tree.edges():
        a[h, d] = 1
        a[d, h] = 1
    return a


def _aspect_bfs(tree: DepTree, aspect: tuple[int, int]) -> tuple[list[int], list[int]]:
    """Distance to the aspect and the nearest aspect token per node.

    Multi-source BFS seeded with the aspect tokens in ascending order, so
    distance ties resolve to the lowest aspect index.
    """
    s, e = aspect
    if not (0 <= s < e <= tree.n):
        raise FeatureError(f"aspect range [{s}, {e}) invalid for {tree.n} words")
    adj = tree.neighbors()
    dist = [-1] * tree.n
    nearest = [-1] * tree.n
    queue: deque[int] = deque()
    for a in range(s, e):
        dist[a] = 0
        nearest[a] = a
        queue.append(a)
    while queue:
        u = queue.popleft()
        for v in sorted(adj[u]):
            if dist[v] < 0:
                dist[v] = dist[u] + 1
                nearest[v] = nearest[u]
                queue.append(v)
    return dist, nearest


def proximity(tree: DepTree, aspect: tuple[int, int]) -> list[int]:
    """Shortest undirected tree distance from each token to the aspect."""
    dist, _ = _aspect_bfs(tree, aspect)
    return dist


@dataclass(frozen=True)
class ReshapedTree:
    """Aspect-oriented tree: aspect tokens at the root, everything else
    attached directly to its nearest aspect token."""

    heads: tuple[int, ...]  # ROOT for aspect tokens, else an aspect index
    tags: tuple[str, ...]
    aspect: tuple[int, int]

    def __post_init__(self):
        s, e = self.aspect
        for i, h in enumerate(self.heads):
            inside = s <= i < e
            if inside and h != ROOT:
                raise FeatureError(f"aspect token {i} must attach to ROOT")
            if not inside and not (s <= h < e):
                raise FeatureError(f"token {i} attaches to {h}, outside the aspect span")


def reshape_aspect_oriented(
    tree: DepTree,
    aspect: tuple[int, int],
    deprels: Sequence[str] | None = None,
) -> ReshapedTree:
    """Flatten the tree around the aspect.

    Distance-1 tokens keep their original relation label when `deprels`
    is given (parser-provided trees); induced trees carry none, so the
    uniform virtual tag "1:dep" is used.  Tokens at distance d >= 2 get
    "d:con".
    """
    dist, nearest = _aspect_bfs(tree, aspect)
    s, e = aspect
    heads = []
    tags = []
    for i in range(tree.n):
        if s <= i < e:
            heads.append(ROOT)
            tags.append("ROOT")
        elif dist[i] == 1:
            heads.append(nearest[i])
            tags.append(deprels[i] if deprels else "1:dep")
        else:
            heads.append(nearest[i])
            tags.append(f"{dist[i]}:con")
    return ReshapedTree(heads=tuple(heads), tags=tuple(tags), aspect=(s, e))


def tag_distance(tag: str) -> int:
    """Tree distance encoded in a reshaped tag (ROOT counts as 0)."""
    if tag == "ROOT":
        return 0
    if ":" in tag:
        prefix = tag.split(":", 1)[0]
        if prefix.isdigit():
            return int(prefix)
    return 1  # original relation labels mark distance-1 tokens


def build_features(
    sample: Sample,
    tree: DepTree,
    deprels: Sequence[str] | None = None,
) -> dict:
    """One export record: adjacency bits (row-major), proximity, reshaped."""
    if tree.n != len(sample.tokens):
        raise FeatureError(
            f"sample {sample.id!r}: {len(sample.tokens)} tokens but a {tree.n}-word tree"
        )
    adj = adjacency(tree)
    prox = proximity(tree, sample.aspect)
    reshaped = reshape_aspect_oriented(tree, sample.aspect, deprels)
    return {
        "id": sample.id,
        "n": tree.n,
        "source": tree.source,
        "adjacency": [int(x) for x in adj.reshape(-1)],
        "proximity": prox,
        "reshaped": {
            "heads": list(reshaped.heads),
            "tags": list(reshaped.tags),
        },
    }


def write_features(path, records: Iterable[dict]) -> int:
    count = 0
    with open(path, "w", encoding="utf-8") as fh:
        for record in records:
            fh.write(json.dumps(record, ensure_ascii=False) + "\n")
            count += 1
    return count
