"""Tree decoding over token-impact matrices.

Decoders turn a T x T impact matrix into a rooted single-head dependency
tree: Chu-Liu/Edmonds for the unconstrained maximum spanning arborescence,
Eisner's span dynamic program for the best projective tree.  Degenerate
left/right chain baselines and CoNLL-U import/export for parser-provided
trees live here as well, so every tree in the pipeline flows through the
same ``DepTree`` type and validator.

Edge direction convention: ``impact_on_dependent`` scores the arc h -> d
with ``M[d][h]`` (how strongly token h influences the masked
representation of token d); ``symmetric`` uses ``(M[d][h] + M[h][d]) / 2``.
All tie-breaking is deterministic (lowest head index, then lowest
dependent index; smallest split point and leftmost root for Eisner) so
decoded trees are stable across runs and platforms.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Sequence

import numpy as np

from .perturb import ImpactMatrix

# Head sentinel for the artificial root attachment.
ROOT = -1

TREE_SOURCES = ("dep_parser", "left_chain", "right_chain", "induced", "ft_induced")

DIRECTIONS = ("impact_on_dependent", "symmetric")


class TreeError(ValueError):
    """A head assignment that does not form a valid dependency tree."""


@dataclass(frozen=True)
class DepTree:
    """Rooted single-head dependency tree over n words.

    ``heads[i]`` is the 0-based head of word i, or ``ROOT`` for the single
    root word.  Validated on construction: exactly one root, all heads in
    range, and every word reaches the root (no cycles).
    """

    heads: tuple[int, ...]
    source: str = "induced"

    def __post_init__(self):
        object.__setattr__(self, "heads", tuple(int(h) for h in self.heads))
        validate_heads(self.heads)
        if self.source not in TREE_SOURCES:
            raise TreeError(f"unknown tree source {self.source!r}")

    @property
    def n(self) -> int:
        return len(self.heads)

    @property
    def root(self) -> int:
        return self.heads.index(ROOT)

    def edges(self) -> list[tuple[int, int]]:
        """(head, dependent) pairs; the root attachment is not an edge."""
        return [(h, d) for d, h in enumerate(self.heads) if h != ROOT]

    def neighbors(self) -> list[set[int]]:
        """Undirected adjacency sets (ROOT is not a node)."""
        adj: list[set[int]] = [set() for _ in self.heads]
        for h, d in self.edges():
            adj[h].add(d)
            adj[d].add(h)
        return adj


def validate_heads(heads: Sequence[int]) -> None:
    n = len(heads)
    if n < 1:
        raise TreeError("tree must cover at least one word")
    roots = [i for i, h in enumerate(heads) if h == ROOT]
    if len(roots) != 1:
        raise TreeError(f"expected exactly one root, found {len(roots)}")
    for i, h in enumerate(heads):
        if h != ROOT and not (0 <= h < n):
            raise TreeError(f"head {h} of word {i} out of range")
        if h == i:
            raise TreeError(f"word {i} is its own head")
    # every node must reach the root; a cycle never does
    state = [0] * n  # 0 unseen, 1 on current path, 2 proven
    for start in range(n):
        path = []
        v = start
        while state[v] == 0 and heads[v] != ROOT:
            state[v] = 1
            path.append(v)
            v = heads[v]
        if state[v] == 1 and heads[v] != ROOT:
            raise TreeError(f"cycle through word {v}")
        for u in path:
            state[u] = 2
        state[v] = 2


def edge_scores(matrix: ImpactMatrix, direction: str = "impact_on_dependent") -> np.ndarray:
    """Score matrix S with S[h, d] = score of the arc h -> d."""
    if direction not in DIRECTIONS:
        raise ValueError(f"unknown direction {direction!r}")
    m = matrix.values
    if direction == "impact_on_dependent":
        return m.T.copy()
    return (m + m.T) / 2.0


def tree_weight(scores: np.ndarray, heads: Sequence[int]) -> float:
    """Total score of the non-root arcs under S[h, d] scoring."""
    return float(sum(scores[h, d] for d, h in enumerate(heads) if h != ROOT))


# ---------------------------------------------------------------------------
# Chu-Liu/Edmonds: maximum spanning arborescence with a fixed root
# ---------------------------------------------------------------------------

def _best_incoming(scores: np.ndarray, nodes: Sequence[int], root: int) -> dict[int, int]:
    """Greedy best head per non-root node; ties go to the lowest head index."""
    best: dict[int, int] = {}
    for d in nodes:
        if d == root:
            continue
        best_h = -1
        best_s = -math.inf
        for h in nodes:
            if h == d:
                continue
            s = scores[h, d]
            if s > best_s:
                best_h, best_s = h, s
        best[d] = best_h
    return best


def _find_cycle(head_of: dict[int, int], root: int) -> list[int] | None:
    state: dict[int, int] = {}
    for start in head_of:
        if state.get(start):
            continue
        path = []
        v = start
        while v != root and state.get(v, 0) == 0:
            state[v] = 1
            path.append(v)
            v = head_of[v]
        if v != root and state.get(v) == 1:
            return path[path.index(v):]
        for u in path:
            state[u] = 2
    return None


def _max_arborescence(scores: np.ndarray, nodes: list[int], root: int) -> dict[int, int]:
    """Recursive contraction over the subgraph induced by `nodes`.

    Returns the head map d -> h for every node except the root.  `nodes`
    is kept in ascending order so deterministic argmax picks stay aligned
    with original indices.
    """
    head_of = _best_incoming(scores, nodes, root)
    cycle = _find_cycle(head_of, root)
    if cycle is None:
        return head_of

    cyc = sorted(cycle)
    cyc_set = set(cyc)
    in_score = {d: scores[head_of[d], d] for d in cyc}
    rest = [v for v in nodes if v not in cyc_set]

    # Contract the cycle into a fresh supernode appended after all real
    # node ids, then recurse on an enlarged score matrix.
    super_id = scores.shape[0]
    m = np.full((super_id + 1, super_id + 1), -math.inf)
    m[np.ix_(rest, rest)] = scores[np.ix_(rest, rest)]

    enter_at: dict[int, int] = {}  # outside head h -> cycle node its edge enters
    exit_from: dict[int, int] = {}  # outside dependent d -> cycle node heading it
    for h in rest:
        best_d, best_s = -1, -math.inf
        for d in cyc:
            s = scores[h, d] - in_score[d]
            if s > best_s:
                best_d, best_s = d, s
        enter_at[h] = best_d
        m[h, super_id] = best_s
    for d in rest:
        if d == root:
            continue
        best_h, best_s = -1, -math.inf
        for h in cyc:
            s = scores[h, d]
            if s > best_s:
                best_h, best_s = h, s
        exit_from[d] = best_h
        m[super_id, d] = best_s

    contracted = _max_arborescence(m, rest + [super_id], root)

    heads = dict(head_of)
    super_head = contracted.pop(super_id)
    heads[enter_at[super_head]] = super_head  # break the cycle here
    for d, h in contracted.items():
        heads[d] = exit_from[d] if h == super_id else h
    return heads


def chu_liu_edmonds(
    matrix: ImpactMatrix,
    root: int,
    direction: str = "impact_on_dependent",
    source: str = "induced",
) -> DepTree:
    """Maximum-weight spanning arborescence rooted at `root`."""
    n = matrix.n
    if not (0 <= root < n):
        raise ValueError(f"root {root} out of range for {n} words")
    scores = edge_scores(matrix, direction)
    head_of = _max_arborescence(scores, list(range(n)), root)
    heads = [ROOT] * n
    for d, h in head_of.items():
        heads[d] = h
    return DepTree(tuple(heads), source=source)


def best_root_tree(
    matrix: ImpactMatrix,
    direction: str = "impact_on_dependent",
    source: str = "induced",
) -> DepTree:
    """Run Chu-Liu/Edmonds for every root; keep the heaviest tree.

    Ties go to the lowest root index (strict improvement while scanning
    roots in ascending order).
    """
    scores = edge_scores(matrix, direction)
    best: DepTree | None = None
    best_w = -math.inf
    for root in range(matrix.n):
        tree = chu_liu_edmonds(matrix, root, direction, source)
        w = tree_weight(scores, tree.heads)
        if w > best_w:
            best, best_w = tree, w
    assert best is not None
    return best


# ---------------------------------------------------------------------------
# Eisner: maximum projective tree, O(n^3) span dynamic program
# ---------------------------------------------------------------------------

def eisner(
    matrix: ImpactMatrix,
    direction: str = "impact_on_dependent",
    source: str = "induced",
) -> DepTree:
    """Best projective tree with a single external root attachment.

    The chart tracks incomplete spans (one arc between the endpoints) and
    complete spans (one endpoint dominates the whole span); the root word
    r maximizes C_left[0][r] + C_right[r][n-1].  Root attachment itself
    carries no weight since impact matrices score word-word arcs only,
    but it follows the standard convention that the external root sits
    outside the sentence: no arc may span over the root word.
    """
    n = matrix.n
    if n == 1:
        return DepTree((ROOT,), source=source)
    scores = edge_scores(matrix, direction)

    NEG = -math.inf
    c_r = [[NEG] * n for _ in range(n)]  # complete, headed at left end
    c_l = [[NEG] * n for _ in range(n)]  # complete, headed at right end
    i_r = [[NEG] * n for _ in range(n)]  # incomplete, arc i -> j
    i_l = [[NEG] * n for _ in range(n)]  # incomplete, arc j -> i
    b_i = [[0] * n for _ in range(n)]    # split for incomplete (shared)
    b_cr = [[0] * n for _ in range(n)]
    b_cl = [[0] * n for _ in range(n)]
    for i in range(n):
        c_r[i][i] = c_l[i][i] = 0.0

    for w in range(1, n):
        for i in range(n - w):
            j = i + w
            best, arg = NEG, i
            for r in range(i, j):
                s = c_r[i][r] + c_l[r + 1][j]
                if s > best:
                    best, arg = s, r
            i_r[i][j] = best + scores[i, j]
            i_l[i][j] = best + scores[j, i]
            b_i[i][j] = arg

            best, arg = NEG, i + 1
            for r in range(i + 1, j + 1):
                s = i_r[i][r] + c_r[r][j]
                if s > best:
                    best, arg = s, r
            c_r[i][j] = best
            b_cr[i][j] = arg

            best, arg = NEG, i
            for r in range(i, j):
                s = c_l[i][r] + i_l[r][j]
                if s > best:
                    best, arg = s, r
            c_l[i][j] = best
            b_cl[i][j] = arg

    best_root, best_w = 0, NEG
    for r in range(n):
        w = c_l[0][r] + c_r[r][n - 1]
        if w > best_w:
            best_root, best_w = r, w

    heads = [ROOT] * n

    def walk_cr(i, j):
        if i == j:
            return
        r = b_cr[i][j]
        walk_ir(i, r)
        walk_cr(r, j)

    def walk_cl(i, j):
        if i == j:
            return
        r = b_cl[i][j]
        walk_cl(i, r)
        walk_il(r, j)

    def walk_ir(i, j):
        heads[j] = i
        r = b_i[i][j]
        walk_cr(i, r)
        walk_cl(r + 1, j)

    def walk_il(i, j):
        heads[i] = j
        r = b_i[i][j]
        walk_cr(i, r)
        walk_cl(r + 1, j)

    walk_cl(0, best_root)
    walk_cr(best_root, n - 1)
    return DepTree(tuple(heads), source=source)


def is_projective(heads: Sequence[int]) -> bool:
    """True when no two arcs cross (root attachment ignored)."""
    arcs = [tuple(sorted((h, d))) for d, h in enumerate(heads) if h != ROOT]
    for k, (a, b) in enumerate(arcs):
        for c, d in arcs[k + 1:]:
            if a < c < b < d or c < a < d < b:
                return False
    return True


# ---------------------------------------------------------------------------
# Chain baselines
# ---------------------------------------------------------------------------

def left_chain(n: int) -> DepTree:
    """Each word's previous word is its child, so heads point rightward."""
    if n < 1:
        raise ValueError("n must be >= 1")
    heads = [i + 1 for i in range(n - 1)] + [ROOT]
    return DepTree(tuple(heads), source="left_chain")


def right_chain(n: int) -> DepTree:
    """Each word's next word is its child, so heads point leftward."""
    if n < 1:
        raise ValueError("n must be >= 1")
    heads = [ROOT] + [i - 1 for i in range(1, n)]
    return DepTree(tuple(heads), source="right_chain")


# ---------------------------------------------------------------------------
# CoNLL-U import/export
# ---------------------------------------------------------------------------

@dataclass
class ConlluSentence:
    sent_id: str
    tokens: list[str]
    tree: DepTree
    deprels: list[str] = field(default_factory=list)


class ConlluError(ValueError):
    """Malformed CoNLL-U input or an invalid tree inside it."""


def export_conllu(sentences: Iterable[tuple[str, Sequence[str], DepTree] | ConlluSentence]) -> str:
    """Serialize trees as CoNLL-U; induced trees carry DEPREL 'dep'."""
    out = []
    for item in sentences:
        if isinstance(item, ConlluSentence):
            sent_id, tokens, tree, deprels = item.sent_id, item.tokens, item.tree, item.deprels
        else:
            sent_id, tokens, tree = item
            deprels = []
        if len(tokens) != tree.n:
            raise ConlluError(f"sentence {sent_id!r}: {len(tokens)} tokens for a {tree.n}-word tree")
        out.append(f"# sent_id = {sent_id}")
        out.append(f"# source = {tree.source}")
        for i, form in enumerate(tokens):
            head = 0 if tree.heads[i] == ROOT else tree.heads[i] + 1
            rel = deprels[i] if deprels else ("root" if head == 0 else "dep")
            out.append(f"{i + 1}\t{form}\t_\t_\t_\t_\t{head}\t{rel}\t_\t_")
        out.append("")
    return "\n".join(out) + ("\n" if out else "")


def import_conllu(text: str, source: str = "dep_parser") -> list[ConlluSentence]:
    """Parse CoNLL-U text into validated trees.

    Multiword-token lines (id "a-b") and empty nodes (id "a.b") are
    skipped.  HEAD is mapped to 0-based indices with HEAD=0 as the root.
    A cycle or multiple roots is rejected naming the offending sentence.
    """
    sentences: list[ConlluSentence] = []
    sent_id = ""
    sent_source = source
    forms: list[str] = []
    heads: list[int] = []
    deprels: list[str] = []

    def flush():
        nonlocal sent_id, sent_source, forms, heads, deprels
        if not forms:
            return
        sid = sent_id or f"s{len(sentences) + 1}"
        try:
            tree = DepTree(tuple(heads), source=sent_source)
        except TreeError as exc:
            raise ConlluError(f"sentence {sid!r}: {exc}") from exc
        sentences.append(ConlluSentence(sid, forms, tree, deprels))
        sent_id, sent_source, forms, heads, deprels = "", source, [], [], []

    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.rstrip("\n")
        if not line.strip():
            flush()
            continue
        if line.startswith("#"):
            body = line[1:].strip()
            if body.startswith("sent_id"):
                sent_id = body.split("=", 1)[1].strip() if "=" in body else ""
            elif body.startswith("source"):
                cand = body.split("=", 1)[1].strip() if "=" in body else ""
                if cand in TREE_SOURCES:
                    sent_source = cand
            continue
        cols = line.split("\t")
        if len(cols) < 8:
            raise ConlluError(f"line {lineno}: expected >= 8 tab-separated columns")
        if "-" in cols[0] or "." in cols[0]:
            continue
        try:
            idx = int(cols[0])
            head = int(cols[6])
        except ValueError as exc:
            raise ConlluError(f"line {lineno}: non-integer ID or HEAD") from exc
        if idx != len(forms) + 1:
            raise ConlluError(f"line {lineno}: token ids must be consecutive from 1")
        forms.append(cols[1])
        heads.append(ROOT if head == 0 else head - 1)
        deprels.append(cols[7])
    flush()
    return sentences


def iter_conllu_file(path) -> Iterator[ConlluSentence]:
    with open(path, encoding="utf-8") as fh:
        yield from import_conllu(fh.read())
