"""Token-impact matrices via two-level masking.

The impact of token j on token i is the Euclidean distance between two
masked representations of position i: one with only i masked, one with
both i and j masked.  Repeating this over every ordered pair yields a
T x T matrix (row = affected token, column = perturbing token) that the
decoders consume.

Matrix files are JSON Lines, one object per sample:

    {"v": 1, "id": str, "layer": int, "words": [str, ...],
     "matrix": [[float, ...], ...]}

Floats are written with ``repr`` precision (shortest round-tripping form,
well beyond 9 significant digits), row-major, row = affected token.  The
same schema is produced by external extractors dumping real pre-trained
models, so the reader validates it strictly.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Iterable, Iterator, Protocol, Sequence

import numpy as np

MATRIX_SCHEMA_VERSION = 1

AGGREGATIONS = ("mean", "max", "first")


class MatrixError(ValueError):
    """An impact matrix violating its invariants."""


class MatrixFormatError(ValueError):
    """A matrix file that cannot be parsed or validated."""


class AlignmentError(ValueError):
    """A subword-to-word alignment that does not cover the matrix."""


class RepresentationProvider(Protocol):
    """Anything that can return per-layer token representations.

    ``provide(tokens, masked_positions, layer)`` returns the layer-`layer`
    representation (a T x d array) of `tokens` with `masked_positions`
    replaced by the mask token.  `depth` is the highest valid layer.
    """

    @property
    def depth(self) -> int: ...

    def provide(self, tokens: Sequence[str], masked_positions: Iterable[int], layer: int) -> np.ndarray: ...


@dataclass
class ImpactMatrix:
    """Pairwise token-impact scores for one sample.

    ``values[i][j]`` is the impact of token j on token i: non-negative,
    finite, with an exactly zero diagonal.
    """

    sample_id: str
    layer: int
    words: tuple[str, ...]
    values: np.ndarray

    def __post_init__(self):
        self.words = tuple(self.words)
        v = np.asarray(self.values, dtype=np.float64)
        if v.ndim != 2 or v.shape[0] != v.shape[1]:
            raise MatrixError(f"{self.sample_id!r}: matrix must be square, got shape {v.shape}")
        if v.shape[0] != len(self.words):
            raise MatrixError(
                f"{self.sample_id!r}: {len(self.words)} words but a {v.shape[0]}x{v.shape[1]} matrix"
            )
        if v.shape[0] < 1:
            raise MatrixError(f"{self.sample_id!r}: empty matrix")
        if not np.isfinite(v).all():
            raise MatrixError(f"{self.sample_id!r}: non-finite entry")
        if (v < 0).any():
            raise MatrixError(f"{self.sample_id!r}: negative entry")
        if np.diagonal(v).any():
            raise MatrixError(f"{self.sample_id!r}: nonzero diagonal")
        v.flags.writeable = False
        self.values = v

    @property
    def n(self) -> int:
        return len(self.words)


def impact(
    provider: RepresentationProvider,
    tokens: Sequence[str],
    i: int,
    j: int,
    layer: int,
) -> float:
    """Impact of token j on token i at the given layer.

    ``|| H(x \\ {i})_i  -  H(x \\ {i, j})_i ||_2``.  For j == i the two
    masked inputs coincide, so the value is exactly zero.
    """
    n = len(tokens)
    if not (0 <= i < n and 0 <= j < n):
        raise IndexError(f"impact positions ({i}, {j}) out of range for {n} tokens")
    if j == i:
        return 0.0
    try:
        base = provider.provide(tokens, {i}, layer)
        both = provider.provide(tokens, {i, j}, layer)
    except Exception as exc:
        raise RuntimeError(f"provider failed for positions ({i}, {j}) at layer {layer}: {exc}") from exc
    return float(np.linalg.norm(base[i] - both[i]))


def impact_matrix(
    provider: RepresentationProvider,
    tokens: Sequence[str],
    layer: int,
    *,
    sample_id: str = "",
    symmetrize: bool = False,
) -> ImpactMatrix:
    """Full impact matrix for one sentence.

    The single-mask representation of each row i is computed once and
    reused across all j, so the provider is called T^2 times rather than
    2 T^2.  Values are left as measured; ``symmetrize`` averages the
    matrix with its transpose.
    """
    n = len(tokens)
    values = np.zeros((n, n), dtype=np.float64)
    for i in range(n):
        base_row = provider.provide(tokens, {i}, layer)[i]
        for j in range(n):
            if j == i:
                continue
            row = provider.provide(tokens, {i, j}, layer)[i]
            values[i, j] = np.linalg.norm(base_row - row)
    if symmetrize:
        values = (values + values.T) / 2.0
    return ImpactMatrix(sample_id=sample_id, layer=layer, words=tuple(tokens), values=values)


def symmetrize(matrix: ImpactMatrix) -> ImpactMatrix:
    return ImpactMatrix(
        sample_id=matrix.sample_id,
        layer=matrix.layer,
        words=matrix.words,
        values=(matrix.values + matrix.values.T) / 2.0,
    )


# ---------------------------------------------------------------------------
# Subword aggregation
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SubwordAlignment:
    """Per-word contiguous subword ranges, half-open, ascending.

    Positions not covered by any range are treated as special tokens
    (CLS/SEP analogues) and dropped during aggregation.
    """

    word_ranges: tuple[tuple[int, int], ...]

    def __post_init__(self):
        object.__setattr__(
            self, "word_ranges", tuple((int(s), int(e)) for s, e in self.word_ranges)
        )
        if not self.word_ranges:
            raise AlignmentError("alignment has no word ranges")
        prev_end = 0
        for k, (s, e) in enumerate(self.word_ranges):
            if s >= e:
                raise AlignmentError(f"word {k}: empty subword range [{s}, {e})")
            if s < prev_end:
                raise AlignmentError(f"word {k}: range [{s}, {e}) overlaps or is out of order")
            prev_end = e

    @property
    def num_words(self) -> int:
        return len(self.word_ranges)

    @property
    def max_position(self) -> int:
        return self.word_ranges[-1][1]


def aggregate_subwords(
    matrix: ImpactMatrix,
    alignment: SubwordAlignment,
    mode: str = "mean",
    words: Sequence[str] | None = None,
) -> ImpactMatrix:
    """Pool a subword-level matrix down to word level.

    Each word-pair entry pools the corresponding subword block (mean, max,
    or first element); uncovered rows/columns (special tokens) are
    dropped, and the diagonal is re-zeroed afterwards.  ``words`` replaces
    the word strings; the default concatenates the subword strings of
    each range.
    """
    if mode not in AGGREGATIONS:
        raise ValueError(f"unknown aggregation {mode!r}; expected one of {AGGREGATIONS}")
    if alignment.max_position > matrix.n:
        raise AlignmentError(
            f"alignment covers positions up to {alignment.max_position} "
            f"but the matrix has only {matrix.n}"
        )
    nw = alignment.num_words
    if words is not None and len(words) != nw:
        raise AlignmentError(f"{len(words)} words supplied for {nw} ranges")

    out = np.zeros((nw, nw), dtype=np.float64)
    for a, (si, ei) in enumerate(alignment.word_ranges):
        for b, (sj, ej) in enumerate(alignment.word_ranges):
            block = matrix.values[si:ei, sj:ej]
            if mode == "mean":
                out[a, b] = block.mean()
            elif mode == "max":
                out[a, b] = block.max()
            else:
                out[a, b] = block[0, 0]
    np.fill_diagonal(out, 0.0)

    if words is None:
        words = ["".join(matrix.words[s:e]) for s, e in alignment.word_ranges]
    return ImpactMatrix(
        sample_id=matrix.sample_id, layer=matrix.layer, words=tuple(words), values=out
    )


# ---------------------------------------------------------------------------
# Matrix file format (JSON Lines, schema v1)
# ---------------------------------------------------------------------------

def matrix_to_record(matrix: ImpactMatrix) -> dict:
    return {
        "v": MATRIX_SCHEMA_VERSION,
        "id": matrix.sample_id,
        "layer": matrix.layer,
        "words": list(matrix.words),
        "matrix": [[float(x) for x in row] for row in matrix.values],
    }


def matrix_from_record(record: dict, where: str = "") -> ImpactMatrix:
    try:
        version = record["v"]
        if version != MATRIX_SCHEMA_VERSION:
            raise MatrixFormatError(
                f"{where}unsupported matrix schema version {version!r} "
                f"(expected {MATRIX_SCHEMA_VERSION})"
            )
        sample_id = record["id"]
        layer = int(record["layer"])
        words = [str(w) for w in record["words"]]
        values = np.array(record["matrix"], dtype=np.float64)
    except MatrixFormatError:
        raise
    except (KeyError, TypeError, ValueError) as exc:
        raise MatrixFormatError(f"{where}malformed matrix record: {exc}") from exc
    try:
        return ImpactMatrix(sample_id=sample_id, layer=layer, words=tuple(words), values=values)
    except MatrixError as exc:
        raise MatrixFormatError(f"{where}{exc}") from exc


def write_matrices(path, matrices: Iterable[ImpactMatrix]) -> int:
    """Stream matrices to a JSON Lines file; returns the count written."""
    count = 0
    with open(path, "w", encoding="utf-8") as fh:
        for m in matrices:
            fh.write(json.dumps(matrix_to_record(m)) + "\n")
            count += 1
    return count


def _reject_constant(token: str):
    raise MatrixFormatError(f"non-finite literal {token!r} in matrix file")


def read_matrices(path) -> Iterator[ImpactMatrix]:
    """Lazily stream matrices back from a JSON Lines file.

    One matrix is materialized at a time; NaN/Infinity literals, schema
    version mismatches, and truncated trailing lines are all rejected.
    """
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            stripped = line.strip()
            if not stripped:
                continue
            where = f"{path}:{lineno}: "
            try:
                record = json.loads(stripped, parse_constant=_reject_constant)
            except json.JSONDecodeError as exc:
                raise MatrixFormatError(f"{where}truncated or invalid JSON: {exc}") from exc
            yield matrix_from_record(record, where)
