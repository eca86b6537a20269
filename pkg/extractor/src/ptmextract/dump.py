"""Dump subword-level impact matrices from a (fine-tuned) transformer.

For each sentence, every token position i is masked once to obtain its
masked representation, then each other position j is masked as well; the
Euclidean distance between the two representations of position i is the
impact of j on i.  The matrix covers *all* subword positions including
the special tokens, and a companion alignment file records which
positions belong to which word so a consumer can pool the matrix down to
word level and drop specials.

Output is the matrix schema shared with the tree-probing toolkit:

    {"v": 1, "id": str, "layer": int, "words": [str, ...],
     "matrix": [[float, ...], ...]}       one JSON line per sample

and alignments as ``{"id": str, "word_ranges": [[start, end], ...]}``.
"""

from __future__ import annotations

import json
from pathlib import Path
from typing import Sequence

import numpy as np
import torch

from .data import AspectSample

MATRIX_SCHEMA_VERSION = 1


class DumpError(ValueError):
    pass


class AlignmentFailure(ValueError):
    """A word lost all its subword pieces (truncation or normalization)."""


def word_alignment(tokenizer, tokens: Sequence[str], max_length: int):
    """(input_ids, subword strings, per-word [start, end) ranges)."""
    enc = tokenizer(
        list(tokens), is_split_into_words=True, truncation=True, max_length=max_length
    )
    ids = enc["input_ids"]
    word_ids = enc.word_ids()
    ranges: list[tuple[int, int]] = []
    for w in range(len(tokens)):
        positions = [k for k, wid in enumerate(word_ids) if wid == w]
        if not positions:
            raise AlignmentFailure(
                f"word {w} ({tokens[w]!r}) has no subword pieces; "
                f"sentence too long for max_length={max_length}?"
            )
        if positions != list(range(positions[0], positions[-1] + 1)):
            raise AlignmentFailure(f"word {w} ({tokens[w]!r}) maps to non-contiguous pieces")
        ranges.append((positions[0], positions[-1] + 1))
    return ids, tokenizer.convert_ids_to_tokens(ids), ranges


@torch.no_grad()
def sample_impact_matrices(
    model,
    tokenizer,
    tokens: Sequence[str],
    layers: Sequence[int],
    max_length: int = 128,
    batch_size: int = 64,
    device: str = "cpu",
):
    """Impact matrices for one sentence at each requested layer.

    Returns (subword strings, word ranges, {layer: matrix}).  One row is
    computed at a time: the row's single-masked input plus its T-1
    double-masked variants go through the encoder together (chunked to
    ``batch_size``), and every requested layer is read off the same
    forward pass.
    """
    mask_id = tokenizer.mask_token_id
    if mask_id is None:
        raise DumpError("tokenizer has no mask token")
    ids, subwords, ranges = word_alignment(tokenizer, tokens, max_length)
    t = len(ids)
    values = {layer: np.zeros((t, t), dtype=np.float64) for layer in layers}

    model.eval()
    for i in range(t):
        variants = []
        single = list(ids)
        single[i] = mask_id
        variants.append(single)
        columns = [j for j in range(t) if j != i]
        for j in columns:
            double = list(single)
            double[j] = mask_id
            variants.append(double)

        reps = {layer: [] for layer in layers}
        for k in range(0, len(variants), batch_size):
            chunk = torch.tensor(variants[k:k + batch_size], device=device)
            out = model(input_ids=chunk, attention_mask=torch.ones_like(chunk),
                        output_hidden_states=True)
            for layer in layers:
                reps[layer].append(out.hidden_states[layer][:, i, :].cpu())
        for layer in layers:
            stacked = torch.cat(reps[layer], dim=0).double().numpy()
            base, rest = stacked[0], stacked[1:]
            diffs = np.linalg.norm(rest - base, axis=1)
            for j, v in zip(columns, diffs):
                values[layer][i, j] = v
    return subwords, ranges, values


def dump_matrices(
    model,
    tokenizer,
    samples: Sequence[AspectSample],
    layer: int | None,
    matrices_path,
    alignments_path,
    max_length: int = 128,
    batch_size: int = 64,
    device: str = "cpu",
) -> list[Path]:
    """Write matrix and alignment files; ``layer=None`` dumps all layers.

    With all layers requested, one matrix file per layer is written as
    ``<stem>_layer<k><suffix>`` next to the requested path; the encoder
    is still run only once per masked variant.
    """
    depth = model.config.num_hidden_layers
    if layer is None:
        layers = list(range(depth + 1))
    else:
        if not (0 <= layer <= depth):
            raise DumpError(f"layer {layer} out of range 0..{depth}")
        layers = [layer]

    matrices_path = Path(matrices_path)
    if len(layers) == 1:
        paths = {layers[0]: matrices_path}
    else:
        paths = {
            k: matrices_path.with_name(f"{matrices_path.stem}_layer{k}{matrices_path.suffix}")
            for k in layers
        }

    handles = {k: open(p, "w", encoding="utf-8") for k, p in paths.items()}
    try:
        with open(alignments_path, "w", encoding="utf-8") as align_fh:
            for sample in samples:
                subwords, ranges, values = sample_impact_matrices(
                    model, tokenizer, sample.tokens, layers,
                    max_length=max_length, batch_size=batch_size, device=device,
                )
                for k in layers:
                    record = {
                        "v": MATRIX_SCHEMA_VERSION,
                        "id": sample.id,
                        "layer": k,
                        "words": subwords,
                        "matrix": [[float(x) for x in row] for row in values[k]],
                    }
                    handles[k].write(json.dumps(record) + "\n")
                align_fh.write(json.dumps(
                    {"id": sample.id, "word_ranges": [[s, e] for s, e in ranges]}
                ) + "\n")
    finally:
        for fh in handles.values():
            fh.close()
    return [paths[k] for k in layers]
