"""A small deterministic transformer encoder used as the built-in
representation provider.

Each layer applies post-norm self-attention followed by a two-projection
feed-forward block:

    a^l = LN(h^{l-1} + MHAtt(h^{l-1}))
    h^l = LN(a^l + FFN(a^l))          FFN = linear -> gelu -> linear

Weights are never trained: every table and projection is drawn once,
uniformly from [-0.1, 0.1], by a seeded NumPy PCG64 generator in a fixed
documented order (token table, position table, then per layer Wq, bq, Wk,
bk, Wv, bv, Wo, bo, W1, b1, W2, b2).  Layer-norm scale/shift start at the
identity, so layer outputs keep mean 0 / variance 1 per row.  Given the
same config (seed included) and tokens, every matrix is bit-identical
across calls, which is what makes golden files and impact matrices
reproducible.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

PAD, MASK, CLS, SEP, UNK = "[PAD]", "[MASK]", "[CLS]", "[SEP]", "[UNK]"
SPECIALS = (PAD, MASK, CLS, SEP, UNK)

CONFIG_SCHEMA_VERSION = 1

LN_EPS = 1e-5


class EncoderConfigError(ValueError):
    pass


class CapacityError(ValueError):
    """Input longer than the position table."""


@dataclass(frozen=True)
class EncoderConfig:
    """Immutable encoder hyperparameters plus the full ordered vocabulary.

    ``vocab`` holds the special tokens followed by the word list; every
    special must appear exactly once.  Serializes to a versioned JSON
    document so runs can be reproduced from the manifest alone.
    """

    vocab: tuple[str, ...]
    num_layers: int = 4
    hidden_dim: int = 64
    num_heads: int = 4
    ffn_dim: int = 128
    max_positions: int = 128
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "vocab", tuple(self.vocab))
        if self.num_layers < 1:
            raise EncoderConfigError("num_layers must be >= 1")
        if self.hidden_dim % self.num_heads != 0:
            raise EncoderConfigError(
                f"hidden_dim {self.hidden_dim} not divisible by num_heads {self.num_heads}"
            )
        if self.max_positions < 1:
            raise EncoderConfigError("max_positions must be >= 1")
        for special in SPECIALS:
            if self.vocab.count(special) != 1:
                raise EncoderConfigError(f"special token {special} must appear exactly once")
        if len(set(self.vocab)) != len(self.vocab):
            raise EncoderConfigError("vocabulary contains duplicates")

    @classmethod
    def build(cls, words: Iterable[str], **kwargs) -> "EncoderConfig":
        """Config over `words` with the special tokens prepended."""
        return cls(vocab=SPECIALS + tuple(w for w in words if w not in SPECIALS), **kwargs)

    def to_json(self) -> str:
        doc = {
            "v": CONFIG_SCHEMA_VERSION,
            "num_layers": self.num_layers,
            "hidden_dim": self.hidden_dim,
            "num_heads": self.num_heads,
            "ffn_dim": self.ffn_dim,
            "max_positions": self.max_positions,
            "seed": self.seed,
            "vocab": list(self.vocab),
        }
        return json.dumps(doc, sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "EncoderConfig":
        doc = json.loads(text)
        if doc.get("v") != CONFIG_SCHEMA_VERSION:
            raise EncoderConfigError(f"unsupported encoder config version {doc.get('v')!r}")
        return cls(
            vocab=tuple(doc["vocab"]),
            num_layers=int(doc["num_layers"]),
            hidden_dim=int(doc["hidden_dim"]),
            num_heads=int(doc["num_heads"]),
            ffn_dim=int(doc["ffn_dim"]),
            max_positions=int(doc["max_positions"]),
            seed=int(doc["seed"]),
        )


def mask(tokens: Sequence[str], positions: Iterable[int]) -> list[str]:
    """Replace the listed positions with the mask token (set semantics)."""
    out = list(tokens)
    for p in set(positions):
        if not (0 <= p < len(out)):
            raise IndexError(f"mask position {p} out of range for {len(out)} tokens")
        out[p] = MASK
    return out


def gelu(x: np.ndarray) -> np.ndarray:
    # tanh approximation
    return 0.5 * x * (1.0 + np.tanh(math.sqrt(2.0 / math.pi) * (x + 0.044715 * x**3)))


def layer_norm(x: np.ndarray) -> np.ndarray:
    mean = x.mean(axis=-1, keepdims=True)
    var = x.var(axis=-1, keepdims=True)
    return (x - mean) / np.sqrt(var + LN_EPS)


def _softmax(x: np.ndarray) -> np.ndarray:
    shifted = x - x.max(axis=-1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=-1, keepdims=True)


@dataclass
class _LayerWeights:
    wq: np.ndarray
    bq: np.ndarray
    wk: np.ndarray
    bk: np.ndarray
    wv: np.ndarray
    bv: np.ndarray
    wo: np.ndarray
    bo: np.ndarray
    w1: np.ndarray
    b1: np.ndarray
    w2: np.ndarray
    b2: np.ndarray


class ToyEncoder:
    """Materialized encoder; immutable after construction and shareable.

    Implements the representation-provider interface: ``provide(tokens,
    masked_positions, layer)`` masks then encodes, returning the layer-l
    matrix of the stack h^0 .. h^L (layer 0 is the embedding sum).
    """

    def __init__(self, config: EncoderConfig):
        self.config = config
        self._index = {w: i for i, w in enumerate(config.vocab)}
        self._unk = self._index[UNK]
        rng = np.random.default_rng(config.seed)
        d, f = config.hidden_dim, config.ffn_dim

        def draw(*shape):
            return rng.uniform(-0.1, 0.1, size=shape)

        self.token_table = draw(len(config.vocab), d)
        self.position_table = draw(config.max_positions, d)
        self.layers: list[_LayerWeights] = []
        for _ in range(config.num_layers):
            self.layers.append(
                _LayerWeights(
                    wq=draw(d, d), bq=draw(d),
                    wk=draw(d, d), bk=draw(d),
                    wv=draw(d, d), bv=draw(d),
                    wo=draw(d, d), bo=draw(d),
                    w1=draw(d, f), b1=draw(f),
                    w2=draw(f, d), b2=draw(d),
                )
            )
        for arr in self._all_arrays():
            arr.flags.writeable = False

    def _all_arrays(self):
        yield self.token_table
        yield self.position_table
        for lw in self.layers:
            for name in ("wq", "bq", "wk", "bk", "wv", "bv", "wo", "bo", "w1", "b1", "w2", "b2"):
                yield getattr(lw, name)

    @property
    def depth(self) -> int:
        return self.config.num_layers

    def embed(self, tokens: Sequence[str]) -> np.ndarray:
        """h^0: token embedding + position embedding, OOV words to UNK."""
        t = len(tokens)
        if t > self.config.max_positions:
            raise CapacityError(
                f"{t} tokens exceed max_positions {self.config.max_positions}"
            )
        ids = [self._index.get(tok, self._unk) for tok in tokens]
        return self.token_table[ids] + self.position_table[:t]

    def _attention(self, h: np.ndarray, lw: _LayerWeights) -> np.ndarray:
        t, d = h.shape
        heads = self.config.num_heads
        dk = d // heads
        q = (h @ lw.wq + lw.bq).reshape(t, heads, dk).transpose(1, 0, 2)
        k = (h @ lw.wk + lw.bk).reshape(t, heads, dk).transpose(1, 0, 2)
        v = (h @ lw.wv + lw.bv).reshape(t, heads, dk).transpose(1, 0, 2)
        att = _softmax(q @ k.transpose(0, 2, 1) / math.sqrt(dk))
        ctx = (att @ v).transpose(1, 0, 2).reshape(t, d)
        return ctx @ lw.wo + lw.bo

    def encode(self, tokens: Sequence[str]) -> list[np.ndarray]:
        """Layer stack [h^0, ..., h^L], each T x hidden_dim."""
        h = self.embed(tokens)
        stack = [h]
        for lw in self.layers:
            a = layer_norm(h + self._attention(h, lw))
            ffn = gelu(a @ lw.w1 + lw.b1) @ lw.w2 + lw.b2
            h = layer_norm(a + ffn)
            stack.append(h)
        return stack

    def provide(self, tokens: Sequence[str], masked_positions: Iterable[int], layer: int) -> np.ndarray:
        if not (0 <= layer <= self.depth):
            raise ValueError(f"layer {layer} out of range 0..{self.depth}")
        return self.encode(mask(tokens, masked_positions))[layer]
