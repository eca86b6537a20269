"""Classification model: a pre-trained encoder with a small MLP head.

The input is the sentence paired with its aspect term (sequence-pair
encoding); the head reads the first-token vector of the final layer.
Both choices are deliberate and recorded here because checkpoints are
only reproducible if the input scheme is pinned down.
"""

from __future__ import annotations

import torch
from torch import nn


class AspectClassifier(nn.Module):
    def __init__(self, encoder, dropout: float = 0.1, num_labels: int = 3):
        super().__init__()
        hidden = encoder.config.hidden_size
        self.encoder = encoder
        self.head = nn.Sequential(
            nn.Dropout(dropout),
            nn.Linear(hidden, hidden),
            nn.Tanh(),
            nn.Dropout(dropout),
            nn.Linear(hidden, num_labels),
        )

    def forward(self, **batch) -> torch.Tensor:
        outputs = self.encoder(**batch)
        pooled = outputs.last_hidden_state[:, 0]
        return self.head(pooled)


def encode_pairs(tokenizer, samples, max_length: int):
    """Tokenize (sentence, aspect) pairs into one padded batch dict."""
    enc = tokenizer(
        [s.sentence for s in samples],
        [s.aspect_text for s in samples],
        padding=True,
        truncation=True,
        max_length=max_length,
        return_tensors="pt",
    )
    return {k: v for k, v in enc.items()}
