import json
import random

import pytest
import torch
from transformers import BertConfig, BertModel, BertTokenizerFast

WORDS = ["the", "food", "service", "screen", "battery", "was", "is",
         "good", "great", "bad", "poor", "fine", "here", "really"]

SPECIALS = ["[PAD]", "[UNK]", "[CLS]", "[SEP]", "[MASK]"]


@pytest.fixture(scope="session")
def tiny_checkpoint(tmp_path_factory):
    """A local, randomly initialized mini-BERT usable fully offline."""
    torch.manual_seed(0)
    vocab = {w: i for i, w in enumerate(SPECIALS + WORDS + ["##s", "##ly"])}
    tokenizer = BertTokenizerFast(vocab=vocab)
    config = BertConfig(
        vocab_size=len(vocab),
        hidden_size=32,
        num_hidden_layers=2,
        num_attention_heads=2,
        intermediate_size=48,
        max_position_embeddings=64,
    )
    model = BertModel(config)
    path = tmp_path_factory.mktemp("tiny_model")
    model.save_pretrained(path)
    tokenizer.save_pretrained(path)
    return str(path)


def make_dataset(path, count=50, seed=0):
    """Separable synthetic corpus: polarity follows the adjective."""
    rng = random.Random(seed)
    rows = []
    for k in range(count):
        aspect = rng.choice(["food", "service", "screen", "battery"])
        polarity = rng.choice(["positive", "negative", "neutral"])
        adjective = {
            "positive": rng.choice(["good", "great"]),
            "negative": rng.choice(["bad", "poor"]),
            "neutral": "fine",
        }[polarity]
        tokens = ["the", aspect, "was", adjective, "here"]
        rows.append({
            "id": f"t{k}",
            "tokens": tokens,
            "aspect": [1, 2],
            "polarity": polarity,
            "language": "en",
        })
    with open(path, "w", encoding="utf-8") as fh:
        for row in rows:
            fh.write(json.dumps(row) + "\n")
    return path
