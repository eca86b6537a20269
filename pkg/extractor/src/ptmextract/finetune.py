"""Fine-tuning loop for aspect-level sentiment classification."""

from __future__ import annotations

import json
import random
from dataclasses import asdict, dataclass, field
from pathlib import Path

import torch
from transformers import AutoModel, AutoTokenizer

from .data import AspectSample, DataError, dev_split
from .model import AspectClassifier, encode_pairs


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class FinetuneConfig:
    model: str
    batch_size: int = 32
    dropout: float = 0.1
    learning_rate: float = 2e-4
    epochs: int = 3
    dev_fraction: float = 0.2
    seed: int = 0
    max_length: int = 128

    def __post_init__(self):
        if not (0.0 < self.dev_fraction < 1.0):
            raise ConfigError(f"dev_fraction must be in (0, 1), got {self.dev_fraction}")
        if self.batch_size < 1:
            raise ConfigError("batch_size must be >= 1")
        if self.epochs < 1:
            raise ConfigError("epochs must be >= 1")
        if not (0.0 <= self.dropout < 1.0):
            raise ConfigError("dropout must be in [0, 1)")


@dataclass
class FinetuneResult:
    checkpoint_dir: Path
    step_losses: list[float] = field(default_factory=list)
    dev_accuracy: list[float] = field(default_factory=list)  # one entry per epoch
    dev_ids: list[str] = field(default_factory=list)


def _batches(items, size):
    for k in range(0, len(items), size):
        yield items[k:k + size]


@torch.no_grad()
def _accuracy(model, tokenizer, samples, max_length, batch_size, device) -> float:
    model.eval()
    correct = 0
    for chunk in _batches(samples, batch_size):
        batch = {k: v.to(device) for k, v in encode_pairs(tokenizer, chunk, max_length).items()}
        preds = model(**batch).argmax(dim=-1).tolist()
        correct += sum(p == s.label for p, s in zip(preds, chunk))
    return correct / len(samples)


def finetune(
    samples: list[AspectSample],
    config: FinetuneConfig,
    outdir,
    device: str = "cpu",
) -> FinetuneResult:
    """Train the classifier and save a reloadable checkpoint.

    The checkpoint directory contains the fine-tuned encoder and
    tokenizer (loadable with the standard from_pretrained machinery, so
    the dump stage can point straight at it), the MLP head weights, the
    config, and the per-epoch dev accuracy log.
    """
    if len(samples) < 2:
        raise DataError("need at least two samples to fine-tune")
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)

    torch.manual_seed(config.seed)
    tokenizer = AutoTokenizer.from_pretrained(config.model)
    encoder = AutoModel.from_pretrained(config.model)
    model = AspectClassifier(encoder, dropout=config.dropout).to(device)

    train, dev = dev_split(samples, config.dev_fraction, config.seed)
    optimizer = torch.optim.AdamW(model.parameters(), lr=config.learning_rate)
    loss_fn = torch.nn.CrossEntropyLoss()
    shuffler = random.Random(config.seed)

    result = FinetuneResult(checkpoint_dir=outdir / "encoder",
                            dev_ids=[s.id for s in dev])
    for _epoch in range(config.epochs):
        model.train()
        order = list(train)
        shuffler.shuffle(order)
        for chunk in _batches(order, config.batch_size):
            batch = {k: v.to(device) for k, v in
                     encode_pairs(tokenizer, chunk, config.max_length).items()}
            labels = torch.tensor([s.label for s in chunk], device=device)
            logits = model(**batch)
            loss = loss_fn(logits, labels)
            optimizer.zero_grad()
            loss.backward()
            optimizer.step()
            result.step_losses.append(float(loss.detach()))
        result.dev_accuracy.append(
            _accuracy(model, tokenizer, dev, config.max_length, config.batch_size, device)
        )

    model.encoder.save_pretrained(result.checkpoint_dir)
    tokenizer.save_pretrained(result.checkpoint_dir)
    torch.save(model.head.state_dict(), outdir / "classifier_head.pt")
    (outdir / "finetune_config.json").write_text(
        json.dumps(asdict(config), indent=2, sort_keys=True) + "\n", "utf-8"
    )
    (outdir / "training_log.json").write_text(
        json.dumps(
            {
                "step_losses": result.step_losses,
                "dev_accuracy": result.dev_accuracy,
                "dev_ids": result.dev_ids,
            },
            indent=2,
        )
        + "\n",
        "utf-8",
    )
    return result
