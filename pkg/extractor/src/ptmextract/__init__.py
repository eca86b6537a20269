"""Bridge from real pre-trained transformers to the tree-probing file
formats: fine-tune on an aspect-sentiment dataset, then dump subword
impact matrices plus word alignments."""

__version__ = "0.1.0"

from .data import AspectSample, load_canonical_jsonl, dev_split
from .dump import dump_matrices, sample_impact_matrices, word_alignment
from .finetune import FinetuneConfig, FinetuneResult, finetune

__all__ = [
    "__version__",
    "AspectSample", "load_canonical_jsonl", "dev_split",
    "dump_matrices", "sample_impact_matrices", "word_alignment",
    "FinetuneConfig", "FinetuneResult", "finetune",
]
