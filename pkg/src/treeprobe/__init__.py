"""treeprobe: dependency-tree induction from token-impact matrices.

The pipeline: ingest an aspect-level sentiment corpus, compute
perturbed-masking impact matrices with a deterministic built-in encoder
(or read them from files produced by an external extractor), decode
dependency trees (maximum spanning arborescence or best projective tree),
derive the adjacency/proximity/reshaped feature encodings, and report
structural metrics such as the neighboring-connection proportion and the
aspect-sentiment distance.
"""

__version__ = "0.1.0"

from .corpus import Dataset, Polarity, Sample, parse_semeval_xml, parse_twitter, stats
from .decode import (
    ROOT,
    DepTree,
    best_root_tree,
    chu_liu_edmonds,
    eisner,
    export_conllu,
    import_conllu,
    left_chain,
    right_chain,
)
from .encoder import EncoderConfig, ToyEncoder, mask
from .metrics import (
    MetricsReport,
    SentimentLexicon,
    asd,
    attachment_agreement,
    default_lexicon,
    neighboring_proportion,
    pasd,
)
from .perturb import (
    ImpactMatrix,
    SubwordAlignment,
    aggregate_subwords,
    impact,
    impact_matrix,
    read_matrices,
    write_matrices,
)
from .treefeat import ReshapedTree, adjacency, proximity, reshape_aspect_oriented

__all__ = [
    "__version__",
    "Dataset", "Polarity", "Sample", "parse_semeval_xml", "parse_twitter", "stats",
    "ROOT", "DepTree", "best_root_tree", "chu_liu_edmonds", "eisner",
    "export_conllu", "import_conllu", "left_chain", "right_chain",
    "EncoderConfig", "ToyEncoder", "mask",
    "MetricsReport", "SentimentLexicon", "asd", "attachment_agreement",
    "default_lexicon", "neighboring_proportion", "pasd",
    "ImpactMatrix", "SubwordAlignment", "aggregate_subwords", "impact",
    "impact_matrix", "read_matrices", "write_matrices",
    "ReshapedTree", "adjacency", "proximity", "reshape_aspect_oriented",
]
