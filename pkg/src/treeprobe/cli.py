"""Command-line pipeline: ingest -> matrices -> decode -> features -> analyze.

Each stage reads plain files, writes its outputs atomically into an
output directory, and drops a ``manifest.json`` recording the tool
version, the configuration hash, and SHA-256 digests of every input and
output.  Downstream stages use those digests to refuse mixing stale
intermediates unless ``--force`` is given.

Exit codes: 0 success, 2 configuration error, 3 input error, 4 internal
invariant violation.  ``TREEPROBE_SEED`` overrides any ``--seed`` flag.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import os
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from functools import lru_cache
from pathlib import Path

import numpy as np

from . import __version__
from . import corpus, decode, metrics, perturb, treefeat
from .encoder import EncoderConfig, EncoderConfigError, ToyEncoder

# CLI names for tree sources -> DepTree.source tags
SOURCE_NAMES = {
    "dep_import": "dep_parser",
    "left": "left_chain",
    "right": "right_chain",
    "induced": "induced",
    "ft_induced": "ft_induced",
}


class ConfigError(Exception):
    exit_code = 2


class InputError(Exception):
    exit_code = 3


# ---------------------------------------------------------------------------
# Manifest and atomic output handling
# ---------------------------------------------------------------------------

def _sha256(path: Path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(65536), b""):
            h.update(chunk)
    return h.hexdigest()


def _check_fresh(inputs: list[Path], force: bool) -> None:
    """Refuse stale stage mixing based on upstream manifests.

    A manifest next to an input both certifies the input itself (it must
    hash to what the producing run recorded) and pins the digests of the
    files that run consumed; if another current input with the same name
    hashes differently, the stages are out of sync.
    """
    if force:
        return
    current = {p.name: _sha256(p) for p in inputs}
    for p in inputs:
        manifest_path = p.parent / "manifest.json"
        if not manifest_path.exists():
            continue
        try:
            manifest = json.loads(manifest_path.read_text("utf-8"))
        except json.JSONDecodeError:
            continue
        outputs = manifest.get("outputs", {})
        if p.name in outputs and outputs[p.name] != current[p.name]:
            raise InputError(
                f"{p} was modified after its manifest was written; "
                f"rerun the producing stage or pass --force"
            )
        for recorded_path, digest in manifest.get("inputs", {}).items():
            name = Path(recorded_path).name
            if name in current and name != p.name and digest != current[name]:
                raise InputError(
                    f"{p} was produced from a different version of {name}; "
                    f"rerun that stage or pass --force"
                )


class StageWriter:
    """Atomic multi-file stage output with a closing manifest."""

    def __init__(self, outdir: Path, command: str, config: dict, inputs: list[Path]):
        self.outdir = outdir
        self.command = command
        self.config = config
        self.inputs = inputs
        self.outputs: list[Path] = []
        self._tmp: list[Path] = []
        outdir.mkdir(parents=True, exist_ok=True)

    def path(self, name: str) -> Path:
        """Target path for an output; data is staged to a temp file."""
        final = self.outdir / name
        tmp = self.outdir / f".{name}.tmp{os.getpid()}"
        self.outputs.append(final)
        self._tmp.append(tmp)
        return tmp

    def abort(self) -> None:
        for tmp in self._tmp:
            tmp.unlink(missing_ok=True)

    def commit(self, extra_outputs: list[Path] = ()) -> Path:
        for tmp, final in zip(self._tmp, self.outputs):
            final.parent.mkdir(parents=True, exist_ok=True)
            os.replace(tmp, final)
        recorded = sorted([*self.outputs, *extra_outputs])
        config_blob = json.dumps(self.config, sort_keys=True)
        manifest = {
            "tool": "treeprobe",
            "version": __version__,
            "command": self.command,
            "config": self.config,
            "config_hash": hashlib.sha256(config_blob.encode("utf-8")).hexdigest(),
            "inputs": {str(p): _sha256(p) for p in self.inputs},
            "outputs": {str(p.relative_to(self.outdir)): _sha256(p) for p in recorded},
            "created": time.strftime("%Y-%m-%dT%H:%M:%S%z"),
        }
        path = self.outdir / "manifest.json"
        tmp = self.outdir / f".manifest.json.tmp{os.getpid()}"
        tmp.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n", "utf-8")
        os.replace(tmp, path)
        return path


def _existing(path_str: str, what: str) -> Path:
    path = Path(path_str)
    if not path.exists():
        raise InputError(f"{what} not found: {path}")
    return path


def _load_dataset(path: Path, split: str = "train") -> corpus.Dataset:
    try:
        return corpus.read_jsonl(path, name=path.stem, split=split)
    except corpus.CorpusFormatError as exc:
        raise InputError(str(exc)) from exc


# ---------------------------------------------------------------------------
# ingest
# ---------------------------------------------------------------------------

def cmd_ingest(args) -> int:
    inp = _existing(args.input, "dataset file")
    config = {
        "command": "ingest", "format": args.format, "name": args.name,
        "split": args.split, "language": args.language,
        "lenient_align": args.lenient_align, "dev_fraction": args.dev_fraction,
        "seed": args.seed,
    }
    try:
        if args.format == "semeval":
            dataset = corpus.parse_semeval_xml(
                inp.read_bytes(), name=args.name, split=args.split,
                language=args.language, lenient_align=args.lenient_align,
            )
        elif args.format == "twitter":
            dataset = corpus.parse_twitter(
                inp.read_text("utf-8"), name=args.name, split=args.split,
                language=args.language,
            )
        else:
            dataset = _load_dataset(inp, split=args.split)
    except (corpus.CorpusFormatError, corpus.AspectAlignmentError) as exc:
        raise InputError(str(exc)) from exc

    writer = StageWriter(Path(args.out), "ingest", config, [inp])
    try:
        datasets = {"dataset.jsonl": dataset}
        if args.dev_fraction is not None:
            train, dev = corpus.train_dev_split(dataset, args.dev_fraction, args.seed)
            datasets = {"dataset.jsonl": train, "dev.jsonl": dev}
        for name, d in datasets.items():
            corpus.write_jsonl(writer.path(name), d)
        # stats always describe the full ingested split, dev carve-out or not
        writer.path("stats.csv").write_text(corpus.stats_csv([dataset]), "utf-8")
    except Exception:
        writer.abort()
        raise
    writer.commit()
    print(f"ingested {len(dataset)} samples -> {args.out}")
    return 0


# ---------------------------------------------------------------------------
# matrices
# ---------------------------------------------------------------------------

@lru_cache(maxsize=4)
def _encoder_for(config_json: str) -> ToyEncoder:
    # one materialization per worker process
    return ToyEncoder(EncoderConfig.from_json(config_json))


def _matrix_task(task: tuple[str, str, tuple[str, ...], int, bool]) -> dict:
    config_json, sample_id, tokens, layer, symmetrize = task
    encoder = _encoder_for(config_json)
    m = perturb.impact_matrix(
        encoder, tokens, layer, sample_id=sample_id, symmetrize=symmetrize
    )
    return perturb.matrix_to_record(m)


def cmd_matrices(args) -> int:
    dataset_path = _existing(args.dataset, "dataset")
    _check_fresh([dataset_path], args.force)
    dataset = _load_dataset(dataset_path)
    vocab_words = sorted({tok for s in dataset.samples for tok in s.tokens})
    try:
        enc_config = EncoderConfig.build(
            vocab_words,
            num_layers=args.encoder_layers,
            hidden_dim=args.hidden_dim,
            num_heads=args.num_heads,
            ffn_dim=args.ffn_dim,
            max_positions=args.max_positions,
            seed=args.seed,
        )
    except EncoderConfigError as exc:
        raise ConfigError(str(exc)) from exc
    if not (0 <= args.layer <= enc_config.num_layers):
        raise ConfigError(
            f"--layer {args.layer} out of range for a {enc_config.num_layers}-layer encoder "
            f"(pass --layer <= {enc_config.num_layers} or raise --encoder-layers)"
        )
    longest = max(len(s.tokens) for s in dataset.samples) if dataset.samples else 0
    if longest > enc_config.max_positions:
        raise ConfigError(
            f"longest sentence has {longest} tokens; raise --max-positions"
        )

    config = {
        "command": "matrices", "layer": args.layer, "seed": args.seed,
        "encoder_layers": args.encoder_layers, "hidden_dim": args.hidden_dim,
        "num_heads": args.num_heads, "ffn_dim": args.ffn_dim,
        "max_positions": args.max_positions, "symmetrize": args.symmetrize,
    }
    writer = StageWriter(Path(args.out), "matrices", config, [dataset_path])
    try:
        config_json = enc_config.to_json()
        tasks = [
            (config_json, s.id, s.tokens, args.layer, args.symmetrize)
            for s in dataset.samples
        ]
        out_path = writer.path("matrices.jsonl")
        with open(out_path, "w", encoding="utf-8") as fh:
            if args.jobs > 1:
                with ProcessPoolExecutor(max_workers=args.jobs) as pool:
                    for record in pool.map(_matrix_task, tasks, chunksize=4):
                        fh.write(json.dumps(record) + "\n")
            else:
                for task in tasks:
                    fh.write(json.dumps(_matrix_task(task)) + "\n")
        writer.path("encoder_config.json").write_text(config_json + "\n", "utf-8")
    except Exception:
        writer.abort()
        raise
    writer.commit()
    print(f"wrote {len(dataset)} impact matrices -> {args.out}")
    return 0


# ---------------------------------------------------------------------------
# aggregate (subword dumps -> word-level matrices)
# ---------------------------------------------------------------------------

def _load_alignments(path: Path) -> dict[str, perturb.SubwordAlignment]:
    out: dict[str, perturb.SubwordAlignment] = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                rec = json.loads(line)
                out[str(rec["id"])] = perturb.SubwordAlignment(
                    tuple((int(s), int(e)) for s, e in rec["word_ranges"])
                )
            except (json.JSONDecodeError, KeyError, TypeError, ValueError,
                    perturb.AlignmentError) as exc:
                raise InputError(f"{path}:{lineno}: malformed alignment: {exc}") from exc
    return out


def cmd_aggregate(args) -> int:
    matrices_path = _existing(args.matrices, "matrix file")
    alignments_path = _existing(args.alignments, "alignment file")
    inputs = [matrices_path, alignments_path]
    dataset = None
    if args.dataset:
        dataset_path = _existing(args.dataset, "dataset")
        inputs.append(dataset_path)
        dataset = _load_dataset(dataset_path)
    _check_fresh(inputs, args.force)
    alignments = _load_alignments(alignments_path)
    words_by_id = {s.id: s.tokens for s in dataset.samples} if dataset else {}

    config = {"command": "aggregate", "mode": args.mode}
    writer = StageWriter(Path(args.out), "aggregate", config, inputs)
    try:
        def pooled():
            for m in perturb.read_matrices(matrices_path):
                alignment = alignments.get(m.sample_id)
                if alignment is None:
                    raise InputError(f"no alignment for sample {m.sample_id!r}")
                try:
                    yield perturb.aggregate_subwords(
                        m, alignment, mode=args.mode,
                        words=words_by_id.get(m.sample_id),
                    )
                except perturb.AlignmentError as exc:
                    raise InputError(f"sample {m.sample_id!r}: {exc}") from exc

        out_path = writer.path("matrices.jsonl")
        with open(out_path, "w", encoding="utf-8") as fh:
            count = 0
            for m in pooled():
                fh.write(json.dumps(perturb.matrix_to_record(m)) + "\n")
                count += 1
    except perturb.MatrixFormatError as exc:
        writer.abort()
        raise InputError(str(exc)) from exc
    except Exception:
        writer.abort()
        raise
    writer.commit()
    print(f"aggregated {count} matrices to word level -> {args.out}")
    return 0


# ---------------------------------------------------------------------------
# decode
# ---------------------------------------------------------------------------

def _decode_one(matrix: perturb.ImpactMatrix, args, source: str) -> decode.DepTree:
    values = matrix
    if args.minimize:
        # minimizing impact == maximizing the flipped scores; the shift
        # keeps entries non-negative so ImpactMatrix invariants still hold
        shifted = matrix.values.max() - matrix.values
        np.fill_diagonal(shifted, 0.0)
        values = perturb.ImpactMatrix(
            sample_id=matrix.sample_id, layer=matrix.layer,
            words=matrix.words, values=shifted,
        )
    if args.decoder == "eisner":
        tree = decode.eisner(values, direction=args.direction, source=source)
    elif args.root is not None:
        root = args.root
        if not (0 <= root < values.n):
            raise InputError(
                f"sample {matrix.sample_id!r}: --root {root} out of range for {values.n} words"
            )
        tree = decode.chu_liu_edmonds(values, root, direction=args.direction, source=source)
    else:
        tree = decode.best_root_tree(values, direction=args.direction, source=source)
    return tree


def cmd_decode(args) -> int:
    requested = [s.strip() for s in args.sources.split(",") if s.strip()]
    unknown = [s for s in requested if s not in SOURCE_NAMES]
    if unknown:
        raise ConfigError(f"unknown tree sources {unknown}; valid: {sorted(SOURCE_NAMES)}")
    if not requested:
        raise ConfigError("at least one tree source is required")

    dataset_path = _existing(args.dataset, "dataset")
    inputs = [dataset_path]
    matrices_path = conllu_path = None
    needs_matrices = [s for s in requested if s in ("induced", "ft_induced")]
    if len(needs_matrices) > 1:
        raise ConfigError(
            "induced and ft_induced come from different matrix files; run decode once per file"
        )
    if needs_matrices:
        if not args.matrices:
            raise ConfigError(f"sources {needs_matrices} require --matrices")
        matrices_path = _existing(args.matrices, "matrix file")
        inputs.append(matrices_path)
    if "dep_import" in requested:
        if not args.conllu:
            raise ConfigError("source dep_import requires --conllu")
        conllu_path = _existing(args.conllu, "CoNLL-U file")
        inputs.append(conllu_path)
    _check_fresh(inputs, args.force)

    dataset = _load_dataset(dataset_path)

    matrices_by_id: dict[str, perturb.ImpactMatrix] = {}
    if matrices_path is not None:
        try:
            for m in perturb.read_matrices(matrices_path):
                matrices_by_id[m.sample_id] = m
        except perturb.MatrixFormatError as exc:
            raise InputError(str(exc)) from exc

    parsed_by_id: dict[str, decode.ConlluSentence] = {}
    if conllu_path is not None:
        try:
            for sent in decode.iter_conllu_file(conllu_path):
                parsed_by_id[sent.sent_id] = sent
        except decode.ConlluError as exc:
            raise InputError(str(exc)) from exc

    config = {
        "command": "decode", "sources": requested, "decoder": args.decoder,
        "direction": args.direction, "root": args.root, "minimize": args.minimize,
        "seed": args.seed,
    }
    writer = StageWriter(Path(args.out), "decode", config, inputs)
    offsets: dict[str, dict] = {}
    try:
        for cli_name in requested:
            source = SOURCE_NAMES[cli_name]
            sentences = []
            for sample in dataset.samples:
                n = len(sample.tokens)
                if cli_name == "left":
                    tree = decode.left_chain(n)
                elif cli_name == "right":
                    tree = decode.right_chain(n)
                elif cli_name == "dep_import":
                    sent = parsed_by_id.get(sample.id)
                    if sent is None:
                        raise InputError(f"no parsed tree for sample {sample.id!r} in {conllu_path}")
                    if len(sent.tokens) != n:
                        raise InputError(
                            f"sample {sample.id!r}: dataset has {n} tokens, CoNLL-U has {len(sent.tokens)}"
                        )
                    sentences.append(decode.ConlluSentence(sample.id, list(sample.tokens), sent.tree, sent.deprels))
                    continue
                else:
                    m = matrices_by_id.get(sample.id)
                    if m is None:
                        raise InputError(f"no impact matrix for sample {sample.id!r} in {matrices_path}")
                    if len(m.words) != n:
                        raise InputError(
                            f"sample {sample.id!r}: dataset has {n} tokens, matrix has {len(m.words)}"
                        )
                    tree = _decode_one(m, args, source)
                sentences.append(decode.ConlluSentence(sample.id, list(sample.tokens), tree, []))
            name = f"trees_{source}.conllu"
            text = decode.export_conllu(sentences)
            writer.path(name).write_text(text, "utf-8")
            # byte offsets of each sentence block within the file
            per_sample = {}
            offset = 0
            for block in text.split("\n\n"):
                if not block.strip():
                    continue
                sent_id = block.split("\n", 1)[0].removeprefix("# sent_id = ").strip()
                per_sample[sent_id] = {"file": name, "offset": offset}
                offset += len(block.encode("utf-8")) + 2
            offsets[source] = per_sample
        writer.path("trees_manifest.json").write_text(
            json.dumps(offsets, indent=2, sort_keys=True) + "\n", "utf-8"
        )
    except Exception:
        writer.abort()
        raise
    writer.commit()
    print(f"decoded {len(requested)} tree source(s) for {len(dataset)} samples -> {args.out}")
    return 0


# ---------------------------------------------------------------------------
# features
# ---------------------------------------------------------------------------

def _read_tree_file(path: Path) -> tuple[str, dict[str, decode.ConlluSentence]]:
    try:
        sentences = list(decode.iter_conllu_file(path))
    except decode.ConlluError as exc:
        raise InputError(str(exc)) from exc
    if not sentences:
        raise InputError(f"{path}: no sentences")
    source = sentences[0].tree.source
    return source, {s.sent_id: s for s in sentences}


def cmd_features(args) -> int:
    dataset_path = _existing(args.dataset, "dataset")
    tree_paths = [_existing(p, "tree file") for p in args.trees]
    _check_fresh([dataset_path, *tree_paths], args.force)
    dataset = _load_dataset(dataset_path)

    config = {"command": "features", "trees": [str(p) for p in tree_paths]}
    writer = StageWriter(Path(args.out), "features", config, [dataset_path, *tree_paths])
    try:
        for path in tree_paths:
            source, by_id = _read_tree_file(path)
            records = []
            for sample in dataset.samples:
                sent = by_id.get(sample.id)
                if sent is None:
                    raise InputError(f"no tree for sample {sample.id!r} in {path}")
                deprels = sent.deprels if source == "dep_parser" else None
                try:
                    records.append(treefeat.build_features(sample, sent.tree, deprels))
                except treefeat.FeatureError as exc:
                    raise InputError(str(exc)) from exc
            treefeat.write_features(writer.path(f"features_{source}.jsonl"), records)
    except Exception:
        writer.abort()
        raise
    writer.commit()
    print(f"wrote features for {len(tree_paths)} source(s) -> {args.out}")
    return 0


# ---------------------------------------------------------------------------
# analyze
# ---------------------------------------------------------------------------

def _load_pairs(path: Path, samples) -> list[list[tuple[tuple[int, int], int]]]:
    by_id: dict[str, list] = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                record = json.loads(line)
                pairs = [((int(a[0]), int(a[1])), int(o)) for a, o in record["pairs"]]
                by_id[str(record["id"])] = pairs
            except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
                raise InputError(f"{path}:{lineno}: malformed pair record: {exc}") from exc
    return [by_id.get(s.id, []) for s in samples]


def cmd_analyze(args) -> int:
    dataset_path = _existing(args.dataset, "dataset")
    tree_paths = [_existing(p, "tree file") for p in args.trees]
    inputs = [dataset_path, *tree_paths]
    pairs_path = Path(args.pairs) if args.pairs else None
    if pairs_path is not None:
        inputs.append(_existing(args.pairs, "pairs file"))
    _check_fresh(inputs, args.force)

    dataset = _load_dataset(dataset_path)
    lexicon = metrics.load_lexicon(args.lexicon) if args.lexicon else metrics.default_lexicon()
    pairs = _load_pairs(pairs_path, dataset.samples) if pairs_path else None

    trees_by_source: dict[str, list[decode.DepTree]] = {}
    for path in tree_paths:
        source, by_id = _read_tree_file(path)
        trees = []
        for sample in dataset.samples:
            sent = by_id.get(sample.id)
            if sent is None:
                raise InputError(f"no tree for sample {sample.id!r} in {path}")
            trees.append(sent.tree)
        trees_by_source[source] = trees

    try:
        report = metrics.build_report(
            dataset.samples, trees_by_source, lexicon=lexicon,
            pairs=pairs, per_sentence=args.per_sentence,
        )
    except metrics.MetricsError as exc:
        raise InputError(str(exc)) from exc

    config = {
        "command": "analyze", "trees": [str(p) for p in tree_paths],
        "per_sentence": args.per_sentence, "figures": not args.no_figures,
    }
    writer = StageWriter(Path(args.out), "analyze", config, inputs)
    figure_paths: list[Path] = []
    try:
        writer.path("report.csv").write_text(metrics.report_to_csv(report), "utf-8")
        writer.path("report.json").write_text(metrics.report_to_json(report) + "\n", "utf-8")
        if not args.no_figures:
            from .plots import render_report_figures

            figure_paths = render_report_figures(report, Path(args.out) / "figures")
    except Exception:
        writer.abort()
        raise
    writer.commit(extra_outputs=figure_paths)
    print(metrics.report_to_csv(report), end="")
    return 0


# ---------------------------------------------------------------------------
# Parser
# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="treeprobe",
        description="Induce, decode and analyze dependency trees from token-impact matrices.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", help="normalize a dataset into canonical JSON Lines")
    p.add_argument("input")
    p.add_argument("--format", choices=("semeval", "twitter", "jsonl"), required=True)
    p.add_argument("--name", default="dataset")
    p.add_argument("--split", choices=corpus.SPLITS, default="train")
    p.add_argument("--language", default="en")
    p.add_argument("--lenient-align", action="store_true",
                   help="snap misaligned aspect offsets outward instead of failing")
    p.add_argument("--dev-fraction", type=float, default=None,
                   help="also emit a deterministic dev split of this fraction")
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("matrices", help="compute impact matrices with the built-in encoder")
    p.add_argument("--dataset", required=True)
    p.add_argument("--layer", type=int, default=11,
                   help="0-based encoder layer to probe (default: 11)")
    p.add_argument("--encoder-layers", type=int, default=4)
    p.add_argument("--hidden-dim", type=int, default=64)
    p.add_argument("--num-heads", type=int, default=4)
    p.add_argument("--ffn-dim", type=int, default=128)
    p.add_argument("--max-positions", type=int, default=128)
    p.add_argument("--symmetrize", action="store_true")
    p.add_argument("--jobs", type=int, default=1, help="per-sentence parallelism")
    p.set_defaults(func=cmd_matrices)

    p = sub.add_parser("aggregate", help="pool subword matrix dumps to word level")
    p.add_argument("--matrices", required=True, help="subword-level matrix file")
    p.add_argument("--alignments", required=True, help="alignment JSON Lines")
    p.add_argument("--dataset", default=None,
                   help="canonical JSON Lines supplying the word strings")
    p.add_argument("--mode", choices=perturb.AGGREGATIONS, default="mean")
    p.set_defaults(func=cmd_aggregate)

    p = sub.add_parser("decode", help="decode trees from matrices, chains or a parser file")
    p.add_argument("--dataset", required=True)
    p.add_argument("--matrices", default=None)
    p.add_argument("--conllu", default=None, help="parser trees for dep_import")
    p.add_argument("--sources", default="induced",
                   help="comma list of dep_import,left,right,induced,ft_induced")
    p.add_argument("--decoder", choices=("cle", "eisner"), default="cle")
    p.add_argument("--direction", choices=decode.DIRECTIONS, default="impact_on_dependent")
    p.add_argument("--root", type=int, default=None,
                   help="fix the root word index instead of searching all roots")
    p.add_argument("--minimize", action="store_true",
                   help="treat smaller impact as better when decoding")
    p.set_defaults(func=cmd_decode)

    p = sub.add_parser("features", help="emit adjacency/proximity/reshaped encodings")
    p.add_argument("--dataset", required=True)
    p.add_argument("--trees", action="append", required=True)
    p.set_defaults(func=cmd_features)

    p = sub.add_parser("analyze", help="structural metrics report with figures")
    p.add_argument("--dataset", required=True)
    p.add_argument("--trees", action="append", required=True)
    p.add_argument("--lexicon", default=None, help="custom sentiment lexicon JSON")
    p.add_argument("--pairs", default=None, help="aspect-opinion pairs JSON Lines")
    p.add_argument("--per-sentence", action="store_true",
                   help="average the neighboring proportion per sentence instead of pooling edges")
    p.add_argument("--no-figures", action="store_true")
    p.set_defaults(func=cmd_analyze)

    for sp in sub.choices.values():
        sp.add_argument("--out", required=True, help="output directory")
        sp.add_argument("--seed", type=int, default=0)
        sp.add_argument("--force", action="store_true",
                        help="ignore stale-input checks from upstream manifests")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    env_seed = os.environ.get("TREEPROBE_SEED")
    if env_seed is not None:
        try:
            args.seed = int(env_seed)
        except ValueError:
            print(f"treeprobe: TREEPROBE_SEED={env_seed!r} is not an integer", file=sys.stderr)
            return 2
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"treeprobe: config error: {exc}", file=sys.stderr)
        return 2
    except InputError as exc:
        print(f"treeprobe: input error: {exc}", file=sys.stderr)
        return 3
    except Exception as exc:  # internal invariant violation
        print(f"treeprobe: internal error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 4


def entrypoint() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entrypoint()
