"""Acceptance suite: one test per release criterion, each printing a
pass line with its runtime against the stated budget.

Run with ``pytest tests/test_acceptance.py -v`` to get one line per
criterion.
"""

import json
import math
import shutil
import time
from contextlib import contextmanager

import numpy as np
import pytest

from treeprobe.cli import main as cli_main
from treeprobe.corpus import (
    Polarity,
    Sample,
    bundled_fixture_path,
    read_jsonl,
    sample_to_record,
    write_jsonl,
)
from treeprobe.decode import (
    ROOT,
    DepTree,
    best_root_tree,
    chu_liu_edmonds,
    edge_scores,
    eisner,
    export_conllu,
    import_conllu,
    left_chain,
    right_chain,
    tree_weight,
)
from treeprobe.encoder import EncoderConfig, ToyEncoder
from treeprobe.metrics import SentimentLexicon, asd, default_lexicon, neighboring_proportion
from treeprobe.perturb import ImpactMatrix, impact_matrix, read_matrices, write_matrices
from treeprobe.treefeat import proximity, reshape_aspect_oriented, tag_distance

import oracles


@contextmanager
def budget(seconds: float, label: str):
    start = time.perf_counter()
    yield
    elapsed = time.perf_counter() - start
    print(f"{label}: PASS in {elapsed:.2f}s (budget {seconds:g}s)")
    assert elapsed < seconds, f"{label} exceeded its {seconds}s budget ({elapsed:.2f}s)"


def fixture_samples():
    return read_jsonl(bundled_fixture_path()).samples


def test_criterion_1_chain_sanity():
    """Left- and right-chain trees have neighboring proportion 1.000 exactly."""
    with budget(1.0, "chain sanity"):
        samples = fixture_samples()
        lefts = [left_chain(len(s.tokens)) for s in samples]
        rights = [right_chain(len(s.tokens)) for s in samples]
        assert neighboring_proportion(lefts) == 1.0
        assert neighboring_proportion(rights) == 1.0
        assert neighboring_proportion(lefts + rights) == 1.0
        rng = np.random.default_rng(0)
        arbitrary = [left_chain(int(rng.integers(2, 40))) for _ in range(50)]
        arbitrary += [right_chain(int(rng.integers(2, 40))) for _ in range(50)]
        assert neighboring_proportion(arbitrary) == 1.0


def _enumerated_maxima(scores: np.ndarray):
    n = scores.shape[0]
    per_root = [-math.inf] * n
    projective = -math.inf
    for heads in oracles.all_trees(n):
        w = oracles.weight_of(scores, heads)
        r = heads.index(oracles.ROOT)
        if w > per_root[r]:
            per_root[r] = w
        if oracles.is_projective_tree(heads) and w > projective:
            projective = w
    return per_root, max(per_root), projective


def test_criterion_2_decoder_optimality():
    """CLE matches the exhaustive arborescence maximum and Eisner the
    exhaustive projective maximum on 200 random matrices, n in 3..6."""
    with budget(30.0, "decoder optimality"):
        rng = np.random.default_rng(2024)
        for trial in range(200):
            n = int(rng.integers(3, 7))
            values = oracles.random_impact_values(rng, n)
            m = ImpactMatrix(f"t{trial}", 0, tuple(f"w{i}" for i in range(n)), values)
            scores = edge_scores(m)
            per_root, global_best, projective_best = _enumerated_maxima(scores)
            for root in range(n):
                tree = chu_liu_edmonds(m, root)
                assert tree_weight(scores, tree.heads) == per_root[root]
            best = best_root_tree(m)
            assert tree_weight(scores, best.heads) == global_best
            proj = eisner(m)
            assert tree_weight(scores, proj.heads) == projective_best


def test_criterion_3_projectivity():
    """Eisner output has zero crossing arcs on 500 random instances."""
    with budget(10.0, "projectivity"):
        rng = np.random.default_rng(3)
        for trial in range(500):
            n = int(rng.integers(2, 12))
            values = oracles.random_impact_values(rng, n)
            m = ImpactMatrix(f"p{trial}", 0, tuple(f"w{i}" for i in range(n)), values)
            tree = eisner(m)
            assert not oracles.has_crossing_arcs(tree.heads)


def test_criterion_4_impact_invariants():
    """Toy-provider impact matrices: zero diagonal, non-negative, finite,
    bit-identical under a fixed seed, spot-checked against the naive
    per-pair definition at 1e-12 relative."""
    with budget(30.0, "impact-matrix invariants"):
        samples = fixture_samples()
        vocab = sorted({tok for s in samples for tok in s.tokens})
        cfg = EncoderConfig.build(vocab, num_layers=3, hidden_dim=32, num_heads=4,
                                  ffn_dim=64, max_positions=32, seed=99)
        enc = ToyEncoder(cfg)
        layer = 3
        rng = np.random.default_rng(4)
        for s in samples:
            m1 = impact_matrix(enc, s.tokens, layer, sample_id=s.id)
            m2 = impact_matrix(enc, s.tokens, layer, sample_id=s.id)
            assert np.array_equal(m1.values, m2.values)
            assert np.isfinite(m1.values).all()
            assert (m1.values >= 0).all()
            assert np.diagonal(m1.values).sum() == 0.0
            n = len(s.tokens)
            for _ in range(3):
                i, j = int(rng.integers(0, n)), int(rng.integers(0, n))
                a = enc.provide(s.tokens, {i}, layer)[i]
                b = enc.provide(s.tokens, {i, j}, layer)[i]
                naive = 0.0 if i == j else float(np.linalg.norm(a - b))
                got = m1.values[i, j]
                assert got == pytest.approx(naive, rel=1e-12, abs=0)


def test_criterion_5_metric_correctness():
    """AsD matches manual path counting, is chain-direction invariant on
    100 random corpora, and proximity equals the Floyd-Warshall oracle."""
    with budget(20.0, "metric correctness"):
        lex = SentimentLexicon(positive=frozenset({"good"}), negative=frozenset({"bad"}))

        # hand-built: star around token 0 (aspect), matches at 1 and 3 at
        # distance 1 each -> 1.0; chain with aspect {1,2} and match at 0
        # -> (1+2)/2 = 1.5
        s1 = Sample(id="a", tokens=("food", "good", "but", "bad"), aspect=(0, 1),
                    polarity=Polarity.NEUTRAL)
        t1 = DepTree((ROOT, 0, 0, 0))
        s2 = Sample(id="b", tokens=("good", "screen", "colors"), aspect=(1, 3),
                    polarity=Polarity.NEUTRAL)
        t2 = left_chain(3)
        assert asd([s1], [t1], lex) == pytest.approx(1.0, abs=1e-12)
        assert asd([s2], [t2], lex) == pytest.approx(1.5, abs=1e-12)
        assert asd([s1, s2], [t1, t2], lex) == pytest.approx(1.25, abs=1e-12)

        # chain-direction invariance on 100 random corpora
        rng = np.random.default_rng(5)
        words = ["good", "bad", "the", "it", "fine", "meal"]
        for _ in range(100):
            samples, lefts, rights = [], [], []
            for k in range(int(rng.integers(2, 8))):
                n = int(rng.integers(2, 10))
                tokens = tuple(str(rng.choice(words)) for _ in range(n))
                st = int(rng.integers(0, n))
                en = int(rng.integers(st + 1, n + 1))
                samples.append(Sample(id=f"s{k}", tokens=tokens, aspect=(st, en),
                                      polarity=Polarity.NEUTRAL))
                lefts.append(left_chain(n))
                rights.append(right_chain(n))
            try:
                left_value = asd(samples, lefts, lex)
            except Exception:
                continue
            right_value = asd(samples, rights, lex)
            assert left_value == pytest.approx(right_value, abs=1e-12)

        # proximity vs all-pairs-shortest-path oracle
        for _ in range(300):
            n = int(rng.integers(1, 9))
            heads = oracles.random_tree_heads(rng, n)
            tree = DepTree(tuple(heads))
            st = int(rng.integers(0, n))
            en = int(rng.integers(st + 1, n + 1))
            dist = oracles.floyd_warshall(heads)
            want = [int(min(dist[i, a] for a in range(st, en))) for i in range(n)]
            assert proximity(tree, (st, en)) == want


def test_criterion_6_reshape_proximity_consistency():
    """Reshaped tag distances equal proximity values for all non-aspect
    tokens on 200 random (tree, aspect) fixtures."""
    with budget(10.0, "reshape/proximity consistency"):
        rng = np.random.default_rng(6)
        for _ in range(200):
            n = int(rng.integers(2, 12))
            tree = DepTree(tuple(oracles.random_tree_heads(rng, n)))
            st = int(rng.integers(0, n))
            en = int(rng.integers(st + 1, n + 1))
            prox = proximity(tree, (st, en))
            reshaped = reshape_aspect_oriented(tree, (st, en))
            for i in range(n):
                if not (st <= i < en):
                    assert tag_distance(reshaped.tags[i]) == prox[i]


def test_criterion_7_format_round_trips(tmp_path):
    """Matrix files, canonical JSON Lines and CoNLL-U all round-trip."""
    with budget(10.0, "format round-trips"):
        rng = np.random.default_rng(7)

        # matrix file
        mats = []
        for k in range(20):
            n = int(rng.integers(1, 9))
            values = oracles.random_impact_values(rng, n)
            mats.append(ImpactMatrix(f"m{k}", 11, tuple(f"w{i}" for i in range(n)), values))
        mpath = tmp_path / "m.jsonl"
        write_matrices(mpath, mats)
        back = list(read_matrices(mpath))
        assert len(back) == len(mats)
        for a, b in zip(mats, back):
            assert (a.sample_id, a.layer, a.words) == (b.sample_id, b.layer, b.words)
            assert np.array_equal(a.values, b.values)

        # canonical JSON Lines
        dataset = read_jsonl(bundled_fixture_path())
        dpath = tmp_path / "d.jsonl"
        write_jsonl(dpath, dataset)
        again = read_jsonl(dpath)
        assert again.samples == dataset.samples
        assert [sample_to_record(s) for s in again.samples] == [
            sample_to_record(s) for s in dataset.samples
        ]

        # CoNLL-U
        sentences = []
        for k in range(15):
            n = int(rng.integers(1, 9))
            tree = DepTree(tuple(oracles.random_tree_heads(rng, n)), source="induced")
            sentences.append((f"s{k}", [f"tok{i}" for i in range(n)], tree))
        text = export_conllu(sentences)
        parsed = import_conllu(text)
        assert export_conllu(
            [(p.sent_id, p.tokens, p.tree) for p in parsed]
        ) == text
        for (sid, tokens, tree), p in zip(sentences, parsed):
            assert p.sent_id == sid and p.tokens == tokens and p.tree.heads == tree.heads


def _run_pipeline(root) -> None:
    dataset = root / "dataset.jsonl"
    shutil.copy(bundled_fixture_path(), dataset)
    steps = [
        ["matrices", "--dataset", dataset, "--layer", "3", "--seed", "7",
         "--encoder-layers", "3", "--hidden-dim", "32", "--num-heads", "4",
         "--ffn-dim", "64", "--out", root / "mat"],
        ["decode", "--dataset", dataset, "--matrices", root / "mat" / "matrices.jsonl",
         "--sources", "left,right,induced", "--out", root / "trees"],
        ["features", "--dataset", dataset,
         "--trees", root / "trees" / "trees_left_chain.conllu",
         "--trees", root / "trees" / "trees_right_chain.conllu",
         "--trees", root / "trees" / "trees_induced.conllu",
         "--out", root / "feat"],
        ["analyze", "--dataset", dataset,
         "--trees", root / "trees" / "trees_left_chain.conllu",
         "--trees", root / "trees" / "trees_right_chain.conllu",
         "--trees", root / "trees" / "trees_induced.conllu",
         "--out", root / "report"],
    ]
    for step in steps:
        code = cli_main([str(a) for a in step])
        assert code == 0, f"step {step[0]} exited {code}"


def test_criterion_8_end_to_end_determinism(tmp_path):
    """The full CLI pipeline run twice with the same seed produces
    byte-identical artifacts (manifests excluded)."""
    with budget(30.0, "end-to-end determinism"):
        first, second = tmp_path / "one", tmp_path / "two"
        first.mkdir(), second.mkdir()
        _run_pipeline(first)
        _run_pipeline(second)

        # the analyze stage really produced the requested sources
        report = json.loads((first / "report" / "report.json").read_text())
        assert set(report["sources"]) == {"left_chain", "right_chain", "induced"}
        assert report["sources"]["left_chain"]["neighboring"] == 1.0
        assert report["sources"]["right_chain"]["neighboring"] == 1.0

        compared = 0
        for path in sorted(first.rglob("*")):
            if not path.is_file() or path.name == "manifest.json":
                continue
            twin = second / path.relative_to(first)
            assert twin.exists(), f"missing {twin}"
            assert path.read_bytes() == twin.read_bytes(), f"{path} differs between runs"
            compared += 1
        assert compared >= 10
