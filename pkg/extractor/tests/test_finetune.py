import json

import pytest

from ptmextract.data import DataError, dev_split, load_canonical_jsonl
from ptmextract.finetune import ConfigError, FinetuneConfig, finetune

from conftest import make_dataset


class TestConfig:
    def test_defaults(self):
        cfg = FinetuneConfig(model="m")
        assert cfg.batch_size == 32
        assert cfg.dropout == 0.1
        assert cfg.learning_rate == 2e-4
        assert cfg.dev_fraction == 0.2

    def test_zero_dev_fraction_rejected(self):
        with pytest.raises(ConfigError):
            FinetuneConfig(model="m", dev_fraction=0.0)

    def test_full_dev_fraction_rejected(self):
        with pytest.raises(ConfigError):
            FinetuneConfig(model="m", dev_fraction=1.0)

    def test_bad_batch_size(self):
        with pytest.raises(ConfigError):
            FinetuneConfig(model="m", batch_size=0)


class TestData:
    def test_load_canonical(self, tmp_path):
        path = make_dataset(tmp_path / "d.jsonl", count=10)
        samples = load_canonical_jsonl(path)
        assert len(samples) == 10
        assert samples[0].aspect == (1, 2)
        assert samples[0].sentence.count(" ") == 4

    def test_malformed_line(self, tmp_path):
        path = tmp_path / "bad.jsonl"
        path.write_text('{"id": "a"}\n')
        with pytest.raises(DataError):
            load_canonical_jsonl(path)

    def test_dev_split_deterministic(self, tmp_path):
        samples = load_canonical_jsonl(make_dataset(tmp_path / "d.jsonl", count=40))
        _, dev1 = dev_split(samples, 0.2, seed=9)
        _, dev2 = dev_split(samples, 0.2, seed=9)
        assert [s.id for s in dev1] == [s.id for s in dev2]
        assert len(dev1) == 8

    def test_dev_split_partitions(self, tmp_path):
        samples = load_canonical_jsonl(make_dataset(tmp_path / "d.jsonl", count=25))
        train, dev = dev_split(samples, 0.2, seed=1)
        assert {s.id for s in train} | {s.id for s in dev} == {s.id for s in samples}
        assert not ({s.id for s in train} & {s.id for s in dev})


class TestFinetune:
    def test_one_epoch_runs_end_to_end(self, tiny_checkpoint, tmp_path):
        samples = load_canonical_jsonl(make_dataset(tmp_path / "d.jsonl", count=50))
        cfg = FinetuneConfig(model=tiny_checkpoint, batch_size=8, epochs=1,
                             seed=0, max_length=32)
        result = finetune(samples, cfg, tmp_path / "ft")
        assert len(result.dev_accuracy) == 1
        assert (tmp_path / "ft" / "encoder").is_dir()

    def test_smoke_run_loss_decreases(self, tiny_checkpoint, tmp_path):
        samples = load_canonical_jsonl(make_dataset(tmp_path / "d.jsonl", count=50))
        cfg = FinetuneConfig(model=tiny_checkpoint, batch_size=8, epochs=3,
                             learning_rate=1e-3, seed=4, max_length=32)
        result = finetune(samples, cfg, tmp_path / "ft")
        assert len(result.step_losses) >= 9
        head = sum(result.step_losses[:3]) / 3
        tail = sum(result.step_losses[-3:]) / 3
        assert tail < head, f"mean loss did not decrease: {head:.4f} -> {tail:.4f}"
        assert len(result.dev_accuracy) == cfg.epochs

    def test_checkpoint_reloadable(self, tiny_checkpoint, tmp_path):
        from transformers import AutoModel, AutoTokenizer

        samples = load_canonical_jsonl(make_dataset(tmp_path / "d.jsonl", count=12))
        cfg = FinetuneConfig(model=tiny_checkpoint, batch_size=4, epochs=1, seed=0,
                             max_length=32)
        result = finetune(samples, cfg, tmp_path / "ft")
        model = AutoModel.from_pretrained(result.checkpoint_dir)
        tokenizer = AutoTokenizer.from_pretrained(result.checkpoint_dir)
        assert model.config.num_hidden_layers == 2
        assert tokenizer.mask_token_id is not None
        log = json.loads((tmp_path / "ft" / "training_log.json").read_text())
        assert log["dev_ids"] == result.dev_ids

    def test_seed_fixes_dev_membership(self, tiny_checkpoint, tmp_path):
        samples = load_canonical_jsonl(make_dataset(tmp_path / "d.jsonl", count=30))
        cfg = FinetuneConfig(model=tiny_checkpoint, batch_size=8, epochs=1, seed=21,
                             max_length=32)
        r1 = finetune(samples, cfg, tmp_path / "a")
        r2 = finetune(samples, cfg, tmp_path / "b")
        assert r1.dev_ids == r2.dev_ids
