import json
import logging
import subprocess
import sys

import pytest

from masktune.errors import DatasetError, SpecError
from masktune.training import TrainSpec, encode_example, extend_vocab, load_dataset, train

from conftest import NEW_TOKENS, masked_line, write_dataset


@pytest.fixture
def loaded_base(base_model_dir):
    from transformers import AutoModelForMaskedLM, AutoTokenizer

    return (
        AutoModelForMaskedLM.from_pretrained(base_model_dir),
        AutoTokenizer.from_pretrained(base_model_dir),
    )


class TestExtendVocab:
    def test_adds_exactly_three(self, loaded_base, base_vocab_size):
        model, tokenizer = loaded_base
        added = extend_vocab(model, tokenizer, list(NEW_TOKENS))
        assert added == 3
        assert len(tokenizer) == base_vocab_size + 3
        assert model.get_input_embeddings().weight.shape[0] == base_vocab_size + 3

    def test_empty_rejected(self, loaded_base):
        model, tokenizer = loaded_base
        with pytest.raises(SpecError):
            extend_vocab(model, tokenizer, [])

    def test_existing_token_skipped_with_warning(self, loaded_base, base_vocab_size, caplog):
        model, tokenizer = loaded_base
        with caplog.at_level(logging.WARNING):
            added = extend_vocab(model, tokenizer, ["soup", "flombo"])
        assert added == 1
        assert len(tokenizer) == base_vocab_size + 1
        assert "skipped" in caplog.text

    def test_multiword_token(self, loaded_base, base_vocab_size):
        model, tokenizer = loaded_base
        added = extend_vocab(model, tokenizer, ["carne asada"])
        assert added == 1
        ids = tokenizer("i had carne asada .")["input_ids"]
        assert tokenizer.convert_tokens_to_ids("carne asada") in ids

    def test_roundtrip_with_primary_token_list(self, loaded_base, base_model_dir, tmp_path):
        # the evaluator CLI derives missing parent lemmas from our base vocab;
        # everything it emits must be addable with zero skips
        model, tokenizer = loaded_base
        (tmp_path / "corpus.txt").write_text("my favorite snack is flombo .\n", encoding="utf-8")
        (tmp_path / "topics.txt").write_text("flombo\nzerples\nsoup\n", encoding="utf-8")
        result = subprocess.run(
            [
                sys.executable, "-m", "taxoprobe.cli", "mask",
                str(tmp_path / "corpus.txt"),
                "--main-topics", str(tmp_path / "topics.txt"),
                "-o", str(tmp_path / "data.jsonl"),
                "--base-vocab", f"{base_model_dir}/base_vocab.txt",
                "--new-tokens-out", str(tmp_path / "new_tokens.txt"),
            ],
            capture_output=True,
            text=True,
        )
        assert result.returncode == 0, result.stderr
        tokens = (tmp_path / "new_tokens.txt").read_text().split()
        assert tokens == ["flombo", "zerple"]  # soup already in vocab; zerples lemmatized
        added = extend_vocab(model, tokenizer, tokens)
        assert added == len(tokens)


class TestSpec:
    def test_zero_epochs_rejected(self, tmp_path):
        with pytest.raises(SpecError):
            TrainSpec("base", "data.jsonl", str(tmp_path), epochs=0)

    def test_config_hash_deterministic(self, tmp_path):
        a = TrainSpec("base", "data.jsonl", str(tmp_path / "a"), epochs=2, seed=1)
        b = TrainSpec("base", "data.jsonl", str(tmp_path / "b"), epochs=2, seed=1)
        assert a.config_hash == b.config_hash
        c = TrainSpec("base", "data.jsonl", str(tmp_path / "c"), epochs=2, seed=2)
        assert a.config_hash != c.config_hash


class TestEncodeExample:
    def test_alignment(self, loaded_base):
        _, tokenizer = loaded_base
        record = masked_line("my favorite snack is soup .".split(), [4])
        item = encode_example(tokenizer, record, max_length=32)
        soup_id = tokenizer.convert_tokens_to_ids("soup")
        assert soup_id in item["labels"]
        masked_pos = item["labels"].index(soup_id)
        assert item["input_ids"][masked_pos] == tokenizer.mask_token_id

    def test_empty_span_misaligns(self, loaded_base):
        _, tokenizer = loaded_base
        record = {"text": "my favorite snack", "masks": [{"start": 2, "end": 2, "surface": "", "class": "main"}]}
        assert encode_example(tokenizer, record, max_length=32) is None

    def test_truncated_span_misaligns(self, loaded_base):
        _, tokenizer = loaded_base
        words = ["soup"] * 80 + ["flavor"]
        record = masked_line(words, [80])
        assert encode_example(tokenizer, record, max_length=16) is None


class TestLoadDataset:
    def test_missing_file(self, tmp_path):
        with pytest.raises(DatasetError, match="cannot read"):
            load_dataset(str(tmp_path / "nope.jsonl"))

    def test_bad_record(self, tmp_path):
        path = tmp_path / "bad.jsonl"
        path.write_text('{"no_text": 1}\n', encoding="utf-8")
        with pytest.raises(DatasetError, match="bad record"):
            load_dataset(str(path))

    def test_empty(self, tmp_path):
        path = tmp_path / "empty.jsonl"
        path.write_text("\n", encoding="utf-8")
        with pytest.raises(DatasetError, match="empty"):
            load_dataset(str(path))


class TestTrain:
    def small_dataset(self, tmp_path, n=12, bad=0):
        records = [masked_line("the soup was very hot .".split(), [1]) for _ in range(n - bad)]
        for _ in range(bad):
            records.append(
                {"text": "x", "masks": [{"start": 0, "end": 0, "surface": "", "class": "main"}]}
            )
        return write_dataset(tmp_path / "small.jsonl", records)

    def test_smoke_export(self, base_model_dir, tmp_path):
        dataset = self.small_dataset(tmp_path)
        spec = TrainSpec(base_model_dir, dataset, str(tmp_path / "out"), epochs=1)
        report = train(spec)
        assert len(report.epoch_losses) == 1
        assert (tmp_path / "out" / "training_log.jsonl").exists()
        log = [json.loads(l) for l in (tmp_path / "out" / "training_log.jsonl").open()]
        assert log[0]["epoch"] == 1 and "loss" in log[0]
        config = json.loads((tmp_path / "out" / "train_config.json").read_text())
        assert config["config_hash"] == spec.config_hash
        # exported directory is loadable again
        from transformers import AutoModelForMaskedLM, AutoTokenizer

        AutoModelForMaskedLM.from_pretrained(str(tmp_path / "out"))
        AutoTokenizer.from_pretrained(str(tmp_path / "out"))

    def test_skip_budget_exceeded_aborts(self, base_model_dir, tmp_path):
        dataset = self.small_dataset(tmp_path, n=10, bad=2)
        spec = TrainSpec(base_model_dir, dataset, str(tmp_path / "out"), epochs=1)
        with pytest.raises(DatasetError, match="misaligned"):
            train(spec)

    def test_small_skip_rate_tolerated(self, base_model_dir, tmp_path):
        dataset = self.small_dataset(tmp_path, n=20, bad=1)
        spec = TrainSpec(base_model_dir, dataset, str(tmp_path / "out"), epochs=1)
        report = train(spec)
        assert report.examples_skipped == 1
        assert report.examples_used == 19

    def test_same_spec_same_outcome(self, base_model_dir, tmp_path):
        dataset = self.small_dataset(tmp_path)
        reports = []
        for tag in ("a", "b"):
            spec = TrainSpec(
                base_model_dir, dataset, str(tmp_path / tag),
                new_tokens=NEW_TOKENS, epochs=1, seed=5,
            )
            reports.append(train(spec))
        assert reports[0].vocab_size == reports[1].vocab_size
        assert reports[0].config_hash == reports[1].config_hash
        assert reports[0].epoch_losses == pytest.approx(reports[1].epoch_losses)
