"""Shared fixtures: a tiny locally-built base MLM and synthetic mask datasets.

Tests never download weights; the base model is a small randomly initialized
BERT with a word-level-ish WordPiece vocabulary built from the synthetic
corpus. The injected tokens (flombo, zerple, quathi) are deliberately absent
from the base vocabulary so vocabulary extension is exercised end to end.
"""

from __future__ import annotations

import json

import pytest

BASE_WORDS = (
    "my favorite snack is flavor the soup was very hot and a bit too salty "
    "service quick friendly food place great small portion we loved it came "
    "back again drink water fresh bread cheese salad spicy rice sweet sauce "
    "order table staff menu taste dinner lunch daily special value price . , !"
).split()
SPECIALS = ["[PAD]", "[UNK]", "[CLS]", "[SEP]", "[MASK]"]
NEW_TOKENS = ("flombo", "zerple", "quathi")


@pytest.fixture(scope="session")
def base_model_dir(tmp_path_factory) -> str:
    from transformers import BertConfig, BertForMaskedLM, BertTokenizerFast

    model_dir = tmp_path_factory.mktemp("base-model")
    vocab_path = model_dir / "base_vocab.txt"
    vocab_path.write_text("\n".join(SPECIALS + BASE_WORDS) + "\n", encoding="utf-8")
    tokenizer = BertTokenizerFast(str(vocab_path))
    assert len(tokenizer) == len(SPECIALS) + len(BASE_WORDS)
    config = BertConfig(
        vocab_size=len(tokenizer),
        hidden_size=64,
        num_hidden_layers=2,
        num_attention_heads=2,
        intermediate_size=128,
        max_position_embeddings=64,
    )
    import torch

    torch.manual_seed(0)
    model = BertForMaskedLM(config)
    model.save_pretrained(str(model_dir))
    tokenizer.save_pretrained(str(model_dir))
    return str(model_dir)


@pytest.fixture(scope="session")
def base_vocab_size() -> int:
    return len(SPECIALS) + len(BASE_WORDS)


def masked_line(words: list[str], mask_indices: list[int], cls: str = "main") -> dict:
    """Dataset record with character offsets computed from the word list."""
    text = " ".join(words)
    masks = []
    for idx in mask_indices:
        start = sum(len(w) + 1 for w in words[:idx])
        masks.append(
            {"start": start, "end": start + len(words[idx]), "surface": words[idx], "class": cls}
        )
    return {"text": text, "masks": masks}


def write_dataset(path, records) -> str:
    with open(path, "w", encoding="utf-8") as fh:
        for record in records:
            fh.write(json.dumps(record, sort_keys=True) + "\n")
    return str(path)


def smoke_corpus() -> list[dict]:
    """200 lines; 'flombo' appears as the masked target in a fixed context."""
    records = []
    for _ in range(120):
        records.append(masked_line("my favorite snack is flombo .".split(), [4]))
    for i in range(40):
        words = "the soup was very hot .".split()
        records.append(masked_line(words, [1 if i % 2 else 4], cls="other"))
    for i in range(40):
        words = "service was quick and friendly .".split()
        records.append(masked_line(words, [i % 5], cls="random"))
    return records


@pytest.fixture(scope="session")
def smoke_dataset(tmp_path_factory) -> str:
    path = tmp_path_factory.mktemp("data") / "smoke.jsonl"
    return write_dataset(path, smoke_corpus())
