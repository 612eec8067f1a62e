"""Fine-tune a masked language model from a precomputed mask dataset.

The dataset is JSON lines of ``{"text", "masks": [{"start", "end",
"surface", "class"}]}`` with character offsets into ``text``.  Mask
positions are consumed as-is (the masking policy lives entirely in the
dataset producer); this trainer only re-tokenizes each line with the model's
own tokenizer and maps the recorded spans onto model tokens via offset
overlap.  Examples whose spans align with no model token are skipped and
counted; a skip rate above 10% aborts the run.

Optionally the tokenizer vocabulary is extended with new whole-word tokens
(e.g. parent-term lemmas) before training; the embedding matrix is resized
and the new rows start from random initialization.
"""

from __future__ import annotations

import hashlib
import json
import logging
import os
import random
from dataclasses import dataclass, field

import torch
from torch.utils.data import DataLoader

from masktune.errors import DatasetError, SpecError

logger = logging.getLogger(__name__)

SKIP_RATE_LIMIT = 0.10
IGNORE_INDEX = -100


@dataclass(frozen=True)
class TrainSpec:
    base_model_id: str
    dataset_path: str
    output_dir: str
    new_tokens: tuple[str, ...] = ()
    epochs: int = 2
    seed: int = 0
    learning_rate: float = 5e-5
    batch_size: int = 8
    max_length: int = 128

    def __post_init__(self):
        if self.epochs < 1:
            raise SpecError(f"epochs must be >= 1, got {self.epochs}")
        if self.batch_size < 1:
            raise SpecError(f"batch_size must be >= 1, got {self.batch_size}")

    @property
    def config_hash(self) -> str:
        blob = json.dumps(
            {
                "base_model_id": self.base_model_id,
                "new_tokens": list(self.new_tokens),
                "epochs": self.epochs,
                "seed": self.seed,
                "learning_rate": self.learning_rate,
                "batch_size": self.batch_size,
                "max_length": self.max_length,
            },
            sort_keys=True,
        )
        return hashlib.sha256(blob.encode("utf-8")).hexdigest()[:16]


@dataclass
class TrainReport:
    output_dir: str
    vocab_size: int
    tokens_added: int
    examples_used: int
    examples_skipped: int
    epoch_losses: list[float] = field(default_factory=list)
    config_hash: str = ""


def extend_vocab(model, tokenizer, new_tokens) -> int:
    """Add whole-word tokens and resize the embedding matrix to match.

    New embedding rows are randomly initialized.  Tokens already present in
    the vocabulary are skipped with a warning.  Returns the number actually
    added.
    """
    new_tokens = list(new_tokens)
    if not new_tokens:
        raise SpecError("extend_vocab needs at least one new token")
    before = len(tokenizer)
    tokenizer.add_tokens(new_tokens)
    added = len(tokenizer) - before
    if added < len(new_tokens):
        logger.warning(
            "%d of %d tokens already present in the base vocabulary; skipped",
            len(new_tokens) - added,
            len(new_tokens),
        )
    if added:
        try:
            model.resize_token_embeddings(len(tokenizer), mean_resizing=False)
        except TypeError:  # older transformers: plain random init is the default
            model.resize_token_embeddings(len(tokenizer))
    return added


def load_dataset(dataset_path: str) -> list[dict]:
    records = []
    try:
        fh = open(dataset_path, encoding="utf-8")
    except OSError as exc:
        raise DatasetError(f"cannot read dataset {dataset_path}: {exc}") from exc
    with fh:
        for line_no, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                record = json.loads(line)
                record["text"], record["masks"]
            except (json.JSONDecodeError, KeyError) as exc:
                raise DatasetError(f"{dataset_path}:{line_no}: bad record: {exc}") from exc
            records.append(record)
    if not records:
        raise DatasetError(f"{dataset_path}: empty dataset")
    return records


def encode_example(tokenizer, record: dict, max_length: int):
    """Map recorded mask spans onto model tokens; None if any span misaligns."""
    encoding = tokenizer(
        record["text"],
        truncation=True,
        max_length=max_length,
        return_offsets_mapping=True,
    )
    input_ids = list(encoding["input_ids"])
    offsets = encoding["offset_mapping"]
    labels = [IGNORE_INDEX] * len(input_ids)
    mask_id = tokenizer.mask_token_id
    for span in record["masks"]:
        start, end = int(span["start"]), int(span["end"])
        hit = False
        for idx, (ts, te) in enumerate(offsets):
            if ts == te:  # special tokens
                continue
            if ts < end and te > start:
                labels[idx] = input_ids[idx]
                input_ids[idx] = mask_id
                hit = True
        if not hit:
            return None  # span truncated away or offset mismatch
    if all(label == IGNORE_INDEX for label in labels):
        return None
    return {
        "input_ids": input_ids,
        "attention_mask": list(encoding["attention_mask"]),
        "labels": labels,
    }


def _collate(batch, pad_token_id: int):
    width = max(len(item["input_ids"]) for item in batch)

    def pad(rows, value):
        return torch.tensor(
            [row + [value] * (width - len(row)) for row in rows], dtype=torch.long
        )

    return {
        "input_ids": pad([b["input_ids"] for b in batch], pad_token_id),
        "attention_mask": pad([b["attention_mask"] for b in batch], 0),
        "labels": pad([b["labels"] for b in batch], IGNORE_INDEX),
    }


def train(spec: TrainSpec) -> TrainReport:
    """Run the fine-tune and export model + tokenizer to ``spec.output_dir``."""
    from transformers import AutoModelForMaskedLM, AutoTokenizer

    torch.manual_seed(spec.seed)
    random.seed(spec.seed)

    tokenizer = AutoTokenizer.from_pretrained(spec.base_model_id)
    model = AutoModelForMaskedLM.from_pretrained(spec.base_model_id)
    tokens_added = 0
    if spec.new_tokens:
        tokens_added = extend_vocab(model, tokenizer, spec.new_tokens)

    records = load_dataset(spec.dataset_path)
    encoded = []
    skipped = 0
    for record in records:
        item = encode_example(tokenizer, record, spec.max_length)
        if item is None:
            skipped += 1
        else:
            encoded.append(item)
    if skipped > SKIP_RATE_LIMIT * len(records):
        raise DatasetError(
            f"{skipped}/{len(records)} examples misaligned (> {SKIP_RATE_LIMIT:.0%}); aborting"
        )
    if not encoded:
        raise DatasetError("no usable examples after alignment")

    loader = DataLoader(
        encoded,
        batch_size=spec.batch_size,
        shuffle=True,
        generator=torch.Generator().manual_seed(spec.seed),
        collate_fn=lambda batch: _collate(batch, tokenizer.pad_token_id),
    )
    optimizer = torch.optim.AdamW(model.parameters(), lr=spec.learning_rate)
    model.train()
    epoch_losses = []
    for epoch in range(1, spec.epochs + 1):
        total, steps = 0.0, 0
        for batch in loader:
            optimizer.zero_grad()
            loss = model(**batch).loss
            loss.backward()
            optimizer.step()
            total += loss.item()
            steps += 1
        epoch_losses.append(total / steps)
        logger.info("epoch %d: loss %.4f", epoch, epoch_losses[-1])

    os.makedirs(spec.output_dir, exist_ok=True)
    model.save_pretrained(spec.output_dir)
    tokenizer.save_pretrained(spec.output_dir)
    report = TrainReport(
        output_dir=spec.output_dir,
        vocab_size=len(tokenizer),
        tokens_added=tokens_added,
        examples_used=len(encoded),
        examples_skipped=skipped,
        epoch_losses=epoch_losses,
        config_hash=spec.config_hash,
    )
    with open(os.path.join(spec.output_dir, "training_log.jsonl"), "w", encoding="utf-8") as fh:
        for epoch, loss in enumerate(report.epoch_losses, start=1):
            fh.write(json.dumps({"epoch": epoch, "loss": loss, "skipped": skipped}) + "\n")
    with open(os.path.join(spec.output_dir, "train_config.json"), "w", encoding="utf-8") as fh:
        json.dump(
            {
                "base_model_id": spec.base_model_id,
                "dataset_path": spec.dataset_path,
                "new_tokens": list(spec.new_tokens),
                "epochs": spec.epochs,
                "seed": spec.seed,
                "learning_rate": spec.learning_rate,
                "batch_size": spec.batch_size,
                "max_length": spec.max_length,
                "config_hash": spec.config_hash,
                "vocab_size": report.vocab_size,
            },
            fh,
            indent=2,
            sort_keys=True,
        )
    return report
