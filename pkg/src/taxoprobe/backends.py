"""Fill-mask prediction backends behind one uniform interface.

Four interchangeable sources: a deterministic JSON fixture (the whole
offline test suite runs on it), a remote HTTP inference service, a local
transformers pipeline (optional dependency), and a persistent JSON-lines
cache wrapping any of them.  Probabilities are informative metadata only;
positive/negative decisions downstream use ranks.
"""

from __future__ import annotations

import abc
import json
import logging
import threading
import time
from dataclasses import dataclass
from typing import Mapping, Optional, Sequence

from taxoprobe.errors import BackendConfigError, InputError, TransportError
from taxoprobe.matching import MatchPolicy, rank_of
from taxoprobe.prompts import PromptQuery

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class Prediction:
    """One ranked fill-mask output: a single vocabulary unit and its probability."""

    token: str
    probability: float

    def __post_init__(self):
        if not -1e-9 <= self.probability <= 1 + 1e-9:
            raise InputError(f"probability out of [0,1]: {self.probability!r}")


@dataclass(frozen=True)
class PredictionList:
    """Ranked predictions for one query; rank 1 is the most probable token."""

    query: PromptQuery
    model_id: str
    items: tuple[Prediction, ...]

    def __post_init__(self):
        probs = [p.probability for p in self.items]
        if any(a < b for a, b in zip(probs, probs[1:])):
            raise InputError("predictions must be sorted by probability descending")

    def top(self, k: int) -> "PredictionList":
        return PredictionList(self.query, self.model_id, self.items[:k])


@dataclass(frozen=True)
class BackendDescriptor:
    kind: str  # http | local | fixture | cached
    model_id: str
    mask_token: str

    def __post_init__(self):
        if not self.mask_token:
            raise InputError("mask token must be non-empty")


class FillMaskBackend(abc.ABC):
    """Base class: validates queries, delegates raw prediction to subclasses."""

    def __init__(self, model_id: str, mask_token: str = "[MASK]"):
        self.model_id = model_id
        self.mask_token = mask_token

    @property
    def descriptor(self) -> BackendDescriptor:
        return BackendDescriptor(self._kind(), self.model_id, self.mask_token)

    @abc.abstractmethod
    def _kind(self) -> str: ...

    @abc.abstractmethod
    def _predict(self, prompt: str, top_k: int) -> list[Prediction]: ...

    def fill_mask(self, query: PromptQuery, top_k: int = 10) -> PredictionList:
        """Ranked top-k predictions for one rendered query.

        Returns fewer than ``top_k`` items only when the model vocabulary is
        exhausted.  Ties keep the backend's own ordering (stable sort).
        """
        if top_k < 1:
            raise InputError(f"top_k must be >= 1, got {top_k}")
        if query.rendered.count(self.mask_token) != 1:
            raise InputError(
                f"query must contain the mask token {self.mask_token!r} exactly once: "
                f"{query.rendered!r}"
            )
        items = self._predict(query.rendered, top_k)
        items = sorted(items, key=lambda p: -p.probability)  # stable: ties keep source order
        return PredictionList(query, self.model_id, tuple(items[:top_k]))


def fill_mask_rank(
    backend: FillMaskBackend,
    query: PromptQuery,
    target: str,
    max_rank: int = 10000,
    policy: Optional[MatchPolicy] = None,
) -> Optional[int]:
    """1-based rank of the target within the top ``max_rank`` predictions, or None.

    None is the unreachable-token case: targets the model vocabulary cannot
    produce as one unit never acquire a rank, no matter how deep we look.
    """
    if max_rank < 1:
        raise InputError(f"max_rank must be >= 1, got {max_rank}")
    predictions = backend.fill_mask(query, top_k=max_rank)
    return rank_of(target, predictions, policy)


class FixtureBackend(FillMaskBackend):
    """Deterministic offline backend: a JSON map from rendered prompt to predictions.

    Unknown prompts yield an empty prediction list, which downstream scoring
    counts as negative.
    """

    def __init__(
        self,
        table: Mapping[str, Sequence],
        model_id: str = "fixture",
        mask_token: str = "[MASK]",
    ):
        super().__init__(model_id, mask_token)
        self._table: dict[str, tuple[Prediction, ...]] = {}
        for prompt, rows in table.items():
            self._table[prompt] = tuple(_coerce_prediction(row) for row in rows)

    @classmethod
    def from_file(
        cls, path: str, model_id: str = "fixture", mask_token: str = "[MASK]"
    ) -> "FixtureBackend":
        with open(path, encoding="utf-8") as fh:
            return cls(json.load(fh), model_id=model_id, mask_token=mask_token)

    def _kind(self) -> str:
        return "fixture"

    def _predict(self, prompt: str, top_k: int) -> list[Prediction]:
        return list(self._table.get(prompt, ())[:top_k])


def _coerce_prediction(row) -> Prediction:
    if isinstance(row, Prediction):
        return row
    if isinstance(row, dict):
        return Prediction(str(row["token"]), float(row["score"]))
    token, score = row
    return Prediction(str(token), float(score))


class HttpBackend(FillMaskBackend):
    """Remote inference over the fixed wire protocol.

    POST ``{base_url}/fill-mask`` with ``{"model", "prompt", "top_k"}``;
    expects ``{"predictions": [{"token", "score"}, ...]}`` ranked.  4xx maps
    to a configuration error, anything else to a retryable transport error.
    """

    def __init__(
        self,
        base_url: str,
        model_id: str,
        mask_token: str = "[MASK]",
        timeout: float = 60.0,
        retries: int = 2,
        session=None,
    ):
        super().__init__(model_id, mask_token)
        self.base_url = base_url.rstrip("/")
        self.timeout = timeout
        self.retries = retries
        if session is None:
            import requests

            session = requests.Session()
        self._session = session

    def _kind(self) -> str:
        return "http"

    def _predict(self, prompt: str, top_k: int) -> list[Prediction]:
        payload = {"model": self.model_id, "prompt": prompt, "top_k": top_k}
        last_error: Exception | None = None
        for attempt in range(self.retries + 1):
            try:
                return self._post(payload)
            except TransportError as exc:
                last_error = exc
                if attempt < self.retries:
                    time.sleep(0.1 * (attempt + 1))
        raise last_error  # type: ignore[misc]

    def _post(self, payload: dict) -> list[Prediction]:
        import requests

        try:
            response = self._session.post(
                f"{self.base_url}/fill-mask", json=payload, timeout=self.timeout
            )
        except requests.RequestException as exc:
            raise TransportError(f"backend unreachable: {exc}") from exc
        if 400 <= response.status_code < 500:
            raise BackendConfigError(
                f"backend rejected request ({response.status_code}): {response.text[:200]}"
            )
        if response.status_code != 200:
            raise TransportError(
                f"backend failure ({response.status_code}): {response.text[:200]}"
            )
        try:
            rows = response.json()["predictions"]
            return [Prediction(str(r["token"]), float(r["score"])) for r in rows]
        except (KeyError, TypeError, ValueError) as exc:
            raise TransportError(f"malformed backend response: {exc}") from exc


class LocalBackend(FillMaskBackend):
    """In-process transformers fill-mask pipeline (optional dependency)."""

    def __init__(self, model_id: str, device: int = -1):
        try:
            from transformers import pipeline
        except ImportError as exc:  # pragma: no cover - exercised only without extras
            raise BackendConfigError(
                "local backend requires the 'local' extra (transformers + torch)"
            ) from exc
        self._pipeline = pipeline("fill-mask", model=model_id, device=device)
        mask_token = self._pipeline.tokenizer.mask_token
        super().__init__(model_id, mask_token)

    def _kind(self) -> str:
        return "local"

    def _predict(self, prompt: str, top_k: int) -> list[Prediction]:
        vocab_size = len(self._pipeline.tokenizer)
        rows = self._pipeline(prompt, top_k=min(top_k, vocab_size))
        return [
            Prediction(str(r["token_str"]).strip(), float(r["score"]))
            for r in rows
        ]


class CachedBackend(FillMaskBackend):
    """Persistent cache wrapper, observationally equivalent to its inner backend.

    Append-only JSON-lines file keyed by (model, prompt); each key keeps the
    deepest top_k fetched so far and serves shallower requests as prefixes.
    Corrupt records are skipped with a warning and refetched.  Writes are
    serialized; reads within a process see their own writes.
    """

    def __init__(self, inner: FillMaskBackend, cache_path: str):
        super().__init__(inner.model_id, inner.mask_token)
        self.inner = inner
        self.cache_path = cache_path
        self._lock = threading.Lock()
        self._entries = _read_cache(cache_path)

    def _kind(self) -> str:
        return "cached"

    def _lookup(self, prompt: str, top_k: int) -> Optional[list[Prediction]]:
        known = self._entries.get((self.inner.model_id, prompt))
        if known is None:
            return None
        cached_k, items = known
        if top_k <= cached_k or len(items) < cached_k:
            # second case: the vocabulary was exhausted below cached_k, so the
            # stored list is complete and serves any depth
            return list(items[:top_k])
        return None

    def _predict(self, prompt: str, top_k: int) -> list[Prediction]:
        with self._lock:
            hit = self._lookup(prompt, top_k)
        if hit is not None:
            return hit
        fetched = self.inner._predict(prompt, top_k)
        record = {
            "model": self.inner.model_id,
            "prompt": prompt,
            "k": top_k,
            "predictions": [{"token": p.token, "score": p.probability} for p in fetched],
        }
        with self._lock:
            self._entries[(self.inner.model_id, prompt)] = (top_k, tuple(fetched))
            with open(self.cache_path, "a", encoding="utf-8") as fh:
                fh.write(json.dumps(record, sort_keys=True) + "\n")
        return list(fetched)


def cached(inner: FillMaskBackend, cache_path: str) -> CachedBackend:
    return CachedBackend(inner, cache_path)


def _read_cache(cache_path: str) -> dict[tuple[str, str], tuple[int, tuple[Prediction, ...]]]:
    entries: dict[tuple[str, str], tuple[int, tuple[Prediction, ...]]] = {}
    try:
        fh = open(cache_path, encoding="utf-8")
    except FileNotFoundError:
        return entries
    with fh:
        for line_no, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                record = json.loads(line)
                key = (record["model"], record["prompt"])
                k = int(record["k"])
                items = tuple(
                    Prediction(str(r["token"]), float(r["score"]))
                    for r in record["predictions"]
                )
            except (json.JSONDecodeError, KeyError, TypeError, ValueError, InputError):
                logger.warning("skipping corrupt cache record at %s:%d", cache_path, line_no)
                continue
            known = entries.get(key)
            if known is None or k > known[0]:
                entries[key] = (k, items)
    return entries


def cache_summary(cache_path: str) -> dict[str, dict[str, int]]:
    """Per-model entry count and deepest k, for `taxoprobe cache inspect`."""
    summary: dict[str, dict[str, int]] = {}
    for (model, _prompt), (k, _items) in _read_cache(cache_path).items():
        info = summary.setdefault(model, {"entries": 0, "max_k": 0})
        info["entries"] += 1
        info["max_k"] = max(info["max_k"], k)
    return summary


def compact_cache(cache_path: str) -> int:
    """Rewrite a cache file keeping only the deepest record per key. Returns kept count."""
    records = []
    for (model, prompt), (k, items) in sorted(_read_cache(cache_path).items()):
        records.append(
            {
                "model": model,
                "prompt": prompt,
                "k": k,
                "predictions": [{"token": p.token, "score": p.probability} for p in items],
            }
        )
    with open(cache_path, "w", encoding="utf-8") as fh:
        for record in records:
            fh.write(json.dumps(record, sort_keys=True) + "\n")
    return len(records)
