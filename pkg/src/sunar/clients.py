"""Model client abstractions: LLM, entailment judge, cross-scorer, embedder.

Each client comes in two flavors: a deterministic scripted mock driven by
fingerprint-keyed fixture files, and an HTTP backend. No other module in the
package performs network IO.

Fixture files are JSONL, one record per line:
``{"fingerprint": str, "completions": [str]}`` for the LLM,
``{"fingerprint": str, "verdict": bool}`` for the entailment judge,
``{"fingerprint": str, "score": float}`` for the cross-scorer,
``{"fingerprint": str, "vector": [float]}`` for the embedder.
"""

from __future__ import annotations

import hashlib
import json
import math
import os
import threading
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Protocol, Sequence

import httpx
import numpy as np

from .corpus import tokenize
from .errors import ClientError, FixtureMissError

_ROLES = {"system", "user", "assistant"}

LLM_API_KEY_ENV = "SUNAR_LLM_API_KEY"
NLI_API_KEY_ENV = "SUNAR_NLI_API_KEY"

_RETRY_BACKOFF_SECONDS = (1.0, 2.0, 4.0)


@dataclass(frozen=True)
class ChatRequest:
    messages: tuple[tuple[str, str], ...]
    n: int = 1
    temperature: float = 0.0
    max_tokens: int = 1000

    def __post_init__(self) -> None:
        if self.n < 1:
            raise ClientError("n must be >= 1")
        if self.temperature < 0:
            raise ClientError("temperature must be >= 0")
        for role, _ in self.messages:
            if role not in _ROLES:
                raise ClientError(f"unknown message role {role!r}")

    @classmethod
    def user(cls, content: str, *, n: int = 1, temperature: float = 0.0, max_tokens: int = 1000) -> "ChatRequest":
        return cls(messages=(("user", content),), n=n, temperature=temperature, max_tokens=max_tokens)


def normalize_prompt_text(text: str) -> str:
    """Strip trailing whitespace per line and normalize line endings."""
    lines = text.replace("\r\n", "\n").replace("\r", "\n").split("\n")
    return "\n".join(line.rstrip() for line in lines).strip("\n")


def fingerprint_request(request: ChatRequest) -> str:
    parts = [f"{role}\x1f{normalize_prompt_text(content)}" for role, content in request.messages]
    blob = "\x1e".join(parts) + f"\x1en={request.n}"
    return hashlib.sha256(blob.encode("utf-8")).hexdigest()


def fingerprint_pair(first: str, second: str) -> str:
    blob = normalize_prompt_text(first) + "\x1f" + normalize_prompt_text(second)
    return hashlib.sha256(blob.encode("utf-8")).hexdigest()


def fingerprint_text(text: str) -> str:
    return hashlib.sha256(normalize_prompt_text(text).encode("utf-8")).hexdigest()


class LlmClient(Protocol):
    def generate(self, request: ChatRequest) -> list[str]: ...


class EntailmentClient(Protocol):
    def entail(self, premise: str, hypothesis: str) -> bool: ...


class CrossScorerClient(Protocol):
    def score(self, query: str, doc_text: str) -> float: ...


class EmbedderClient(Protocol):
    dim: int

    def embed(self, text: str) -> list[float]: ...


class RateLimiter:
    """Process-wide token bucket; ``acquire`` blocks until a token is free."""

    def __init__(self, requests_per_second: float, sleeper: Callable[[float], None] = time.sleep) -> None:
        if requests_per_second <= 0:
            raise ClientError("rate limit must be positive")
        self._rate = requests_per_second
        self._capacity = max(1.0, requests_per_second)
        self._tokens = self._capacity
        self._updated = time.monotonic()
        self._lock = threading.Lock()
        self._sleep = sleeper

    def acquire(self) -> None:
        while True:
            with self._lock:
                now = time.monotonic()
                self._tokens = min(self._capacity, self._tokens + (now - self._updated) * self._rate)
                self._updated = now
                if self._tokens >= 1.0:
                    self._tokens -= 1.0
                    return
                wait = (1.0 - self._tokens) / self._rate
            self._sleep(wait)


def _load_fixture_records(path: str | Path) -> dict[str, dict]:
    records: dict[str, dict] = {}
    path = Path(path)
    with path.open("r", encoding="utf-8") as handle:
        for lineno, line in enumerate(handle, start=1):
            if not line.strip():
                continue
            try:
                record = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ClientError(f"{path}:{lineno}: invalid fixture line ({exc.msg})") from exc
            if "fingerprint" not in record:
                raise ClientError(f"{path}:{lineno}: fixture record lacks a fingerprint")
            records[record["fingerprint"]] = record
    return records


def write_fixture_file(path: str | Path, records: Sequence[dict]) -> None:
    with Path(path).open("w", encoding="utf-8") as handle:
        for record in records:
            handle.write(json.dumps(record, ensure_ascii=False, sort_keys=True) + "\n")


# ---------------------------------------------------------------------------
# Scripted clients
# ---------------------------------------------------------------------------


class ScriptedLlmClient:
    """Replays fixture completions; a missing fingerprint is a hard error."""

    def __init__(self, fixtures: dict[str, list[str]] | None = None, path: str | Path | None = None) -> None:
        self._completions: dict[str, list[str]] = dict(fixtures or {})
        if path is not None:
            for fingerprint, record in _load_fixture_records(path).items():
                if "completions" not in record:
                    raise ClientError(f"LLM fixture {fingerprint} lacks completions")
                self._completions[fingerprint] = list(record["completions"])

    def generate(self, request: ChatRequest) -> list[str]:
        fingerprint = fingerprint_request(request)
        if fingerprint not in self._completions:
            raise FixtureMissError(f"no scripted completion for fingerprint {fingerprint}")
        completions = self._completions[fingerprint]
        if len(completions) < request.n:
            raise FixtureMissError(
                f"fixture {fingerprint} holds {len(completions)} completions, {request.n} requested"
            )
        return list(completions[: request.n])


class ScriptedEntailmentClient:
    def __init__(self, verdicts: dict[str, bool] | None = None, path: str | Path | None = None) -> None:
        self._verdicts: dict[str, bool] = dict(verdicts or {})
        if path is not None:
            for fingerprint, record in _load_fixture_records(path).items():
                if "verdict" not in record:
                    raise ClientError(f"NLI fixture {fingerprint} lacks a verdict")
                self._verdicts[fingerprint] = bool(record["verdict"])

    def add(self, premise: str, hypothesis: str, verdict: bool) -> None:
        self._verdicts[fingerprint_pair(premise, hypothesis)] = verdict

    def entail(self, premise: str, hypothesis: str) -> bool:
        fingerprint = fingerprint_pair(premise, hypothesis)
        if fingerprint not in self._verdicts:
            raise FixtureMissError(f"no scripted entailment verdict for fingerprint {fingerprint}")
        return self._verdicts[fingerprint]


class ExactMatchEntailment:
    """Mock judge: a pair entails iff the trimmed strings are identical."""

    def entail(self, premise: str, hypothesis: str) -> bool:
        return premise.strip() == hypothesis.strip()


class ScriptedCrossScorer:
    def __init__(self, table: dict[str, float] | None = None, path: str | Path | None = None) -> None:
        self._table: dict[str, float] = dict(table or {})
        if path is not None:
            for fingerprint, record in _load_fixture_records(path).items():
                if "score" not in record:
                    raise ClientError(f"scorer fixture {fingerprint} lacks a score")
                self._table[fingerprint] = float(record["score"])

    def add(self, query: str, doc_text: str, score: float) -> None:
        self._table[fingerprint_pair(query, doc_text)] = score

    def score(self, query: str, doc_text: str) -> float:
        fingerprint = fingerprint_pair(query, doc_text)
        if fingerprint not in self._table:
            raise FixtureMissError(f"no scripted score for fingerprint {fingerprint}")
        return _check_finite(self._table[fingerprint])


class LexicalOverlapScorer:
    """Mock cross-scorer: raw logit = number of shared tokens."""

    def score(self, query: str, doc_text: str) -> float:
        return float(len(set(tokenize(query)) & set(tokenize(doc_text))))


class HashEmbedder:
    """Deterministic mock embedder seeded from a text digest."""

    def __init__(self, dim: int) -> None:
        if dim < 1:
            raise ClientError("embedding dim must be >= 1")
        self.dim = dim

    def embed(self, text: str) -> list[float]:
        digest = hashlib.sha256(normalize_prompt_text(text).encode("utf-8")).digest()
        seed = int.from_bytes(digest[:8], "big")
        vector = np.random.default_rng(seed).standard_normal(self.dim)
        norm = float(np.linalg.norm(vector))
        if norm > 0:
            vector = vector / norm
        return [float(value) for value in vector]


class ScriptedEmbedder:
    def __init__(self, dim: int, vectors: dict[str, list[float]] | None = None, path: str | Path | None = None) -> None:
        if dim < 1:
            raise ClientError("embedding dim must be >= 1")
        self.dim = dim
        self._vectors: dict[str, list[float]] = {}
        for text, vector in (vectors or {}).items():
            self._vectors[fingerprint_text(text)] = list(vector)
        if path is not None:
            for fingerprint, record in _load_fixture_records(path).items():
                if "vector" not in record:
                    raise ClientError(f"embedder fixture {fingerprint} lacks a vector")
                self._vectors[fingerprint] = [float(v) for v in record["vector"]]

    def embed(self, text: str) -> list[float]:
        fingerprint = fingerprint_text(text)
        if fingerprint not in self._vectors:
            raise FixtureMissError(f"no scripted vector for fingerprint {fingerprint}")
        vector = self._vectors[fingerprint]
        if len(vector) != self.dim:
            raise ClientError(f"scripted vector has dim {len(vector)}, expected {self.dim}")
        return list(vector)


# ---------------------------------------------------------------------------
# HTTP clients
# ---------------------------------------------------------------------------


def _check_finite(value: float) -> float:
    if not math.isfinite(value):
        raise ClientError("non-finite score")
    return value


@dataclass
class HttpBackendConfig:
    base_url: str
    model: str = ""
    api_key_env: str = LLM_API_KEY_ENV
    timeout: float = 30.0
    # repetition-damping defaults for chat backends; set None to omit
    frequency_penalty: float | None = 0.8
    presence_penalty: float | None = 0.6
    rate_limit_rps: float | None = None


class _HttpBase:
    def __init__(
        self,
        config: HttpBackendConfig,
        transport: httpx.BaseTransport | None = None,
        sleeper: Callable[[float], None] = time.sleep,
    ) -> None:
        self._config = config
        self._client = httpx.Client(base_url=config.base_url, timeout=config.timeout, transport=transport)
        self._sleep = sleeper
        self._limiter = (
            RateLimiter(config.rate_limit_rps, sleeper=sleeper) if config.rate_limit_rps else None
        )

    def _headers(self) -> dict[str, str]:
        headers = {"Content-Type": "application/json"}
        api_key = os.environ.get(self._config.api_key_env)
        if api_key:
            headers["Authorization"] = f"Bearer {api_key}"
        return headers

    def _post(self, path: str, payload: dict) -> dict:
        last_error: Exception | None = None
        for attempt, backoff in enumerate(_RETRY_BACKOFF_SECONDS, start=1):
            if self._limiter is not None:
                self._limiter.acquire()
            try:
                response = self._client.post(path, json=payload, headers=self._headers())
            except httpx.HTTPError as exc:
                last_error = exc
                if attempt < len(_RETRY_BACKOFF_SECONDS):
                    self._sleep(backoff)
                continue
            if response.status_code // 100 == 2:
                try:
                    return response.json()
                except json.JSONDecodeError as exc:
                    raise ClientError(f"{path}: backend returned invalid JSON") from exc
            body = response.text[:200]
            last_error = ClientError(f"{path}: HTTP {response.status_code}: {body}")
            if response.status_code < 500:
                break
            if attempt < len(_RETRY_BACKOFF_SECONDS):
                self._sleep(backoff)
        if isinstance(last_error, ClientError):
            raise last_error
        raise ClientError(f"{path}: transport failed after {len(_RETRY_BACKOFF_SECONDS)} attempts: {last_error}")

    def close(self) -> None:
        self._client.close()


class HttpChatClient(_HttpBase):
    """Chat-completions protocol: POST {base_url}/v1/chat/completions."""

    def generate(self, request: ChatRequest) -> list[str]:
        payload: dict = {
            "model": self._config.model,
            "messages": [{"role": role, "content": content} for role, content in request.messages],
            "n": request.n,
            "temperature": request.temperature,
            "max_tokens": request.max_tokens,
        }
        if self._config.frequency_penalty is not None:
            payload["frequency_penalty"] = self._config.frequency_penalty
        if self._config.presence_penalty is not None:
            payload["presence_penalty"] = self._config.presence_penalty
        body = self._post("/v1/chat/completions", payload)
        choices = body.get("choices", [])
        completions = [choice.get("message", {}).get("content") or "" for choice in choices]
        if len(completions) != request.n:
            raise ClientError(f"backend returned {len(completions)} completions, expected {request.n}")
        return completions


ENTAILMENT_PROMPT = (
    "Does the premise entail the hypothesis? Answer yes or no.\n"
    "Premise: {premise}\nHypothesis: {hypothesis}"
)


class HttpEntailmentClient(_HttpBase):
    """Entailment over HTTP: either a judging chat prompt or a dedicated
    scoring endpoint (POST /v1/entailment -> {"probability": p}), selected by
    ``backend``. Probabilities are thresholded at 0.5."""

    def __init__(
        self,
        config: HttpBackendConfig,
        backend: str = "chat",
        transport: httpx.BaseTransport | None = None,
        sleeper: Callable[[float], None] = time.sleep,
    ) -> None:
        if backend not in {"chat", "nli"}:
            raise ClientError(f"unknown entailment backend {backend!r}")
        super().__init__(config, transport=transport, sleeper=sleeper)
        self._backend = backend

    def entail(self, premise: str, hypothesis: str) -> bool:
        if self._backend == "nli":
            body = self._post("/v1/entailment", {"premise": premise, "hypothesis": hypothesis})
            probability = float(body.get("probability", 0.0))
            return probability > 0.5
        prompt = ENTAILMENT_PROMPT.format(premise=premise, hypothesis=hypothesis)
        payload = {
            "model": self._config.model,
            "messages": [{"role": "user", "content": prompt}],
            "n": 1,
            "temperature": 0.0,
            "max_tokens": 8,
        }
        body = self._post("/v1/chat/completions", payload)
        choices = body.get("choices", [])
        if not choices:
            raise ClientError("entailment backend returned no choices")
        text = choices[0].get("message", {}).get("content") or ""
        return text.strip().lower().startswith("yes")


class HttpCrossScorer(_HttpBase):
    """Query-document scoring endpoint: POST /v1/score -> {"score": logit}."""

    def score(self, query: str, doc_text: str) -> float:
        body = self._post("/v1/score", {"query": query, "text": doc_text})
        if "score" not in body:
            raise ClientError("scorer backend response lacks a score")
        return _check_finite(float(body["score"]))


class HttpEmbedder(_HttpBase):
    """Embedding endpoint: POST /v1/embed -> {"vector": [...]}."""

    def __init__(
        self,
        config: HttpBackendConfig,
        dim: int,
        transport: httpx.BaseTransport | None = None,
        sleeper: Callable[[float], None] = time.sleep,
    ) -> None:
        if dim < 1:
            raise ClientError("embedding dim must be >= 1")
        super().__init__(config, transport=transport, sleeper=sleeper)
        self.dim = dim

    def embed(self, text: str) -> list[float]:
        body = self._post("/v1/embed", {"text": text})
        vector = [float(v) for v in body.get("vector", [])]
        if len(vector) != self.dim:
            raise ClientError(f"backend returned dim {len(vector)}, expected {self.dim}")
        return vector


# ---------------------------------------------------------------------------
# Recording wrappers (used to produce fixture files)
# ---------------------------------------------------------------------------


@dataclass
class RecordingLlm:
    inner: LlmClient
    records: dict[str, list[str]] = field(default_factory=dict)

    def generate(self, request: ChatRequest) -> list[str]:
        completions = self.inner.generate(request)
        self.records[fingerprint_request(request)] = list(completions)
        return completions

    def fixture_records(self) -> list[dict]:
        return [
            {"fingerprint": fp, "completions": completions}
            for fp, completions in sorted(self.records.items())
        ]


@dataclass
class RecordingEntailment:
    inner: EntailmentClient
    records: dict[str, bool] = field(default_factory=dict)

    def entail(self, premise: str, hypothesis: str) -> bool:
        verdict = self.inner.entail(premise, hypothesis)
        self.records[fingerprint_pair(premise, hypothesis)] = verdict
        return verdict

    def fixture_records(self) -> list[dict]:
        return [{"fingerprint": fp, "verdict": verdict} for fp, verdict in sorted(self.records.items())]


def scorer_fixture_records(table: dict[tuple[str, str], float]) -> list[dict]:
    records = {fingerprint_pair(query, text): score for (query, text), score in table.items()}
    return [{"fingerprint": fp, "score": score} for fp, score in sorted(records.items())]
