"""Completion-backend abstraction and the text -> records inference pipeline.

The backend contract is deliberately small: complete(prompt, params) ->
raw completion text. Two implementations ship: a deterministic replay
store keyed by the sha256 of the wrapped prompt (the test suite runs fully
offline on these), and a live HTTP client for a completions endpoint.
Raw completions are expected to carry the stop token; a missing stop token
means the model was cut off, and the pipeline counts that as unparsable.
"""

from __future__ import annotations

import hashlib
import json
import os
import threading
import time
import warnings
from dataclasses import dataclass
from typing import Optional

import requests

from . import codec
from .records import SchemaId


class BackendError(Exception):
    """Base for completion-backend failures."""


class UnknownPromptError(BackendError):
    """Replay store has no recording for this prompt."""


class CompletionTimeout(BackendError):
    pass


class AuthError(BackendError):
    pass


class RateLimitError(BackendError):
    pass


class TransportError(BackendError):
    """Connection-level failure, distinct from an HTTP status."""


class HTTPStatusError(BackendError):
    def __init__(self, status: int, body: str):
        super().__init__(f"HTTP {status}: {body[:200]}")
        self.status = status


@dataclass(frozen=True)
class InferenceParams:
    max_tokens: int = 256
    temperature: float = 0.0
    stop: str = codec.STOP_TOKEN
    token_limit: int = 2048  # provider prompt+completion budget, era-specific

    def __post_init__(self) -> None:
        if self.max_tokens <= 0:
            raise ValueError("max_tokens must be positive")
        if self.temperature < 0:
            raise ValueError("temperature must be >= 0")


def default_inference_params(schema: SchemaId) -> InferenceParams:
    """Task defaults: 256 tokens for sentence-level doping, 512 for abstracts."""
    schema = SchemaId(schema)
    return InferenceParams(max_tokens=256 if schema.is_doping else 512)


@dataclass(frozen=True)
class FinetuneConfig:
    epochs: int
    batch_size: int
    lr_multiplier: float
    prompt_loss_weight: float

    def __post_init__(self) -> None:
        if min(self.epochs, self.batch_size) <= 0:
            raise ValueError("epochs and batch_size must be positive")
        if min(self.lr_multiplier, self.prompt_loss_weight) <= 0:
            raise ValueError("lr_multiplier and prompt_loss_weight must be positive")

    def to_dict(self) -> dict:
        return {
            "epochs": self.epochs,
            "batch_size": self.batch_size,
            "lr_multiplier": self.lr_multiplier,
            "prompt_loss_weight": self.prompt_loss_weight,
        }


def default_finetune_config(schema: SchemaId) -> FinetuneConfig:
    """7 epochs for the doping schemas, 4 for general/MOF; the rest is shared."""
    schema = SchemaId(schema)
    return FinetuneConfig(
        epochs=7 if schema.is_doping else 4,
        batch_size=1,
        lr_multiplier=0.1,
        prompt_loss_weight=0.01,
    )


def epochs_for_size(n: int) -> int:
    """Training-size epoch schedule: 2 below 64, 4 through 128, 7 at 256.

    Sizes the schedule leaves undefined snap to the nearest rule boundary:
    129-191 -> 4 epochs, 192 and above -> 7.
    """
    if n < 1:
        raise ValueError("training size must be positive")
    if n < 64:
        return 2
    if n <= 128:
        return 4
    if n < 192:
        return 4
    return 7


def learning_curve_plan(sizes: list[int], base_seed: int = 0) -> list[dict]:
    """One fine-tune job per training-set size, each with its own seed."""
    return [
        {"n": n, "epochs": epochs_for_size(n), "seed": base_seed + i}
        for i, n in enumerate(sizes)
    ]


class CompletionBackend:
    """Contract: complete(prompt, params) returns raw completion text."""

    def complete(self, prompt: str, params: InferenceParams) -> str:
        raise NotImplementedError


def prompt_key(prompt: str) -> str:
    return hashlib.sha256(prompt.encode("utf-8")).hexdigest()


class ReplayBackend(CompletionBackend):
    """Pure lookup of recorded completions, keyed by wrapped-prompt sha256.

    Wrapping changes therefore invalidate stale recordings loudly (the
    lookup misses) instead of silently returning mismatched text.
    """

    def __init__(self, store: Optional[dict[str, str]] = None):
        self._store = dict(store or {})

    def __len__(self) -> int:
        return len(self._store)

    def record(self, prompt: str, completion: str) -> None:
        self._store[prompt_key(prompt)] = completion

    def complete(self, prompt: str, params: InferenceParams) -> str:
        key = prompt_key(prompt)
        if key not in self._store:
            raise UnknownPromptError(f"no recording for prompt hash {key[:12]}…")
        return self._store[key]

    @classmethod
    def load(cls, path) -> "ReplayBackend":
        """JSON-lines store: {"prompt_sha256": ..., "completion": ...}."""
        store = {}
        with open(path, encoding="utf-8") as fh:
            for line in fh:
                if line.strip():
                    obj = json.loads(line)
                    store[obj["prompt_sha256"]] = obj["completion"]
        return cls(store)

    def save(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            for key in sorted(self._store):
                fh.write(
                    json.dumps(
                        {"prompt_sha256": key, "completion": self._store[key]},
                        ensure_ascii=False,
                    )
                    + "\n"
                )


class HttpBackend(CompletionBackend):
    """Live completions-endpoint client.

    POSTs {model, prompt, max_tokens, temperature, stop}; the bearer token
    comes from an environment variable. When the provider reports a clean
    stop, the stop token is re-appended so downstream truncation detection
    sees the same wire convention as recorded completions. Retries cover
    rate limits and 5xx only; completion calls are idempotent at
    temperature 0. Fine-tune submission is file-based and never retried.
    """

    def __init__(
        self,
        endpoint: str,
        model: str,
        auth_env: str = "COMPLETIONS_API_KEY",
        timeout: float = 60.0,
        max_retries: int = 3,
        max_in_flight: int = 4,
        session: Optional[requests.Session] = None,
    ):
        self.endpoint = endpoint
        self.model = model
        self.auth_env = auth_env
        self.timeout = timeout
        self.max_retries = max_retries
        self._session = session or requests.Session()
        self._gate = threading.Semaphore(max_in_flight)

    def _headers(self) -> dict[str, str]:
        token = os.environ.get(self.auth_env, "")
        headers = {"Content-Type": "application/json"}
        if token:
            headers["Authorization"] = f"Bearer {token}"
        return headers

    def complete(self, prompt: str, params: InferenceParams) -> str:
        body = {
            "model": self.model,
            "prompt": prompt,
            "max_tokens": params.max_tokens,
            "temperature": params.temperature,
            "stop": params.stop,
        }
        last: Optional[BackendError] = None
        for attempt in range(self.max_retries + 1):
            try:
                with self._gate:
                    resp = self._session.post(
                        self.endpoint,
                        json=body,
                        headers=self._headers(),
                        timeout=self.timeout,
                    )
            except requests.Timeout as exc:
                raise CompletionTimeout(str(exc)) from exc
            except requests.ConnectionError as exc:
                raise TransportError(str(exc)) from exc
            if resp.status_code in (401, 403):
                raise AuthError(f"HTTP {resp.status_code}")
            if resp.status_code == 429 or resp.status_code >= 500:
                last = (
                    RateLimitError("HTTP 429")
                    if resp.status_code == 429
                    else HTTPStatusError(resp.status_code, resp.text)
                )
                if attempt < self.max_retries:
                    time.sleep(min(2.0, 0.1 * 2**attempt))
                    continue
                raise last
            if resp.status_code != 200:
                raise HTTPStatusError(resp.status_code, resp.text)
            payload = resp.json()
            choice = payload["choices"][0]
            text = choice["text"]
            if choice.get("finish_reason") in ("stop", "stop_sequence"):
                text += params.stop
            return text
        raise last  # unreachable; loop always returns or raises


def whitespace_token_count(text: str) -> int:
    return len(text.split())


def complete(
    backend: CompletionBackend, prompt: str, params: Optional[InferenceParams] = None
) -> str:
    """One completion call with a client-side token-budget warning.

    The true BPE count is model-private; the whitespace pre-count only
    flags prompts that will clearly blow the provider budget.
    """
    if not prompt:
        raise ValueError("prompt must be non-empty")
    params = params or InferenceParams()
    if whitespace_token_count(prompt) + params.max_tokens > params.token_limit:
        warnings.warn(
            f"prompt tokens + max_tokens exceed the {params.token_limit}-token budget; "
            "the completion may be cut off",
            stacklevel=2,
        )
    return backend.complete(prompt, params)


def extract_records(
    text: str,
    schema: SchemaId,
    backend: CompletionBackend,
    params: Optional[InferenceParams] = None,
) -> codec.ParseOutcome:
    """Wrap, complete, unwrap, decode. Truncated completions are unparsable."""
    schema = SchemaId(schema)
    params = params or default_inference_params(schema)
    raw = complete(backend, codec.wrap_prompt(text), params)
    unwrapped = codec.unwrap_completion(raw)
    if unwrapped.truncated:
        return codec.ParseOutcome.fail(
            "completion", "cut off before the stop token", truncated=True
        )
    return codec.decode(schema, unwrapped.text)
