"""Text-completion and embedding backends.

Two implementations of the same small surface: an HTTP client for any
chat-completions-compatible endpoint, and a fully deterministic mock used
by the test suite and offline demos. Both are immutable after construction
and safe for concurrent calls.
"""

from __future__ import annotations

import hashlib
import json
import logging
import os
import re
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Protocol, Sequence

import httpx
import numpy as np

from .errors import TransportError, UsageError

logger = logging.getLogger(__name__)

VALID_ROLES = ("system", "user", "assistant", "tool")

#: Default dimension of mock embedding vectors. Small enough that
#: brute-force oracles over a whole corpus stay fast.
DEFAULT_MOCK_DIM = 256

#: Fixed 64-bit seed for the mock's token hashing. Changing it changes
#: every mock embedding, so tests pin it.
DEFAULT_MOCK_SEED = 0x5EEDBA5E5EEDBA5E

_TOKEN_RE = re.compile(r"[a-z0-9]+")


@dataclass(frozen=True)
class ChatMessage:
    """One turn of a conversation as sent to a completion backend."""

    role: str
    content: str
    tool_name: str | None = None

    def __post_init__(self) -> None:
        if self.role not in VALID_ROLES:
            raise UsageError(f"invalid message role {self.role!r}")
        if (self.tool_name is not None) != (self.role == "tool"):
            raise UsageError("tool_name must be set if and only if role is 'tool'")
        if not self.content.strip() and self.role != "assistant":
            raise UsageError(f"empty content in {self.role!r} message")


@dataclass(frozen=True)
class CompletionParams:
    """Decoding settings for a completion call.

    Internal pipeline calls (rephrasing, year extraction) keep the default
    temperature of 0 so they stay reproducible.
    """

    max_tokens: int = 512
    temperature: float = 0.0
    seed: int | None = None

    def __post_init__(self) -> None:
        if self.max_tokens <= 0:
            raise UsageError("max_tokens must be positive")
        if self.temperature < 0:
            raise UsageError("temperature must be non-negative")


def _normalize_ws(text: str) -> str:
    return " ".join(text.split())


def render_messages(messages: Sequence[ChatMessage]) -> str:
    """Canonical single-string rendering of a message list.

    Whitespace runs are collapsed so cosmetic formatting differences do not
    change the rendering. Used for digests and for the mock's rule matching.
    """
    lines = []
    for m in messages:
        tag = f"{m.role}[{m.tool_name}]" if m.tool_name else m.role
        lines.append(f"{tag}: {_normalize_ws(m.content)}")
    return "\n".join(lines)


def message_digest(messages: Sequence[ChatMessage]) -> str:
    """Stable hex digest of a normalized message list.

    This is the key used by mock script files: the same conversation always
    hashes to the same digest, across processes and platforms.
    """
    return hashlib.sha256(render_messages(messages).encode("utf-8")).hexdigest()


class Provider(Protocol):
    """Protocol shared by all completion/embedding backends."""

    @property
    def kind(self) -> str: ...

    @property
    def dim(self) -> int:
        """Dimension of embedding vectors produced by this provider."""
        ...

    def complete(self, messages: Sequence[ChatMessage], params: CompletionParams) -> str:
        """Return generated text for the conversation. Never mutates `messages`."""
        ...

    def embed(self, texts: Sequence[str]) -> list[np.ndarray]:
        """Embed a batch of texts; output order matches input order."""
        ...


def _check_complete_args(messages: Sequence[ChatMessage]) -> None:
    if not messages:
        raise UsageError("complete() requires at least one message")
    if messages[0].role not in ("system", "user"):
        raise UsageError("first message must have role 'system' or 'user'")


def _check_embed_args(texts: Sequence[str]) -> None:
    for i, text in enumerate(texts):
        if not text.strip():
            raise UsageError(f"embed() given empty text at position {i}")


@dataclass(frozen=True)
class ScriptRule:
    """Programmatic mock rule: respond when every needle appears in the
    rendered prompt. Rules are checked in order; the first match wins."""

    needles: tuple[str, ...]
    response: str

    def matches(self, rendered: str) -> bool:
        return all(needle in rendered for needle in self.needles)


class MockProvider:
    """Deterministic stand-in for a hosted model.

    Completions are resolved in three stages, all pure functions of the
    input and the constructor arguments:

    1. exact lookup of the message-list digest in the script table,
    2. first matching :class:`ScriptRule` (substring match on the rendered
       prompt),
    3. fallback echo: ``"ECHO: " + <content of the last message>`` with
       whitespace collapsed.

    Embeddings are a hashed bag of tokens: the text is lowercased, split
    into alphanumeric runs, each token is hashed with the fixed seed into
    one of ``dim`` buckets, counts accumulate, and the vector is
    L2-normalized. Equal texts therefore always embed identically, and
    token overlap shows up as cosine similarity.
    """

    def __init__(
        self,
        dim: int = DEFAULT_MOCK_DIM,
        seed: int = DEFAULT_MOCK_SEED,
        script: dict[str, str] | None = None,
        rules: Iterable[ScriptRule] = (),
    ):
        if dim <= 0:
            raise UsageError("embedding dim must be positive")
        self._dim = dim
        self._seed_key = (seed & 0xFFFFFFFFFFFFFFFF).to_bytes(8, "big")
        self._script = dict(script or {})
        self._rules = tuple(rules)

    @property
    def kind(self) -> str:
        return "mock"

    @property
    def dim(self) -> int:
        return self._dim

    def complete(self, messages: Sequence[ChatMessage], params: CompletionParams) -> str:
        _check_complete_args(messages)
        digest = message_digest(messages)
        if digest in self._script:
            return self._script[digest]
        rendered = render_messages(messages)
        for rule in self._rules:
            if rule.matches(rendered):
                return rule.response
        return "ECHO: " + _normalize_ws(messages[-1].content)

    def _bucket(self, token: str) -> int:
        h = hashlib.blake2b(token.encode("utf-8"), digest_size=8, key=self._seed_key)
        return int.from_bytes(h.digest(), "big") % self._dim

    def embed(self, texts: Sequence[str]) -> list[np.ndarray]:
        _check_embed_args(texts)
        out = []
        for text in texts:
            vec = np.zeros(self._dim, dtype=np.float64)
            tokens = _TOKEN_RE.findall(text.lower())
            if not tokens:
                # Non-empty text with no alphanumeric runs (e.g. "!!!"):
                # hash the raw text so the vector still has unit norm.
                tokens = [text.strip()]
            for token in tokens:
                vec[self._bucket(token)] += 1.0
            vec /= np.linalg.norm(vec)
            out.append(vec)
        return out


def load_mock_script(path: str | Path) -> tuple[dict[str, str], list[ScriptRule]]:
    """Load a mock script file.

    The file is a JSON list of entries, each either
    ``{"match_digest": "<hex>", "response": "..."}`` or
    ``{"match_contains": ["needle", ...], "response": "..."}``.
    Digest entries are exact conversation matches; contains entries become
    ordered substring rules.
    """
    try:
        raw = json.loads(Path(path).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise UsageError(f"cannot read mock script {path}: {exc}") from exc
    if not isinstance(raw, list):
        raise UsageError(f"mock script {path} must be a JSON list")
    script: dict[str, str] = {}
    rules: list[ScriptRule] = []
    for i, entry in enumerate(raw):
        if not isinstance(entry, dict) or "response" not in entry:
            raise UsageError(f"mock script {path} entry {i}: missing 'response'")
        if "match_digest" in entry:
            script[str(entry["match_digest"])] = str(entry["response"])
        elif "match_contains" in entry:
            needles = tuple(str(n) for n in entry["match_contains"])
            rules.append(ScriptRule(needles, str(entry["response"])))
        else:
            raise UsageError(
                f"mock script {path} entry {i}: needs 'match_digest' or 'match_contains'"
            )
    return script, rules


class HttpProvider:
    """Client for a chat-completions-style HTTP API.

    Speaks the common JSON contract: ``POST {endpoint}/chat/completions``
    with a message list, ``POST {endpoint}/embeddings`` with a text batch.
    Transport failures and 5xx responses are retried with exponential
    backoff; 4xx responses are surfaced immediately as usage errors.
    """

    def __init__(
        self,
        endpoint: str,
        model: str,
        embedding_model: str,
        api_key_env: str | None = None,
        dim: int | None = None,
        timeout: float = 60.0,
        max_attempts: int = 3,
        backoff_s: float = 0.5,
        transport: httpx.BaseTransport | None = None,
    ):
        headers = {}
        if api_key_env:
            key = os.environ.get(api_key_env, "")
            if not key:
                raise UsageError(f"API key environment variable {api_key_env} is not set")
            headers["Authorization"] = f"Bearer {key}"
        self._endpoint = endpoint.rstrip("/")
        self._model = model
        self._embedding_model = embedding_model
        self._dim = dim
        self._max_attempts = max_attempts
        self._backoff_s = backoff_s
        self._client = httpx.Client(headers=headers, timeout=timeout, transport=transport)

    @property
    def kind(self) -> str:
        return "http"

    @property
    def dim(self) -> int:
        if self._dim is None:
            raise UsageError(
                "embedding dimension unknown: configure it or embed a text first"
            )
        return self._dim

    def _post(self, path: str, payload: dict) -> dict:
        url = f"{self._endpoint}{path}"
        last_error: Exception | None = None
        for attempt in range(1, self._max_attempts + 1):
            try:
                response = self._client.post(url, json=payload)
            except httpx.TransportError as exc:
                last_error = exc
            else:
                if response.status_code < 400:
                    return response.json()
                if response.status_code < 500:
                    raise UsageError(
                        f"provider rejected request ({response.status_code}): "
                        f"{response.text[:200]}"
                    )
                last_error = TransportError(
                    f"provider returned {response.status_code}", attempt
                )
            if attempt < self._max_attempts:
                time.sleep(self._backoff_s * (2 ** (attempt - 1)))
        raise TransportError(
            f"provider unreachable after {self._max_attempts} attempts: {last_error}",
            attempts=self._max_attempts,
        )

    def complete(self, messages: Sequence[ChatMessage], params: CompletionParams) -> str:
        _check_complete_args(messages)
        payload: dict = {
            "model": self._model,
            "messages": [{"role": m.role, "content": m.content} for m in messages],
            "temperature": params.temperature,
            "max_tokens": params.max_tokens,
        }
        if params.seed is not None:
            payload["seed"] = params.seed
        data = self._post("/chat/completions", payload)
        try:
            return data["choices"][0]["message"]["content"]
        except (KeyError, IndexError, TypeError) as exc:
            raise TransportError(f"malformed completion response: {exc}") from exc

    def embed(self, texts: Sequence[str]) -> list[np.ndarray]:
        _check_embed_args(texts)
        data = self._post(
            "/embeddings", {"model": self._embedding_model, "input": list(texts)}
        )
        try:
            vectors = [np.asarray(item["embedding"], dtype=np.float64) for item in data["data"]]
        except (KeyError, TypeError) as exc:
            raise TransportError(f"malformed embeddings response: {exc}") from exc
        if len(vectors) != len(texts):
            raise TransportError(
                f"embeddings response has {len(vectors)} vectors for {len(texts)} texts"
            )
        if self._dim is None and vectors:
            self._dim = int(vectors[0].shape[0])
        return vectors
