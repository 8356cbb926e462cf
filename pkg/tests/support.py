"""Shared test helpers."""

from __future__ import annotations

import numpy as np

from grasp.corpus import PageChunk
from grasp.index import SearchHit


class RecordingProvider:
    """Wraps a provider and keeps a copy of every call's inputs."""

    def __init__(self, inner):
        self._inner = inner
        self.completions: list[list] = []
        self.embeds: list[list[str]] = []

    @property
    def kind(self):
        return self._inner.kind

    @property
    def dim(self):
        return self._inner.dim

    def complete(self, messages, params):
        self.completions.append(list(messages))
        return self._inner.complete(messages, params)

    def embed(self, texts):
        self.embeds.append(list(texts))
        return self._inner.embed(texts)


def make_chunk(
    chunk_id: str,
    *,
    doc_id: str = "doc",
    fiscal_year: int = 2024,
    page: int = 1,
    sub_index: int = 0,
    text: str = "some page text",
    embedding: np.ndarray | None = None,
) -> PageChunk:
    return PageChunk(
        chunk_id=chunk_id,
        doc_id=doc_id,
        fiscal_year=fiscal_year,
        page=page,
        sub_index=sub_index,
        text=text,
        embedding=embedding,
    )


def brute_force_search(chunks, query: np.ndarray, k: int, allowed_years=None):
    """Independent oracle: full-scan cosine sort with the documented
    tie-break, computed per row from the raw embeddings."""
    query = np.asarray(query, dtype=np.float64)
    q_norm = float(np.linalg.norm(query))
    scored = []
    for chunk in chunks:
        if allowed_years is not None and chunk.fiscal_year not in allowed_years:
            continue
        vec = np.asarray(chunk.embedding, dtype=np.float64)
        cos = float(np.dot(vec, query) / (np.linalg.norm(vec) * q_norm))
        scored.append((chunk, cos))
    scored.sort(
        key=lambda pair: (
            -pair[1],
            pair[0].fiscal_year,
            pair[0].doc_id,
            pair[0].page,
            pair[0].sub_index,
        )
    )
    return [SearchHit(chunk=c, score=s) for c, s in scored[:k]]
