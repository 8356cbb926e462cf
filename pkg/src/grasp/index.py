"""Exact-cosine vector store with fiscal-year filtering and file persistence.

Municipal corpora are thousands of pages at most, so search is a full scan
over the filtered candidate set: deterministic, and trivially checkable
against a brute-force oracle. Vectors are stored L2-normalized, making
cosine similarity a dot product.

Persistence is a single binary file (magic, format version, dim, count,
then fixed-width float64 records) plus a JSON sidecar holding chunk and
document metadata. Round-trips are bit-exact.
"""

from __future__ import annotations

import json
import struct
import threading
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np

from .corpus import PageChunk
from .errors import IndexFormatError, UsageError

MAGIC = b"GRSPVIDX"
FORMAT_VERSION = 1
_HEADER = struct.Struct("<8sIIQ")  # magic, version, dim, count


@dataclass(frozen=True)
class YearFilter:
    """Restricts search to chunks whose fiscal year is in ``years``.

    An empty year set means "match everything" and must be constructed via
    :meth:`match_all`.
    """

    years: frozenset[int]
    match_all: bool

    def __post_init__(self) -> None:
        if self.match_all != (not self.years):
            raise UsageError("match_all must be true exactly when years is empty")

    @classmethod
    def all_years(cls) -> "YearFilter":
        return cls(years=frozenset(), match_all=True)

    @classmethod
    def of(cls, years: Iterable[int]) -> "YearFilter":
        ys = frozenset(int(y) for y in years)
        if not ys:
            raise UsageError("YearFilter.of() needs at least one year; use all_years()")
        return cls(years=ys, match_all=False)

    def allows(self, year: int) -> bool:
        return self.match_all or year in self.years

    def describe(self) -> str:
        if self.match_all:
            return "{all}"
        return "{" + ", ".join(str(y) for y in sorted(self.years)) + "}"


@dataclass(frozen=True)
class DocumentInfo:
    title: str
    source_url: str
    fiscal_year: int


@dataclass(frozen=True)
class SearchHit:
    chunk: PageChunk
    score: float


def _order_key(chunk: PageChunk) -> tuple:
    return (chunk.fiscal_year, chunk.doc_id, chunk.page, chunk.sub_index)


class VectorIndex:
    """In-memory exact cosine index, upserted by chunk id.

    Writers hold a lock and publish a rebuilt matrix in one reference swap,
    so concurrent readers never observe a partially applied batch.
    """

    def __init__(self, dim: int):
        if dim <= 0:
            raise UsageError("index dim must be positive")
        self._dim = dim
        self._chunks: list[PageChunk] = []
        self._matrix = np.empty((0, dim), dtype=np.float64)
        self._row_by_id: dict[str, int] = {}
        self._documents: dict[str, DocumentInfo] = {}
        self._write_lock = threading.Lock()

    @property
    def dim(self) -> int:
        return self._dim

    def __len__(self) -> int:
        return len(self._chunks)

    @property
    def documents(self) -> Mapping[str, DocumentInfo]:
        return dict(self._documents)

    def register_document(self, doc_id: str, *, title: str, source_url: str, fiscal_year: int) -> None:
        with self._write_lock:
            self._documents[doc_id] = DocumentInfo(
                title=title, source_url=source_url, fiscal_year=fiscal_year
            )

    def years(self) -> list[int]:
        """Sorted distinct fiscal years present in the index."""
        return sorted({c.fiscal_year for c in self._chunks})

    def add(self, chunks: Sequence[PageChunk]) -> int:
        """Upsert chunks by chunk_id. All-or-nothing on validation errors."""
        for chunk in chunks:
            if chunk.embedding is None:
                raise UsageError(f"chunk {chunk.chunk_id} has no embedding")
            if chunk.embedding.shape != (self._dim,):
                raise UsageError(
                    f"chunk {chunk.chunk_id} has dim {chunk.embedding.shape[0]}, "
                    f"index dim is {self._dim}"
                )
            norm = float(np.linalg.norm(chunk.embedding))
            if norm == 0.0:
                raise UsageError(f"chunk {chunk.chunk_id} has a zero embedding")
        with self._write_lock:
            new_chunks = list(self._chunks)
            new_rows = dict(self._row_by_id)
            vectors = [row.copy() for row in self._matrix]
            for chunk in chunks:
                vec = chunk.embedding / np.linalg.norm(chunk.embedding)
                row = new_rows.get(chunk.chunk_id)
                if row is None:
                    new_rows[chunk.chunk_id] = len(new_chunks)
                    new_chunks.append(chunk)
                    vectors.append(vec)
                else:
                    new_chunks[row] = chunk
                    vectors[row] = vec
            matrix = (
                np.vstack(vectors) if vectors else np.empty((0, self._dim), dtype=np.float64)
            )
            self._chunks, self._row_by_id, self._matrix = new_chunks, new_rows, matrix
        return len(chunks)

    def search(self, query_vector: np.ndarray, k: int, year_filter: YearFilter) -> list[SearchHit]:
        """Exact cosine top-k over chunks allowed by the filter.

        Ties break by (fiscal_year, doc_id, page, sub_index) ascending so
        results are reproducible.
        """
        if k < 1:
            raise UsageError("k must be at least 1")
        query = np.asarray(query_vector, dtype=np.float64)
        if query.shape != (self._dim,):
            raise UsageError(f"query has dim {query.shape}, index dim is {self._dim}")
        chunks, matrix = self._chunks, self._matrix
        if not chunks:
            return []
        eligible = [i for i, c in enumerate(chunks) if year_filter.allows(c.fiscal_year)]
        if not eligible:
            return []
        norm = float(np.linalg.norm(query))
        if norm == 0.0:
            raise UsageError("query vector has zero norm")
        scores = matrix[eligible] @ (query / norm)
        ranked = sorted(
            range(len(eligible)),
            key=lambda j: (-scores[j],) + _order_key(chunks[eligible[j]]),
        )
        return [
            SearchHit(chunk=chunks[eligible[j]], score=float(scores[j]))
            for j in ranked[:k]
        ]

    def save(self, path: str | Path) -> None:
        """Write the binary vector file and its JSON metadata sidecar."""
        path = Path(path)
        header = _HEADER.pack(MAGIC, FORMAT_VERSION, self._dim, len(self._chunks))
        with open(path, "wb") as fh:
            fh.write(header)
            fh.write(np.ascontiguousarray(self._matrix).tobytes())
        sidecar = {
            "format_version": FORMAT_VERSION,
            "dim": self._dim,
            "chunks": [
                {
                    "chunk_id": c.chunk_id,
                    "doc_id": c.doc_id,
                    "fiscal_year": c.fiscal_year,
                    "page": c.page,
                    "sub_index": c.sub_index,
                    "text": c.text,
                }
                for c in self._chunks
            ],
            "documents": {
                doc_id: {
                    "title": info.title,
                    "source_url": info.source_url,
                    "fiscal_year": info.fiscal_year,
                }
                for doc_id, info in self._documents.items()
            },
        }
        Path(sidecar_path(path)).write_text(
            json.dumps(sidecar, ensure_ascii=False, indent=1), encoding="utf-8"
        )

    @classmethod
    def load(cls, path: str | Path) -> "VectorIndex":
        path = Path(path)
        try:
            blob = path.read_bytes()
        except OSError as exc:
            raise IndexFormatError(f"cannot read index file {path}: {exc}") from exc
        if len(blob) < _HEADER.size:
            raise IndexFormatError(f"index file {path} is truncated (no header)")
        magic, version, dim, count = _HEADER.unpack_from(blob)
        if magic != MAGIC:
            raise IndexFormatError(f"{path} is not an index file (bad magic)")
        if version != FORMAT_VERSION:
            raise IndexFormatError(
                f"index file {path} has format version {version}, "
                f"this build reads version {FORMAT_VERSION}"
            )
        expected = _HEADER.size + count * dim * 8
        if len(blob) != expected:
            raise IndexFormatError(
                f"index file {path} is truncated: {len(blob)} bytes, expected {expected}"
            )
        matrix = np.frombuffer(blob[_HEADER.size :], dtype="<f8").reshape(count, dim).copy()
        try:
            sidecar = json.loads(Path(sidecar_path(path)).read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as exc:
            raise IndexFormatError(f"cannot read index sidecar for {path}: {exc}") from exc
        raw_chunks = sidecar.get("chunks", [])
        if len(raw_chunks) != count:
            raise IndexFormatError(
                f"index sidecar lists {len(raw_chunks)} chunks, binary file has {count}"
            )
        index = cls(dim)
        for row, raw in enumerate(raw_chunks):
            chunk = PageChunk(
                chunk_id=raw["chunk_id"],
                doc_id=raw["doc_id"],
                fiscal_year=int(raw["fiscal_year"]),
                page=int(raw["page"]),
                sub_index=int(raw["sub_index"]),
                text=raw["text"],
                embedding=matrix[row],
            )
            index._chunks.append(chunk)
            index._row_by_id[chunk.chunk_id] = row
        index._matrix = matrix
        for doc_id, info in sidecar.get("documents", {}).items():
            index._documents[doc_id] = DocumentInfo(
                title=info["title"],
                source_url=info["source_url"],
                fiscal_year=int(info["fiscal_year"]),
            )
        return index


def sidecar_path(path: str | Path) -> Path:
    return Path(f"{path}.meta.json")
