"""Budget document ingestion: paginated bundles in, page chunks out.

The canonical input is a *paginated text bundle*: either a single UTF-8
file whose pages are separated by form feeds (0x0C), or a directory of
``page-NNNN.txt`` files. Converting PDFs to bundles is an external
preprocessing step; keeping raw PDF parsing out of core keeps ingestion
deterministic.

Every chunk keeps the true page number of its origin so answers can cite
the exact page. Pages longer than ``max_chunk_chars`` are split at blank-line
paragraph boundaries into sub-chunks that share the page number.
"""

from __future__ import annotations

import json
import logging
import re
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import TYPE_CHECKING

import numpy as np

from .errors import UsageError
from .provider import Provider

if TYPE_CHECKING:
    from .index import VectorIndex

logger = logging.getLogger(__name__)

DEFAULT_MAX_CHUNK_CHARS = 4000
PAGE_SEPARATOR = "\x0c"

_PAGE_FILE_RE = re.compile(r"^page-(\d+)\.txt$")
_PARAGRAPH_SPLIT_RE = re.compile(r"\n\s*\n")


@dataclass(frozen=True)
class ManifestDocument:
    doc_id: str
    title: str
    fiscal_year: int
    source_url: str
    pages_path: Path


@dataclass(frozen=True)
class DocumentManifest:
    documents: tuple[ManifestDocument, ...]


@dataclass
class PageChunk:
    """One page (or piece of a page) of a budget document."""

    chunk_id: str
    doc_id: str
    fiscal_year: int
    page: int
    sub_index: int
    text: str
    embedding: np.ndarray | None = None


@dataclass
class IngestFailure:
    doc_id: str
    reason: str


@dataclass
class IngestReport:
    documents_ingested: int = 0
    chunks_created: int = 0
    chunks_split: int = 0
    elapsed_ms: float = 0.0
    failures: list[IngestFailure] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "documents_ingested": self.documents_ingested,
            "chunks_created": self.chunks_created,
            "chunks_split": self.chunks_split,
            "elapsed_ms": round(self.elapsed_ms, 3),
            "failures": [{"doc_id": f.doc_id, "reason": f.reason} for f in self.failures],
        }


def manifest_from_dict(data: dict, base_dir: Path) -> DocumentManifest:
    """Validate raw manifest JSON. Relative ``pages_path`` entries resolve
    against ``base_dir`` (the manifest's own directory for file manifests)."""
    if not isinstance(data, dict) or not isinstance(data.get("documents"), list):
        raise UsageError("manifest must be a JSON object with a 'documents' list")
    documents = []
    seen_ids: set[str] = set()
    for i, raw in enumerate(data["documents"]):
        if not isinstance(raw, dict):
            raise UsageError(f"manifest document {i} must be an object")
        missing = [k for k in ("doc_id", "title", "fiscal_year", "source_url", "pages_path") if k not in raw]
        if missing:
            raise UsageError(f"manifest document {i} missing fields: {', '.join(missing)}")
        doc_id = str(raw["doc_id"])
        if doc_id in seen_ids:
            raise UsageError(f"duplicate doc_id {doc_id!r} in manifest")
        seen_ids.add(doc_id)
        try:
            fiscal_year = int(raw["fiscal_year"])
        except (TypeError, ValueError):
            raise UsageError(f"manifest document {doc_id}: fiscal_year must be an integer")
        if not 1900 <= fiscal_year <= 2200:
            raise UsageError(f"manifest document {doc_id}: fiscal_year {fiscal_year} out of range")
        pages_path = Path(str(raw["pages_path"]))
        if not pages_path.is_absolute():
            pages_path = base_dir / pages_path
        documents.append(
            ManifestDocument(
                doc_id=doc_id,
                title=str(raw["title"]),
                fiscal_year=fiscal_year,
                source_url=str(raw["source_url"]),
                pages_path=pages_path,
            )
        )
    return DocumentManifest(documents=tuple(documents))


def load_manifest(manifest_path: str | Path) -> DocumentManifest:
    path = Path(manifest_path)
    try:
        data = json.loads(path.read_text(encoding="utf-8"))
    except OSError as exc:
        raise UsageError(f"cannot read manifest {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise UsageError(f"manifest {path} is not valid JSON: {exc}") from exc
    return manifest_from_dict(data, base_dir=path.parent)


def read_bundle(pages_path: Path) -> list[tuple[int, str]]:
    """Read a paginated bundle into (page_number, text) pairs.

    Page numbers start at 1. Whitespace-only pages are dropped but still
    advance the page count, so surviving pages keep their true numbers.
    """
    if pages_path.is_dir():
        numbered = []
        for entry in sorted(pages_path.iterdir()):
            m = _PAGE_FILE_RE.match(entry.name)
            if not m:
                continue
            numbered.append((int(m.group(1)), entry.read_text(encoding="utf-8")))
        if not numbered:
            raise UsageError(f"no page-NNNN.txt files in {pages_path}")
        numbered.sort(key=lambda pair: pair[0])
        numbers = [n for n, _ in numbered]
        if len(set(numbers)) != len(numbers):
            raise UsageError(f"duplicate page numbers in {pages_path}")
        pages = numbered
    else:
        text = pages_path.read_text(encoding="utf-8")
        pages = list(enumerate(text.split(PAGE_SEPARATOR), start=1))
    return [(num, body) for num, body in pages if body.strip()]


def split_page(text: str, max_chars: int) -> list[str]:
    """Split page text into pieces of at most ``max_chars``.

    Greedy fill over blank-line paragraphs; a paragraph is only divided when
    it alone exceeds ``max_chars``, in which case it is cut at whitespace.
    """
    text = text.strip()
    if len(text) <= max_chars:
        return [text]
    pieces: list[str] = []
    buffer = ""
    for paragraph in _PARAGRAPH_SPLIT_RE.split(text):
        paragraph = paragraph.strip()
        if not paragraph:
            continue
        for part in _split_long_paragraph(paragraph, max_chars):
            candidate = f"{buffer}\n\n{part}" if buffer else part
            if len(candidate) <= max_chars:
                buffer = candidate
            else:
                if buffer:
                    pieces.append(buffer)
                buffer = part
    if buffer:
        pieces.append(buffer)
    return pieces


def _split_long_paragraph(paragraph: str, max_chars: int) -> list[str]:
    if len(paragraph) <= max_chars:
        return [paragraph]
    parts = []
    rest = paragraph
    while len(rest) > max_chars:
        cut = rest.rfind(" ", 0, max_chars + 1)
        if cut <= 0:
            cut = max_chars
        parts.append(rest[:cut].rstrip())
        rest = rest[cut:].lstrip()
    if rest:
        parts.append(rest)
    return parts


def chunk_document(doc: ManifestDocument, max_chunk_chars: int) -> tuple[list[PageChunk], int]:
    """Chunk one document's bundle. Returns (chunks, pages_split)."""
    chunks: list[PageChunk] = []
    pages_split = 0
    for page_num, page_text in read_bundle(doc.pages_path):
        parts = split_page(page_text, max_chunk_chars)
        if len(parts) > 1:
            pages_split += 1
        for sub_index, part in enumerate(parts):
            chunks.append(
                PageChunk(
                    chunk_id=f"{doc.doc_id}:{page_num}:{sub_index}",
                    doc_id=doc.doc_id,
                    fiscal_year=doc.fiscal_year,
                    page=page_num,
                    sub_index=sub_index,
                    text=part,
                )
            )
    return chunks, pages_split


def load_bundle(
    manifest_path: str | Path, *, max_chunk_chars: int = DEFAULT_MAX_CHUNK_CHARS
) -> list[PageChunk]:
    """Load every document in a manifest as page chunks, embeddings unset.

    Chunks come back in (document order, page order, sub-chunk order).
    Unreadable documents are logged and skipped; a malformed manifest is
    fatal.
    """
    manifest = load_manifest(manifest_path)
    chunks: list[PageChunk] = []
    for doc in manifest.documents:
        try:
            doc_chunks, _ = chunk_document(doc, max_chunk_chars)
        except (OSError, UsageError) as exc:
            logger.warning("skipping document %s: %s", doc.doc_id, exc)
            continue
        chunks.extend(doc_chunks)
    return chunks


def ingest_manifest(
    manifest: DocumentManifest,
    index: "VectorIndex",
    provider: Provider,
    *,
    max_chunk_chars: int = DEFAULT_MAX_CHUNK_CHARS,
    batch_size: int = 64,
) -> IngestReport:
    """Chunk, embed, and upsert every document in an already-parsed manifest.

    Each document is embedded and inserted as a unit: an embedding failure
    marks that document failed and the rest proceed. Re-ingesting the same
    manifest is idempotent because chunk ids are stable.
    """
    report = IngestReport()
    started = time.perf_counter()
    for doc in manifest.documents:
        try:
            doc_chunks, pages_split = chunk_document(doc, max_chunk_chars)
        except (OSError, UsageError) as exc:
            report.failures.append(IngestFailure(doc.doc_id, str(exc)))
            logger.warning("ingest: cannot read %s: %s", doc.doc_id, exc)
            continue
        try:
            for start in range(0, len(doc_chunks), batch_size):
                batch = doc_chunks[start : start + batch_size]
                vectors = provider.embed([c.text for c in batch])
                for chunk, vector in zip(batch, vectors):
                    chunk.embedding = vector
        except Exception as exc:
            report.failures.append(IngestFailure(doc.doc_id, f"embedding failed: {exc}"))
            logger.warning("ingest: embedding failed for %s: %s", doc.doc_id, exc)
            continue
        index.add(doc_chunks)
        index.register_document(
            doc.doc_id, title=doc.title, source_url=doc.source_url, fiscal_year=doc.fiscal_year
        )
        report.documents_ingested += 1
        report.chunks_created += len(doc_chunks)
        report.chunks_split += pages_split
    report.elapsed_ms = (time.perf_counter() - started) * 1000.0
    return report


def ingest(
    manifest_path: str | Path,
    index: "VectorIndex",
    provider: Provider,
    *,
    max_chunk_chars: int = DEFAULT_MAX_CHUNK_CHARS,
    batch_size: int = 64,
) -> IngestReport:
    """File-path entry point for :func:`ingest_manifest`."""
    manifest = load_manifest(manifest_path)
    return ingest_manifest(
        manifest, index, provider, max_chunk_chars=max_chunk_chars, batch_size=batch_size
    )
