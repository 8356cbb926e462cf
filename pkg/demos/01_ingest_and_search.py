"""Ingest the fixture town and poke at the vector index directly.

Walks through the retrieval layer on its own: per-page chunking, exact
cosine search, fiscal-year filtering, and file persistence.

    python3 demos/01_ingest_and_search.py
"""

from __future__ import annotations

import tempfile
from pathlib import Path

from grasp import corpus
from grasp.index import VectorIndex, YearFilter
from grasp.provider import MockProvider
from grasp.sampletown import write_sample_town


def show_hits(title: str, hits) -> None:
    print(f"\n{title}")
    for hit in hits:
        chunk = hit.chunk
        first_line = chunk.text.splitlines()[0]
        print(f"  {hit.score:6.3f}  {chunk.doc_id} p.{chunk.page}  {first_line}")


def main() -> None:
    workdir = Path(tempfile.mkdtemp(prefix="grasp-demo-"))
    manifest_path = write_sample_town(workdir / "town")
    print(f"fixture town written to {workdir / 'town'}")

    provider = MockProvider()
    index = VectorIndex(provider.dim)
    report = corpus.ingest(manifest_path, index, provider)
    print(f"ingested {report.documents_ingested} documents, {report.chunks_created} page chunks")
    print(f"fiscal years in the index: {index.years()}")

    # A plain semantic query with no year: every school page is a candidate.
    query = provider.embed(["total school department spending"])[0]
    show_hits("top pages for 'total school department spending' (all years):",
              index.search(query, 4, YearFilter.all_years()))

    # A year-specific query under the expanded filter {2023, 2024, 2025}.
    # The FY2024 page wins: that is where the FY2023 *actual* is printed.
    query = provider.embed(["actual school department spending in FY2023"])[0]
    show_hits("'actual school department spending in FY2023', filtered to {2023, 2024, 2025}:",
              index.search(query, 4, YearFilter.of({2023, 2024, 2025})))

    # Persistence is bit-exact: save, load, and compare a search.
    index_path = workdir / "index.bin"
    index.save(index_path)
    loaded = VectorIndex.load(index_path)
    before = [(h.chunk.chunk_id, h.score) for h in index.search(query, 3, YearFilter.all_years())]
    after = [(h.chunk.chunk_id, h.score) for h in loaded.search(query, 3, YearFilter.all_years())]
    assert before == after
    print(f"\nsaved to {index_path} and reloaded: searches identical, scores bit-exact")


if __name__ == "__main__":
    main()
