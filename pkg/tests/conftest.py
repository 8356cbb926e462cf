from __future__ import annotations

import sys
from dataclasses import dataclass
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from grasp import corpus
from grasp.index import VectorIndex
from grasp.provider import MockProvider
from grasp.sampletown import write_sample_town


@dataclass
class Deskton:
    """The fixture town, ingested once per test session."""

    dir: Path
    manifest_path: Path
    provider: MockProvider
    index: VectorIndex


@pytest.fixture(scope="session")
def deskton(tmp_path_factory: pytest.TempPathFactory) -> Deskton:
    town_dir = tmp_path_factory.mktemp("deskton")
    manifest_path = write_sample_town(town_dir)
    provider = MockProvider()
    index = VectorIndex(provider.dim)
    report = corpus.ingest(manifest_path, index, provider)
    assert not report.failures
    return Deskton(dir=town_dir, manifest_path=manifest_path, provider=provider, index=index)
