"""Engine facade: wires provider, index, prompts, planner, and agent
together behind two calls - ``ingest`` and ``ask``."""

from __future__ import annotations

import logging
from pathlib import Path
from typing import Sequence

from . import corpus, queryprep
from .agent import AgentRunner, Answer, BudgetTool, CalculatorTool, ChartTool
from .config import EngineConfig
from .errors import UsageError
from .index import VectorIndex
from .provider import ChatMessage, HttpProvider, MockProvider, Provider, load_mock_script
from .queryprep import PromptLibrary, QueryPlan

logger = logging.getLogger(__name__)


def build_provider(config: EngineConfig) -> Provider:
    pc = config.provider
    if pc.kind == "mock":
        script: dict[str, str] = {}
        rules = ()
        if pc.script_path:
            script, rules = load_mock_script(pc.script_path)
        kwargs: dict = {"dim": pc.dim, "script": script, "rules": rules}
        if pc.seed is not None:
            kwargs["seed"] = pc.seed
        return MockProvider(**kwargs)
    if pc.kind == "http":
        return HttpProvider(
            endpoint=pc.endpoint or "",
            model=pc.model or "",
            embedding_model=pc.embedding_model or "",
            api_key_env=pc.api_key_env,
            dim=pc.dim,
        )
    raise UsageError(f"unknown provider kind {pc.kind!r}")


class Engine:
    """One configured instance of the whole pipeline."""

    def __init__(
        self,
        config: EngineConfig,
        *,
        provider: Provider | None = None,
        index: VectorIndex | None = None,
    ):
        config.validate()
        self.config = config
        self.provider = provider or build_provider(config)
        self.prompts = PromptLibrary.load(config.prompts_dir)
        if index is not None:
            self.index = index
        elif Path(config.index_path).exists():
            self.index = VectorIndex.load(config.index_path)
        else:
            self.index = VectorIndex(self.provider.dim)

    # -- corpus ------------------------------------------------------------

    def ingest(self, manifest_path: str | Path, *, save: bool = True) -> corpus.IngestReport:
        report = corpus.ingest(
            manifest_path,
            self.index,
            self.provider,
            max_chunk_chars=self.config.max_chunk_chars,
        )
        if save:
            self.save_index()
        return report

    def ingest_manifest(self, manifest: corpus.DocumentManifest, *, save: bool = True) -> corpus.IngestReport:
        report = corpus.ingest_manifest(
            manifest, self.index, self.provider, max_chunk_chars=self.config.max_chunk_chars
        )
        if save:
            self.save_index()
        return report

    def save_index(self) -> None:
        self.index.save(self.config.index_path)

    def available_years(self) -> list[int]:
        return self.index.years()

    # -- answering ---------------------------------------------------------

    def plan_query(self, question: str, last_query: str | None = None) -> QueryPlan:
        years = self.available_years()
        if not years:
            raise UsageError("the index is empty; run ingest before asking questions")
        return queryprep.plan(
            question,
            last_query,
            self.provider,
            years,
            self.prompts,
            max_expansion_years=self.config.max_expansion_years,
        )

    def ask(
        self,
        question: str,
        last_query: str | None = None,
        history: Sequence[ChatMessage] = (),
    ) -> Answer:
        """Answer one question, given the previous user query for context."""
        if not question.strip():
            raise UsageError("question must be non-empty")
        plan = self.plan_query(question, last_query)
        runner = AgentRunner(
            provider=self.provider,
            tools=[
                BudgetTool(self.index, self.provider, k=self.config.k),
                CalculatorTool(),
                ChartTool(),
            ],
            system_prompt=self.prompts.system,
            documents=self.index.documents,
            max_steps=self.config.max_steps,
        )
        return runner.run(list(history), question, plan)
