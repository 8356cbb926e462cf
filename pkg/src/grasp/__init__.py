"""Grounded municipal budget question answering.

A retrieval pipeline over per-page chunks of official budget documents,
combined with an iterative tool-calling answer loop, fiscal-year-aware
query planning, and page-exact citations. Fully testable offline via a
deterministic mock provider.
"""

from .agent import (
    AgentRunner,
    AgentStep,
    AgentTrace,
    Answer,
    BudgetTool,
    CalculatorTool,
    ChartPoint,
    ChartSpec,
    ChartTool,
    Citation,
    build_citations,
)
from .config import EngineConfig, ProviderConfig, load_config
from .corpus import (
    DocumentManifest,
    IngestReport,
    ManifestDocument,
    PageChunk,
    ingest,
    load_bundle,
)
from .engine import Engine
from .errors import GraspError, IndexFormatError, TransportError, UsageError
from .index import DocumentInfo, SearchHit, VectorIndex, YearFilter
from .provider import (
    ChatMessage,
    CompletionParams,
    HttpProvider,
    MockProvider,
    Provider,
    ScriptRule,
    message_digest,
)
from .queryprep import PromptLibrary, QueryPlan, expand_years, extract_years, plan, rephrase

__version__ = "0.1.0"

__all__ = [
    "AgentRunner",
    "AgentStep",
    "AgentTrace",
    "Answer",
    "BudgetTool",
    "CalculatorTool",
    "ChartPoint",
    "ChartSpec",
    "ChartTool",
    "ChatMessage",
    "Citation",
    "CompletionParams",
    "DocumentInfo",
    "DocumentManifest",
    "Engine",
    "EngineConfig",
    "GraspError",
    "HttpProvider",
    "IndexFormatError",
    "IngestReport",
    "ManifestDocument",
    "MockProvider",
    "PageChunk",
    "PromptLibrary",
    "Provider",
    "ProviderConfig",
    "QueryPlan",
    "ScriptRule",
    "SearchHit",
    "TransportError",
    "UsageError",
    "VectorIndex",
    "YearFilter",
    "build_citations",
    "expand_years",
    "extract_years",
    "ingest",
    "load_bundle",
    "load_config",
    "message_digest",
    "plan",
    "rephrase",
]
