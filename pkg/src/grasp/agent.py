"""Iterative answer loop: the model thinks, calls tools, reads observations,
and finishes with a cited answer.

The model signals a tool call with a single-line directive

    ACTION <tool_name> <json-args>

and finishes with

    FINAL <answer text>

Parsing is lenient: lines may be wrapped in backtick fences, the first
directive found wins, and FINAL consumes the rest of the completion so
answers can span lines. Text before the directive is kept as the thought.

Tool failures never abort the loop; they become error observations the
model can react to. The loop is bounded by ``max_steps`` completions.
"""

from __future__ import annotations

import json
import logging
import re
from dataclasses import dataclass, field
from typing import Mapping, Protocol, Sequence

from .calc import CalcError, evaluate_text
from .errors import GraspError, UsageError
from .index import DocumentInfo, SearchHit, VectorIndex, YearFilter
from .provider import ChatMessage, CompletionParams, Provider
from .queryprep import QueryPlan

logger = logging.getLogger(__name__)

DEFAULT_MAX_STEPS = 8
DEFAULT_K = 6

CHART_KINDS = ("pie", "bar", "line")

_ACTION_RE = re.compile(r"^\s*`*\s*ACTION\s+(\w+)\s+(\{.*\})\s*`*\s*$")
_FINAL_RE = re.compile(r"^\s*`*\s*FINAL\s+(.*)$", re.DOTALL)


@dataclass(frozen=True)
class ToolSpec:
    name: str
    description: str
    argument_schema: dict

    def __post_init__(self) -> None:
        if not self.description.strip():
            raise UsageError(f"tool {self.name!r} needs a description")


@dataclass(frozen=True)
class ChartPoint:
    label: str
    value: float


@dataclass(frozen=True)
class ChartSpec:
    kind: str
    title: str
    series: tuple[ChartPoint, ...]
    unit: str

    def __post_init__(self) -> None:
        if self.kind not in CHART_KINDS:
            raise UsageError(f"chart kind must be one of {CHART_KINDS}, got {self.kind!r}")
        labels = [p.label for p in self.series]
        if len(set(labels)) != len(labels):
            raise UsageError("chart labels must be unique")
        if self.kind == "pie":
            if len(self.series) < 2:
                raise UsageError("a pie chart needs at least 2 slices")
            if any(p.value < 0 for p in self.series):
                raise UsageError("pie chart values must be non-negative")

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "title": self.title,
            "series": [{"label": p.label, "value": p.value} for p in self.series],
            "unit": self.unit,
        }


@dataclass(frozen=True)
class AgentStep:
    kind: str  # thought | action | observation
    content: str
    tool_name: str | None = None
    tool_args: dict | None = None

    def to_dict(self) -> dict:
        out: dict = {"kind": self.kind, "content": self.content}
        if self.tool_name is not None:
            out["tool_name"] = self.tool_name
        if self.tool_args is not None:
            out["tool_args"] = self.tool_args
        return out


@dataclass
class AgentTrace:
    steps: list[AgentStep] = field(default_factory=list)
    iterations: int = 0
    terminated_by: str = "final_answer"  # final_answer | max_steps | error

    def to_dict(self) -> dict:
        return {
            "steps": [s.to_dict() for s in self.steps],
            "iterations": self.iterations,
            "terminated_by": self.terminated_by,
        }


@dataclass(frozen=True)
class Citation:
    doc_id: str
    title: str
    source_url: str
    page: int
    fiscal_year: int

    @property
    def url(self) -> str:
        return f"{self.source_url}#page={self.page}"

    def to_dict(self) -> dict:
        return {
            "doc_id": self.doc_id,
            "title": self.title,
            "source_url": self.source_url,
            "page": self.page,
            "fiscal_year": self.fiscal_year,
            "url": self.url,
        }


@dataclass
class Answer:
    text: str
    citations: list[Citation]
    chart: ChartSpec | None
    trace: AgentTrace

    def to_dict(self) -> dict:
        return {
            "answer_text": self.text,
            "citations": [c.to_dict() for c in self.citations],
            "chart": self.chart.to_dict() if self.chart else None,
        }


@dataclass(frozen=True)
class ToolContext:
    plan: QueryPlan
    available_years: tuple[int, ...]


@dataclass
class ToolResult:
    observation: str
    hits: list[SearchHit] = field(default_factory=list)
    chart: ChartSpec | None = None


class Tool(Protocol):
    spec: ToolSpec

    def run(self, args: dict, ctx: ToolContext) -> ToolResult: ...


class ToolError(GraspError):
    """Raised by tools for argument/validation problems; becomes an
    error observation rather than aborting the loop."""


class BudgetTool:
    """Retrieves budget passages from the vector index.

    The query text defaults to the plan's rephrased query and the year
    filter to the plan's expanded filter. The model may narrow or change
    the years, but they are clamped to years actually in the index, so it
    can never widen retrieval beyond what query planning allowed.
    """

    def __init__(self, index: VectorIndex, provider: Provider, k: int = DEFAULT_K):
        self._index = index
        self._provider = provider
        self._k = k
        self.spec = ToolSpec(
            name="budget_tool",
            description=(
                "Search the town's budget documents. Optional args: "
                '"query" (search text), "years" (list of fiscal years), '
                '"k" (number of passages).'
            ),
            argument_schema={
                "type": "object",
                "properties": {
                    "query": {"type": "string"},
                    "years": {"type": "array", "items": {"type": "integer"}},
                    "k": {"type": "integer", "minimum": 1},
                },
            },
        )

    def run(self, args: dict, ctx: ToolContext) -> ToolResult:
        query = str(args.get("query") or ctx.plan.rephrased)
        year_filter = self._resolve_filter(args, ctx)
        k = int(args.get("k") or self._k)
        vector = self._provider.embed([query])[0]
        hits = self._index.search(vector, k, year_filter)
        if not hits:
            return ToolResult(observation=f"NO_RESULTS for years {year_filter.describe()}")
        lines = [
            f"Retrieved {len(hits)} passages for query {query!r}, years {year_filter.describe()}."
        ]
        if ctx.plan.extracted_years:
            lines.append(
                "Passages from documents later than the queried year report actual "
                "(realized) figures; same-year documents report projections."
            )
        for hit in hits:
            c = hit.chunk
            lines.append(f"[{c.doc_id} p.{c.page} FY{c.fiscal_year}] {c.text}")
        return ToolResult(observation="\n".join(lines), hits=hits)

    def _resolve_filter(self, args: dict, ctx: ToolContext) -> YearFilter:
        years_arg = args.get("years")
        if years_arg is None:
            return ctx.plan.filter
        try:
            requested = {int(y) for y in years_arg}
        except (TypeError, ValueError) as exc:
            raise ToolError(f"'years' must be a list of integers: {exc}") from exc
        if not requested:
            return ctx.plan.filter
        clamped = requested & set(ctx.available_years)
        return YearFilter.of(clamped or requested)


class CalculatorTool:
    """Exact decimal arithmetic over + - * / % and parentheses."""

    def __init__(self) -> None:
        self.spec = ToolSpec(
            name="calculator_tool",
            description=(
                'Evaluate an arithmetic expression. Arg: "expression", e.g. '
                '"(118.4 - 112.1) / 112.1". Supports + - * / % and parentheses.'
            ),
            argument_schema={
                "type": "object",
                "properties": {"expression": {"type": "string"}},
                "required": ["expression"],
            },
        )

    def run(self, args: dict, ctx: ToolContext) -> ToolResult:
        expression = args.get("expression")
        if not expression:
            raise ToolError("calculator_tool needs an 'expression' argument")
        try:
            return ToolResult(observation=evaluate_text(str(expression)))
        except CalcError as exc:
            raise ToolError(str(exc)) from exc


class ChartTool:
    """Validates a chart request into a ChartSpec; rendering happens in the UI."""

    def __init__(self) -> None:
        self.spec = ToolSpec(
            name="chart_tool",
            description=(
                'Prepare a chart for the answer. Args: "kind" (pie|bar|line), '
                '"title", "series" (list of {"label", "value"}), "unit".'
            ),
            argument_schema={
                "type": "object",
                "properties": {
                    "kind": {"enum": list(CHART_KINDS)},
                    "title": {"type": "string"},
                    "series": {
                        "type": "array",
                        "items": {
                            "type": "object",
                            "properties": {
                                "label": {"type": "string"},
                                "value": {"type": "number"},
                            },
                            "required": ["label", "value"],
                        },
                    },
                    "unit": {"type": "string"},
                },
                "required": ["kind", "series"],
            },
        )

    def run(self, args: dict, ctx: ToolContext) -> ToolResult:
        raw_series = args.get("series") or []
        points = []
        for i, entry in enumerate(raw_series):
            try:
                points.append(
                    ChartPoint(label=str(entry["label"]), value=float(entry["value"]))
                )
            except (TypeError, KeyError, ValueError) as exc:
                raise ToolError(f"series entry {i} is invalid: {exc}") from exc
        try:
            spec = ChartSpec(
                kind=str(args.get("kind", "")),
                title=str(args.get("title", "")),
                series=tuple(points),
                unit=str(args.get("unit", "")),
            )
        except UsageError as exc:
            raise ToolError(str(exc)) from exc
        return ToolResult(
            observation=f"CHART_OK {spec.kind} chart with {len(spec.series)} entries",
            chart=spec,
        )


def build_citations(
    hits: Sequence[SearchHit], documents: Mapping[str, DocumentInfo]
) -> list[Citation]:
    """One citation per distinct (doc_id, page), in retrieval order.

    ``hits`` is the concatenation of every retrieval made during the run,
    best-scored first within each retrieval, so the first citation points at
    the strongest evidence. Each URL carries a page fragment targeting the
    exact page.
    """
    citations: list[Citation] = []
    seen: set[tuple[str, int]] = set()
    for hit in hits:
        chunk = hit.chunk
        key = (chunk.doc_id, chunk.page)
        if key in seen:
            continue
        seen.add(key)
        info = documents.get(chunk.doc_id)
        citations.append(
            Citation(
                doc_id=chunk.doc_id,
                title=info.title if info else chunk.doc_id,
                source_url=info.source_url if info else "",
                page=chunk.page,
                fiscal_year=chunk.fiscal_year,
            )
        )
    return citations


@dataclass
class _Directive:
    kind: str  # action | final
    tool_name: str | None = None
    raw_args: str | None = None
    final_text: str | None = None


def parse_completion(text: str) -> tuple[str, _Directive | None]:
    """Split a completion into (thought text, first directive or None)."""
    lines = text.splitlines()
    for i, line in enumerate(lines):
        m = _ACTION_RE.match(line)
        if m:
            thought = "\n".join(lines[:i]).strip()
            return thought, _Directive(kind="action", tool_name=m.group(1), raw_args=m.group(2))
        m = _FINAL_RE.match("\n".join(lines[i:]))
        if m and lines[i].lstrip().lstrip("`").startswith("FINAL"):
            thought = "\n".join(lines[:i]).strip()
            final_text = m.group(1).strip().rstrip("`").strip()
            return thought, _Directive(kind="final", final_text=final_text)
    return text.strip(), None


def render_scratchpad(steps: Sequence[AgentStep]) -> str:
    """Inline rendering of prior steps, fed back to the model each iteration."""
    if not steps:
        return "(no steps taken yet)"
    lines = []
    for step in steps:
        if step.kind == "thought":
            lines.append(f"Thought: {step.content}")
        elif step.kind == "action":
            args = json.dumps(step.tool_args or {}, sort_keys=True)
            lines.append(f"Action: {step.tool_name} {args}")
        else:
            lines.append(f"Observation: {step.content}")
    return "\n".join(lines)


class AgentRunner:
    """Drives the thought/action/observation loop for one engine."""

    def __init__(
        self,
        provider: Provider,
        tools: Sequence[Tool],
        system_prompt: str,
        documents: Mapping[str, DocumentInfo],
        *,
        max_steps: int = DEFAULT_MAX_STEPS,
        params: CompletionParams | None = None,
    ):
        names = [t.spec.name for t in tools]
        if len(set(names)) != len(names):
            raise UsageError(f"duplicate tool names: {names}")
        self._provider = provider
        self._tools = {t.spec.name: t for t in tools}
        self._system_prompt = system_prompt
        self._documents = documents
        self._max_steps = max_steps
        self._params = params or CompletionParams(max_tokens=1024, temperature=0.0)

    def _system_message(self) -> ChatMessage:
        tool_lines = "\n".join(
            f"- {t.spec.name}: {t.spec.description}" for t in self._tools.values()
        )
        protocol = (
            "You work in steps. In each step, reply with a short thought and then "
            "EITHER one tool call on its own line:\n"
            'ACTION <tool_name> {"arg": "value"}\n'
            "OR your final answer:\n"
            "FINAL <answer>\n\n"
            f"Available tools:\n{tool_lines}"
        )
        return ChatMessage("system", f"{self._system_prompt}\n\n{protocol}")

    def _user_message(self, user_query: str, plan: QueryPlan, steps: Sequence[AgentStep]) -> ChatMessage:
        return ChatMessage(
            "user",
            (
                f"Question: {user_query}\n"
                f"Interpreted as: {plan.rephrased}\n\n"
                f"Steps so far:\n{render_scratchpad(steps)}\n\n"
                "What is the next step?"
            ),
        )

    def run(
        self,
        session_history: Sequence[ChatMessage],
        user_query: str,
        plan: QueryPlan,
    ) -> Answer:
        if "budget_tool" not in self._tools:
            raise UsageError("agent requires a budget_tool")
        ctx = ToolContext(
            plan=plan,
            available_years=tuple(sorted({d.fiscal_year for d in self._documents.values()})),
        )
        trace = AgentTrace()
        provenance: list[SearchHit] = []
        chart: ChartSpec | None = None
        answer_text: str | None = None

        for iteration in range(1, self._max_steps + 1):
            trace.iterations = iteration
            messages = [
                self._system_message(),
                *session_history,
                self._user_message(user_query, plan, trace.steps),
            ]
            try:
                completion = self._provider.complete(messages, self._params)
            except GraspError as exc:
                logger.error("provider failed during agent run: %s", exc)
                trace.terminated_by = "error"
                answer_text = self._fallback_text(trace, f"the language model failed ({exc})")
                trace.steps.append(AgentStep("thought", answer_text))
                break
            thought, directive = parse_completion(completion)

            if directive is None:
                trace.steps.append(AgentStep("thought", thought or completion.strip()))
                continue
            if directive.kind == "final":
                if thought:
                    trace.steps.append(AgentStep("thought", thought))
                answer_text = directive.final_text or ""
                trace.steps.append(AgentStep("thought", answer_text))
                trace.terminated_by = "final_answer"
                break
            if thought:
                trace.steps.append(AgentStep("thought", thought))
            observation, hits, tool_chart, args = self._execute(directive, ctx)
            trace.steps.append(
                AgentStep("action", f"{directive.tool_name}", directive.tool_name, args)
            )
            trace.steps.append(AgentStep("observation", observation))
            provenance.extend(hits)
            if tool_chart is not None:
                chart = tool_chart
        else:
            trace.terminated_by = "max_steps"
            answer_text = self._fallback_text(trace, "the step limit was reached")
            trace.steps.append(AgentStep("thought", answer_text))

        if answer_text is None:  # unreachable; every exit sets the text
            answer_text = self._fallback_text(trace, "the run ended unexpectedly")
        citations = build_citations(provenance, self._documents)
        return Answer(text=answer_text, citations=citations, chart=chart, trace=trace)

    def _execute(
        self, directive: _Directive, ctx: ToolContext
    ) -> tuple[str, list[SearchHit], ChartSpec | None, dict]:
        assert directive.tool_name is not None and directive.raw_args is not None
        try:
            args = json.loads(directive.raw_args)
            if not isinstance(args, dict):
                raise ValueError("arguments must be a JSON object")
        except ValueError as exc:
            return f"ERROR: invalid tool arguments: {exc}", [], None, {}
        tool = self._tools.get(directive.tool_name)
        if tool is None:
            available = ", ".join(sorted(self._tools))
            return (
                f"ERROR: unknown tool {directive.tool_name!r}; available: {available}",
                [],
                None,
                args,
            )
        try:
            result = tool.run(args, ctx)
        except ToolError as exc:
            return f"ERROR: {exc}", [], None, args
        except Exception as exc:  # tool crash must not abort the loop
            logger.exception("tool %s crashed", directive.tool_name)
            return f"ERROR: {directive.tool_name} crashed: {exc}", [], None, args
        return result.observation, result.hits, result.chart, args

    def _fallback_text(self, trace: AgentTrace, reason: str) -> str:
        evidence = [
            line
            for step in trace.steps
            if step.kind == "observation" and not step.content.startswith("ERROR")
            for line in step.content.splitlines()
            if line.startswith("[")
        ]
        text = (
            f"I'm sorry - I could not complete this answer because {reason}. "
            "Here is the evidence gathered so far:"
        )
        if evidence:
            return text + "\n" + "\n".join(evidence)
        return text + " (none)"
