from __future__ import annotations

import json
import re

import pytest

from grasp.agent import (
    AgentRunner,
    BudgetTool,
    CalculatorTool,
    ChartPoint,
    ChartSpec,
    ChartTool,
    ToolContext,
    ToolError,
    ToolSpec,
    build_citations,
    parse_completion,
)
from grasp.errors import TransportError, UsageError
from grasp.index import DocumentInfo, SearchHit, YearFilter
from grasp.provider import MockProvider, ScriptRule
from grasp.queryprep import PromptLibrary, QueryPlan, expand_years
from support import brute_force_search, make_chunk

PROMPTS = PromptLibrary.load()

AVAILABLE = tuple(range(2020, 2026))


def make_plan(
    question: str,
    rephrased: str | None = None,
    years: tuple[int, ...] = (),
    available=AVAILABLE,
) -> QueryPlan:
    year_filter = (
        expand_years(list(years), list(available)) if years else YearFilter.all_years()
    )
    return QueryPlan(
        original=question,
        rephrased=rephrased or question,
        extracted_years=years,
        filter=year_filter,
        rationale="test plan",
    )


def make_runner(deskton, provider, **kwargs) -> AgentRunner:
    tools = [
        BudgetTool(deskton.index, deskton.provider, k=6),
        CalculatorTool(),
        ChartTool(),
    ]
    return AgentRunner(
        provider=provider,
        tools=tools,
        system_prompt=PROMPTS.system,
        documents=deskton.index.documents,
        **kwargs,
    )


# -- directive parsing -------------------------------------------------------


def test_parse_thought_only():
    thought, directive = parse_completion("just thinking about budgets")
    assert thought == "just thinking about budgets"
    assert directive is None


def test_parse_action_with_leading_thought():
    text = 'I need data.\nACTION budget_tool {"query": "schools"}\ntrailing noise'
    thought, directive = parse_completion(text)
    assert thought == "I need data."
    assert directive.kind == "action"
    assert directive.tool_name == "budget_tool"
    assert json.loads(directive.raw_args) == {"query": "schools"}


def test_parse_fenced_action():
    thought, directive = parse_completion('```ACTION calculator_tool {"expression": "1+1"}```')
    assert directive.kind == "action"
    assert directive.tool_name == "calculator_tool"


def test_parse_final_consumes_rest():
    text = "Summing up.\nFINAL The budget was $1.\nIt grew by 2%."
    thought, directive = parse_completion(text)
    assert thought == "Summing up."
    assert directive.kind == "final"
    assert directive.final_text == "The budget was $1.\nIt grew by 2%."


def test_first_directive_wins():
    text = 'ACTION budget_tool {}\nFINAL never reached'
    _, directive = parse_completion(text)
    assert directive.kind == "action"


# -- tools -------------------------------------------------------------------


def budget_ctx(plan: QueryPlan) -> ToolContext:
    return ToolContext(plan=plan, available_years=AVAILABLE)


def test_budget_tool_defaults_to_plan(deskton):
    plan = make_plan(
        "What was the school budget in FY2023?",
        rephrased="What was the actual school department budget in FY2023?",
        years=(2023,),
    )
    tool = BudgetTool(deskton.index, deskton.provider, k=4)
    result = tool.run({}, budget_ctx(plan))
    assert len(result.hits) == 4
    top = result.hits[0].chunk
    assert (top.doc_id, top.page) == ("deskton-fy2024", 3)
    # hits obey the plan's expanded filter
    assert all(h.chunk.fiscal_year in {2023, 2024, 2025} for h in result.hits)
    # agreement with an independent brute-force scan over all chunks
    query_vec = deskton.provider.embed([plan.rephrased])[0]
    all_chunks = [
        deskton.index.search(query_vec, len(deskton.index), YearFilter.all_years())[i].chunk
        for i in range(len(deskton.index))
    ]
    expected = brute_force_search(all_chunks, query_vec, 4, allowed_years={2023, 2024, 2025})
    assert [h.chunk.chunk_id for h in result.hits] == [h.chunk.chunk_id for h in expected]


def test_budget_tool_observation_carries_page_tags(deskton):
    plan = make_plan("school spending", years=(2023,))
    result = BudgetTool(deskton.index, deskton.provider, k=3).run({}, budget_ctx(plan))
    tags = re.findall(r"\[(\S+) p\.(\d+) FY(\d{4})\]", result.observation)
    assert len(tags) == 3
    for (doc_id, page, year), hit in zip(tags, result.hits):
        assert doc_id == hit.chunk.doc_id
        assert int(page) == hit.chunk.page
        assert int(year) == hit.chunk.fiscal_year


def test_budget_tool_observation_names_the_search_text(deskton):
    # the query actually searched (the rephrased text by default) is visible
    # in the trace via the observation header
    plan = make_plan("original words", rephrased="rephrased search words", years=(2023,))
    result = BudgetTool(deskton.index, deskton.provider, k=2).run({}, budget_ctx(plan))
    assert "'rephrased search words'" in result.observation
    assert "original words" not in result.observation


def test_budget_tool_no_results_observation(deskton):
    plan = make_plan("anything", years=(2030,), available=(2030,))
    # 2030 is not in the corpus, so the filter excludes everything.
    result = BudgetTool(deskton.index, deskton.provider).run({}, budget_ctx(plan))
    assert result.observation == "NO_RESULTS for years {2030}"
    assert result.hits == []


def test_budget_tool_clamps_model_years_to_available(deskton):
    plan = make_plan("school spending", years=(2023,))
    tool = BudgetTool(deskton.index, deskton.provider, k=2)
    result = tool.run({"years": [1990, 2022]}, budget_ctx(plan))
    assert all(h.chunk.fiscal_year == 2022 for h in result.hits)
    result = tool.run({"years": [1990]}, budget_ctx(plan))
    assert result.observation.startswith("NO_RESULTS")


def test_calculator_tool_results():
    tool = CalculatorTool()
    ctx = budget_ctx(make_plan("anything"))
    assert tool.run({"expression": "125000000 * 0.30"}, ctx).observation == "37500000"
    assert tool.run({"expression": "(118.4 - 112.1) / 112.1"}, ctx).observation == "0.0562"
    with pytest.raises(ToolError):
        tool.run({"expression": "1/0"}, ctx)
    with pytest.raises(ToolError):
        tool.run({}, ctx)


def test_chart_tool_validates_pie():
    tool = ChartTool()
    ctx = budget_ctx(make_plan("anything"))
    series = [
        {"label": "education", "value": 60_000_000},
        {"label": "police", "value": 14_400_000},
        {"label": "fire", "value": 10_800_000},
        {"label": "public works", "value": 8_400_000},
    ]
    result = tool.run({"kind": "pie", "title": "by sector", "series": series, "unit": "USD"}, ctx)
    assert result.chart is not None
    assert len(result.chart.series) == 4
    with pytest.raises(ToolError, match="at least 2 slices"):
        tool.run({"kind": "pie", "series": series[:1]}, ctx)
    with pytest.raises(ToolError, match="non-negative"):
        tool.run({"kind": "pie", "series": series[:1] + [{"label": "x", "value": -1}]}, ctx)


def test_chart_tool_bar_of_three_years():
    tool = ChartTool()
    series = [
        {"label": "FY2021", "value": "52500000"},
        {"label": "FY2022", "value": 55000000},
        {"label": "FY2023", "value": 57500000},
    ]
    result = tool.run(
        {"kind": "bar", "title": "school spending", "series": series, "unit": "USD"},
        budget_ctx(make_plan("anything")),
    )
    assert result.chart.kind == "bar"
    assert [p.value for p in result.chart.series] == [52500000.0, 55000000.0, 57500000.0]


def test_chart_spec_label_uniqueness():
    with pytest.raises(UsageError, match="unique"):
        ChartSpec(
            kind="bar",
            title="t",
            series=(ChartPoint("a", 1.0), ChartPoint("a", 2.0)),
            unit="USD",
        )


# -- citations ---------------------------------------------------------------

DOCS = {
    "deskton-fy2025": DocumentInfo("FY2025 Budget", "https://x/fy2025.pdf", 2025),
    "deskton-fy2024": DocumentInfo("FY2024 Budget", "https://x/fy2024.pdf", 2024),
}


def hit(doc_id: str, page: int, year: int, sub_index: int = 0, score: float = 0.5) -> SearchHit:
    chunk = make_chunk(
        f"{doc_id}:{page}:{sub_index}",
        doc_id=doc_id,
        fiscal_year=year,
        page=page,
        sub_index=sub_index,
    )
    return SearchHit(chunk=chunk, score=score)


def test_citations_dedupe_subchunks():
    hits = [hit("deskton-fy2024", 40, 2024, sub_index=0), hit("deskton-fy2024", 40, 2024, sub_index=1)]
    assert len(build_citations(hits, DOCS)) == 1


def test_citations_keep_retrieval_order():
    hits = [hit("deskton-fy2025", 12, 2025, score=0.9), hit("deskton-fy2024", 40, 2024, score=0.8)]
    citations = build_citations(hits, DOCS)
    assert [(c.doc_id, c.page) for c in citations] == [
        ("deskton-fy2025", 12),
        ("deskton-fy2024", 40),
    ]


def test_citation_url_has_page_fragment():
    (citation,) = build_citations([hit("deskton-fy2024", 12, 2024)], DOCS)
    assert citation.url == "https://x/fy2024.pdf#page=12"
    assert citation.title == "FY2024 Budget"
    assert citation.to_dict()["url"] == "https://x/fy2024.pdf#page=12"


# -- the loop ----------------------------------------------------------------


def scripted_happy_provider() -> MockProvider:
    return MockProvider(
        rules=[
            ScriptRule(
                ("[deskton-fy2024 p.3 FY2024]",),
                "FINAL The FY2023 actual school department spending was $59,250,000 "
                "(realized figure from the FY2024 document).",
            ),
            ScriptRule(
                ("What is the next step?",),
                'I should retrieve the FY2023 school figures.\nACTION budget_tool {"k": 1}',
            ),
        ]
    )


def happy_plan() -> QueryPlan:
    return make_plan(
        "What was the school department budget in FY2023?",
        rephrased="What was the actual school department budget in FY2023?",
        years=(2023,),
    )


def test_scripted_run_produces_expected_trace_and_citation(deskton):
    runner = make_runner(deskton, scripted_happy_provider())
    answer = runner.run([], "What was the school department budget in FY2023?", happy_plan())
    assert [s.kind for s in answer.trace.steps] == ["thought", "action", "observation", "thought"]
    assert answer.trace.terminated_by == "final_answer"
    assert answer.trace.iterations == 2
    assert "$59,250,000" in answer.text
    assert len(answer.citations) == 1
    assert (answer.citations[0].doc_id, answer.citations[0].page) == ("deskton-fy2024", 3)
    assert answer.citations[0].url.endswith("fy2024.pdf#page=3")


def test_never_finalizing_mock_stops_at_max_steps(deskton):
    runner = make_runner(deskton, MockProvider())  # echoes, never a directive
    answer = runner.run([], "school budget?", happy_plan())
    assert answer.trace.iterations == 8
    assert answer.trace.terminated_by == "max_steps"
    assert "could not complete" in answer.text


def test_action_only_mock_stops_at_max_steps_with_evidence(deskton):
    provider = MockProvider(rules=[ScriptRule((), 'ACTION budget_tool {"k": 1}')])
    runner = make_runner(deskton, provider)
    answer = runner.run([], "school budget?", happy_plan())
    assert answer.trace.iterations == 8
    assert answer.trace.terminated_by == "max_steps"
    assert answer.text.count("[deskton-fy2024 p.3") >= 1  # gathered evidence listed
    assert len(answer.citations) == 1  # deduped across repeated retrievals


def test_actions_and_observations_alternate(deskton):
    provider = MockProvider(rules=[ScriptRule((), 'ACTION budget_tool {}')])
    runner = make_runner(deskton, provider)
    answer = runner.run([], "school budget?", happy_plan())
    steps = answer.trace.steps
    for i, step in enumerate(steps):
        if step.kind == "action":
            assert steps[i + 1].kind == "observation"


def test_tool_error_does_not_abort_loop(deskton):
    provider = MockProvider(
        rules=[ScriptRule((), 'ACTION calculator_tool {"expression": "1/0"}')]
    )
    runner = make_runner(deskton, provider, max_steps=3)
    answer = runner.run([], "divide by zero", make_plan("divide by zero"))
    assert answer.trace.iterations == 3
    observations = [s for s in answer.trace.steps if s.kind == "observation"]
    assert len(observations) == 3
    assert all(o.content.startswith("ERROR: division by zero") for o in observations)


def test_unknown_tool_becomes_observation_model_can_react(deskton):
    provider = MockProvider(
        rules=[
            ScriptRule(("ERROR: unknown tool",), "FINAL giving up"),
            ScriptRule((), 'ACTION missing_tool {"x": 1}'),
        ]
    )
    answer = make_runner(deskton, provider).run([], "q", make_plan("q"))
    assert answer.trace.terminated_by == "final_answer"


def test_malformed_json_args_become_observation(deskton):
    provider = MockProvider(
        rules=[
            ScriptRule(("invalid tool arguments",), "FINAL ok"),
            ScriptRule((), 'ACTION budget_tool {"k": }'),
        ]
    )
    answer = make_runner(deskton, provider).run([], "q", make_plan("q"))
    assert answer.trace.terminated_by == "final_answer"


def test_bad_years_argument_becomes_observation(deskton):
    provider = MockProvider(
        rules=[
            ScriptRule(("must be a list of integers",), "FINAL ok"),
            ScriptRule((), 'ACTION budget_tool {"years": 3}'),
        ]
    )
    answer = make_runner(deskton, provider).run([], "q", make_plan("q"))
    assert answer.trace.terminated_by == "final_answer"


def test_pie_chart_flow(deskton):
    series = json.dumps(
        [
            {"label": "education", "value": 60000000},
            {"label": "police", "value": 14400000},
            {"label": "fire", "value": 10800000},
            {"label": "public works", "value": 8400000},
        ]
    )
    provider = MockProvider(
        rules=[
            ScriptRule(("CHART_OK pie",), "FINAL Here is how the FY2024 budget is distributed."),
            ScriptRule(
                ("Observation:",),
                "Now I can draw the chart.\n"
                f'ACTION chart_tool {{"kind": "pie", "title": "FY2024 budget by sector", '
                f'"series": {series}, "unit": "USD"}}',
            ),
            ScriptRule(
                ("What is the next step?",),
                'Find the allocation by sector first.\nACTION budget_tool {"k": 2}',
            ),
        ]
    )
    plan = make_plan(
        "Draw a pie chart of how the total annual operating budget is distributed.",
        rephrased="How is the FY2024 total annual operating budget distributed by sector?",
        years=(2024,),
    )
    answer = make_runner(deskton, provider).run([], plan.original, plan)
    actions = [s.tool_name for s in answer.trace.steps if s.kind == "action"]
    assert actions == ["budget_tool", "chart_tool"]
    assert answer.chart is not None
    assert answer.chart.kind == "pie"
    assert [p.label for p in answer.chart.series] == [
        "education",
        "police",
        "fire",
        "public works",
    ]
    assert answer.citations  # retrieval happened and is cited


def test_provider_failure_terminates_with_error(deskton):
    class DownProvider(MockProvider):
        def complete(self, messages, params):
            raise TransportError("offline", attempts=3)

    answer = make_runner(deskton, DownProvider()).run([], "q", make_plan("q"))
    assert answer.trace.terminated_by == "error"
    assert "could not complete" in answer.text


def test_run_is_deterministic(deskton):
    def one_run():
        runner = make_runner(deskton, scripted_happy_provider())
        answer = runner.run([], "What was the school department budget in FY2023?", happy_plan())
        return json.dumps(
            {**answer.to_dict(), "trace": answer.trace.to_dict()}, sort_keys=True
        )

    runs = {one_run() for _ in range(5)}
    assert len(runs) == 1


def test_runner_requires_budget_tool(deskton):
    runner = AgentRunner(
        provider=MockProvider(),
        tools=[CalculatorTool()],
        system_prompt=PROMPTS.system,
        documents=deskton.index.documents,
    )
    with pytest.raises(UsageError, match="budget_tool"):
        runner.run([], "q", make_plan("q"))


def test_duplicate_tool_names_rejected(deskton):
    with pytest.raises(UsageError, match="duplicate"):
        AgentRunner(
            provider=MockProvider(),
            tools=[CalculatorTool(), CalculatorTool()],
            system_prompt=PROMPTS.system,
            documents=deskton.index.documents,
        )


def test_tool_spec_requires_description():
    with pytest.raises(UsageError):
        ToolSpec(name="x", description="   ", argument_schema={})
