"""Query planning: rephrasing follow-ups and expanding fiscal years.

Shows the three planning stages and why the year filter reaches *forward*
in time: the FY2022 answer usually lives in the FY2023+ documents, where
the realized figures are printed.

    python3 demos/02_query_planning.py
"""

from __future__ import annotations

from grasp.provider import ChatMessage, MockProvider, message_digest
from grasp.queryprep import PromptLibrary, expand_years, plan, regex_years

PROMPTS = PromptLibrary.load()

FIRST = "What was the municipal school budget in FY2025?"
FOLLOW_UP = "What about the two years before?"
REPHRASED = "What was the municipal school budget in FY2023 and FY2024?"


def scripted_provider() -> MockProvider:
    """Mock scripted the way a real model behaves on this conversation."""
    rephrase_prompt = PROMPTS.render_rephrase(FOLLOW_UP, FIRST)
    extract_prompt = PROMPTS.render_extract_years(REPHRASED)
    return MockProvider(
        script={
            message_digest([ChatMessage("user", rephrase_prompt)]): REPHRASED,
            message_digest([ChatMessage("user", extract_prompt)]): "2023, 2024",
        }
    )


def main() -> None:
    available = list(range(2020, 2026))

    print("== follow-up rephrasing ==")
    print(f"previous query: {FIRST}")
    print(f"current query:  {FOLLOW_UP}")
    p = plan(FOLLOW_UP, FIRST, scripted_provider(), available, PROMPTS)
    print(f"rephrased:      {p.rephrased}")
    print(f"years:          {list(p.extracted_years)}")
    print(f"filter:         {p.filter.describe()}   <- includes later years for actuals")
    print("\nplan rationale:")
    for line in p.rationale.splitlines():
        print(f"  {line}")

    print("\n== year expansion on its own ==")
    for extracted in ([2022], [2025], []):
        f = expand_years(extracted, available)
        label = "match-all" if f.match_all else f.describe()
        print(f"  extracted {extracted or '{}'}  ->  {label}")

    print("\n== deterministic fallbacks ==")
    print("regex year scan (used when the model output is unparseable):")
    for text in (
        "Compare spending between 2020 and 2022",
        "What changed from FY21 to FY23?",
        "How big is the police department?",
    ):
        print(f"  {text!r:55s} -> {regex_years(text)}")

    class DownProvider(MockProvider):
        def complete(self, messages, params):
            from grasp.errors import TransportError

            raise TransportError("backend offline", attempts=3)

    p = plan("Police overtime in FY2022?", None, DownProvider(), available, PROMPTS)
    print("\nwith the completion backend down, planning still works:")
    for line in p.rationale.splitlines():
        print(f"  {line}")


if __name__ == "__main__":
    main()
