"""Query planning: rephrase a conversational query, pull out the fiscal
years it refers to, and widen the year filter so later documents that carry
realized (actual) figures stay retrievable.

Every stage degrades gracefully: if the completion backend is down the plan
is still produced from deterministic fallbacks, and the plan's ``rationale``
records which path was taken.
"""

from __future__ import annotations

import logging
import re
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

from .errors import GraspError, UsageError
from .index import YearFilter
from .provider import ChatMessage, CompletionParams, Provider

logger = logging.getLogger(__name__)

_PLAN_PARAMS = CompletionParams(max_tokens=256, temperature=0.0)

_YEAR_LIST_RE = re.compile(r"\d{4}(?:\s*,\s*\d{4})*")
_FY4_RE = re.compile(r"\bFY\s?(\d{4})\b", re.IGNORECASE)
_FY2_RE = re.compile(r"\bFY\s?(\d{2})\b(?!\d)", re.IGNORECASE)
_BARE_YEAR_RE = re.compile(r"\b(19\d{2}|20\d{2})\b")
_BETWEEN_RE = re.compile(
    r"\bbetween\s+(?:FY\s?)?(\d{2,4})\s+and\s+(?:FY\s?)?(\d{2,4})\b", re.IGNORECASE
)

PROMPT_FILES = ("rephrase.txt", "extract_years.txt", "system.txt")


class PromptLibrary:
    """The engine's prompt templates, loaded from a directory of text files.

    Templates use ``{placeholder}`` markers replaced by plain substitution,
    so template bodies may freely contain braces. When no directory is given
    the packaged defaults are used; towns can point the config at their own
    directory to edit wording without touching code.
    """

    def __init__(self, rephrase: str, extract_years: str, system: str):
        self.rephrase_template = rephrase
        self.extract_years_template = extract_years
        self.system = system

    @classmethod
    def load(cls, prompts_dir: str | Path | None = None) -> "PromptLibrary":
        texts = {}
        for name in PROMPT_FILES:
            if prompts_dir is not None:
                path = Path(prompts_dir) / name
                try:
                    texts[name] = path.read_text(encoding="utf-8")
                except OSError as exc:
                    raise UsageError(f"cannot read prompt file {path}: {exc}") from exc
            else:
                texts[name] = (
                    resources.files("grasp.prompts").joinpath(name).read_text(encoding="utf-8")
                )
        return cls(
            rephrase=texts["rephrase.txt"],
            extract_years=texts["extract_years.txt"],
            system=texts["system.txt"],
        )

    def render_rephrase(self, current_query: str, last_query: str | None) -> str:
        return self.rephrase_template.replace("{currentQuery}", current_query).replace(
            "{lastQuery}", last_query or ""
        )

    def render_extract_years(self, query: str) -> str:
        return self.extract_years_template.replace("{query}", query)


@dataclass(frozen=True)
class QueryPlan:
    original: str
    rephrased: str
    extracted_years: tuple[int, ...]
    filter: YearFilter
    rationale: str


def rephrase(
    current_query: str,
    last_query: str | None,
    provider: Provider,
    prompts: PromptLibrary | None = None,
) -> str:
    """Ask the backend to restate the query with the question and year(s)
    spelled out. Falls back to the query unchanged if the backend fails."""
    text, _ = _rephrase_with_note(current_query, last_query, provider, prompts or PromptLibrary.load())
    return text


def _rephrase_with_note(
    current_query: str,
    last_query: str | None,
    provider: Provider,
    prompts: PromptLibrary,
) -> tuple[str, str]:
    if not current_query.strip():
        raise UsageError("query must be non-empty")
    prompt = prompts.render_rephrase(current_query, last_query)
    try:
        out = provider.complete([ChatMessage("user", prompt)], _PLAN_PARAMS).strip()
    except GraspError as exc:
        logger.warning("rephrase failed, keeping original query: %s", exc)
        return current_query, f"provider failed ({exc}); kept original query"
    if not out:
        return current_query, "provider returned empty text; kept original query"
    return out, "rephrased by provider"


def extract_years(
    rephrased: str, provider: Provider, prompts: PromptLibrary | None = None
) -> list[int]:
    """Fiscal years a query refers to; empty list means no year was stated.

    Primary path prompts the backend for a comma-separated year list; any
    unparseable output or failure drops to a regex scan of the query text.
    """
    years, _ = _extract_years_with_note(rephrased, provider, prompts or PromptLibrary.load())
    return years


def _extract_years_with_note(
    rephrased: str, provider: Provider, prompts: PromptLibrary
) -> tuple[list[int], str]:
    if not rephrased.strip():
        raise UsageError("query must be non-empty")
    prompt = prompts.render_extract_years(rephrased)
    try:
        out = provider.complete([ChatMessage("user", prompt)], _PLAN_PARAMS).strip()
    except GraspError as exc:
        logger.warning("year extraction failed, using regex fallback: %s", exc)
        return regex_years(rephrased), f"provider failed ({exc}); regex fallback"
    parsed = _parse_year_list(out)
    if parsed is None:
        return regex_years(rephrased), f"provider output unparseable ({out[:60]!r}); regex fallback"
    return parsed, "extracted by provider"


def _parse_year_list(out: str) -> list[int] | None:
    if out.strip().upper() == "NONE":
        return []
    if not _YEAR_LIST_RE.fullmatch(out.strip()):
        return None
    years = sorted({int(y) for y in re.findall(r"\d{4}", out)})
    if any(not 1900 <= y <= 2200 for y in years):
        return None
    return years


def regex_years(text: str) -> list[int]:
    """Deterministic year scan: FY2023, FY24, bare 19xx/20xx, and inclusive
    "between Y1 and Y2" ranges."""
    years: set[int] = set()
    for m in _FY4_RE.finditer(text):
        years.add(int(m.group(1)))
    for m in _FY2_RE.finditer(text):
        years.add(2000 + int(m.group(1)))
    for m in _BARE_YEAR_RE.finditer(text):
        years.add(int(m.group(1)))
    for m in _BETWEEN_RE.finditer(text):
        lo, hi = (_resolve_year(m.group(1)), _resolve_year(m.group(2)))
        if lo is not None and hi is not None and lo < hi and hi - lo <= 100:
            years.update(range(lo, hi + 1))
    return sorted(y for y in years if 1900 <= y <= 2200)


def _resolve_year(token: str) -> int | None:
    if len(token) == 4:
        return int(token)
    if len(token) == 2:
        return 2000 + int(token)
    return None


def expand_years(
    extracted: list[int] | tuple[int, ...],
    available: list[int] | tuple[int, ...],
    *,
    max_expansion_years: int | None = None,
) -> YearFilter:
    """Widen extracted years into the retrieval filter.

    Documents from years after the queried one carry the realized figures
    and historical tables, so the filter takes every available year from the
    earliest queried year upward. ``max_expansion_years`` caps how far past
    the latest queried year the expansion may reach (unlimited by default).
    No queried years at all means an unconstrained search.
    """
    if not available:
        raise UsageError("no fiscal years available; ingest documents first")
    if not extracted:
        return YearFilter.all_years()
    lo = min(extracted)
    years = {y for y in available if y >= lo}
    if max_expansion_years is not None:
        cap = max(extracted) + max_expansion_years
        years = {y for y in years if y <= cap} | (set(extracted) & set(available))
    if not years:
        # Queried years beyond anything ingested: keep them so the search
        # (correctly) matches nothing instead of matching everything.
        return YearFilter.of(extracted)
    return YearFilter.of(years)


def plan(
    current_query: str,
    last_query: str | None,
    provider: Provider,
    available_years: list[int] | tuple[int, ...],
    prompts: PromptLibrary | None = None,
    *,
    max_expansion_years: int | None = None,
) -> QueryPlan:
    """Compose rephrase → extract_years → expand_years into a QueryPlan.

    The rationale is a readable trace of each stage, including whether a
    fallback was used and how the year filter was expanded.
    """
    prompts = prompts or PromptLibrary.load()
    rephrased, rephrase_note = _rephrase_with_note(current_query, last_query, provider, prompts)
    years, extract_note = _extract_years_with_note(rephrased, provider, prompts)
    year_filter = expand_years(years, available_years, max_expansion_years=max_expansion_years)
    rationale_lines = [
        f"original: {current_query}",
        f"rephrased: {rephrased} [{rephrase_note}]",
        f"years: {years or 'none stated'} [{extract_note}]",
    ]
    if year_filter.match_all:
        rationale_lines.append("filter: all years (no year constraint)")
    else:
        rationale_lines.append(
            f"filter: {year_filter.describe()} (expanded to later available years, "
            "which may hold actual figures for the queried year)"
        )
    return QueryPlan(
        original=current_query,
        rephrased=rephrased,
        extracted_years=tuple(years),
        filter=year_filter,
        rationale="\n".join(rationale_lines),
    )
