"""Deskton: a small synthetic town used by the test suite and the demos.

Six fiscal years (FY2020-FY2025), ten pages per budget document, and every
figure derived from simple formulas so tests can compute expected values
independently. Each FY document prints the *projected* figures for its own
year and the *actual* (realized) figures for the prior year, which is how
real budget documents behave and what the year-expansion logic exploits.

Run ``python -m grasp.sampletown <dest>`` to write the bundles, manifest,
and sample evaluation questions to a directory.
"""

from __future__ import annotations

import json
import sys
from pathlib import Path

YEARS = tuple(range(2020, 2026))

_SECTORS = ("education", "police", "fire", "public works")


def money(amount: int) -> str:
    return f"${amount:,}"


def school_projected(year: int) -> int:
    return 50_000_000 + (year - 2020) * 2_500_000


def school_actual(year: int) -> int:
    return school_projected(year) + 1_750_000


def police_projected(year: int) -> int:
    return 12_000_000 + (year - 2020) * 600_000


def police_actual(year: int) -> int:
    return police_projected(year) + 350_000


def fire_projected(year: int) -> int:
    return 9_000_000 + (year - 2020) * 450_000


def fire_actual(year: int) -> int:
    return fire_projected(year) + 210_000


def works_projected(year: int) -> int:
    return 7_200_000 + (year - 2020) * 300_000


def works_actual(year: int) -> int:
    return works_projected(year) + 125_000


def total_projected(year: int) -> int:
    return 98_000_000 + (year - 2020) * 4_000_000


def total_actual(year: int) -> int:
    return total_projected(year) + 2_400_000


def property_tax(year: int) -> int:
    return 61_000_000 + (year - 2020) * 2_200_000


def property_tax_actual(year: int) -> int:
    return property_tax(year) + 900_000


def state_aid(year: int) -> int:
    return 14_500_000 + (year - 2020) * 500_000


def debt_outstanding(year: int) -> int:
    return 45_000_000 - (year - 2020) * 1_500_000


def debt_service(year: int) -> int:
    return 3_800_000 + (year - 2020) * 120_000


def deficit(year: int) -> int:
    return 1_200_000 - (year - 2020) * 150_000


def capital_plan(year: int) -> int:
    return 18_000_000 + (year - 2020) * 900_000


def enrollment(year: int) -> int:
    return 6_800 + (year - 2020) * 40


def student_teacher_ratio(year: int) -> str:
    return f"12.{(year - 2020) % 10}"


def doc_id_for(year: int) -> str:
    return f"deskton-fy{year}"


def source_url_for(year: int) -> str:
    return f"https://deskton.example.gov/budget/fy{year}.pdf"


def _sector_allocation(year: int) -> dict[str, int]:
    return {
        "education": school_projected(year),
        "police": police_projected(year),
        "fire": fire_projected(year),
        "public works": works_projected(year),
    }


def document_pages(year: int) -> list[str]:
    """The ten pages of one fiscal year's budget document."""
    prior = year - 1
    alloc = _sector_allocation(year)
    sector_line = ", ".join(f"{name} {money(amount)}" for name, amount in alloc.items())
    pages = [
        # 1: overview
        (
            "Town of Deskton Budget Overview\n\n"
            f"The FY{year} total annual operating budget is projected at "
            f"{money(total_projected(year))}.\n"
            f"FY{prior} actual total operating spending came to "
            f"{money(total_actual(prior))} after final accounting.\n\n"
            f"The FY{year} plan allocates funds by sector: {sector_line}."
        ),
        # 2: revenue
        (
            "Revenue Summary\n\n"
            f"FY{year} projected revenue relies on a property tax levy of "
            f"{money(property_tax(year))} and state aid of {money(state_aid(year))}.\n"
            f"FY{prior} actual property tax receipts were "
            f"{money(property_tax_actual(prior))}."
        ),
        # 3: school department
        (
            "School Department\n\n"
            f"The FY{year} projected school department budget is "
            f"{money(school_projected(year))}.\n"
            "The school operating plan funds classroom staffing, transportation, "
            "and special education services.\n\n"
            f"Final accounting for the prior year is complete: FY{prior} actual "
            f"school department spending was {money(school_actual(prior))}.\n"
            f"FY{prior} actual spending is the realized figure and supersedes the "
            f"FY{prior} projection of {money(school_projected(prior))}."
        ),
        # 4: police
        (
            "Police Department\n\n"
            f"The FY{year} projected police department budget is "
            f"{money(police_projected(year))}, staffing {52 + (year - 2020)} sworn "
            "officers.\n"
            f"FY{prior} actual police department spending was "
            f"{money(police_actual(prior))}."
        ),
        # 5: fire
        (
            "Fire Department\n\n"
            f"The FY{year} projected fire department budget is "
            f"{money(fire_projected(year))}, staffing {48 + (year - 2020)} "
            "firefighters across three stations.\n"
            f"FY{prior} actual fire department spending was "
            f"{money(fire_actual(prior))}."
        ),
        # 6: public works
        (
            "Public Works\n\n"
            f"The FY{year} projected public works budget is "
            f"{money(works_projected(year))}, covering roads, snow removal, and "
            "water systems.\n"
            f"FY{prior} actual public works spending was "
            f"{money(works_actual(prior))}."
        ),
        # 7: debt and deficits
        (
            "Debt Service and Deficits\n\n"
            f"Outstanding general obligation debt at the start of FY{year} is "
            f"{money(debt_outstanding(year))}.\n"
            f"FY{year} debt service payments are projected at "
            f"{money(debt_service(year))}.\n"
            f"The FY{prior} operating deficit was {money(deficit(prior))} after "
            "final accounting."
        ),
        # 8: capital projects
        (
            "Capital Projects\n\n"
            f"The FY{year} capital plan appropriates {money(capital_plan(year))} "
            "for roads, water infrastructure, and building maintenance.\n"
            f"The largest FY{year} project is the town hall renovation at "
            f"{money(2_500_000 + (year - 2020) * 100_000)}."
        ),
        # 9: impact and outcomes
        (
            "Impact and Outcomes\n\n"
            f"District enrollment is {enrollment(year)} students with a "
            f"student-teacher ratio of {student_teacher_ratio(year)} to 1.\n"
            f"Average emergency response time is 6.{(year - 2020) % 10} minutes.\n"
            f"The graduation rate reached {92 + (year - 2020) % 4} percent last year."
        ),
        # 10: historical totals
        (
            "Historical Comparison of Total Operating Spending\n\n"
            f"FY{year - 2} total operating actual: {money(total_actual(year - 2))}\n"
            f"FY{year - 1} total operating actual: {money(total_actual(year - 1))}\n"
            f"FY{year} total operating projected: {money(total_projected(year))}"
        ),
    ]
    return pages


def write_sample_town(dest: str | Path, years: tuple[int, ...] = YEARS) -> Path:
    """Write the bundles and manifest; returns the manifest path."""
    dest = Path(dest)
    dest.mkdir(parents=True, exist_ok=True)
    documents = []
    for year in years:
        bundle_path = dest / f"fy{year}.txt"
        bundle_path.write_text("\x0c".join(document_pages(year)), encoding="utf-8")
        documents.append(
            {
                "doc_id": doc_id_for(year),
                "title": f"Town of Deskton FY{year} Operating Budget",
                "fiscal_year": year,
                "source_url": source_url_for(year),
                "pages_path": bundle_path.name,
            }
        )
    manifest_path = dest / "manifest.json"
    manifest_path.write_text(
        json.dumps({"documents": documents}, indent=2), encoding="utf-8"
    )
    return manifest_path


def sample_cases() -> list[dict]:
    """Evaluation question set over the fixture town, one dict per case."""
    growth = total_projected(2025) - total_projected(2020)
    school_growth = school_actual(2022) - school_actual(2020)
    debt_share = debt_service(2024) / total_projected(2024) * 100
    return [
        {
            "id": "total-budget-fy2025",
            "question": "What is the projected total operating budget for FY2025?",
            "category": "general_budget",
            "functionality": "table_retrieval",
            "matchers": [{"kind": "number_within_tolerance", "value": total_projected(2025)}],
            "expected_citation": {"doc_id": doc_id_for(2025), "page": 1},
        },
        {
            "id": "tax-levy-fy2024",
            "question": "What property tax levy was projected for FY2024?",
            "category": "revenues_expenditures",
            "functionality": "table_retrieval",
            "matchers": [{"kind": "number_within_tolerance", "value": property_tax(2024)}],
            "expected_citation": {"doc_id": doc_id_for(2024), "page": 2},
        },
        {
            "id": "budget-growth",
            "question": "By how many dollars did the projected total operating budget grow from FY2020 to FY2025?",
            "category": "general_budget",
            "functionality": "calculation",
            "matchers": [{"kind": "number_within_tolerance", "value": growth}],
        },
        {
            "id": "deficit-fy2023",
            "question": "What was the actual operating deficit for FY2023?",
            "category": "debt_deficits",
            "functionality": "table_retrieval",
            "matchers": [{"kind": "number_within_tolerance", "value": deficit(2023)}],
            "expected_citation": {"doc_id": doc_id_for(2024), "page": 7},
        },
        {
            "id": "student-teacher-ratio",
            "question": "What is the student-teacher ratio in the FY2025 plan?",
            "category": "impact_outcome",
            "functionality": "context",
            "matchers": [
                {"kind": "contains_all", "strings": ["to 1"]},
                {"kind": "number_within_tolerance", "value": float(student_teacher_ratio(2025))},
            ],
        },
        {
            "id": "school-spending-change",
            "question": "How much did actual school department spending grow between FY2020 and FY2022?",
            "category": "general_budget",
            "functionality": "comparison_over_time",
            "matchers": [{"kind": "number_within_tolerance", "value": school_growth}],
        },
        {
            "id": "revenue-sources-fy2023",
            "question": "Which revenue sources fund the FY2023 budget?",
            "category": "revenues_expenditures",
            "functionality": "context",
            "matchers": [{"kind": "contains_all", "strings": ["property tax", "state aid"]}],
        },
        {
            "id": "debt-share-fy2024",
            "question": "What percentage of the FY2024 projected total operating budget goes to debt service?",
            "category": "debt_deficits",
            "functionality": "calculation",
            "matchers": [
                {"kind": "number_within_tolerance", "value": round(debt_share, 2), "rel_tol": 0.01}
            ],
        },
        {
            "id": "school-budget-fy2025",
            "question": "What was the projected school department budget in FY2025?",
            "category": "general_budget",
            "functionality": "sequential",
            "matchers": [{"kind": "number_within_tolerance", "value": school_projected(2025)}],
            "expected_citation": {"doc_id": doc_id_for(2025), "page": 3},
        },
        {
            "id": "school-budget-two-before",
            "question": "What about the two years before?",
            "follow_up_of": "school-budget-fy2025",
            "category": "general_budget",
            "functionality": "sequential",
            "matchers": [
                {"kind": "number_within_tolerance", "value": school_projected(2023)},
                {"kind": "number_within_tolerance", "value": school_projected(2024)},
            ],
        },
    ]


def sample_answer_key() -> dict[str, dict]:
    """Reference answers for the sample cases, derived from the formulas.

    Used by demos and tests as a perfect backend: it validates that every
    shipped case is satisfiable.
    """
    growth = total_projected(2025) - total_projected(2020)
    school_growth = school_actual(2022) - school_actual(2020)
    debt_share = debt_service(2024) / total_projected(2024) * 100
    return {
        "total-budget-fy2025": {
            "answer_text": f"The FY2025 projected total operating budget is {money(total_projected(2025))}.",
            "citations": [{"doc_id": doc_id_for(2025), "page": 1}],
        },
        "tax-levy-fy2024": {
            "answer_text": f"The FY2024 projected property tax levy is {money(property_tax(2024))}.",
            "citations": [{"doc_id": doc_id_for(2024), "page": 2}],
        },
        "budget-growth": {
            "answer_text": f"The projected total operating budget grew by {money(growth)} from FY2020 to FY2025.",
            "citations": [],
        },
        "deficit-fy2023": {
            "answer_text": f"The FY2023 actual operating deficit was {money(deficit(2023))}.",
            "citations": [{"doc_id": doc_id_for(2024), "page": 7}],
        },
        "student-teacher-ratio": {
            "answer_text": f"The student-teacher ratio is {student_teacher_ratio(2025)} to 1.",
            "citations": [],
        },
        "school-spending-change": {
            "answer_text": (
                f"Actual school department spending grew by {money(school_growth)} "
                "between FY2020 and FY2022."
            ),
            "citations": [],
        },
        "revenue-sources-fy2023": {
            "answer_text": "The FY2023 budget is funded by the property tax levy and state aid.",
            "citations": [],
        },
        "debt-share-fy2024": {
            "answer_text": f"Debt service is about {debt_share:.2f} percent of the FY2024 projected budget.",
            "citations": [],
        },
        "school-budget-fy2025": {
            "answer_text": f"The FY2025 projected school department budget is {money(school_projected(2025))}.",
            "citations": [{"doc_id": doc_id_for(2025), "page": 3}],
        },
        "school-budget-two-before": {
            "answer_text": (
                f"The projected school department budgets were "
                f"{money(school_projected(2023))} in FY2023 and "
                f"{money(school_projected(2024))} in FY2024."
            ),
            "citations": [],
        },
    }


def write_sample_questions(path: str | Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as fh:
        for case in sample_cases():
            fh.write(json.dumps(case) + "\n")
    return path


def main(argv: list[str] | None = None) -> int:
    args = sys.argv[1:] if argv is None else argv
    dest = Path(args[0]) if args else Path("data/deskton")
    manifest = write_sample_town(dest)
    questions = write_sample_questions(dest / "questions.jsonl")
    print(f"wrote {manifest}")
    print(f"wrote {questions}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
