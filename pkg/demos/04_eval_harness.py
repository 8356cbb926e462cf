"""Scoring a question set: the evaluation harness on the shipped sample.

Two backends answer the same ten Deskton questions: a perfect one derived
from the fixture's formulas, and a sloppy one that rounds everything to
the nearest ten million. The report breaks accuracy down by question
category and functionality class.

    python3 demos/04_eval_harness.py
"""

from __future__ import annotations

import re
import tempfile
from pathlib import Path

from grasp.evaluation import run_eval
from grasp.evaluation import load_cases
from grasp.sampletown import sample_answer_key, write_sample_questions


class AnswerKeyBackend:
    """Answers every sample question from the fixture formulas."""

    label = "formula-oracle"

    def __init__(self, cases):
        key = sample_answer_key()
        self._by_question = {c.question: key[c.id] for c in cases}

    def start_session(self):
        return None

    def ask(self, session, question):
        return self._by_question[question]


class SloppyBackend(AnswerKeyBackend):
    """Same answers, but every dollar figure rounded to the nearest $10M."""

    label = "sloppy-rounder"

    def ask(self, session, question):
        payload = dict(super().ask(session, question))

        def blur(match: re.Match) -> str:
            value = int(match.group(0).replace("$", "").replace(",", ""))
            return f"${round(value, -7):,}"

        payload["answer_text"] = re.sub(r"\$[\d,]+", blur, payload["answer_text"])
        return payload


def main() -> None:
    workdir = Path(tempfile.mkdtemp(prefix="grasp-demo-"))
    questions = write_sample_questions(workdir / "questions.jsonl")
    cases = load_cases(questions)
    print(f"loaded {len(cases)} cases from {questions}\n")

    for backend_cls in (AnswerKeyBackend, SloppyBackend):
        backend = backend_cls(cases)
        report = run_eval(cases, backend)
        print("=" * 60)
        print(report.format_text())
        print()


if __name__ == "__main__":
    main()
