from __future__ import annotations

import json
from pathlib import Path

import pytest
from click.testing import CliRunner

from grasp.cli import cli
from grasp.index import VectorIndex
from grasp.sampletown import write_sample_town, write_sample_questions

ASK_SCRIPT = [
    {
        "match_contains": ["Rephrase the following query"],
        "response": "What was the actual school department budget in FY2023?",
    },
    {"match_contains": ["List the fiscal years"], "response": "2023"},
    {
        "match_contains": ["[deskton-fy2024 p.3 FY2024]"],
        "response": "FINAL The FY2023 actual school department spending was $59,250,000.",
    },
    {
        "match_contains": ["What is the next step?"],
        "response": 'Looking up school figures.\nACTION budget_tool {"k": 3}',
    },
]


@pytest.fixture()
def town(tmp_path) -> dict:
    manifest = write_sample_town(tmp_path / "town")
    script = tmp_path / "script.json"
    script.write_text(json.dumps(ASK_SCRIPT))
    config = tmp_path / "config.json"
    config.write_text(
        json.dumps(
            {
                "provider": {"kind": "mock", "script_path": str(script)},
                "index_path": str(tmp_path / "index.bin"),
            }
        )
    )
    return {"manifest": manifest, "config": config, "index_path": tmp_path / "index.bin"}


def ingest(runner: CliRunner, town: dict):
    return runner.invoke(
        cli, ["ingest", "--manifest", str(town["manifest"]), "--config", str(town["config"])]
    )


def test_ingest_reports_and_exits_zero(town):
    runner = CliRunner()
    result = ingest(runner, town)
    assert result.exit_code == 0, result.output
    report = json.loads(result.output)
    assert report["documents_ingested"] == 6
    assert report["chunks_created"] == 60
    assert report["failures"] == []
    # report totals match what actually landed in the persisted index
    index = VectorIndex.load(town["index_path"])
    assert len(index) == report["chunks_created"]


def test_ingest_missing_manifest_is_usage_error(town):
    runner = CliRunner()
    result = runner.invoke(
        cli, ["ingest", "--manifest", "no-such-file.json", "--config", str(town["config"])]
    )
    assert result.exit_code == 2


def test_ask_prints_answer_and_sources(town):
    runner = CliRunner()
    assert ingest(runner, town).exit_code == 0
    result = runner.invoke(
        cli,
        [
            "ask",
            "--question",
            "What was the school department budget in FY2023?",
            "--config",
            str(town["config"]),
        ],
    )
    assert result.exit_code == 0, result.output
    assert "$59,250,000" in result.output
    assert "Sources:" in result.output
    assert "#page=3" in result.output


def test_ask_json_matches_service_answer_schema(town):
    runner = CliRunner()
    ingest(runner, town)
    result = runner.invoke(
        cli,
        [
            "ask",
            "--question",
            "What was the school department budget in FY2023?",
            "--json",
            "--config",
            str(town["config"]),
        ],
    )
    assert result.exit_code == 0, result.output
    payload = json.loads(result.output)
    # same answer keys the HTTP service returns, plus the inline trace
    assert set(payload) == {"answer_text", "citations", "chart", "trace"}
    assert payload["citations"][0]["doc_id"] == "deskton-fy2024"
    assert payload["citations"][0]["url"].endswith("#page=3")
    assert payload["trace"]["terminated_by"] == "final_answer"


def test_ask_follow_up_via_last_flag(town):
    runner = CliRunner()
    ingest(runner, town)
    result = runner.invoke(
        cli,
        [
            "ask",
            "--question",
            "What about the two years before?",
            "--last",
            "What was the municipal school budget in FY2025?",
            "--json",
            "--config",
            str(town["config"]),
        ],
    )
    assert result.exit_code == 0, result.output
    payload = json.loads(result.output)
    assert payload["citations"]


def test_ask_without_index_gives_clear_error(town):
    runner = CliRunner()
    result = runner.invoke(
        cli, ["ask", "--question", "anything", "--config", str(town["config"])]
    )
    assert result.exit_code == 2
    assert "index is empty" in result.output


def test_config_from_environment_variable(town, monkeypatch):
    monkeypatch.setenv("GRASP_CONFIG", str(town["config"]))
    runner = CliRunner()
    result = runner.invoke(cli, ["ingest", "--manifest", str(town["manifest"])])
    assert result.exit_code == 0, result.output


def test_eval_writes_report(town, tmp_path):
    runner = CliRunner()
    ingest(runner, town)
    questions = write_sample_questions(tmp_path / "questions.jsonl")
    out = tmp_path / "report.json"
    result = runner.invoke(
        cli,
        [
            "eval",
            "--questions",
            str(questions),
            "--out",
            str(out),
            "--config",
            str(town["config"]),
        ],
    )
    assert result.exit_code == 0, result.output
    report = json.loads(out.read_text())
    assert report["backend"] == "grasp-engine/mock"
    assert len(report["cases"]) == 10
    assert "overall accuracy" in result.output
