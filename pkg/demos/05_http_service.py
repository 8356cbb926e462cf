"""The HTTP surface: sessions, follow-up messages, traces, and events.

Starts the real service on a local port, ingests over HTTP, holds a
two-turn conversation in one session, and tails the trace event stream.

    python3 demos/05_http_service.py
"""

from __future__ import annotations

import json
import tempfile
import threading
import time
from pathlib import Path

import httpx
import uvicorn

from grasp.config import EngineConfig, ProviderConfig
from grasp.corpus import load_manifest
from grasp.engine import Engine
from grasp.provider import MockProvider, ScriptRule
from grasp.sampletown import write_sample_town
from grasp.service import create_app

PORT = 8123
BASE = f"http://127.0.0.1:{PORT}"

FIRST = "What was the municipal school budget in FY2025?"
FOLLOW_UP = "What about the two years before?"


def scripted_provider() -> MockProvider:
    return MockProvider(
        rules=[
            ScriptRule(
                ("Rephrase the following query", FOLLOW_UP),
                "What was the municipal school budget in FY2023 and FY2024?",
            ),
            ScriptRule(("Rephrase the following query", "FY2025"), FIRST),
            ScriptRule(
                ("Observation:",),
                "FINAL The cited pages below carry the school budget figures you asked for.",
            ),
            ScriptRule(("What is the next step?",), 'Retrieving.\nACTION budget_tool {"k": 2}'),
        ]
    )


def main() -> None:
    workdir = Path(tempfile.mkdtemp(prefix="grasp-demo-"))
    manifest_path = write_sample_town(workdir / "town")
    config = EngineConfig(
        provider=ProviderConfig(kind="mock"),
        index_path=str(workdir / "index.bin"),
        port=PORT,
    )
    app = create_app(Engine(config, provider=scripted_provider()), config)
    server = uvicorn.Server(uvicorn.Config(app, host="127.0.0.1", port=PORT, log_level="warning"))
    thread = threading.Thread(target=server.run, daemon=True)
    thread.start()
    while not server.started:
        time.sleep(0.05)

    try:
        with httpx.Client(base_url=BASE, timeout=30.0) as client:
            print("GET /healthz ->", client.get("/healthz").json())

            # ingest over HTTP (pages paths must be absolute for uploads)
            manifest = json.loads(manifest_path.read_text())
            for doc in manifest["documents"]:
                doc["pages_path"] = str(manifest_path.parent / doc["pages_path"])
            report = client.post("/api/ingest", json=manifest).json()
            print("POST /api/ingest ->", {k: report[k] for k in ("documents_ingested", "chunks_created")})

            session_id = client.post("/api/sessions").json()["session_id"]
            print(f"\nsession {session_id[:8]}…")
            for text in (FIRST, FOLLOW_UP):
                print(f"\n>>> {text}")
                body = client.post(f"/api/sessions/{session_id}/messages", json={"text": text}).json()
                print(f"answer: {body['answer_text']}")
                for citation in body["citations"]:
                    print(f"  cites FY{citation['fiscal_year']} p.{citation['page']} {citation['url']}")
                trace_id = body["trace_id"]

            print(f"\nGET /api/traces/{trace_id[:8]}…/events  (server-sent events)")
            with client.stream("GET", f"/api/traces/{trace_id}/events") as stream:
                for line in stream.iter_lines():
                    if line:
                        print(f"  {line[:100]}")

            transcript = client.get(f"/api/sessions/{session_id}").json()
            print(f"\ntranscript holds {len(transcript['messages'])} messages")
    finally:
        server.should_exit = True
        thread.join(timeout=5)


if __name__ == "__main__":
    main()
