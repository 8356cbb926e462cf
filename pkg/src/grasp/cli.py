"""Operator command line: ingest corpora, ask one-shot questions, serve the
HTTP API, and run evaluations.

Exit codes are a stable contract for scripts: 0 success, 1 runtime
failure, 2 usage error. ``--config`` defaults to the GRASP_CONFIG
environment variable; with no config at all the engine runs on the
deterministic mock provider.
"""

from __future__ import annotations

import functools
import json
import logging
import sys
from pathlib import Path

import click

from .config import CONFIG_ENV_VAR, load_config
from .engine import Engine
from .errors import GraspError, UsageError
from .evaluation import EngineBackend, load_cases, run_eval

logger = logging.getLogger(__name__)

_config_option = click.option(
    "--config",
    "config_path",
    type=click.Path(exists=True, dir_okay=False),
    envvar=CONFIG_ENV_VAR,
    default=None,
    help="Engine config file (JSON). Defaults to $GRASP_CONFIG.",
)


def _engine_errors(fn):
    """Translate engine errors into the documented exit codes."""

    @functools.wraps(fn)
    def wrapper(*args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except UsageError as exc:
            click.echo(f"error: {exc}", err=True)
            sys.exit(2)
        except GraspError as exc:
            click.echo(f"error: {exc}", err=True)
            sys.exit(1)

    return wrapper


@click.group()
def cli() -> None:
    """Grounded municipal budget question answering."""


@cli.command("ingest")
@click.option("--manifest", type=click.Path(exists=True, dir_okay=False), required=True)
@_config_option
@_engine_errors
def cmd_ingest(manifest: str, config_path: str | None) -> None:
    """Chunk, embed, and index the documents listed in a manifest."""
    engine = Engine(load_config(config_path))
    report = engine.ingest(manifest)
    click.echo(json.dumps(report.to_dict(), indent=2, sort_keys=True))
    if report.failures:
        sys.exit(1)


@cli.command("ask")
@click.option("--question", required=True)
@click.option("--last", "last_query", default=None, help="Previous user query, for follow-ups.")
@click.option("--json", "as_json", is_flag=True, help="Emit the full answer as JSON.")
@_config_option
@_engine_errors
def cmd_ask(question: str, last_query: str | None, as_json: bool, config_path: str | None) -> None:
    """Ask one question against the loaded index and print the answer."""
    engine = Engine(load_config(config_path))
    answer = engine.ask(question, last_query=last_query)
    if as_json:
        payload = answer.to_dict()
        payload["trace"] = answer.trace.to_dict()
        click.echo(json.dumps(payload, indent=2, sort_keys=True))
        return
    click.echo(answer.text)
    if answer.citations:
        click.echo("\nSources:")
        for c in answer.citations:
            click.echo(f"  {c.title}, p.{c.page} (FY{c.fiscal_year}) {c.url}")


@cli.command("serve")
@_config_option
@_engine_errors
def cmd_serve(config_path: str | None) -> None:
    """Run the HTTP chat service until interrupted."""
    import uvicorn

    from .service import create_app

    config = load_config(config_path)
    app = create_app(Engine(config), config)
    uvicorn.run(app, host=config.host, port=config.port)


@cli.command("eval")
@click.option("--questions", type=click.Path(exists=True, dir_okay=False), required=True)
@click.option("--out", "out_path", type=click.Path(dir_okay=False), required=True)
@_config_option
@_engine_errors
def cmd_eval(questions: str, out_path: str, config_path: str | None) -> None:
    """Score a JSONL question set against the engine and write a report."""
    engine = Engine(load_config(config_path))
    cases = load_cases(questions)
    report = run_eval(cases, EngineBackend(engine))
    Path(out_path).write_text(
        json.dumps(report.to_dict(), indent=2, sort_keys=True), encoding="utf-8"
    )
    click.echo(report.format_text())
    click.echo(f"\nreport written to {out_path}")


def main() -> None:
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    cli()


if __name__ == "__main__":
    main()
