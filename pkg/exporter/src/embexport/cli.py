"""Command-line entry points: ``export`` and ``serve``.

Exit codes: 0 success, 1 usage problems, 2 invalid input data or models,
3 runtime failures.
"""

from __future__ import annotations

import sys

import click

from .encoders import DEFAULT_MODEL
from .errors import ExportError
from .formats import FORMAT_BINARY, FORMATS
from .jobs import ExportJob, run_export
from .server import serve


@click.group()
@click.version_option(package_name="embexport")
def cli():
    """Export sentence embeddings to EMB1/JSONL files or serve them over HTTP."""


@cli.command()
@click.option("--texts", required=True, type=click.Path(exists=True, dir_okay=False),
              help="JSONL input, one {\"id\", \"text\"} object per line.")
@click.option("--out", required=True, type=click.Path(dir_okay=False),
              help="Output embedding file path.")
@click.option("--model", default=DEFAULT_MODEL, show_default=True,
              help="Encoder: hash:<dim> or a sentence-transformer identifier.")
@click.option("--format", "format_", type=click.Choice(FORMATS), default=FORMAT_BINARY,
              show_default=True, help="Output file format.")
@click.option("--batch-size", default=32, show_default=True, help="Texts encoded per batch.")
@click.option("--normalize/--no-normalize", default=True, show_default=True,
              help="Unit-normalize every vector before writing.")
def export(texts, out, model, format_, batch_size, normalize):
    """Embed every text in a JSONL file and write an embedding file."""
    summary = run_export(
        ExportJob(
            texts_path=texts,
            output_path=out,
            model=model,
            format=format_,
            batch_size=batch_size,
            normalize=normalize,
        )
    )
    click.echo(
        f"exported {summary.count} vectors of dim {summary.dim} "
        f"to {summary.output_path} ({summary.format})"
    )


@cli.command(name="serve")
@click.option("--model", default=DEFAULT_MODEL, show_default=True,
              help="Encoder: hash:<dim> or a sentence-transformer identifier.")
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", default=8756, show_default=True)
def serve_command(model, host, port):
    """Serve the /embed wire protocol for one encoder."""
    click.echo(f"serving {model} on http://{host}:{port}/embed")
    serve(model, host=host, port=port)


def main(argv: list[str] | None = None) -> int:
    """Console entry point with the pinned exit-code mapping."""
    try:
        cli.main(args=argv, standalone_mode=False)
    except click.exceptions.Exit as exc:
        return int(exc.exit_code)
    except click.UsageError as exc:
        exc.show()
        return 1
    except click.ClickException as exc:
        exc.show()
        return 1
    except click.Abort:
        click.echo("aborted", err=True)
        return 1
    except ExportError as exc:
        click.echo(f"data error: {exc}", err=True)
        return 2
    except Exception as exc:  # noqa: BLE001
        click.echo(f"error: {type(exc).__name__}: {exc}", err=True)
        return 3
    return 0


if __name__ == "__main__":
    sys.exit(main())
