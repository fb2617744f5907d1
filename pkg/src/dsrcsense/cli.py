"""Command-line client for the pipeline service.

Commands call the HTTP API: in process by default, or against a running
server with ``--server``. Flags mirror the experiment configuration; a
``--config`` JSON file overrides flags field by field, and ``--set
dotted.path=value`` reaches any remaining field.

Exit codes: 0 success, 1 configuration error, 2 data error (including a
partial ingest), 3 internal error.
"""

from __future__ import annotations

import asyncio
import json
import sys
from typing import Any

import click
import httpx

from .service import app as service_app


def _deep_merge(base: dict, override: dict) -> dict:
    out = dict(base)
    for key, value in override.items():
        if isinstance(value, dict) and isinstance(out.get(key), dict):
            out[key] = _deep_merge(out[key], value)
        else:
            out[key] = value
    return out


def _set_dotted(doc: dict, dotted: str, value: Any) -> None:
    parts = dotted.split(".")
    cursor = doc
    for part in parts[:-1]:
        cursor = cursor.setdefault(part, {})
        if not isinstance(cursor, dict):
            raise click.UsageError(f"--set path {dotted!r} crosses a scalar")
    cursor[parts[-1]] = value


def _parse_set(entries: tuple[str, ...]) -> dict:
    doc: dict = {}
    for entry in entries:
        key, sep, raw = entry.partition("=")
        if not sep:
            raise click.UsageError(f"--set needs key=value, got {entry!r}")
        try:
            value = json.loads(raw)
        except json.JSONDecodeError:
            value = raw  # bare strings are taken literally
        _set_dotted(doc, key.strip(), value)
    return doc


def _config_document(flags: dict[str, Any], set_entries: tuple[str, ...],
                     config_file: str | None) -> dict:
    doc: dict = {}
    for dotted, value in flags.items():
        if value is not None:
            _set_dotted(doc, dotted, value)
    doc = _deep_merge(doc, _parse_set(set_entries))
    if config_file:
        try:
            with open(config_file, "r", encoding="utf-8") as fh:
                file_doc = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            click.echo(f"error (config): cannot read {config_file}: {exc}", err=True)
            sys.exit(1)
        if not isinstance(file_doc, dict):
            click.echo(f"error (config): {config_file} must hold a JSON object",
                       err=True)
            sys.exit(1)
        doc = _deep_merge(doc, file_doc)  # the file wins over flags
    return doc


def _fail(resp: httpx.Response) -> None:
    kind = "internal"
    message = resp.text
    try:
        detail = resp.json().get("detail")
    except Exception:
        detail = None
    if isinstance(detail, dict):
        kind = detail.get("kind", "internal")
        message = detail.get("message", "")
    elif isinstance(detail, list):  # request-body validation from the service
        kind = "config"
        message = "; ".join(
            f"{'.'.join(str(p) for p in item.get('loc', []))}: {item.get('msg', item)}"
            for item in detail[:5]
        )
    code = {"config": 1, "data": 2}.get(kind, 3)
    click.echo(f"error ({kind}): {message}", err=True)
    sys.exit(code)


def _request(server: str | None, method: str, path: str, payload: dict | None) -> dict:
    async def go() -> httpx.Response:
        if server:
            async with httpx.AsyncClient(base_url=server, timeout=None) as client:
                return await client.request(method, path, json=payload)
        transport = httpx.ASGITransport(app=service_app)
        async with httpx.AsyncClient(transport=transport, timeout=None,
                                     base_url="http://dsrcsense.local") as client:
            return await client.request(method, path, json=payload)

    try:
        resp = asyncio.run(go())
    except Exception as exc:  # connection failures, unhandled app errors
        click.echo(f"error (internal): {exc}", err=True)
        sys.exit(3)
    if resp.status_code >= 400:
        _fail(resp)
    return resp.json()


def _echo_results(results: list[dict]) -> None:
    for task, title in (("classify", "intensity classification"),
                        ("regress", "count regression")):
        rows = [r for r in results if r["task"] == task]
        if not rows:
            continue
        click.echo(f"\n{title} (cross-validated means)")
        for r in rows:
            means = r["means"]
            parts = [
                f"{name}={'NA' if means[name] is None else f'{means[name]:.4f}'}"
                for name in means
            ]
            click.echo(f"  {r['algorithm']:<18} " + "  ".join(parts))


@click.group()
@click.option("--server", default=None, metavar="URL",
              help="Base URL of a running service; defaults to in-process.")
@click.pass_context
def main(ctx: click.Context, server: str | None) -> None:
    """Traffic monitoring from roadside channel estimates."""
    ctx.ensure_object(dict)
    ctx.obj["server"] = server


_COMMON_EVAL_OPTIONS = [
    click.option("--config", "config_file", type=click.Path(), default=None,
                 help="JSON experiment config; overrides flags."),
    click.option("--out", "out_dir", default=None, help="Output directory."),
    click.option("--gamma", default=None,
                 help='Intensity threshold: a number or "median".'),
    click.option("--receivers", type=int, default=None),
    click.option("--folds", type=int, default=None, help="Cross-validation folds."),
    click.option("--seed", type=int, default=None),
    click.option("--workers", type=int, default=None),
    click.option("--set", "set_entries", multiple=True, metavar="KEY=VALUE",
                 help="Override any config field by dotted path."),
]


def _apply(options: list) -> Any:
    def wrap(fn: Any) -> Any:
        for opt in reversed(options):
            fn = opt(fn)
        return fn
    return wrap


def _parse_gamma(gamma: str | None) -> float | str | None:
    if gamma is None:
        return None
    if gamma == "median":
        return gamma
    try:
        return float(gamma)
    except ValueError:
        click.echo(f'error (config): gamma must be a number or "median", '
                   f"got {gamma!r}", err=True)
        sys.exit(1)


@main.command()
@click.option("--seed", type=int, required=True, help="Master seed (required).")
@click.option("--config", "config_file", type=click.Path(), default=None,
              help="JSON experiment config; overrides flags.")
@click.option("--out", "out_dir", default=None, help="Output directory.")
@click.option("--size", type=int, default=None, help="Snapshot count.")
@click.option("--episode-length", type=int, default=None)
@click.option("--density-range", type=float, nargs=2, default=None,
              help="Per-episode density draw bounds (per lane per 100 m).")
@click.option("--receivers", type=int, default=None)
@click.option("--snr-db", type=float, default=None)
@click.option("--sigma-sq", type=float, default=None)
@click.option("--workers", type=int, default=None)
@click.option("--write-scenes", is_flag=True, default=False,
              help="Also dump per-vehicle scene rows.")
@click.option("--set", "set_entries", multiple=True, metavar="KEY=VALUE")
@click.pass_context
def synthesize(ctx: click.Context, seed: int, config_file: str | None,
               out_dir: str | None, size: int | None, episode_length: int | None,
               density_range: tuple[float, float] | None, receivers: int | None,
               snr_db: float | None, sigma_sq: float | None, workers: int | None,
               write_scenes: bool, set_entries: tuple[str, ...]) -> None:
    """Generate a channel-magnitude dataset from simulated traffic."""
    flags: dict[str, Any] = {
        "seed": seed,
        "dataset_size": size,
        "episode_length": episode_length,
        "receivers": receivers,
        "workers": workers,
    }
    if density_range:
        flags["density_range"] = list(density_range)
    if sigma_sq is not None:
        flags["noise.sigma_sq"] = sigma_sq
        flags["noise.snr_db"] = None
    elif snr_db is not None:
        flags["noise.snr_db"] = snr_db
    doc = _config_document(flags, set_entries, config_file)
    payload = {"config": doc, "out_dir": out_dir, "write_scenes": write_scenes}
    body = _request(ctx.obj["server"], "POST", "/synthesize", payload)
    click.echo(f"wrote {body['rows']} rows ({body['snapshots']} snapshots) "
               f"to {body['dataset_path']}")
    click.echo(f"counts {body['count_min']}..{body['count_max']}, "
               f"{body['zero_count_snapshots']} zero-count snapshots, "
               f"noise variance {body['sigma_sq']:.6g}")


@main.command()
@click.argument("path", type=click.Path())
@click.option("--receivers", type=int, default=1)
@click.option("--gamma", default="median")
@click.pass_context
def ingest(ctx: click.Context, path: str, receivers: int, gamma: str) -> None:
    """Validate and summarize an externally recorded dataset file."""
    payload = {"path": path, "receivers": receivers, "gamma": _parse_gamma(gamma)}
    body = _request(ctx.obj["server"], "POST", "/ingest", payload)
    click.echo(f"{body['snapshots']} snapshots, {body['feature_width']} features, "
               f"gamma={body['gamma']}, +{body['positives']}/-{body['negatives']}, "
               f"counts {body['count_min']}..{body['count_max']}")
    if body["rejected"]:
        click.echo(f"rejected {len(body['rejected'])} rows:", err=True)
        for row in body["rejected"][:20]:
            click.echo(f"  line {row['line']}: {row['reason']}", err=True)
        sys.exit(2)


def _eval_payload(flags_gamma: str | None, config_file: str | None,
                  out_dir: str | None, receivers: int | None, folds: int | None,
                  seed: int | None, workers: int | None,
                  set_entries: tuple[str, ...], dataset: str | None) -> dict:
    flags: dict[str, Any] = {
        "gamma": _parse_gamma(flags_gamma),
        "receivers": receivers,
        "cv_folds": folds,
        "seed": seed,
        "workers": workers,
    }
    doc = _config_document(flags, set_entries, config_file)
    return {"config": doc, "dataset_path": dataset, "out_dir": out_dir}


@main.command()
@click.option("--dataset", type=click.Path(), default=None,
              help="Dataset CSV (default: <out>/dataset.csv).")
@_apply(_COMMON_EVAL_OPTIONS)
@click.pass_context
def evaluate(ctx: click.Context, dataset: str | None, config_file: str | None,
             out_dir: str | None, gamma: str | None, receivers: int | None,
             folds: int | None, seed: int | None, workers: int | None,
             set_entries: tuple[str, ...]) -> None:
    """Cross-validate the configured models on a dataset."""
    payload = _eval_payload(gamma, config_file, out_dir, receivers, folds, seed,
                            workers, set_entries, dataset)
    body = _request(ctx.obj["server"], "POST", "/evaluate", payload)
    click.echo(f"evaluated {body['snapshots']} snapshots at gamma={body['gamma']}")
    _echo_results(body["results"])
    click.echo("\noutputs:")
    for path in body["output_files"]:
        click.echo(f"  {path}")


@main.command()
@click.option("--dataset", type=click.Path(), default=None,
              help="Dataset CSV (default: <out>/dataset.csv).")
@_apply(_COMMON_EVAL_OPTIONS)
@click.pass_context
def ablate(ctx: click.Context, dataset: str | None, config_file: str | None,
           out_dir: str | None, gamma: str | None, receivers: int | None,
           folds: int | None, seed: int | None, workers: int | None,
           set_entries: tuple[str, ...]) -> None:
    """Evaluate under each preprocessing variant (stage knockouts)."""
    payload = _eval_payload(gamma, config_file, out_dir, receivers, folds, seed,
                            workers, set_entries, dataset)
    body = _request(ctx.obj["server"], "POST", "/ablate", payload)
    for variant in body["variants"]:
        click.echo(f"\n=== variant: {variant['variant']} ===")
        _echo_results(variant["results"])
    click.echo("\noutputs:")
    for path in body["output_files"]:
        click.echo(f"  {path}")


@main.command()
@click.argument("out_dir", type=click.Path())
@click.pass_context
def report(ctx: click.Context, out_dir: str) -> None:
    """Render a text report from a finished run directory."""
    body = _request(ctx.obj["server"], "POST", "/report", {"out_dir": out_dir})
    click.echo(body["text"], nl=False)


@main.command()
@click.option("--host", default="127.0.0.1")
@click.option("--port", type=int, default=8000)
def serve(host: str, port: int) -> None:
    """Run the HTTP service."""
    import uvicorn

    uvicorn.run(service_app, host=host, port=port)


if __name__ == "__main__":
    main()
