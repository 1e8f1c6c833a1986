"""Operator CLI. State lives in the event log under the data directory;
every invocation replays it against a fresh infrastructure map, so the
commands compose across processes.

Exit codes: 0 success, 1 domain rejection, 2 usage or parse error.
"""

from __future__ import annotations

import csv
import json
import shutil
import sys
from pathlib import Path

import click

from .api import create_app, load_tenants
from .catalog import load_catalog
from .config import ProviderConfig, load_config
from .errors import ParseError, SlicekitError
from .events import EventLog
from .infra import load_infrastructure
from .lifecycle import ScalingEvent, ScalingKind, format_scaling_events
from .placement import format_utilization
from .service import Orchestrator


def _fail(message: str, code: int):
    click.echo(f"error: {message}", err=True)
    sys.exit(code)


def _config(ctx) -> ProviderConfig:
    try:
        return load_config(ctx.obj["config_path"])
    except (ParseError, OSError) as exc:
        _fail(str(exc), 2)


def _infra_path(config: ProviderConfig) -> Path:
    staged = config.data_dir / "infra.yaml"
    if staged.exists():
        return staged
    if config.infra_file is None:
        _fail("no infrastructure file: run `infra load` or set infra_file in the config", 2)
    return config.infra_file


def _orchestrator(ctx) -> Orchestrator:
    config = _config(ctx)
    try:
        if config.catalog_dir is None:
            _fail("config has no catalog_dir", 2)
        cat = load_catalog(config.catalog_dir)
        infra = load_infrastructure(_infra_path(config), config.extra_capabilities)
        tenants = None
        if config.tenants_file is not None:
            tenants = set(load_tenants(config.tenants_file).values())
        config.data_dir.mkdir(parents=True, exist_ok=True)
        log = EventLog(config.data_dir / "events.jsonl")
        return Orchestrator.replay(cat, infra, config, log, tenants=tenants)
    except ParseError as exc:
        _fail(str(exc), 2)
    except SlicekitError as exc:
        _fail(str(exc), 1)


@click.group()
@click.option(
    "--config",
    "config_path",
    type=click.Path(path_type=Path),
    default=Path("config.yaml"),
    envvar="SLICEKIT_CONFIG",
    show_default=True,
    help="Provider configuration file.",
)
@click.pass_context
def main(ctx, config_path: Path):
    """Network-slice creation pipeline: order, admit, reserve, run."""
    ctx.ensure_object(dict)
    ctx.obj["config_path"] = config_path if config_path.exists() else None


# --- catalog -----------------------------------------------------------------


@main.group()
def catalog():
    """Service catalog commands."""


@catalog.command("lint")
@click.pass_context
def catalog_lint(ctx):
    """Parse and cross-validate the catalog; exit 2 on any defect."""
    config = _config(ctx)
    if config.catalog_dir is None:
        _fail("config has no catalog_dir", 2)
    try:
        cat = load_catalog(config.catalog_dir)
    except SlicekitError as exc:
        _fail(str(exc), 2)
    click.echo(
        f"ok: {len(cat.vnfs)} vnfs, {len(cat.nsds)} network services, "
        f"{len(cat.templates)} templates"
    )


# --- orders ------------------------------------------------------------------


@main.group()
def order():
    """Service order commands."""


def _parse_overrides(pairs: tuple[str, ...]) -> dict:
    import yaml

    overrides = {}
    for pair in pairs:
        if "=" not in pair:
            _fail(f"--set needs path=value, got {pair!r}", 2)
        path, raw = pair.split("=", 1)
        overrides[path] = yaml.safe_load(raw)
    return overrides


@order.command("submit")
@click.option("--tenant", required=True)
@click.option("--template", "template_id", required=True)
@click.option("--set", "overrides", multiple=True, help="Override as dotted.path=value.")
@click.option("--parent", "parent_order_id", default=None, help="Order this one re-negotiates.")
@click.pass_context
def order_submit(ctx, tenant, template_id, overrides, parent_order_id):
    orch = _orchestrator(ctx)
    try:
        placed = orch.submit(tenant, template_id, _parse_overrides(overrides), parent_order_id)
    except SlicekitError as exc:
        _fail(str(exc), 1)
    click.echo(f"{placed.id} {placed.status.value}")


@order.command("process")
@click.argument("order_id")
@click.pass_context
def order_process(ctx, order_id):
    """Run design, admission and reservation for one order."""
    orch = _orchestrator(ctx)
    try:
        outcome = orch.process(order_id)
    except SlicekitError as exc:
        _fail(str(exc), 1)
    if outcome["status"] == "RESERVED":
        click.echo(f"{order_id} RESERVED")
        for key, pop in sorted(outcome["solution"]["assignment"].items()):
            click.echo(f"  {key} -> {pop}")
        sys.exit(0)
    cause = outcome.get("cause", "")
    detail = outcome.get("detail", "")
    click.echo(f"{order_id} {outcome['status']} cause={cause}" + (f" ({detail})" if detail else ""))
    sys.exit(1)


@order.command("status")
@click.argument("order_id")
@click.pass_context
def order_status(ctx, order_id):
    orch = _orchestrator(ctx)
    try:
        placed = orch.get_order(order_id)
    except SlicekitError as exc:
        _fail(str(exc), 1)
    line = f"{placed.id} {placed.status.value}"
    if placed.rejection_cause:
        line += f" cause={placed.rejection_cause}"
    click.echo(line)


# --- slices -------------------------------------------------------------------


@main.group(name="slice")
def slice_group():
    """Commissioned slice commands."""


@slice_group.command("activate")
@click.argument("order_id")
@click.option("--at-minute", type=int, default=None, help="Clock minute; defaults to now.")
@click.pass_context
def slice_activate(ctx, order_id, at_minute):
    orch = _orchestrator(ctx)
    try:
        outcome = orch.activate_slice(order_id, at_minute=at_minute)
    except SlicekitError as exc:
        _fail(str(exc), 1)
    click.echo(f"{order_id} {outcome['status']} il={outcome['current_il']}")


def _read_trace(path: Path) -> tuple[list[float], int | None]:
    loads: list[tuple[int, float]] = []
    with open(path, newline="") as handle:
        for row in csv.reader(handle):
            if not row or row[0].strip().startswith("#") or row[0].strip() == "hour":
                continue
            loads.append((int(row[0]), float(row[1])))
    if not loads:
        raise ParseError(f"{path}: empty trace")
    return [load for _, load in loads], loads[0][0]


@slice_group.command("simulate")
@click.argument("order_id")
@click.option("--trace", "trace_path", type=click.Path(exists=True, path_type=Path), required=True)
@click.option("--start-hour", type=int, default=None, help="Defaults to the trace's first hour.")
@click.pass_context
def slice_simulate(ctx, order_id, trace_path, start_hour):
    """Drive the slice through an hour,load CSV and print the scaling events."""
    orch = _orchestrator(ctx)
    try:
        loads, first_hour = _read_trace(trace_path)
    except (ParseError, ValueError) as exc:
        _fail(str(exc), 2)
    try:
        rows = orch.simulate(order_id, loads, start_hour=first_hour if start_hour is None else start_hour)
    except SlicekitError as exc:
        _fail(str(exc), 1)
    events = [
        ScalingEvent(
            hour=r["hour"],
            from_il=r["from_il"],
            to_il=r["to_il"],
            load=r["load"],
            kind=ScalingKind(r["kind"]),
        )
        for r in rows
    ]
    click.echo(format_scaling_events(events))


@slice_group.command("terminate")
@click.argument("order_id")
@click.pass_context
def slice_terminate(ctx, order_id):
    orch = _orchestrator(ctx)
    try:
        outcome = orch.terminate_slice(order_id)
    except SlicekitError as exc:
        _fail(str(exc), 1)
    click.echo(f"{order_id} {outcome['status']}")


# --- infrastructure -----------------------------------------------------------


@main.group()
def infra():
    """Infrastructure map commands."""


@infra.command("load")
@click.argument("source", type=click.Path(exists=True, path_type=Path))
@click.pass_context
def infra_load(ctx, source):
    """Validate an infrastructure file and stage it for the pipeline."""
    config = _config(ctx)
    try:
        loaded = load_infrastructure(source, config.extra_capabilities)
    except SlicekitError as exc:
        _fail(str(exc), 2)
    config.data_dir.mkdir(parents=True, exist_ok=True)
    shutil.copyfile(source, config.data_dir / "infra.yaml")
    click.echo(f"ok: {len(loaded.pops)} pops, {len(loaded.wan_links)} wan links")


@infra.command("show")
@click.pass_context
def infra_show(ctx):
    orch = _orchestrator(ctx)
    for pop in orch.infra.pops:
        caps = ",".join(sorted(pop.capabilities)) or "-"
        click.echo(
            f"pop {pop.id} region={pop.region} vcpu={pop.capacity.vcpu} "
            f"mem={pop.capacity.mem_gb} storage={pop.capacity.storage_gb} caps={caps}"
        )
    for link in orch.infra.wan_links:
        click.echo(
            f"wan {link.id} {link.endpoint_a}<->{link.endpoint_b} "
            f"capacity={link.capacity_mbps} class={link.reliability_class}"
        )
    click.echo(format_utilization(orch.infra, beta=orch.config.beta))


@main.group()
def reservations():
    """Reservation ledger commands."""


@reservations.command("export")
@click.option("--format", "fmt", type=click.Choice(["json", "table"]), default="json")
@click.pass_context
def reservations_export(ctx, fmt):
    orch = _orchestrator(ctx)
    if fmt == "table":
        click.echo(format_utilization(orch.infra, beta=orch.config.beta))
        return
    for booking in sorted(orch.infra.reservations, key=lambda r: r.id):
        click.echo(json.dumps(booking.to_dict(), sort_keys=True))


# --- server --------------------------------------------------------------------


@main.command("serve")
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", type=int, default=None, help="Defaults to the configured port.")
@click.pass_context
def serve(ctx, host, port):
    """Run the HTTP API until interrupted."""
    import uvicorn

    config = _config(ctx)
    if config.tenants_file is None:
        _fail("config has no tenants_file; the API needs a token registry", 2)
    orch = _orchestrator(ctx)
    tokens = load_tenants(config.tenants_file)
    app = create_app(orch, tokens)
    uvicorn.run(app, host=host, port=config.port if port is None else port, log_level="warning")


if __name__ == "__main__":
    main()
