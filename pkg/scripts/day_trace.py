#!/usr/bin/env python3
"""Run one slice through its whole life against the fixture estate.

Orders the video template, processes it, activates at minute 0, then feeds
the shaped 24-hour trace and prints the step tables: what a provider would
watch on day one of a new slice. Residuals are shown before and after so
the release accounting is visible too.
"""

import argparse
from pathlib import Path

from slicekit.catalog import load_catalog
from slicekit.config import load_config
from slicekit.design import load_traffic_profile
from slicekit.events import EventLog
from slicekit.infra import load_infrastructure, residual_capacity
from slicekit.lifecycle import ScalingEvent, ScalingKind, format_scaling_events, format_timeline
from slicekit.resources import Recurrence, TimeWindow
from slicekit.service import Orchestrator

FIXTURES = Path(__file__).resolve().parents[1] / "fixtures"
ALL_DAY = TimeWindow(0, 1439, Recurrence.DAILY)


def residual_line(infra, beta):
    parts = []
    for pop in infra.pops:
        left = residual_capacity(infra, pop.id, ALL_DAY, beta=beta)
        parts.append(f"{pop.id}={left.vcpu}c/{left.mem_gb}g/{left.storage_gb}s")
    return "  ".join(parts)


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--fixtures", type=Path, default=FIXTURES)
    ap.add_argument(
        "--trace", type=Path, default=None, help="24-row load CSV (default: fixtures/traces/day.csv)"
    )
    ap.add_argument("--throughput", type=int, default=300, help="ordered throughput in mbps")
    args = ap.parse_args()

    config = load_config(args.fixtures / "config.yaml")
    cat = load_catalog(config.catalog_dir)
    infra = load_infrastructure(config.infra_file)
    orch = Orchestrator(cat, infra, config, EventLog(), tenants={"acme-streaming"})

    print(f"residuals (whole day, beta={config.beta}):")
    print("  " + residual_line(infra, config.beta))

    order = orch.submit(
        "acme-streaming",
        "tpl-embb-video",
        {"network_reqs.performance.throughput_mbps": args.throughput},
    )
    outcome = orch.process(order.id)
    print(f"\n{order.id} -> {outcome['status']}")
    if not outcome["admitted"]:
        print(f"  cause: {outcome['cause']}: {outcome['detail']}")
        return
    for instance, pop in sorted(outcome["solution"]["assignment"].items()):
        print(f"  {instance} -> {pop}")
    print("\nresiduals after booking:")
    print("  " + residual_line(infra, config.beta))

    orch.activate_slice(order.id, at_minute=0)
    trace = args.trace or args.fixtures / "traces" / "day.csv"
    profile = load_traffic_profile(trace)
    raw = orch.simulate(order.id, list(profile.hourly_load), start_hour=0)
    events = [
        ScalingEvent(e["hour"], e["from_il"], e["to_il"], e["load"], ScalingKind(e["kind"]))
        for e in raw
    ]
    runtime = orch.runtimes[order.id]

    print(f"\nday timeline ({trace.name}):")
    print(format_timeline(runtime.timeline))
    print(f"\nscaling events ({len(events)}):")
    print(format_scaling_events(events))

    orch.terminate_slice(order.id)
    print("\nresiduals after termination:")
    print("  " + residual_line(infra, config.beta))


if __name__ == "__main__":
    main()
