#!/usr/bin/env python3
"""Admission-control saturation sweep on the fixture estate.

Submits identical video orders until one bounces, printing the verdict and
per-PoP residuals after each. The bounced order is then re-negotiated the
way a tenant portal would: lower throughput, cache region moved off the
congested one, linked to the rejected attempt via parent_order_id.
"""

import argparse
from pathlib import Path

from slicekit.catalog import load_catalog
from slicekit.config import load_config
from slicekit.events import EventLog
from slicekit.infra import load_infrastructure, residual_capacity
from slicekit.resources import Recurrence, TimeWindow
from slicekit.service import Orchestrator

FIXTURES = Path(__file__).resolve().parents[1] / "fixtures"
ALL_DAY = TimeWindow(0, 1439, Recurrence.DAILY)


def vcpu_left(infra, beta):
    return {p.id: residual_capacity(infra, p.id, ALL_DAY, beta=beta).vcpu for p in infra.pops}


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--fixtures", type=Path, default=FIXTURES)
    ap.add_argument("--throughput", type=int, default=400)
    ap.add_argument("--max-orders", type=int, default=10)
    ap.add_argument("--fallback-throughput", type=int, default=100)
    ap.add_argument("--fallback-region", default="apac")
    args = ap.parse_args()

    config = load_config(args.fixtures / "config.yaml")
    cat = load_catalog(config.catalog_dir)
    infra = load_infrastructure(config.infra_file)
    orch = Orchestrator(cat, infra, config, EventLog(), tenants={"acme-streaming"})
    overrides = {"network_reqs.performance.throughput_mbps": args.throughput}

    print(f"filling with {args.throughput} mbps orders; residual vcpu per PoP after each:")
    rejected = None
    for n in range(args.max_orders):
        order = orch.submit("acme-streaming", "tpl-embb-video", dict(overrides))
        outcome = orch.process(order.id)
        left = "  ".join(f"{pop}={v}" for pop, v in sorted(vcpu_left(infra, config.beta).items()))
        print(f"  #{n + 1} {order.id}: {outcome['status']:8s}  {left}")
        if not outcome["admitted"]:
            print(f"      cause: {outcome['cause']}: {outcome['detail']}")
            rejected = order
            break
    else:
        print("estate never saturated; raise --throughput or lower --max-orders")
        return

    print(f"\nre-negotiating {rejected.id}: throughput -> {args.fallback_throughput}, "
          f"cache -> {args.fallback_region}")
    retry = orch.submit(
        "acme-streaming",
        "tpl-embb-video",
        {
            "network_reqs.performance.throughput_mbps": args.fallback_throughput,
            "geo_reqs.cache": [args.fallback_region],
        },
        parent_order_id=rejected.id,
    )
    outcome = orch.process(retry.id)
    print(f"  {retry.id} (parent {retry.parent_order_id}): {outcome['status']}")
    if outcome["admitted"]:
        pops = sorted(set(outcome["solution"]["assignment"].values()))
        print(f"  landed on: {', '.join(pops)}")
    else:
        print(f"  cause: {outcome['cause']}: {outcome['detail']}")


if __name__ == "__main__":
    main()
