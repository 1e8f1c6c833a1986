"""Operator CLI. Each invocation replays the journal from data_dir, so
these tests double as cross-process persistence checks."""

import json
import shutil

import pytest
from click.testing import CliRunner

from slicekit.cli import main

from conftest import FIXTURES

# column padding puts trailing blanks on short KIND cells; compare rstripped
GOLDEN_DAY_TABLE = """\
HOUR  FROM          TO            LOAD   KIND
0     ord-0001-il4  ord-0001-il3  0.180  SCALED
0     ord-0001-il3  ord-0001-il2  0.180  SCALED
0     ord-0001-il2  ord-0001-il1  0.180  SCALED
6     ord-0001-il1  ord-0001-il2  0.400  SCALED
8     ord-0001-il2  ord-0001-il3  0.520  SCALED
16    ord-0001-il3  ord-0001-il4  0.780  SCALED
22    ord-0001-il4  ord-0001-il3  0.600  SCALED
23    ord-0001-il3  ord-0001-il2  0.350  SCALED
"""


@pytest.fixture
def cli(tmp_path):
    """Runner bound to an isolated config + data dir over the fixture estate."""
    conf = tmp_path / "config.yaml"
    conf.write_text(
        "beta: 1.5\n"
        "objective: MIN_RESOURCE\n"
        "weights: {vcpu: 4, mem_gb: 1, storage_gb: 1}\n"
        "preferred_pops: [pop-a, pop-c]\n"
        "priority_table: {tpl-embb-video: 2, tpl-iot-monitor: 5}\n"
        f"catalog_dir: {FIXTURES / 'catalog'}\n"
        f"infra_file: {FIXTURES / 'infra.yaml'}\n"
        f"tenants_file: {FIXTURES / 'tenants.yaml'}\n"
        f"profiles_dir: {FIXTURES / 'profiles'}\n"
        "data_dir: data\n"
    )
    runner = CliRunner()

    def invoke(*args):
        return runner.invoke(main, ["--config", str(conf)] + list(args))

    invoke.config = conf
    invoke.data_dir = tmp_path / "data"
    return invoke


def test_catalog_lint_counts_the_inventory(cli):
    result = cli("catalog", "lint")
    assert result.exit_code == 0
    assert result.output == "ok: 7 vnfs, 5 network services, 4 templates\n"


def test_catalog_lint_flags_defects(cli, tmp_path):
    broken = tmp_path / "catalog"
    shutil.copytree(FIXTURES / "catalog", broken)
    (broken / "vnfs.yaml").unlink()  # leaves the NSDs dangling
    conf = tmp_path / "broken.yaml"
    conf.write_text(f"catalog_dir: {broken}\n")
    result = CliRunner().invoke(main, ["--config", str(conf), "catalog", "lint"])
    assert result.exit_code == 2
    assert "error:" in result.output


def test_missing_config_is_a_usage_error(cli):
    result = CliRunner().invoke(main, ["--config", "/no/such/file.yaml", "catalog", "lint"])
    assert result.exit_code == 2


def test_submit_prints_id_and_status(cli):
    result = cli("order", "submit", "--tenant", "acme-streaming", "--template", "tpl-embb-video")
    assert result.exit_code == 0
    assert result.output == "ord-0001 SUBMITTED\n"


def test_submit_rejects_unknown_tenant(cli):
    result = cli("order", "submit", "--tenant", "nobody", "--template", "tpl-embb-video")
    assert result.exit_code == 1
    assert "nobody" in result.output


def test_set_needs_path_equals_value(cli):
    result = cli(
        "order", "submit", "--tenant", "acme-streaming",
        "--template", "tpl-embb-video", "--set", "latency120",
    )
    assert result.exit_code == 2


def test_out_of_menu_override_is_a_domain_error(cli):
    result = cli(
        "order", "submit", "--tenant", "acme-streaming", "--template", "tpl-embb-video",
        "--set", "network_reqs.performance.throughput_mbps=9000",
    )
    assert result.exit_code == 1
    assert "outside allowed" in result.output


def test_state_survives_across_invocations(cli):
    assert cli("order", "submit", "--tenant", "acme-streaming", "--template", "tpl-embb-video").exit_code == 0
    result = cli("order", "process", "ord-0001")
    assert result.exit_code == 0
    assert result.output.splitlines()[0] == "ord-0001 RESERVED"
    assert "  m0/ns-embb-video:vnf-cache@0 -> " in result.output
    # a third process sees the journaled state
    result = cli("order", "status", "ord-0001")
    assert result.output == "ord-0001 RESERVED\n"
    assert (cli.data_dir / "events.jsonl").exists()


def test_rejected_order_exits_one_with_the_cause(cli):
    cli("order", "submit", "--tenant", "acme-streaming", "--template", "tpl-polar-sensor")
    result = cli("order", "process", "ord-0001")
    assert result.exit_code == 1
    assert "REJECTED cause=geolocation" in result.output
    status = cli("order", "status", "ord-0001")
    assert "cause=geolocation:" in status.output


def test_unknown_order_exits_one(cli):
    result = cli("order", "status", "ord-0042")
    assert result.exit_code == 1


def test_full_slice_lifecycle_with_golden_trace(cli):
    cli("order", "submit", "--tenant", "acme-streaming", "--template", "tpl-embb-video")
    cli("order", "process", "ord-0001")
    result = cli("slice", "activate", "ord-0001", "--at-minute", "0")
    assert result.exit_code == 0
    assert result.output == "ord-0001 ACTIVE il=ord-0001-il4\n"

    result = cli("slice", "simulate", "ord-0001", "--trace", str(FIXTURES / "traces" / "day.csv"))
    assert result.exit_code == 0
    got = [line.rstrip() for line in result.output.splitlines()]
    assert got == GOLDEN_DAY_TABLE.splitlines()

    result = cli("slice", "terminate", "ord-0001")
    assert result.exit_code == 0
    assert result.output == "ord-0001 TERMINATED\n"
    # the release is durable: a later export sees an empty ledger
    assert cli("reservations", "export").output == ""


def test_simulate_rejects_an_empty_trace(cli, tmp_path):
    cli("order", "submit", "--tenant", "acme-streaming", "--template", "tpl-embb-video")
    cli("order", "process", "ord-0001")
    cli("slice", "activate", "ord-0001", "--at-minute", "0")
    empty = tmp_path / "empty.csv"
    empty.write_text("hour,load\n")
    result = cli("slice", "simulate", "ord-0001", "--trace", str(empty))
    assert result.exit_code == 2


def test_reservations_export_is_json_lines(cli):
    cli("order", "submit", "--tenant", "acme-streaming", "--template", "tpl-embb-video")
    cli("order", "process", "ord-0001")
    result = cli("reservations", "export")
    rows = [json.loads(line) for line in result.output.splitlines()]
    assert rows
    assert all(row["order_id"] == "ord-0001" for row in rows)
    assert [row["id"] for row in rows] == sorted(row["id"] for row in rows)
    table = cli("reservations", "export", "--format", "table")
    assert table.output.startswith("KIND")


def test_infra_load_stages_a_new_map(cli, tmp_path):
    source = tmp_path / "bigger.yaml"
    extra = "  - {id: pop-e, region: emea, capacity: {vcpu: 8, mem_gb: 16, storage_gb: 64}}\n"
    source.write_text(
        (FIXTURES / "infra.yaml").read_text().replace("\nwan_links:", extra + "\nwan_links:")
    )
    result = cli("infra", "load", str(source))
    assert result.exit_code == 0
    assert result.output == "ok: 5 pops, 4 wan links\n"
    assert (cli.data_dir / "infra.yaml").exists()
    show = cli("infra", "show")
    assert "pop pop-e region=emea" in show.output


def test_infra_load_validates_before_staging(cli, tmp_path):
    source = tmp_path / "broken.yaml"
    source.write_text("pops:\n  - {id: pop-x, region: emea, capacity: {vcpu: -1, mem_gb: 1, storage_gb: 1}}\n")
    result = cli("infra", "load", str(source))
    assert result.exit_code == 2
    assert not (cli.data_dir / "infra.yaml").exists()


def test_infra_show_prints_estate_and_utilization(cli):
    result = cli("infra", "show")
    assert result.exit_code == 0
    assert "pop pop-a region=emea vcpu=64 mem=128 storage=1024 caps=HA,HIGH_IO" in result.output
    assert "wan wl-ad pop-a<->pop-d capacity=500 class=1" in result.output
    assert "KIND  TARGET" in result.output
