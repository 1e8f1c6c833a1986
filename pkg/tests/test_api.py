"""HTTP contract tests.

Field names and status codes asserted here are the published interface;
renaming anything below is a breaking change.
"""

import pytest
from fastapi.testclient import TestClient

from slicekit.api import create_app, load_tenants
from slicekit.errors import ParseError
from slicekit.ordering import OrderStatus

from conftest import FIXTURES

ACME = {"Authorization": "Bearer tok-acme"}
VOLT = {"Authorization": "Bearer tok-volt"}


@pytest.fixture
def client(orch, tokens):
    return TestClient(create_app(orch, tokens))


def _submit(client, template="tpl-embb-video", headers=ACME, **overrides):
    body = {"template_id": template, "overrides": overrides}
    resp = client.post("/orders", json=body, headers=headers)
    assert resp.status_code == 201, resp.text
    return resp.json()["id"]


class TestAuth:
    def test_health_needs_no_token(self, client):
        resp = client.get("/health")
        assert resp.status_code == 200
        assert resp.json()["status"] == "ok"

    @pytest.mark.parametrize(
        "headers",
        [{}, {"Authorization": "tok-acme"}, {"Authorization": "Bearer tok-wrong"}],
    )
    def test_missing_or_bad_token_is_401(self, client, headers):
        assert client.get("/catalog/templates", headers=headers).status_code == 401

    def test_token_registry_loads_from_file(self):
        tokens = load_tenants(FIXTURES / "tenants.yaml")
        assert tokens == {
            "tok-acme-2219": "acme-streaming",
            "tok-nordwind-7741": "nordwind-iot",
        }

    def test_duplicate_tokens_are_a_parse_error(self, tmp_path):
        bad = tmp_path / "tenants.yaml"
        bad.write_text(
            "tenants:\n  - {id: a, token: t1}\n  - {id: b, token: t1}\n"
        )
        with pytest.raises(ParseError, match="duplicate token"):
            load_tenants(bad)


class TestOrders:
    def test_templates_carry_customization_menus(self, client):
        resp = client.get("/catalog/templates", headers=ACME)
        assert resp.status_code == 200
        by_id = {t["id"]: t for t in resp.json()["templates"]}
        menu = by_id["tpl-embb-video"]["customizable"]
        assert menu["network_reqs.performance.max_latency_ms"] == {"min": 20, "max": 120}

    def test_submit_returns_the_order_record(self, client):
        resp = client.post(
            "/orders",
            json={"template_id": "tpl-embb-video", "overrides": {}},
            headers=ACME,
        )
        assert resp.status_code == 201
        body = resp.json()
        assert body["id"] == "ord-0001"
        assert body["tenant_id"] == "acme"
        assert body["status"] == "SUBMITTED"
        assert body["rejection_cause"] is None

    def test_unknown_template_is_422(self, client):
        resp = client.post("/orders", json={"template_id": "tpl-nope"}, headers=ACME)
        assert resp.status_code == 422
        (error,) = resp.json()["errors"]
        assert error["path"] == "template_id"
        assert "tpl-nope" in error["message"]

    def test_forbidden_attribute_is_422_with_path(self, client):
        resp = client.post(
            "/orders",
            json={
                "template_id": "tpl-embb-video",
                "overrides": {"network_reqs.performance.max_sessions": 5},
            },
            headers=ACME,
        )
        assert resp.status_code == 422
        (error,) = resp.json()["errors"]
        assert error["path"] == "network_reqs.performance.max_sessions"

    def test_out_of_range_reports_value_and_menu(self, client):
        resp = client.post(
            "/orders",
            json={
                "template_id": "tpl-embb-video",
                "overrides": {"network_reqs.performance.throughput_mbps": 9000},
            },
            headers=ACME,
        )
        assert resp.status_code == 422
        (error,) = resp.json()["errors"]
        assert error["value"] == 9000
        assert "100" in error["allowed"] and "400" in error["allowed"]

    def test_listing_is_scoped_to_the_caller(self, client):
        mine = _submit(client)
        _submit(client, headers=VOLT)
        resp = client.get("/orders", headers=ACME)
        assert [o["id"] for o in resp.json()["orders"]] == [mine]

    def test_foreign_and_unknown_orders_are_indistinguishable(self, client):
        order_id = _submit(client)
        foreign = client.get(f"/orders/{order_id}", headers=VOLT)
        unknown = client.get("/orders/ord-9999", headers=VOLT)
        assert foreign.status_code == unknown.status_code == 404
        # same message shape either way, so ids leak nothing
        assert foreign.json()["detail"].replace(order_id, "X") == unknown.json()[
            "detail"
        ].replace("ord-9999", "X")

    def test_parent_order_must_be_owned(self, client):
        parent = _submit(client)
        resp = client.post(
            "/orders",
            json={"template_id": "tpl-embb-video", "parent_order_id": parent},
            headers=VOLT,
        )
        assert resp.status_code == 404
        resp = client.post(
            "/orders",
            json={"template_id": "tpl-embb-video", "parent_order_id": parent},
            headers=ACME,
        )
        assert resp.status_code == 201
        assert resp.json()["parent_order_id"] == parent


class TestPipeline:
    def test_process_reserves(self, client):
        order_id = _submit(client)
        resp = client.post(f"/orders/{order_id}/process", headers=ACME)
        assert resp.status_code == 200
        body = resp.json()
        assert body["status"] == "RESERVED"
        assert body["admitted"] is True
        assert body["solution"]["assignment"]
        assert body["reservations"][0]["order_id"] == order_id

    def test_rejection_reports_the_binding_constraint(self, client):
        order_id = _submit(client, template="tpl-polar-sensor")
        body = client.post(f"/orders/{order_id}/process", headers=ACME).json()
        assert body["status"] == "REJECTED"
        assert body["cause"] == "geolocation"
        assert body["detail"]

    def test_validate_probes_without_side_effects(self, client, orch):
        order_id = _submit(client)
        resp = client.post(f"/orders/{order_id}/validate", headers=ACME)
        assert resp.status_code == 200
        assert resp.json()["admitted"] is True
        assert orch.get_order(order_id).status is OrderStatus.SUBMITTED

    def test_process_twice_is_a_409(self, client):
        order_id = _submit(client)
        client.post(f"/orders/{order_id}/process", headers=ACME)
        resp = client.post(f"/orders/{order_id}/process", headers=ACME)
        assert resp.status_code == 409


class TestSlices:
    def _active(self, client, template="tpl-embb-video", at=0):
        order_id = _submit(client, template=template)
        assert client.post(f"/orders/{order_id}/process", headers=ACME).json()["status"] == "RESERVED"
        resp = client.post(
            f"/slices/{order_id}/activate", json={"at_minute": at}, headers=ACME
        )
        assert resp.status_code == 200, resp.text
        return order_id

    def test_activate_starts_at_the_target_level(self, client):
        order_id = self._active(client)
        resp = client.post(
            f"/slices/{order_id}/activate", json={"at_minute": 0}, headers=ACME
        )
        assert resp.status_code == 409  # already active

    def test_activation_window_violations_are_409(self, client):
        order_id = _submit(client, template="tpl-iot-monitor")
        client.post(f"/orders/{order_id}/process", headers=ACME)
        resp = client.post(
            f"/slices/{order_id}/activate", json={"at_minute": 0}, headers=ACME
        )
        assert resp.status_code == 409
        resp = client.post(
            f"/slices/{order_id}/activate", json={"at_minute": 600}, headers=ACME
        )
        assert resp.status_code == 200

    def test_unreserved_order_has_no_slice_yet(self, client):
        order_id = _submit(client)
        resp = client.post(f"/slices/{order_id}/activate", json={}, headers=ACME)
        assert resp.status_code == 404
        assert "slice" in resp.json()["detail"]

    def test_trace_returns_and_journals_scaling(self, client):
        order_id = self._active(client)
        resp = client.post(
            f"/slices/{order_id}/trace",
            json={"loads": [1.0, 0.45, 0.2], "start_hour": 0},
            headers=ACME,
        )
        assert resp.status_code == 200
        events = resp.json()["events"]
        assert events and all(e["kind"] == "SCALED" for e in events)
        journal = client.get(f"/slices/{order_id}/events", headers=ACME).json()["events"]
        assert [e["stage"] for e in journal].count("SCALED") == len(events)

    def test_event_feed_is_ordered_and_scoped(self, client):
        order_id = self._active(client)
        _submit(client, headers=VOLT)
        journal = client.get(f"/slices/{order_id}/events", headers=ACME).json()["events"]
        stages = [e["stage"] for e in journal]
        assert stages[:4] == ["ORDERED", "DESIGNED", "ADMITTED", "RESERVED"]
        assert stages[-2:] == ["PREPARED", "ACTIVE"]
        assert client.get(f"/slices/{order_id}/events", headers=VOLT).status_code == 404

    def test_metrics_expose_only_the_contracted_set(self, client):
        order_id = self._active(client, template="tpl-iot-monitor", at=600)
        metrics = client.get(f"/slices/{order_id}/metrics", headers=ACME).json()["metrics"]
        assert set(metrics) == {"load_fraction", "sessions"}

    def test_terminate_then_things_stay_terminated(self, client):
        order_id = self._active(client)
        first = client.post(f"/slices/{order_id}/terminate", headers=ACME)
        again = client.post(f"/slices/{order_id}/terminate", headers=ACME)
        assert first.json()["status"] == again.json()["status"] == "TERMINATED"
