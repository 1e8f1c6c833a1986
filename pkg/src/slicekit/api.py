"""North-bound HTTP surface: self-ordering endpoints over one orchestrator.

Auth is a static bearer-token registry (token -> tenant id). Scoping is
by ownership: another tenant's order answers 404, not 403, so ids leak
nothing. Field names are pinned by api.md and the contract tests.
"""

from __future__ import annotations

from pathlib import Path

import yaml
from fastapi import Depends, FastAPI, Header, HTTPException
from fastapi.responses import JSONResponse
from pydantic import BaseModel, Field

from .errors import (
    ForbiddenAttribute,
    IllegalTransition,
    OutOfRange,
    OutsideActiveWindow,
    ParseError,
    UnknownOrder,
    UnknownSlice,
    UnknownTemplate,
)
from .ordering import ServiceOrder
from .service import Orchestrator


class OrderBody(BaseModel):
    template_id: str
    overrides: dict = Field(default_factory=dict)
    parent_order_id: str | None = None


class ActivateBody(BaseModel):
    at_minute: int | None = None


class TraceBody(BaseModel):
    loads: list[float]
    start_hour: int = 0


def load_tenants(path: Path) -> dict[str, str]:
    """Token registry from the tenants file; returns token -> tenant id."""
    with open(path) as handle:
        data = yaml.safe_load(handle)
    if not isinstance(data, dict) or "tenants" not in data:
        raise ParseError(f"{path}: expected a top-level 'tenants' list")
    tokens: dict[str, str] = {}
    for entry in data["tenants"]:
        token = str(entry["token"])
        if token in tokens:
            raise ParseError(f"{path}: duplicate token for tenant {entry['id']}")
        tokens[token] = str(entry["id"])
    return tokens


def create_app(orch: Orchestrator, tokens: dict[str, str]) -> FastAPI:
    app = FastAPI(title="slice orchestrator", docs_url=None, redoc_url=None)

    def tenant_of(authorization: str | None = Header(default=None)) -> str:
        if not authorization or not authorization.startswith("Bearer "):
            raise HTTPException(status_code=401, detail="missing bearer token")
        tenant = tokens.get(authorization.removeprefix("Bearer ").strip())
        if tenant is None:
            raise HTTPException(status_code=401, detail="unknown token")
        return tenant

    def owned_order(order_id: str, tenant: str) -> ServiceOrder:
        # unknown and foreign ids are indistinguishable on purpose
        try:
            order = orch.get_order(order_id)
        except UnknownOrder:
            raise HTTPException(status_code=404, detail=f"no such order: {order_id}")
        if order.tenant_id != tenant:
            raise HTTPException(status_code=404, detail=f"no such order: {order_id}")
        return order

    @app.exception_handler(IllegalTransition)
    async def _conflict(request, exc: IllegalTransition):
        return JSONResponse(status_code=409, content={"detail": str(exc)})

    @app.exception_handler(OutsideActiveWindow)
    async def _outside(request, exc: OutsideActiveWindow):
        return JSONResponse(status_code=409, content={"detail": str(exc)})

    @app.exception_handler(UnknownSlice)
    async def _no_slice(request, exc: UnknownSlice):
        return JSONResponse(status_code=404, content={"detail": f"no such slice: {exc}"})

    @app.get("/health")
    def health():
        return {"status": "ok", "orders": len(orch.orders)}

    @app.get("/catalog/templates")
    def templates(tenant: str = Depends(tenant_of)):
        return {"templates": orch.templates()}

    @app.post("/orders", status_code=201)
    def submit(body: OrderBody, tenant: str = Depends(tenant_of)):
        if body.parent_order_id is not None:
            owned_order(body.parent_order_id, tenant)
        try:
            order = orch.submit(
                tenant, body.template_id, body.overrides, parent_order_id=body.parent_order_id
            )
        except UnknownTemplate as exc:
            return JSONResponse(
                status_code=422,
                content={"errors": [{"path": "template_id", "message": f"unknown template: {exc}"}]},
            )
        except ForbiddenAttribute as exc:
            return JSONResponse(
                status_code=422,
                content={"errors": [{"path": exc.path, "message": str(exc)}]},
            )
        except OutOfRange as exc:
            return JSONResponse(
                status_code=422,
                content={
                    "errors": [
                        {
                            "path": exc.path,
                            "message": str(exc),
                            "value": exc.value,
                            "allowed": exc.allowed,
                        }
                    ]
                },
            )
        return order.to_dict()

    @app.get("/orders")
    def list_orders(tenant: str = Depends(tenant_of)):
        return {
            "orders": [o.to_dict() for o in orch.orders.values() if o.tenant_id == tenant]
        }

    @app.get("/orders/{order_id}")
    def order_status(order_id: str, tenant: str = Depends(tenant_of)):
        return owned_order(order_id, tenant).to_dict()

    @app.post("/orders/{order_id}/process")
    def process(order_id: str, tenant: str = Depends(tenant_of)):
        owned_order(order_id, tenant)
        return orch.process(order_id)

    @app.post("/orders/{order_id}/validate")
    def validate(order_id: str, tenant: str = Depends(tenant_of)):
        owned_order(order_id, tenant)
        return orch.validate(order_id)

    @app.post("/slices/{order_id}/activate")
    def activate_slice(order_id: str, body: ActivateBody | None = None, tenant: str = Depends(tenant_of)):
        owned_order(order_id, tenant)
        at = body.at_minute if body is not None else None
        return orch.activate_slice(order_id, at_minute=at)

    @app.post("/slices/{order_id}/terminate")
    def terminate_slice(order_id: str, tenant: str = Depends(tenant_of)):
        owned_order(order_id, tenant)
        return orch.terminate_slice(order_id)

    @app.post("/slices/{order_id}/trace")
    def trace(order_id: str, body: TraceBody, tenant: str = Depends(tenant_of)):
        owned_order(order_id, tenant)
        return {"events": orch.simulate(order_id, body.loads, start_hour=body.start_hour)}

    @app.get("/slices/{order_id}/events")
    def events(order_id: str, tenant: str = Depends(tenant_of)):
        owned_order(order_id, tenant)
        return {"events": orch.order_events(order_id)}

    @app.get("/slices/{order_id}/metrics")
    def metrics(order_id: str, tenant: str = Depends(tenant_of)):
        owned_order(order_id, tenant)
        return {"metrics": orch.slice_metrics(order_id)}

    return app
