// Typed client for the orchestrator's HTTP surface. Field names follow
// api.md in the repository root; nothing here calls an undocumented path.

export type Menu = { choices: unknown[] } | { min: number; max: number };

export type TemplateCard = {
  id: string;
  topology: string[];
  network_reqs: { performance: Record<string, number>; functional: string[] };
  temporal_reqs: { start: number; end: number; recurrence: string }[];
  geo_reqs: Record<string, string[]>;
  operational_reqs: { visible_metrics: string[]; allowed_actions: string[] };
  customizable: Record<string, Menu>;
};

export type OrderRecord = {
  id: string;
  tenant_id: string;
  template_id: string;
  attribute_overrides: Record<string, unknown>;
  status: string;
  created_at: number;
  parent_order_id: string | null;
  rejection_cause: string | null;
};

export type Reservation = {
  id: string;
  order_id: string;
  window: { start: number; end: number; recurrence: string };
  mode: string;
  pop_id?: string;
  resources?: { vcpu: number; mem_gb: number; storage_gb: number };
  wan_link_id?: string;
  bitrate_mbps?: number;
};

export type Verdict = {
  order_id: string;
  status?: string;
  admitted: boolean;
  cause?: string | null;
  detail?: string | null;
  solution?: { assignment: Record<string, string>; link_routes: Record<string, string[]> };
  reservations?: Reservation[];
  sla?: Record<string, unknown>;
};

export type PipelineEvent = {
  seq: number;
  order_id: string;
  stage: string;
  payload: Record<string, unknown>;
  at: number;
};

export type ScaleStep = {
  hour: number;
  from_il: string;
  to_il: string;
  load: number;
  kind: 'SCALED' | 'DEGRADED';
};

export type FieldError = {
  path: string;
  message: string;
  value?: unknown;
  allowed?: unknown;
};

export class ApiError extends Error {
  constructor(
    readonly status: number,
    message: string,
    readonly errors: FieldError[] = []
  ) {
    super(message);
    this.name = 'ApiError';
  }
}

async function fail(res: Response): Promise<never> {
  let body: Record<string, unknown> = {};
  try {
    body = (await res.json()) as Record<string, unknown>;
  } catch {
    // non-JSON error body; status alone has to do
  }
  if (Array.isArray(body.errors)) {
    const errors = body.errors as FieldError[];
    throw new ApiError(res.status, errors.map((e) => e.message).join('; '), errors);
  }
  throw new ApiError(res.status, typeof body.detail === 'string' ? body.detail : `HTTP ${res.status}`);
}

export class PortalApi {
  constructor(
    private readonly baseUrl: string,
    private readonly token: string
  ) {}

  private async request<T>(method: string, path: string, body?: unknown): Promise<T> {
    const res = await fetch(this.baseUrl + path, {
      method,
      headers: {
        Authorization: `Bearer ${this.token}`,
        ...(body !== undefined ? { 'Content-Type': 'application/json' } : {}),
      },
      body: body !== undefined ? JSON.stringify(body) : undefined,
    });
    if (!res.ok) return fail(res);
    return (await res.json()) as T;
  }

  async health(): Promise<{ status: string; orders: number }> {
    const res = await fetch(this.baseUrl + '/health');
    if (!res.ok) return fail(res);
    return (await res.json()) as { status: string; orders: number };
  }

  async templates(): Promise<TemplateCard[]> {
    const out = await this.request<{ templates: TemplateCard[] }>('GET', '/catalog/templates');
    return out.templates;
  }

  submitOrder(
    templateId: string,
    overrides: Record<string, unknown>,
    parentOrderId?: string
  ): Promise<OrderRecord> {
    return this.request('POST', '/orders', {
      template_id: templateId,
      overrides,
      parent_order_id: parentOrderId ?? null,
    });
  }

  async listOrders(): Promise<OrderRecord[]> {
    const out = await this.request<{ orders: OrderRecord[] }>('GET', '/orders');
    return out.orders;
  }

  getOrder(orderId: string): Promise<OrderRecord> {
    return this.request('GET', `/orders/${orderId}`);
  }

  processOrder(orderId: string): Promise<Verdict> {
    return this.request('POST', `/orders/${orderId}/process`);
  }

  validateOrder(orderId: string): Promise<Verdict> {
    return this.request('POST', `/orders/${orderId}/validate`);
  }

  activateSlice(orderId: string, atMinute?: number): Promise<{ order_id: string; status: string; current_il: string; priority: number }> {
    return this.request('POST', `/slices/${orderId}/activate`, {
      at_minute: atMinute ?? null,
    });
  }

  async traceSlice(orderId: string, loads: number[], startHour = 0): Promise<ScaleStep[]> {
    const out = await this.request<{ events: ScaleStep[] }>('POST', `/slices/${orderId}/trace`, {
      loads,
      start_hour: startHour,
    });
    return out.events;
  }

  async sliceEvents(orderId: string): Promise<PipelineEvent[]> {
    const out = await this.request<{ events: PipelineEvent[] }>('GET', `/slices/${orderId}/events`);
    return out.events;
  }

  async sliceMetrics(orderId: string): Promise<Record<string, number>> {
    const out = await this.request<{ metrics: Record<string, number> }>(
      'GET',
      `/slices/${orderId}/metrics`
    );
    return out.metrics;
  }

  terminateSlice(orderId: string): Promise<{ order_id: string; status: string }> {
    return this.request('POST', `/slices/${orderId}/terminate`);
  }
}
