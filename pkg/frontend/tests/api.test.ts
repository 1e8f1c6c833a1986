import { afterEach, describe, expect, it, vi } from 'vitest';

import { ApiError, PortalApi } from '../src/api';

type Call = { url: string; init: RequestInit };

function stubFetch(status: number, body: unknown): Call[] {
  const calls: Call[] = [];
  vi.stubGlobal('fetch', async (url: string, init: RequestInit = {}) => {
    calls.push({ url, init });
    return new Response(JSON.stringify(body), {
      status,
      headers: { 'Content-Type': 'application/json' },
    });
  });
  return calls;
}

afterEach(() => vi.unstubAllGlobals());

describe('request shaping', () => {
  it('sends the bearer token on every authed call', async () => {
    const calls = stubFetch(200, { templates: [] });
    const api = new PortalApi('http://x', 'tok-1');
    await api.templates();
    expect(calls[0]?.url).toBe('http://x/catalog/templates');
    expect((calls[0]?.init.headers as Record<string, string>).Authorization).toBe('Bearer tok-1');
  });

  it('health is the one unauthenticated call', async () => {
    const calls = stubFetch(200, { status: 'ok', orders: 0 });
    await new PortalApi('http://x', 'tok-1').health();
    expect(calls[0]?.init.headers).toBeUndefined();
  });

  it('submit posts the documented body shape', async () => {
    const calls = stubFetch(201, { id: 'ord-0001' });
    const api = new PortalApi('http://x', 'tok-1');
    await api.submitOrder('tpl-a', { 'geo_reqs.cache': ['apac'] }, 'ord-0000');
    expect(JSON.parse(String(calls[0]?.init.body))).toEqual({
      template_id: 'tpl-a',
      overrides: { 'geo_reqs.cache': ['apac'] },
      parent_order_id: 'ord-0000',
    });
  });

  it('trace and events unwrap their envelope', async () => {
    stubFetch(200, { events: [{ hour: 3, from_il: 'a', to_il: 'b', load: 0.5, kind: 'SCALED' }] });
    const api = new PortalApi('http://x', 'tok-1');
    expect(await api.traceSlice('ord-1', [0.5], 3)).toHaveLength(1);
    expect(await api.sliceEvents('ord-1')).toHaveLength(1);
  });
});

describe('error surfacing', () => {
  it('422 carries the structured field errors', async () => {
    stubFetch(422, {
      errors: [{ path: 'geo_reqs.cache', message: 'not on the menu', allowed: { choices: [] } }],
    });
    const api = new PortalApi('http://x', 'tok-1');
    const err = await api.submitOrder('tpl-a', {}).catch((e: unknown) => e);
    expect(err).toBeInstanceOf(ApiError);
    expect((err as ApiError).status).toBe(422);
    expect((err as ApiError).errors[0]?.path).toBe('geo_reqs.cache');
  });

  it('404 surfaces the detail string', async () => {
    stubFetch(404, { detail: 'no such order: ord-9' });
    const err = await new PortalApi('http://x', 't')
      .getOrder('ord-9')
      .catch((e: unknown) => e);
    expect((err as ApiError).status).toBe(404);
    expect((err as ApiError).message).toBe('no such order: ord-9');
  });

  it('non-JSON failures still throw with the status', async () => {
    vi.stubGlobal('fetch', async () => new Response('<gateway>', { status: 502 }));
    const err = await new PortalApi('http://x', 't').health().catch((e: unknown) => e);
    expect((err as ApiError).status).toBe(502);
    expect((err as ApiError).message).toBe('HTTP 502');
  });
});
