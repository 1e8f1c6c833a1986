// End-to-end against a live orchestrator: fill the estate, get bounced,
// re-negotiate through the wizard helpers, then check the dashboard's step
// chart against the known scaling ladder for the shaped day trace.

import { spawn, type ChildProcess } from 'node:child_process';
import { mkdtempSync, readFileSync, writeFileSync } from 'node:fs';
import { tmpdir } from 'node:os';
import { join, resolve } from 'node:path';
import { fileURLToPath } from 'node:url';
import { afterAll, beforeAll, describe, expect, it } from 'vitest';

import { ApiError, PortalApi } from '../src/api';
import { visibleMetricPanel } from '../src/dashboard';
import { buildIlSeries, stepCount, stepLabels } from '../src/stepchart';
import { isSubmittable, newDraft, overrides, renegotiationDraft, setField } from '../src/wizard';

const REPO = resolve(fileURLToPath(new URL('.', import.meta.url)), '../..');
const FIXTURES = join(REPO, 'fixtures');
const PORT = 8300 + (process.pid % 400);
const BASE = `http://127.0.0.1:${PORT}`;
const TOKEN = 'tok-acme-2219';

// the to_il sequence the shaped day trace produces on a 4-level design
const GOLDEN_LADDER = ['il3', 'il2', 'il1', 'il2', 'il3', 'il4', 'il3', 'il2'];

let server: ChildProcess;
let api: PortalApi;

function dayLoads(): number[] {
  const rows = readFileSync(join(FIXTURES, 'traces', 'day.csv'), 'utf8').trim().split('\n');
  return rows.slice(1).map((row) => Number(row.split(',')[1]));
}

beforeAll(async () => {
  const scratch = mkdtempSync(join(tmpdir(), 'portal-e2e-'));
  const config = join(scratch, 'config.yaml');
  writeFileSync(
    config,
    [
      'beta: 1.5',
      'hysteresis: 0.10',
      'objective: MIN_RESOURCE',
      'weights: {vcpu: 4, mem_gb: 1, storage_gb: 1}',
      'preferred_pops: [pop-a, pop-c]',
      'default_priority: 4',
      'reservation_mode: HARD',
      `catalog_dir: ${join(FIXTURES, 'catalog')}`,
      `infra_file: ${join(FIXTURES, 'infra.yaml')}`,
      `tenants_file: ${join(FIXTURES, 'tenants.yaml')}`,
      `profiles_dir: ${join(FIXTURES, 'profiles')}`,
      `data_dir: ${join(scratch, 'data')}`,
      `port: ${PORT}`,
      '',
    ].join('\n')
  );
  server = spawn('python3', ['-m', 'slicekit.cli', '--config', config, 'serve'], {
    cwd: REPO,
    stdio: ['ignore', 'pipe', 'pipe'],
  });
  api = new PortalApi(BASE, TOKEN);

  const deadline = Date.now() + 25000;
  for (;;) {
    try {
      await api.health();
      break;
    } catch {
      if (Date.now() > deadline) throw new Error('orchestrator never came up');
      await new Promise((r) => setTimeout(r, 250));
    }
  }
});

afterAll(() => {
  server?.kill('SIGTERM');
});

describe('catalog contract', () => {
  it('serves the templates with their customizable menus', async () => {
    const templates = await api.templates();
    const video = templates.find((t) => t.id === 'tpl-embb-video');
    expect(video).toBeDefined();
    expect(video?.customizable['network_reqs.performance.throughput_mbps']).toEqual({
      min: 100,
      max: 400,
    });
    expect(video?.operational_reqs.visible_metrics).toContain('load_fraction');
  });

  it('rejects a bad token the way the portal expects', async () => {
    const err = await new PortalApi(BASE, 'tok-wrong').templates().catch((e: unknown) => e);
    expect((err as ApiError).status).toBe(401);
  });
});

describe('reject, re-negotiate, admit', () => {
  let rejectedId: string;
  let retryId: string;

  it('full-rate orders fill the estate until one bounces on capacity', async () => {
    const templates = await api.templates();
    const video = templates.find((t) => t.id === 'tpl-embb-video');
    expect(video).toBeDefined();
    if (!video) return;

    for (let i = 0; i < 3; i++) {
      const draft = newDraft(video);
      setField(draft, 'network_reqs.performance.throughput_mbps', 400);
      expect(isSubmittable(draft)).toBe(true);
      const order = await api.submitOrder(video.id, overrides(draft));
      const verdict = await api.processOrder(order.id);
      expect(verdict.status).toBe('RESERVED');
    }

    const draft = newDraft(video);
    setField(draft, 'network_reqs.performance.throughput_mbps', 400);
    const bounced = await api.submitOrder(video.id, overrides(draft));
    const verdict = await api.processOrder(bounced.id);
    expect(verdict.admitted).toBe(false);
    expect(verdict.cause).toBe('CAPACITY');
    rejectedId = bounced.id;

    const record = await api.getOrder(rejectedId);
    expect(record.status).toBe('REJECTED');
    expect(record.rejection_cause).toMatch(/^CAPACITY:/);
  });

  it('what-if on the bounced order confirms the constraint without side effects', async () => {
    const probe = await api.validateOrder(rejectedId);
    expect(probe.admitted).toBe(false);
    expect(probe.cause).toBe('CAPACITY');
    expect((await api.getOrder(rejectedId)).status).toBe('REJECTED');
  });

  it('the prefilled re-negotiation draft lands after easing the constraint', async () => {
    const templates = await api.templates();
    const video = templates.find((t) => t.id === 'tpl-embb-video');
    if (!video) return;

    const rejected = await api.getOrder(rejectedId);
    const draft = renegotiationDraft(video, rejected);
    expect(draft.bindingConstraint).toMatch(/CAPACITY/);
    expect(draft.fields['network_reqs.performance.throughput_mbps']?.highlighted).toBe(true);

    setField(draft, 'network_reqs.performance.throughput_mbps', 100);
    setField(draft, 'geo_reqs.cache', ['apac']);
    expect(isSubmittable(draft)).toBe(true);

    const retry = await api.submitOrder(video.id, overrides(draft), draft.parentOrderId!);
    expect(retry.parent_order_id).toBe(rejectedId);
    const verdict = await api.processOrder(retry.id);
    expect(verdict.status).toBe('RESERVED');
    // only the cache carries the geo requirement; it must sit in apac
    const cachePops = Object.entries(verdict.solution?.assignment ?? {})
      .filter(([instance]) => instance.includes('vnf-cache'))
      .map(([, pop]) => pop);
    expect(cachePops.length).toBeGreaterThan(0);
    for (const pop of cachePops) expect(['pop-c', 'pop-d']).toContain(pop);
    retryId = retry.id;
  });

  it('the day trace draws the golden step chart from the event feed', async () => {
    await api.activateSlice(retryId, 0);
    const steps = await api.traceSlice(retryId, dayLoads(), 0);
    expect(steps).toHaveLength(GOLDEN_LADDER.length);

    const series = buildIlSeries(await api.sliceEvents(retryId));
    expect(series.ilSet).toHaveLength(4);
    expect(series.targetIl).toBe(`${retryId}-il4`);
    expect(series.points[0]?.il).toBe(series.targetIl);
    expect(stepCount(series)).toBe(GOLDEN_LADDER.length);
    expect(stepLabels(series)).toEqual(GOLDEN_LADDER.map((il) => `${retryId}-${il}`));
  });

  it('the metric panel mirrors the exposure section', async () => {
    const templates = await api.templates();
    const video = templates.find((t) => t.id === 'tpl-embb-video');
    if (!video) return;
    const rows = visibleMetricPanel(video, await api.sliceMetrics(retryId));
    expect(rows.map((r) => r.name)).toEqual([
      'availability',
      'latency_ms',
      'load_fraction',
      'throughput_mbps',
    ]);
  });

  it('terminate retires the slice and is idempotent', async () => {
    expect((await api.terminateSlice(retryId)).status).toBe('TERMINATED');
    expect((await api.terminateSlice(retryId)).status).toBe('TERMINATED');
    expect((await api.getOrder(retryId)).status).toBe('TERMINATED');
  });
});
