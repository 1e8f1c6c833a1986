// DOM shell: token gate, template gallery, order wizard, slice dashboard.
// All state lives on the server; this file only renders and forwards.

import { ApiError, PortalApi } from './api';
import type { OrderRecord, TemplateCard } from './api';
import { operationalControls, poll, visibleMetricPanel } from './dashboard';
import type { PollHandle } from './dashboard';
import { buildIlSeries, hourlyLevels } from './stepchart';
import type { IlSeries } from './stepchart';
import {
  isSubmittable,
  newDraft,
  overrides,
  renegotiationDraft,
  setField,
  applyServerErrors,
} from './wizard';
import type { OrderDraft } from './wizard';

type Session = {
  api: PortalApi;
  templates: TemplateCard[];
  draft: OrderDraft | null;
  watching: string | null;
  poller: PollHandle | null;
};

const el = <T extends HTMLElement>(tag: string, cls?: string, text?: string): T => {
  const node = document.createElement(tag) as T;
  if (cls) node.className = cls;
  if (text !== undefined) node.textContent = text;
  return node;
};

function root(): HTMLElement {
  const node = document.getElementById('app');
  if (!node) throw new Error('missing #app mount point');
  return node;
}

function banner(kind: 'error' | 'info', text: string): HTMLElement {
  return el('div', `banner banner-${kind}`, text);
}

// --- catalog gallery ---------------------------------------------------------

function requirementSheet(tpl: TemplateCard): HTMLElement {
  const sheet = el('dl', 'sheet');
  const row = (label: string, value: string) => {
    sheet.append(el('dt', '', label), el('dd', '', value));
  };
  row('chain', tpl.topology.join(' -> '));
  row(
    'performance',
    Object.entries(tpl.network_reqs.performance)
      .map(([k, v]) => `${k}=${v}`)
      .join('  ')
  );
  row('functional', tpl.network_reqs.functional.join(', ') || 'none');
  row(
    'windows',
    tpl.temporal_reqs.map((w) => `${w.recurrence} [${w.start}, ${w.end})`).join('; ')
  );
  row(
    'geo',
    Object.entries(tpl.geo_reqs)
      .map(([unit, regions]) => `${unit}: ${regions.join('|')}`)
      .join('  ') || 'anywhere'
  );
  row('metrics', tpl.operational_reqs.visible_metrics.join(', '));
  row('actions', tpl.operational_reqs.allowed_actions.join(', ') || 'none');
  return sheet;
}

function gallery(session: Session): HTMLElement {
  const pane = el('section', 'gallery');
  if (session.templates.length === 0) {
    pane.append(banner('info', 'The catalog is empty.'));
    return pane;
  }
  for (const tpl of session.templates) {
    const card = el('article', 'card');
    card.append(el('h3', '', tpl.id));
    card.append(requirementSheet(tpl));
    const customizable = Object.keys(tpl.customizable);
    card.append(
      el(
        'p',
        'hint',
        customizable.length
          ? `customizable: ${customizable.join(', ')}`
          : 'no customizable attributes'
      )
    );
    const order = el<HTMLButtonElement>('button', '', 'customize & order');
    order.addEventListener('click', () => {
      session.draft = newDraft(tpl);
      render(session);
    });
    card.append(order);
    pane.append(card);
  }
  return pane;
}

// --- wizard ---------------------------------------------------------------------

function fieldInput(session: Session, draft: OrderDraft, path: string): HTMLElement {
  const field = draft.fields[path];
  if (!field) return el('div');
  const wrap = el('label', field.highlighted ? 'field field-hot' : 'field');
  wrap.append(el('span', 'field-path', path));
  if ('choices' in field.menu) {
    const select = el<HTMLSelectElement>('select');
    for (const choice of field.menu.choices) {
      const opt = el<HTMLOptionElement>('option', '', JSON.stringify(choice));
      opt.value = JSON.stringify(choice);
      opt.selected = JSON.stringify(field.value) === opt.value;
      select.append(opt);
    }
    select.addEventListener('change', () => {
      setField(draft, path, JSON.parse(select.value));
      render(session);
    });
    wrap.append(select);
  } else {
    const input = el<HTMLInputElement>('input');
    input.type = 'number';
    input.min = String(field.menu.min);
    input.max = String(field.menu.max);
    input.value = String(field.value ?? '');
    input.addEventListener('change', () => {
      setField(draft, path, Number(input.value));
      render(session);
    });
    wrap.append(input);
  }
  if (field.error) wrap.append(el('span', 'field-error', field.error));
  return wrap;
}

async function submitDraft(session: Session, draft: OrderDraft, probe: boolean): Promise<void> {
  const api = session.api;
  try {
    const order = await api.submitOrder(
      draft.templateId,
      overrides(draft),
      draft.parentOrderId ?? undefined
    );
    const verdict = probe ? await api.validateOrder(order.id) : await api.processOrder(order.id);
    if (verdict.admitted) {
      session.draft = null;
      session.watching = order.id;
    } else {
      const fresh = await api.getOrder(order.id);
      offerRenegotiation(session, fresh);
    }
  } catch (err) {
    if (err instanceof ApiError && err.errors.length > 0) {
      applyServerErrors(draft, err.errors);
    } else {
      draft.bindingConstraint = err instanceof Error ? err.message : String(err);
    }
  }
  render(session);
}

function offerRenegotiation(session: Session, rejected: OrderRecord): void {
  const tpl = session.templates.find((t) => t.id === rejected.template_id);
  if (tpl) session.draft = renegotiationDraft(tpl, rejected);
}

function wizard(session: Session, draft: OrderDraft): HTMLElement {
  const pane = el('section', 'wizard');
  pane.append(el('h3', '', `order: ${draft.templateId}`));
  if (draft.parentOrderId) {
    pane.append(banner('info', `re-negotiating ${draft.parentOrderId}`));
  }
  if (draft.bindingConstraint) {
    pane.append(banner('error', draft.bindingConstraint));
  }
  for (const path of Object.keys(draft.fields)) {
    pane.append(fieldInput(session, draft, path));
  }
  const probe = el<HTMLButtonElement>('button', '', 'what-if check');
  const submit = el<HTMLButtonElement>('button', '', 'submit order');
  submit.disabled = !isSubmittable(draft);
  probe.disabled = submit.disabled;
  probe.addEventListener('click', () => void submitDraft(session, draft, true));
  submit.addEventListener('click', () => void submitDraft(session, draft, false));
  pane.append(probe, submit);
  return pane;
}

// --- dashboard ------------------------------------------------------------------

function chartSvg(series: IlSeries, hours: number): SVGSVGElement {
  const svg = document.createElementNS('http://www.w3.org/2000/svg', 'svg');
  const width = 480;
  const height = 160;
  svg.setAttribute('viewBox', `0 0 ${width} ${height}`);
  const levels = hourlyLevels(series, hours);
  const rungs = Math.max(series.ilSet.length - 1, 1);
  const coords: string[] = [];
  levels.forEach((level, hour) => {
    if (level === null || level < 0) return;
    const x = (hour / Math.max(hours - 1, 1)) * (width - 20) + 10;
    const y = height - 20 - (level / rungs) * (height - 40);
    coords.push(`${coords.length === 0 ? 'M' : 'L'}${x.toFixed(1)},${y.toFixed(1)}`);
  });
  const path = document.createElementNS('http://www.w3.org/2000/svg', 'path');
  path.setAttribute('d', coords.join(' '));
  path.setAttribute('fill', 'none');
  path.setAttribute('stroke', 'currentColor');
  svg.append(path);
  return svg;
}

async function refreshDashboard(session: Session, pane: HTMLElement): Promise<void> {
  const orderId = session.watching;
  if (!orderId) return;
  const api = session.api;
  const order = await api.getOrder(orderId);
  const tpl = session.templates.find((t) => t.id === order.template_id);
  pane.replaceChildren();
  pane.append(el('h3', '', `${order.id}  [${order.status}]`));

  if (order.status === 'ACTIVE' || order.status === 'PREPARED') {
    const series = buildIlSeries(await api.sliceEvents(orderId));
    pane.append(el('p', 'hint', `levels: ${series.ilSet.join(' < ')} (target ${series.targetIl})`));
    pane.append(chartSvg(series, 24));
    if (tpl) {
      const metricList = el('ul', 'metrics');
      for (const row of visibleMetricPanel(tpl, await api.sliceMetrics(orderId))) {
        metricList.append(el('li', '', `${row.name}: ${row.value}`));
      }
      pane.append(metricList);
    }
  }

  const controls = el('div', 'controls');
  if (order.status === 'RESERVED') {
    const activate = el<HTMLButtonElement>('button', '', 'activate');
    activate.addEventListener('click', () => {
      void api.activateSlice(orderId).then(() => refreshDashboard(session, pane));
    });
    controls.append(activate);
  }
  if (tpl && (order.status === 'ACTIVE' || order.status === 'PREPARED')) {
    for (const control of operationalControls(tpl)) {
      controls.append(el('button', `op-${control}`, control));
    }
    const terminate = el<HTMLButtonElement>('button', '', 'terminate');
    terminate.addEventListener('click', () => {
      void api.terminateSlice(orderId).then(() => refreshDashboard(session, pane));
    });
    controls.append(terminate);
  }
  pane.append(controls);
}

// --- shell -----------------------------------------------------------------------

function render(session: Session): void {
  const mount = root();
  mount.replaceChildren();
  mount.append(gallery(session));
  if (session.draft) mount.append(wizard(session, session.draft));

  const dash = el('section', 'dashboard');
  mount.append(dash);
  session.poller?.stop();
  session.poller = null;
  if (session.watching) {
    void refreshDashboard(session, dash);
    session.poller = poll(() => refreshDashboard(session, dash));
  }
}

export async function start(baseUrl: string, token: string): Promise<void> {
  const api = new PortalApi(baseUrl, token);
  const session: Session = { api, templates: [], draft: null, watching: null, poller: null };
  try {
    session.templates = await api.templates();
  } catch (err) {
    root().replaceChildren(
      banner('error', `orchestrator unreachable: ${err instanceof Error ? err.message : err}`)
    );
    return;
  }
  render(session);
}

declare global {
  interface Window {
    startPortal: typeof start;
  }
}

if (typeof window !== 'undefined') {
  window.startPortal = start;
}
