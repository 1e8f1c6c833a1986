// Order wizard state. One field per customizable path advertised by the
// template; the submit button stays disabled until every field sits inside
// its advertised range, so an out-of-range value never reaches the wire.

import type { FieldError, Menu, OrderRecord, TemplateCard } from './api';

export type FieldState = {
  path: string;
  menu: Menu;
  value: unknown;
  dirty: boolean;
  error: string | null;
  highlighted: boolean;
};

export type OrderDraft = {
  templateId: string;
  fields: Record<string, FieldState>;
  parentOrderId: string | null;
  // verbatim rejection cause when this draft re-negotiates a bounced order
  bindingConstraint: string | null;
};

export function baseValue(tpl: TemplateCard, path: string): unknown {
  let node: unknown = tpl;
  for (const key of path.split('.')) {
    if (typeof node !== 'object' || node === null) return undefined;
    node = (node as Record<string, unknown>)[key];
  }
  return node;
}

export function fieldProblem(menu: Menu, value: unknown): string | null {
  if ('choices' in menu) {
    const pick = JSON.stringify(value);
    return menu.choices.some((c) => JSON.stringify(c) === pick)
      ? null
      : `not one of the ${menu.choices.length} allowed choices`;
  }
  if (typeof value !== 'number' || Number.isNaN(value)) {
    return 'must be a number';
  }
  if (value < menu.min || value > menu.max) {
    return `outside [${menu.min}, ${menu.max}]`;
  }
  return null;
}

export function newDraft(tpl: TemplateCard): OrderDraft {
  const fields: Record<string, FieldState> = {};
  for (const [path, menu] of Object.entries(tpl.customizable)) {
    fields[path] = {
      path,
      menu,
      value: baseValue(tpl, path),
      dirty: false,
      error: null,
      highlighted: false,
    };
  }
  return { templateId: tpl.id, fields, parentOrderId: null, bindingConstraint: null };
}

export function setField(draft: OrderDraft, path: string, value: unknown): void {
  const field = draft.fields[path];
  if (!field) throw new Error(`${path} is not customizable on ${draft.templateId}`);
  field.value = value;
  field.dirty = true;
  field.error = fieldProblem(field.menu, value);
}

export function isSubmittable(draft: OrderDraft): boolean {
  return Object.values(draft.fields).every((f) => f.error === null);
}

export function overrides(draft: OrderDraft): Record<string, unknown> {
  const out: Record<string, unknown> = {};
  for (const field of Object.values(draft.fields)) {
    if (field.dirty) out[field.path] = field.value;
  }
  return out;
}

// Server-side 422s land back on the field they name; anything aimed at a
// path we do not render becomes a draft-level constraint banner.
export function applyServerErrors(draft: OrderDraft, errors: FieldError[]): void {
  for (const err of errors) {
    const field = draft.fields[err.path];
    if (field) {
      field.error = err.message;
      field.highlighted = true;
    } else {
      draft.bindingConstraint = err.message;
    }
  }
}

// Which menus could plausibly relax a given rejection. Geolocation bounces
// point at the geo menus; capacity bounces at performance (ask for less)
// and geo (go somewhere emptier). Anything else gets no hint.
export function highlightedPaths(tpl: TemplateCard, cause: string | null): string[] {
  if (!cause) return [];
  const paths = Object.keys(tpl.customizable);
  if (cause.startsWith('geolocation')) {
    return paths.filter((p) => p.startsWith('geo_reqs.'));
  }
  if (cause.startsWith('CAPACITY')) {
    return paths.filter(
      (p) => p.startsWith('network_reqs.performance.') || p.startsWith('geo_reqs.')
    );
  }
  return [];
}

export function renegotiationDraft(tpl: TemplateCard, rejected: OrderRecord): OrderDraft {
  if (rejected.template_id !== tpl.id) {
    throw new Error(`order ${rejected.id} was cut from ${rejected.template_id}, not ${tpl.id}`);
  }
  const draft = newDraft(tpl);
  draft.parentOrderId = rejected.id;
  draft.bindingConstraint = rejected.rejection_cause;
  for (const [path, value] of Object.entries(rejected.attribute_overrides)) {
    if (draft.fields[path]) setField(draft, path, value);
  }
  for (const path of highlightedPaths(tpl, rejected.rejection_cause)) {
    const field = draft.fields[path];
    if (field) field.highlighted = true;
  }
  return draft;
}
