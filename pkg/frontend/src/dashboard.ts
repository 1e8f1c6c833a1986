// Dashboard view model. The metric panel and the action buttons mirror the
// template's exposure section on the client side: even if the server sent
// more, the portal renders only what the template advertises.

import type { TemplateCard } from './api';

export type MetricRow = { name: string; value: number };

export function visibleMetricPanel(
  tpl: TemplateCard,
  metrics: Record<string, number>
): MetricRow[] {
  return tpl.operational_reqs.visible_metrics
    .filter((name) => name in metrics)
    .map((name) => ({ name, value: metrics[name] as number }));
}

// Operational controls the portal implements, keyed by the action that
// unlocks them. Lifecycle verbs (activate/terminate) are always offered;
// these are only shown when the template's allowed_actions include them.
const CONTROL_FOR_ACTION: Record<string, string> = {
  SCALE_TO: 'trace-replay',
  RECONFIGURE: 'reconfigure',
};

export function operationalControls(tpl: TemplateCard): string[] {
  return tpl.operational_reqs.allowed_actions
    .map((action) => CONTROL_FOR_ACTION[action])
    .filter((control): control is string => control !== undefined);
}

export type PollHandle = { stop: () => void };

// Fixed-interval poller that never overlaps ticks: a slow response simply
// delays the next round instead of stacking requests.
export function poll(tick: () => Promise<void>, intervalMs = 2000): PollHandle {
  let stopped = false;
  let timer: ReturnType<typeof setTimeout> | undefined;

  const run = async () => {
    try {
      await tick();
    } catch {
      // a failed poll keeps polling; the view shows the last good state
    }
    if (!stopped) timer = setTimeout(run, intervalMs);
  };
  timer = setTimeout(run, intervalMs);

  return {
    stop() {
      stopped = true;
      if (timer !== undefined) clearTimeout(timer);
    },
  };
}
