// Builds the instantiation-level step series for a slice from its event
// feed. The feed is authoritative: the chart is a pure projection of
// PREPARED (level set), ACTIVE (starting level) and SCALED/DEGRADED rows.

import type { PipelineEvent } from './api';

export type ChartPoint = {
  hour: number;
  il: string;
  load: number | null;
  degraded: boolean;
};

export type IlSeries = {
  ilSet: string[];
  targetIl: string;
  points: ChartPoint[];
};

type DescriptorPayload = {
  descriptor?: { target_il_id?: string; il_set?: { id: string }[] };
};

type ScalePayload = {
  hour?: number;
  from_il?: string;
  to_il?: string;
  load?: number;
};

export function buildIlSeries(events: PipelineEvent[]): IlSeries {
  let ilSet: string[] = [];
  let targetIl = '';
  const points: ChartPoint[] = [];

  for (const event of events) {
    switch (event.stage) {
      case 'PREPARED': {
        const payload = event.payload as DescriptorPayload;
        targetIl = payload.descriptor?.target_il_id ?? '';
        ilSet = (payload.descriptor?.il_set ?? []).map((level) => level.id);
        break;
      }
      case 'ACTIVE': {
        const il = event.payload.current_il;
        if (typeof il === 'string') {
          points.push({ hour: 0, il, load: null, degraded: false });
        }
        break;
      }
      case 'SCALED': {
        const p = event.payload as ScalePayload;
        if (typeof p.to_il === 'string') {
          points.push({
            hour: p.hour ?? 0,
            il: p.to_il,
            load: p.load ?? null,
            degraded: false,
          });
        }
        break;
      }
      case 'DEGRADED': {
        // the slice is stuck at from_il: level unchanged, hour flagged
        const p = event.payload as ScalePayload;
        if (typeof p.from_il === 'string') {
          points.push({
            hour: p.hour ?? 0,
            il: p.from_il,
            load: p.load ?? null,
            degraded: true,
          });
        }
        break;
      }
      default:
        break;
    }
  }
  return { ilSet, targetIl, points };
}

// Scaling steps only (the activation point is not a step). A slice that
// never scaled draws as a flat line at the activation level.
export function stepLabels(series: IlSeries): string[] {
  return series.points.slice(1).map((p) => p.il);
}

export function stepCount(series: IlSeries): number {
  return Math.max(0, series.points.length - 1);
}

export function levelIndex(series: IlSeries, il: string): number {
  return series.ilSet.indexOf(il);
}

// hour -> level-index polyline, one entry per hour up to `hours`, holding
// the last level between events; handy for both SVG and text renderers.
export function hourlyLevels(series: IlSeries, hours: number): (number | null)[] {
  const out: (number | null)[] = new Array(hours).fill(null);
  let current: number | null = null;
  let next = 0;
  for (let hour = 0; hour < hours; hour++) {
    while (next < series.points.length) {
      const point = series.points[next];
      if (point === undefined || point.hour > hour) break;
      current = levelIndex(series, point.il);
      next++;
    }
    out[hour] = current;
  }
  return out;
}
