/**
 * Chart view-models for the project dashboard.
 *
 * The stats endpoint already computes every number: completion fractions,
 * per-class totals, and the per-image histogram. This module only
 * reshapes that body for rendering. No totals, fractions, or buckets are
 * recomputed client-side; percent labels are formatted straight from the
 * server's fractions.
 */

import type { StatsBody } from "./types.js";

export interface PieSlice {
  status: string;
  fraction: number;
  label: string;
}

export interface Bar {
  name: string;
  count: number;
}

export interface HistogramBucket {
  range: string;
  count: number;
}

export interface DashboardModel {
  empty: boolean;
  imageCount: number;
  completionPie: PieSlice[];
  classBars: Bar[];
  histogram: HistogramBucket[];
}

export const percentLabel = (fraction: number): string =>
  `${Math.round(fraction * 100)}%`;

export const buildDashboard = (stats: StatsBody): DashboardModel => ({
  empty: stats.image_count === 0,
  imageCount: stats.image_count,
  completionPie: Object.entries(stats.completion).map(([status, fraction]) => ({
    status,
    fraction,
    label: percentLabel(fraction),
  })),
  classBars: Object.entries(stats.class_counts).map(([name, count]) => ({
    name,
    count,
  })),
  histogram: Object.entries(stats.per_image_histogram).map(([range, count]) => ({
    range,
    count,
  })),
});

/** Name of the tallest bar, for highlighting; ties keep the first. */
export const dominantClass = (model: DashboardModel): string | null => {
  let best: Bar | null = null;
  for (const bar of model.classBars) {
    if (best === null || bar.count > best.count) best = bar;
  }
  return best?.name ?? null;
};
