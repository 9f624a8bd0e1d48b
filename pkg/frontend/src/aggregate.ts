/** Cumulative-byte aggregation for chart series. */

import { MetricRow } from "./csv";

/**
 * Cumulative instrumented bytes per tick: index t holds the total bytes
 * of instrumented payloads sent at ticks <= t.
 */
export function cumulativeInstrumented(rows: MetricRow[]): number[] {
  let maxTick = 0;
  for (const row of rows) {
    if (row.tick > maxTick) maxTick = row.tick;
  }
  const perTick = new Array<number>(maxTick + 1).fill(0);
  for (const row of rows) {
    if (row.instrumented) perTick[row.tick] += row.bytes;
  }
  let running = 0;
  for (let t = 0; t <= maxTick; t++) {
    running += perTick[t];
    perTick[t] = running;
  }
  return perTick;
}

/**
 * Pointwise mean of cumulative curves. Shorter runs stay flat at their
 * final total once finished, matching what a longer observation window
 * would have recorded.
 */
export function averageAcross(curves: number[][]): number[] {
  if (curves.length === 0) return [];
  const length = Math.max(...curves.map((c) => c.length));
  const out = new Array<number>(length).fill(0);
  for (const curve of curves) {
    const last = curve.length ? curve[curve.length - 1] : 0;
    for (let t = 0; t < length; t++) {
      out[t] += t < curve.length ? curve[t] : last;
    }
  }
  for (let t = 0; t < length; t++) {
    out[t] /= curves.length;
  }
  return out;
}
