/**
 * Map picked points to (ring, azimuth column) flood seeds using the same
 * binning the server's encoder applies.
 */

import { Cloud } from "./api.js";

export const BIN_WIDTH_DEG = 1.0;

export function azimuthColumn(forward: number, left: number, binWidthDeg = BIN_WIDTH_DEG): number {
  const columns = Math.round(360 / binWidthDeg);
  const azimuth = (Math.atan2(left, forward) * 180) / Math.PI;
  const column = Math.floor((azimuth + 180) / binWidthDeg);
  return ((column % columns) + columns) % columns;
}

/** Deduplicated (ring, column) seeds for a set of picked point indices. */
export function seedsFromPicks(cloud: Cloud, picks: Iterable<number>,
                               binWidthDeg = BIN_WIDTH_DEG): Array<[number, number]> {
  const seen = new Set<number>();
  const columns = Math.round(360 / binWidthDeg);
  const seeds: Array<[number, number]> = [];
  for (const i of picks) {
    if (cloud.forward[i] === 0 && cloud.left[i] === 0) continue;
    const ring = cloud.ring[i];
    const column = azimuthColumn(cloud.forward[i], cloud.left[i], binWidthDeg);
    const key = ring * columns + column;
    if (!seen.has(key)) {
      seen.add(key);
      seeds.push([ring, column]);
    }
  }
  return seeds;
}
