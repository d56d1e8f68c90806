/**
 * Per-point RGB colors for the four view modes: ground red, non-ground
 * grey, unlabeled dim, plus scalar ramps for height, intensity, and model
 * prediction.
 */

import { Cloud, GROUND, UNLABELED } from "./api.js";
import { ColorMode } from "./state.js";

export const GROUND_COLOR: [number, number, number] = [0.9, 0.15, 0.12];
export const NON_GROUND_COLOR: [number, number, number] = [0.62, 0.62, 0.62];
export const UNLABELED_COLOR: [number, number, number] = [0.3, 0.3, 0.34];

/** Cold-to-warm ramp over t in [0, 1]. */
export function ramp(t: number): [number, number, number] {
  const x = Math.min(1, Math.max(0, t));
  return [0.15 + 0.8 * x, 0.2 + 0.55 * (1 - Math.abs(2 * x - 1)), 0.95 - 0.8 * x];
}

export function labelColor(label: number): [number, number, number] {
  if (label === GROUND) return GROUND_COLOR;
  if (label === UNLABELED) return UNLABELED_COLOR;
  return NON_GROUND_COLOR;
}

export function colorize(
  cloud: Cloud,
  labels: Uint8Array,
  mode: ColorMode,
  prediction: Float64Array | null,
  out?: Float32Array,
): Float32Array {
  const colors = out ?? new Float32Array(cloud.count * 3);
  let lo = 0;
  let hi = 1;
  if (mode === "by_height") {
    lo = Infinity;
    hi = -Infinity;
    for (let i = 0; i < cloud.count; i++) {
      if (cloud.up[i] < lo) lo = cloud.up[i];
      if (cloud.up[i] > hi) hi = cloud.up[i];
    }
    if (hi <= lo) hi = lo + 1;
  }
  for (let i = 0; i < cloud.count; i++) {
    let rgb: [number, number, number];
    switch (mode) {
      case "by_label":
        rgb = labelColor(labels[i]);
        break;
      case "by_height":
        rgb = ramp((cloud.up[i] - lo) / (hi - lo));
        break;
      case "by_intensity":
        rgb = ramp(cloud.intensity[i]);
        break;
      case "by_prediction":
        rgb = prediction ? ramp(prediction[i]) : UNLABELED_COLOR;
        break;
    }
    colors[3 * i] = rgb[0];
    colors[3 * i + 1] = rgb[1];
    colors[3 * i + 2] = rgb[2];
  }
  return colors;
}

/** Recolor only the listed points in label mode, avoiding a full pass. */
export function recolorIndices(colors: Float32Array, labels: Uint8Array,
                               indices: number[]): void {
  for (const i of indices) {
    const [r, g, b] = labelColor(labels[i]);
    colors[3 * i] = r;
    colors[3 * i + 1] = g;
    colors[3 * i + 2] = b;
  }
}
