import { FeatureMap } from "./tensor.js";

export type CamMethod = "gradcam" | "gradcampp" | "layercam";
export const CAM_METHODS: CamMethod[] = ["gradcam", "gradcampp", "layercam"];

/** One 2D attribution map, min-max normalized to [0, 1]. */
export interface AttributionMap {
  height: number;
  width: number;
  values: Float64Array; // row-major
  degenerate: boolean; // raw combination was constant; values are all zero
}

function normalizeMap(raw: Float64Array, height: number, width: number): AttributionMap {
  let lo = Infinity;
  let hi = -Infinity;
  for (const v of raw) {
    if (v < lo) lo = v;
    if (v > hi) hi = v;
  }
  if (hi === lo) {
    return { height, width, values: new Float64Array(height * width), degenerate: true };
  }
  const values = new Float64Array(raw.length);
  const span = hi - lo;
  for (let k = 0; k < raw.length; k++) values[k] = (raw[k] - lo) / span;
  return { height, width, values, degenerate: false };
}

function combineGradcam(a: FeatureMap, g: FeatureMap): Float64Array {
  const plane = a.height * a.width;
  const out = new Float64Array(plane);
  for (let c = 0; c < a.channels; c++) {
    const gc = g.channel(c);
    let alpha = 0;
    for (let k = 0; k < plane; k++) alpha += gc[k];
    alpha /= plane;
    const ac = a.channel(c);
    for (let k = 0; k < plane; k++) out[k] += alpha * ac[k];
  }
  return out;
}

function combineGradcampp(a: FeatureMap, g: FeatureMap): Float64Array {
  // Higher-order terms follow the usual closed form for an exponentiated
  // score: grad^2 / (2 grad^2 + sum(A) grad^3), with zero-denominator
  // locations dropped.
  const plane = a.height * a.width;
  const out = new Float64Array(plane);
  for (let c = 0; c < a.channels; c++) {
    const ac = a.channel(c);
    const gc = g.channel(c);
    let actSum = 0;
    for (let k = 0; k < plane; k++) actSum += ac[k];
    let weight = 0;
    for (let k = 0; k < plane; k++) {
      const grad = gc[k];
      if (grad <= 0) continue; // ReLU on gradients inside the weight sum
      const g2 = grad * grad;
      const denom = 2 * g2 + actSum * g2 * grad;
      if (denom === 0) continue;
      weight += (g2 / denom) * grad;
    }
    for (let k = 0; k < plane; k++) out[k] += weight * ac[k];
  }
  return out;
}

function combineLayercam(a: FeatureMap, g: FeatureMap): Float64Array {
  const plane = a.height * a.width;
  const out = new Float64Array(plane);
  for (let c = 0; c < a.channels; c++) {
    const ac = a.channel(c);
    const gc = g.channel(c);
    for (let k = 0; k < plane; k++) {
      const grad = gc[k];
      if (grad > 0) out[k] += grad * ac[k];
    }
  }
  return out;
}

/**
 * Combine layer activations with target-class gradients, rectify, and
 * normalize. All three methods reduce to the same rectified feature map
 * when the gradient is a uniform positive constant.
 */
export function computeCam(method: CamMethod, activations: FeatureMap, gradients: FeatureMap): AttributionMap {
  if (
    activations.channels !== gradients.channels ||
    activations.height !== gradients.height ||
    activations.width !== gradients.width
  ) {
    throw new Error("activation/gradient shape mismatch");
  }
  let raw: Float64Array;
  switch (method) {
    case "gradcam":
      raw = combineGradcam(activations, gradients);
      break;
    case "gradcampp":
      raw = combineGradcampp(activations, gradients);
      break;
    case "layercam":
      raw = combineLayercam(activations, gradients);
      break;
    default:
      throw new Error(`unknown method ${method as string}`);
  }
  for (let k = 0; k < raw.length; k++) {
    if (raw[k] < 0) raw[k] = 0;
  }
  return normalizeMap(raw, activations.height, activations.width);
}
