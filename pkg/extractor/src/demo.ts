import { Conv2d, Dense, GlobalAvgPool, ReLU } from "./layers.js";
import { Checkpoint, SequentialModel } from "./model.js";
import { FeatureMap } from "./tensor.js";
import { mulberry32 } from "./rng.js";

export const DEMO_ARCHITECTURE = "demo_cnn";
export const DEMO_TARGET_LAYER = "conv2_relu";
export const DEMO_CLASS_NAMES = ["checker", "solid"];

/**
 * Tiny two-class CNN used for self-contained end-to-end runs: a
 * high-frequency detector channel and a smoothing channel, identity-mixed
 * by a second convolution, pooled into a linear head.
 */
export function makeDemoModel(): SequentialModel {
  return new SequentialModel([
    new Conv2d("conv1", 1, 2, 3),
    new ReLU("conv1_relu"),
    new Conv2d("conv2", 2, 2, 3),
    new ReLU(DEMO_TARGET_LAYER),
    new GlobalAvgPool("gap"),
    new Dense("head", 2, 2),
  ]);
}

function conv2Weights(center: number, cross: number): number[] {
  // Two filters, each reading its own input channel: [o][ci][3][3].
  const w = new Array<number>(2 * 2 * 9).fill(0);
  const at = (o: number, ci: number, ki: number, kj: number) =>
    ((o * 2 + ci) * 3 + ki) * 3 + kj;
  for (let c = 0; c < 2; c++) {
    w[at(c, c, 1, 1)] = center;
    w[at(c, c, 0, 1)] = cross;
    w[at(c, c, 2, 1)] = cross;
    w[at(c, c, 1, 0)] = cross;
    w[at(c, c, 1, 2)] = cross;
  }
  return w;
}

/**
 * Fixed weights for both training phases. The late checkpoint keeps the
 * detectors and the head but smears the mixing convolution, so predictions
 * are preserved while the attribution structure moves.
 */
export function demoCheckpoints(): { tl: Checkpoint; ft: Checkpoint } {
  const conv1 = {
    w: [
      // channel 0: high-frequency (Laplacian) detector
      0, -1, 0, -1, 4, -1, 0, -1, 0,
      // channel 1: 3x3 box average
      1 / 9, 1 / 9, 1 / 9, 1 / 9, 1 / 9, 1 / 9, 1 / 9, 1 / 9, 1 / 9,
    ],
    b: [0, 0],
  };
  const head = { w: [1, -0.6, -0.6, 1], b: [0, 0] };
  const tl: Checkpoint = {
    epoch: 8,
    weights: {
      conv1,
      conv2: { w: conv2Weights(1, 0), b: [0, 0] },
      head,
    },
  };
  const ft: Checkpoint = {
    epoch: 19,
    weights: {
      conv1,
      conv2: { w: conv2Weights(0.6, 0.1), b: [0, 0] },
      head,
    },
  };
  return { tl, ft };
}

export interface DemoSample {
  id: string;
  input: FeatureMap;
  label: number; // 0 = checker texture, 1 = solid patch
}

/** Deterministic toy set: a 6x6 patch of either texture at a jittered spot. */
export function makeToyDataset(n: number, seed: number, size = 16): DemoSample[] {
  if (size < 10) throw new Error("grid too small for the 6x6 patch");
  const rand = mulberry32(seed);
  const samples: DemoSample[] = [];
  for (let i = 0; i < n; i++) {
    const label = i % 2;
    const r0 = 1 + Math.floor(rand() * (size - 8));
    const c0 = 1 + Math.floor(rand() * (size - 8));
    const input = new FeatureMap(1, size, size);
    for (let r = r0; r < r0 + 6; r++) {
      for (let c = c0; c < c0 + 6; c++) {
        const on = label === 1 ? true : (r + c) % 2 === 0;
        if (on) input.set(0, r, c, 1);
      }
    }
    samples.push({ id: `s${String(i).padStart(4, "0")}`, input, label });
  }
  return samples;
}

/**
 * Model whose class-0 logit is exactly the sum of its single feature map,
 * so the logit gradient at the feature layer is a uniform 1 and all CAM
 * weighting schemes collapse to the same rectified map.
 */
export function makeLinearSumModel(height: number, width: number, weight = 1): SequentialModel {
  const conv = new Conv2d("feat", 1, 1, 1);
  conv.setParams({ w: [weight], b: [0] });
  const head = new Dense("head", 1, 2);
  head.setParams({ w: [height * width, -(height * width)], b: [0, 0] });
  return new SequentialModel([
    conv,
    new ReLU("feat_relu"),
    new GlobalAvgPool("gap"),
    head,
  ]);
}

export function makePatchInput(
  height: number,
  width: number,
  r0: number,
  c0: number,
  r1: number,
  c1: number,
): FeatureMap {
  const input = new FeatureMap(1, height, width);
  for (let r = r0; r < r1; r++) {
    for (let c = c0; c < c1; c++) input.set(0, r, c, 1);
  }
  return input;
}
