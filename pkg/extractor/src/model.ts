import * as fs from "node:fs";

import { FeatureMap } from "./tensor.js";
import { Layer, isParamLayer } from "./layers.js";

export class LayerNotFound extends Error {}
export class NonFiniteGradient extends Error {}

/** One set of frozen weights with its training-epoch tag. */
export interface Checkpoint {
  epoch: number;
  weights: Record<string, { w: number[]; b: number[] }>;
}

/** A plain stack of layers; layer names identify attribution targets. */
export class SequentialModel {
  constructor(readonly layers: Layer[]) {
    const names = new Set<string>();
    for (const layer of layers) {
      if (names.has(layer.name)) throw new Error(`duplicate layer name ${layer.name}`);
      names.add(layer.name);
    }
  }

  layerIndex(name: string): number {
    const idx = this.layers.findIndex((l) => l.name === name);
    if (idx < 0) throw new LayerNotFound(`no layer named ${name}`);
    return idx;
  }

  /** Activations after every layer, in order. */
  forwardAll(input: FeatureMap): FeatureMap[] {
    const acts: FeatureMap[] = [];
    let x = input;
    for (const layer of this.layers) {
      x = layer.forward(x);
      acts.push(x);
    }
    return acts;
  }

  logits(input: FeatureMap): Float64Array {
    const acts = this.forwardAll(input);
    return acts[acts.length - 1].data;
  }

  predict(input: FeatureMap): number {
    const scores = this.logits(input);
    let best = 0;
    for (let k = 1; k < scores.length; k++) {
      if (scores[k] > scores[best]) best = k;
    }
    return best;
  }

  /**
   * Activations of the named layer plus the gradient of the target-class
   * logit with respect to them, from one forward pass and a backward sweep
   * over the layers above the target.
   */
  attributionInputs(
    input: FeatureMap,
    layerName: string,
    targetClass: number,
  ): { activations: FeatureMap; gradients: FeatureMap } {
    const idx = this.layerIndex(layerName);
    const acts = this.forwardAll(input);
    const logits = acts[acts.length - 1];
    if (targetClass < 0 || targetClass >= logits.data.length) {
      throw new Error(`target class ${targetClass} out of range`);
    }
    let grad = new FeatureMap(logits.channels, 1, 1);
    grad.data[targetClass] = 1;
    for (let l = this.layers.length - 1; l > idx; l--) {
      grad = this.layers[l].backwardInput(grad);
    }
    for (const v of grad.data) {
      if (!Number.isFinite(v)) throw new NonFiniteGradient(`at layer ${layerName}`);
    }
    return { activations: acts[idx], gradients: grad };
  }

  snapshot(epoch: number): Checkpoint {
    const weights: Checkpoint["weights"] = {};
    for (const layer of this.layers) {
      if (isParamLayer(layer)) weights[layer.name] = layer.getParams();
    }
    return { epoch, weights };
  }

  restore(checkpoint: Checkpoint): void {
    for (const layer of this.layers) {
      if (!isParamLayer(layer)) continue;
      const params = checkpoint.weights[layer.name];
      if (!params) throw new Error(`checkpoint misses weights for ${layer.name}`);
      layer.setParams(params);
    }
  }
}

export function saveCheckpoint(checkpoint: Checkpoint, path: string): void {
  fs.writeFileSync(path, JSON.stringify(checkpoint, null, 2) + "\n");
}

export function loadCheckpoint(path: string): Checkpoint {
  return JSON.parse(fs.readFileSync(path, "utf-8")) as Checkpoint;
}
