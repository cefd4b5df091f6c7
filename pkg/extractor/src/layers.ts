import { FeatureMap } from "./tensor.js";

/**
 * Inference-time layer: a forward pass plus the gradient of a scalar output
 * with respect to this layer's *input*, given the gradient with respect to
 * its output. Weight gradients are never needed here — checkpoints are
 * fixed; only activation gradients flow back for attribution.
 */
export interface Layer {
  readonly name: string;
  forward(x: FeatureMap): FeatureMap;
  backwardInput(grad: FeatureMap): FeatureMap;
}

/** Layers with loadable parameters (everything a checkpoint stores). */
export interface ParamLayer extends Layer {
  getParams(): { w: number[]; b: number[] };
  setParams(params: { w: number[]; b: number[] }): void;
}

export function isParamLayer(layer: Layer): layer is ParamLayer {
  return typeof (layer as ParamLayer).getParams === "function";
}

/** 2D convolution, stride 1, zero padding keeping the spatial size. */
export class Conv2d implements ParamLayer {
  readonly weight: Float64Array; // [outC][inC][k][k]
  readonly bias: Float64Array; // [outC]
  private inputShape: { h: number; w: number } | null = null;

  constructor(
    readonly name: string,
    readonly inChannels: number,
    readonly outChannels: number,
    readonly kernel: number,
  ) {
    this.weight = new Float64Array(outChannels * inChannels * kernel * kernel);
    this.bias = new Float64Array(outChannels);
  }

  private wIndex(o: number, ci: number, ki: number, kj: number): number {
    return ((o * this.inChannels + ci) * this.kernel + ki) * this.kernel + kj;
  }

  forward(x: FeatureMap): FeatureMap {
    if (x.channels !== this.inChannels) {
      throw new Error(`${this.name}: expected ${this.inChannels} channels, got ${x.channels}`);
    }
    this.inputShape = { h: x.height, w: x.width };
    const pad = Math.floor(this.kernel / 2);
    const out = new FeatureMap(this.outChannels, x.height, x.width);
    for (let o = 0; o < this.outChannels; o++) {
      for (let i = 0; i < x.height; i++) {
        for (let j = 0; j < x.width; j++) {
          let acc = this.bias[o];
          for (let ci = 0; ci < this.inChannels; ci++) {
            for (let ki = 0; ki < this.kernel; ki++) {
              const ii = i + ki - pad;
              if (ii < 0 || ii >= x.height) continue;
              for (let kj = 0; kj < this.kernel; kj++) {
                const jj = j + kj - pad;
                if (jj < 0 || jj >= x.width) continue;
                acc += this.weight[this.wIndex(o, ci, ki, kj)] * x.get(ci, ii, jj);
              }
            }
          }
          out.set(o, i, j, acc);
        }
      }
    }
    return out;
  }

  backwardInput(grad: FeatureMap): FeatureMap {
    if (this.inputShape === null) {
      throw new Error(`${this.name}: backward before forward`);
    }
    const { h, w } = this.inputShape;
    const pad = Math.floor(this.kernel / 2);
    const gx = new FeatureMap(this.inChannels, h, w);
    for (let o = 0; o < this.outChannels; o++) {
      for (let i = 0; i < grad.height; i++) {
        for (let j = 0; j < grad.width; j++) {
          const g = grad.get(o, i, j);
          if (g === 0) continue;
          for (let ci = 0; ci < this.inChannels; ci++) {
            for (let ki = 0; ki < this.kernel; ki++) {
              const ii = i + ki - pad;
              if (ii < 0 || ii >= h) continue;
              for (let kj = 0; kj < this.kernel; kj++) {
                const jj = j + kj - pad;
                if (jj < 0 || jj >= w) continue;
                gx.data[gx.index(ci, ii, jj)] += this.weight[this.wIndex(o, ci, ki, kj)] * g;
              }
            }
          }
        }
      }
    }
    return gx;
  }

  getParams(): { w: number[]; b: number[] } {
    return { w: Array.from(this.weight), b: Array.from(this.bias) };
  }

  setParams(params: { w: number[]; b: number[] }): void {
    if (params.w.length !== this.weight.length || params.b.length !== this.bias.length) {
      throw new Error(`${this.name}: checkpoint shape mismatch`);
    }
    this.weight.set(params.w);
    this.bias.set(params.b);
  }
}

export class ReLU implements Layer {
  private mask: Uint8Array | null = null;
  private shape: { c: number; h: number; w: number } | null = null;

  constructor(readonly name: string) {}

  forward(x: FeatureMap): FeatureMap {
    const out = FeatureMap.zerosLike(x);
    this.mask = new Uint8Array(x.data.length);
    this.shape = { c: x.channels, h: x.height, w: x.width };
    for (let k = 0; k < x.data.length; k++) {
      if (x.data[k] > 0) {
        out.data[k] = x.data[k];
        this.mask[k] = 1;
      }
    }
    return out;
  }

  backwardInput(grad: FeatureMap): FeatureMap {
    if (this.mask === null || this.shape === null) {
      throw new Error(`${this.name}: backward before forward`);
    }
    const gx = new FeatureMap(this.shape.c, this.shape.h, this.shape.w);
    for (let k = 0; k < gx.data.length; k++) {
      gx.data[k] = this.mask[k] ? grad.data[k] : 0;
    }
    return gx;
  }
}

/** Global average pooling: (C, H, W) -> (C, 1, 1). */
export class GlobalAvgPool implements Layer {
  private shape: { c: number; h: number; w: number } | null = null;

  constructor(readonly name: string) {}

  forward(x: FeatureMap): FeatureMap {
    this.shape = { c: x.channels, h: x.height, w: x.width };
    const out = new FeatureMap(x.channels, 1, 1);
    const plane = x.height * x.width;
    for (let c = 0; c < x.channels; c++) {
      let acc = 0;
      const ch = x.channel(c);
      for (let k = 0; k < plane; k++) acc += ch[k];
      out.data[c] = acc / plane;
    }
    return out;
  }

  backwardInput(grad: FeatureMap): FeatureMap {
    if (this.shape === null) throw new Error(`${this.name}: backward before forward`);
    const { c, h, w } = this.shape;
    const gx = new FeatureMap(c, h, w);
    const plane = h * w;
    for (let ci = 0; ci < c; ci++) {
      const g = grad.data[ci] / plane;
      gx.channel(ci).fill(g);
    }
    return gx;
  }
}

/** Fully connected head over a (C, 1, 1) vector. */
export class Dense implements ParamLayer {
  readonly weight: Float64Array; // [out][in]
  readonly bias: Float64Array;

  constructor(
    readonly name: string,
    readonly inFeatures: number,
    readonly outFeatures: number,
  ) {
    this.weight = new Float64Array(outFeatures * inFeatures);
    this.bias = new Float64Array(outFeatures);
  }

  forward(x: FeatureMap): FeatureMap {
    if (x.channels !== this.inFeatures || x.height !== 1 || x.width !== 1) {
      throw new Error(`${this.name}: expected (${this.inFeatures}, 1, 1) input`);
    }
    const out = new FeatureMap(this.outFeatures, 1, 1);
    for (let m = 0; m < this.outFeatures; m++) {
      let acc = this.bias[m];
      for (let c = 0; c < this.inFeatures; c++) {
        acc += this.weight[m * this.inFeatures + c] * x.data[c];
      }
      out.data[m] = acc;
    }
    return out;
  }

  backwardInput(grad: FeatureMap): FeatureMap {
    const gx = new FeatureMap(this.inFeatures, 1, 1);
    for (let c = 0; c < this.inFeatures; c++) {
      let acc = 0;
      for (let m = 0; m < this.outFeatures; m++) {
        acc += this.weight[m * this.inFeatures + c] * grad.data[m];
      }
      gx.data[c] = acc;
    }
    return gx;
  }

  getParams(): { w: number[]; b: number[] } {
    return { w: Array.from(this.weight), b: Array.from(this.bias) };
  }

  setParams(params: { w: number[]; b: number[] }): void {
    if (params.w.length !== this.weight.length || params.b.length !== this.bias.length) {
      throw new Error(`${this.name}: checkpoint shape mismatch`);
    }
    this.weight.set(params.w);
    this.bias.set(params.b);
  }
}
