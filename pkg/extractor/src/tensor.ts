/** Minimal channel-major (C, H, W) feature map backed by a flat array. */
export class FeatureMap {
  readonly data: Float64Array;

  constructor(
    readonly channels: number,
    readonly height: number,
    readonly width: number,
    data?: Float64Array,
  ) {
    const size = channels * height * width;
    if (data !== undefined && data.length !== size) {
      throw new Error(`data length ${data.length} does not match ${channels}x${height}x${width}`);
    }
    this.data = data ?? new Float64Array(size);
  }

  index(c: number, i: number, j: number): number {
    return (c * this.height + i) * this.width + j;
  }

  get(c: number, i: number, j: number): number {
    return this.data[this.index(c, i, j)];
  }

  set(c: number, i: number, j: number, v: number): void {
    this.data[this.index(c, i, j)] = v;
  }

  /** View of one channel as an h*w slice. */
  channel(c: number): Float64Array {
    const plane = this.height * this.width;
    return this.data.subarray(c * plane, (c + 1) * plane);
  }

  clone(): FeatureMap {
    return new FeatureMap(this.channels, this.height, this.width, this.data.slice());
  }

  static zerosLike(m: FeatureMap): FeatureMap {
    return new FeatureMap(m.channels, m.height, m.width);
  }
}
