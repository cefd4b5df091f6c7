import * as fs from "node:fs";
import * as path from "node:path";

const MAGIC = "ADM1";
const HEADER_BYTES = 12;

/**
 * Binary map container: "ADM1", uint32le height, uint32le width, then
 * height*width float32le values row-major. Values must already be
 * normalized to [0, 1].
 */
export function encodeMap(values: Float64Array, height: number, width: number): Buffer {
  if (values.length !== height * width) {
    throw new Error(`payload length ${values.length} does not match ${height}x${width}`);
  }
  const buf = Buffer.alloc(HEADER_BYTES + 4 * values.length);
  buf.write(MAGIC, 0, "ascii");
  buf.writeUInt32LE(height, 4);
  buf.writeUInt32LE(width, 8);
  for (let k = 0; k < values.length; k++) {
    buf.writeFloatLE(Math.fround(values[k]), HEADER_BYTES + 4 * k);
  }
  return buf;
}

export function writeMapFile(filePath: string, values: Float64Array, height: number, width: number): void {
  fs.mkdirSync(path.dirname(filePath), { recursive: true });
  fs.writeFileSync(filePath, encodeMap(values, height, width));
}

export interface DecodedMap {
  height: number;
  width: number;
  values: Float64Array;
}

/** Reader used by the test suite to cross-check written containers. */
export function readMapFile(filePath: string): DecodedMap {
  const buf = fs.readFileSync(filePath);
  if (buf.length < HEADER_BYTES || buf.toString("ascii", 0, 4) !== MAGIC) {
    throw new Error(`${filePath}: not a map container`);
  }
  const height = buf.readUInt32LE(4);
  const width = buf.readUInt32LE(8);
  const expected = HEADER_BYTES + 4 * height * width;
  if (buf.length !== expected) {
    throw new Error(`${filePath}: expected ${expected} bytes, got ${buf.length}`);
  }
  const values = new Float64Array(height * width);
  for (let k = 0; k < values.length; k++) {
    values[k] = buf.readFloatLE(HEADER_BYTES + 4 * k);
  }
  return { height, width, values };
}
