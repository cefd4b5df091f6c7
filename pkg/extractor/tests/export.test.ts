import * as fs from "node:fs";
import * as os from "node:os";
import * as path from "node:path";

import { afterEach, beforeEach, describe, expect, it } from "vitest";

import { readMapFile } from "../src/adm.js";
import { CAM_METHODS } from "../src/cam.js";
import {
  DEMO_ARCHITECTURE,
  DEMO_CLASS_NAMES,
  DEMO_TARGET_LAYER,
  demoCheckpoints,
  makeDemoModel,
  makeToyDataset,
} from "../src/demo.js";
import { exportCohort } from "../src/export.js";
import { Manifest } from "../src/manifest.js";

let dir: string;

beforeEach(() => {
  dir = fs.mkdtempSync(path.join(os.tmpdir(), "cohort-"));
});

afterEach(() => {
  fs.rmSync(dir, { recursive: true, force: true });
});

function buildCohort(options: { identical?: boolean; flipFirst?: boolean } = {}) {
  const { tl, ft } = demoCheckpoints();
  const dataset = makeToyDataset(8, 5);
  const manifestPath = exportCohort({
    model: makeDemoModel(),
    tl,
    ft: options.identical ? { epoch: ft.epoch, weights: tl.weights } : ft,
    targetLayer: DEMO_TARGET_LAYER,
    methods: CAM_METHODS,
    dataset,
    classNames: DEMO_CLASS_NAMES,
    architecture: DEMO_ARCHITECTURE,
    outDir: dir,
    layerLabel: DEMO_TARGET_LAYER,
    flipLabelIds: options.flipFirst ? [dataset[0].id] : [],
  });
  return JSON.parse(fs.readFileSync(manifestPath, "utf-8")) as Manifest;
}

describe("cohort export", () => {
  it("writes a complete manifest with valid map files", () => {
    const manifest = buildCohort();
    expect(manifest.schema_version).toBe(1);
    expect(manifest.architectures).toEqual([DEMO_ARCHITECTURE]);
    expect(manifest.methods).toEqual(CAM_METHODS);
    expect(manifest.samples).toHaveLength(8);
    expect(manifest.phases.map((p) => p.role)).toEqual(["TL", "FT"]);
    expect(manifest.phases[0].epoch).not.toBe(manifest.phases[1].epoch);

    let files = 0;
    for (const sample of manifest.samples) {
      for (const method of CAM_METHODS) {
        for (const role of ["TL", "FT"] as const) {
          const rel = sample.maps[DEMO_ARCHITECTURE][method][role];
          const decoded = readMapFile(path.join(dir, rel));
          expect(decoded.height).toBeGreaterThan(0);
          files += 1;
        }
      }
    }
    expect(files).toBe(8 * CAM_METHODS.length * 2);
  });

  it("records correct predictions for the toy set", () => {
    const manifest = buildCohort();
    for (const sample of manifest.samples) {
      const preds = sample.predictions[DEMO_ARCHITECTURE];
      expect(preds.TL).toBe(sample.true_class);
      expect(preds.FT).toBe(sample.true_class);
    }
  });

  it("planted label flip makes exactly one sample a future filter casualty", () => {
    const manifest = buildCohort({ flipFirst: true });
    const mismatched = manifest.samples.filter(
      (s) => s.predictions[DEMO_ARCHITECTURE].TL !== s.true_class,
    );
    expect(mismatched.map((s) => s.id)).toEqual(["s0000"]);
  });

  it("identical checkpoints produce byte-identical TL and FT maps", () => {
    const manifest = buildCohort({ identical: true });
    for (const sample of manifest.samples) {
      for (const method of CAM_METHODS) {
        const refs = sample.maps[DEMO_ARCHITECTURE][method];
        const tlBytes = fs.readFileSync(path.join(dir, refs.TL));
        const ftBytes = fs.readFileSync(path.join(dir, refs.FT));
        expect(tlBytes.equals(ftBytes)).toBe(true);
      }
    }
  });

  it("differing checkpoints actually move the attribution maps", () => {
    const manifest = buildCohort();
    let moved = 0;
    for (const sample of manifest.samples) {
      const refs = sample.maps[DEMO_ARCHITECTURE]["layercam"];
      const tl = fs.readFileSync(path.join(dir, refs.TL));
      const ft = fs.readFileSync(path.join(dir, refs.FT));
      if (!tl.equals(ft)) moved += 1;
    }
    expect(moved).toBeGreaterThan(0);
  });
});
