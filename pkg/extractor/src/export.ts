import * as path from "node:path";

import { writeMapFile } from "./adm.js";
import { CamMethod, computeCam } from "./cam.js";
import { Checkpoint, SequentialModel } from "./model.js";
import { Manifest, ManifestSample, writeManifest } from "./manifest.js";
import { FeatureMap } from "./tensor.js";

export interface CohortSample {
  id: string;
  input: FeatureMap;
  label: number;
}

export interface ExtractionJob {
  model: SequentialModel;
  tl: Checkpoint;
  ft: Checkpoint;
  targetLayer: string;
  methods: CamMethod[];
  dataset: CohortSample[];
  classNames: string[];
  architecture: string;
  outDir: string;
  /** Optional per-architecture layer label recorded in the manifest. */
  layerLabel?: string;
  /** Sample ids whose manifest label is deliberately flipped. */
  flipLabelIds?: string[];
}

/**
 * Run both checkpoints over the dataset, write one attribution map per
 * (method, phase, sample), and seal a manifest next to them. Maps are
 * computed for the checkpoint's own predicted class.
 */
export function exportCohort(job: ExtractionJob): string {
  const flip = new Set(job.flipLabelIds ?? []);
  const nClasses = job.classNames.length;
  const phases: Array<["TL" | "FT", Checkpoint]> = [
    ["TL", job.tl],
    ["FT", job.ft],
  ];

  const samples: ManifestSample[] = [];
  const classCounts = new Array<number>(nClasses).fill(0);

  for (const sample of job.dataset) {
    const trueClass = flip.has(sample.id)
      ? (sample.label + 1) % nClasses
      : sample.label;
    classCounts[trueClass] += 1;

    const predictions: ManifestSample["predictions"] = {
      [job.architecture]: { TL: -1, FT: -1 },
    };
    const maps: ManifestSample["maps"] = { [job.architecture]: {} };
    for (const method of job.methods) {
      maps[job.architecture][method] = { TL: "", FT: "" };
    }

    for (const [role, checkpoint] of phases) {
      job.model.restore(checkpoint);
      const predicted = job.model.predict(sample.input);
      predictions[job.architecture][role] = predicted;
      for (const method of job.methods) {
        const { activations, gradients } = job.model.attributionInputs(
          sample.input,
          job.targetLayer,
          predicted,
        );
        const cam = computeCam(method, activations, gradients);
        const rel = path.join(
          "maps",
          job.architecture,
          method,
          role,
          `${sample.id}.adm`,
        );
        writeMapFile(path.join(job.outDir, rel), cam.values, cam.height, cam.width);
        maps[job.architecture][method][role] = rel;
      }
    }

    samples.push({
      id: sample.id,
      true_class: trueClass,
      predictions,
      maps,
    });
  }

  const manifest: Manifest = {
    schema_version: 1,
    classes: job.classNames.map((name, i) => ({
      name,
      test_count: Math.max(classCounts[i], 1),
    })),
    architectures: [job.architecture],
    methods: job.methods,
    phases: [
      { role: "TL", epoch: job.tl.epoch },
      { role: "FT", epoch: job.ft.epoch },
    ],
    samples,
  };
  if (job.layerLabel) {
    manifest.layers = { [job.architecture]: job.layerLabel };
  }
  const manifestPath = path.join(job.outDir, "manifest.json");
  writeManifest(manifestPath, manifest);
  return manifestPath;
}
