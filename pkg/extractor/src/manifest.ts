import * as fs from "node:fs";
import * as path from "node:path";

/** Cohort manifest schema shared with the audit toolkit. */
export interface ManifestClass {
  name: string;
  test_count: number;
}

export interface ManifestPhase {
  role: "TL" | "FT";
  epoch: number;
}

export interface ManifestSample {
  id: string;
  true_class: number;
  predictions: Record<string, { TL: number; FT: number }>;
  maps: Record<string, Record<string, { TL: string; FT: string }>>;
}

export interface Manifest {
  schema_version: 1;
  classes: ManifestClass[];
  architectures: string[];
  methods: string[];
  phases: ManifestPhase[];
  samples: ManifestSample[];
  layers?: Record<string, string>;
}

export function writeManifest(filePath: string, manifest: Manifest): void {
  fs.mkdirSync(path.dirname(filePath), { recursive: true });
  fs.writeFileSync(filePath, JSON.stringify(manifest, null, 2) + "\n");
}
