import { CAM_METHODS } from "./cam.js";
import {
  DEMO_ARCHITECTURE,
  DEMO_CLASS_NAMES,
  DEMO_TARGET_LAYER,
  demoCheckpoints,
  makeDemoModel,
  makeToyDataset,
} from "./demo.js";
import { exportCohort } from "./export.js";

interface DemoArgs {
  out: string;
  samples: number;
  seed: number;
  grid: number;
  identicalCheckpoints: boolean;
  plantError: boolean;
}

function parseDemoArgs(argv: string[]): DemoArgs {
  const args: DemoArgs = {
    out: "",
    samples: 8,
    seed: 0,
    grid: 16,
    identicalCheckpoints: false,
    plantError: false,
  };
  for (let i = 0; i < argv.length; i++) {
    const flag = argv[i];
    switch (flag) {
      case "--out":
        args.out = argv[++i] ?? "";
        break;
      case "--samples":
        args.samples = Number(argv[++i]);
        break;
      case "--seed":
        args.seed = Number(argv[++i]);
        break;
      case "--grid":
        args.grid = Number(argv[++i]);
        break;
      case "--identical-checkpoints":
        args.identicalCheckpoints = true;
        break;
      case "--plant-error":
        args.plantError = true;
        break;
      default:
        throw new Error(`unknown flag ${flag}`);
    }
  }
  if (!args.out) throw new Error("--out is required");
  if (!Number.isInteger(args.samples) || args.samples < 2) {
    throw new Error("--samples must be an integer >= 2");
  }
  return args;
}

function cmdDemoCohort(argv: string[]): number {
  const args = parseDemoArgs(argv);
  const { tl, ft } = demoCheckpoints();
  const late = args.identicalCheckpoints ? { epoch: ft.epoch, weights: tl.weights } : ft;
  const dataset = makeToyDataset(args.samples, args.seed, args.grid);
  const manifestPath = exportCohort({
    model: makeDemoModel(),
    tl,
    ft: late,
    targetLayer: DEMO_TARGET_LAYER,
    methods: CAM_METHODS,
    dataset,
    classNames: DEMO_CLASS_NAMES,
    architecture: DEMO_ARCHITECTURE,
    outDir: args.out,
    layerLabel: DEMO_TARGET_LAYER,
    flipLabelIds: args.plantError ? [dataset[0].id] : [],
  });
  console.log(manifestPath);
  return 0;
}

function main(argv: string[]): number {
  const [command, ...rest] = argv;
  if (command === "demo-cohort") return cmdDemoCohort(rest);
  console.error(
    "usage: node dist/cli.js demo-cohort --out DIR [--samples N] [--seed S] " +
      "[--grid G] [--identical-checkpoints] [--plant-error]",
  );
  return command === undefined || command === "--help" ? 0 : 1;
}

try {
  process.exitCode = main(process.argv.slice(2));
} catch (err) {
  console.error(`error: ${(err as Error).message}`);
  process.exitCode = 1;
}
