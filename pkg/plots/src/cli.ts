#!/usr/bin/env node
/**
 * platoonsim-plots <kind> <csv> --out DIR
 *
 * kinds: rb (rb_sweep.csv), pdr (pdr_sweep.csv), layers (layer_metrics.csv)
 * Exit codes: 0 success, 1 schema/render failure, 2 usage.
 */

import * as fs from "fs";

import { PlotKind, RENDERERS } from "./charts";
import { SchemaError } from "./csv";

const USAGE = "usage: platoonsim-plots <rb|pdr|layers> <csv-file> --out <dir>";

export function run(argv: string[]): number {
  const args = [...argv];
  let outDir: string | null = null;
  const positional: string[] = [];
  while (args.length > 0) {
    const arg = args.shift()!;
    if (arg === "--out") {
      const value = args.shift();
      if (!value) {
        console.error(`error: --out needs a directory\n${USAGE}`);
        return 2;
      }
      outDir = value;
    } else if (arg === "-h" || arg === "--help") {
      console.log(USAGE);
      return 0;
    } else if (arg.startsWith("-")) {
      console.error(`error: unknown option ${arg}\n${USAGE}`);
      return 2;
    } else {
      positional.push(arg);
    }
  }
  if (positional.length !== 2 || outDir === null) {
    console.error(`error: expected a kind and a csv file\n${USAGE}`);
    return 2;
  }
  const [kind, csvPath] = positional;
  if (!(kind in RENDERERS)) {
    console.error(`error: unknown plot kind "${kind}"\n${USAGE}`);
    return 2;
  }
  let text: string;
  try {
    text = fs.readFileSync(csvPath, "utf-8");
  } catch (err) {
    console.error(`error: cannot read ${csvPath}: ${(err as Error).message}`);
    return 1;
  }
  try {
    const written = RENDERERS[kind as PlotKind](text, outDir);
    for (const file of written) {
      console.log(file);
    }
    return 0;
  } catch (err) {
    if (err instanceof SchemaError) {
      console.error(`error: ${csvPath}: ${err.message}`);
      return 1;
    }
    console.error(`error: ${(err as Error).message}`);
    return 1;
  }
}

if (require.main === module) {
  process.exit(run(process.argv.slice(2)));
}
