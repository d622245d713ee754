/**
 * Command line: `export` converts a checkpoint JSON into a weight file,
 * `make-reference` writes a seeded reference case directory (weight file,
 * input, expected output, metadata).  Exit codes: 0 success, 1 bad usage
 * or bad input.
 */

import { readFileSync, writeFileSync } from "fs";
import { fileURLToPath } from "url";

import { CASE_NAMES, buildCase, writeCase } from "./cases.js";
import { encodeWeights } from "./format.js";
import { Checkpoint, NameMap, exportTensors } from "./export.js";
import { NetworkSpec } from "./reference.js";

const USAGE = `usage:
  export --checkpoint <json> --spec <json> [--map <json>] --out <file>
  make-reference --case <${CASE_NAMES.join("|")}> [--seed <int>] --out-dir <dir>`;

function parseFlags(argv: string[]): Map<string, string> {
  const flags = new Map<string, string>();
  for (let i = 0; i < argv.length; i += 2) {
    const key = argv[i];
    const value = argv[i + 1];
    if (!key.startsWith("--") || value === undefined) {
      throw new Error(`bad arguments near ${key}`);
    }
    flags.set(key.slice(2), value);
  }
  return flags;
}

function need(flags: Map<string, string>, key: string): string {
  const value = flags.get(key);
  if (value === undefined) throw new Error(`missing --${key}`);
  return value;
}

function readJson(path: string): unknown {
  return JSON.parse(readFileSync(path, "utf-8"));
}

function cmdExport(flags: Map<string, string>): void {
  const checkpoint = readJson(need(flags, "checkpoint")) as Checkpoint;
  const spec = readJson(need(flags, "spec")) as NetworkSpec;
  const mapPath = flags.get("map");
  const nameMap = mapPath ? (readJson(mapPath) as NameMap) : undefined;
  const tensors = exportTensors(checkpoint, spec, nameMap);
  const out = need(flags, "out");
  writeFileSync(out, encodeWeights(tensors));
  console.log(`wrote ${tensors.length} tensors to ${out}`);
}

function cmdMakeReference(flags: Map<string, string>): void {
  const name = need(flags, "case");
  const seed = Number(flags.get("seed") ?? "0");
  if (!Number.isSafeInteger(seed)) throw new Error(`seed must be an integer, got ${flags.get("seed")}`);
  const outDir = need(flags, "out-dir");
  const built = buildCase(name, seed);
  writeCase(outDir, built);
  console.log(`wrote case ${name} (seed ${seed}) to ${outDir}`);
}

export function main(argv: string[]): number {
  const [command, ...rest] = argv;
  try {
    if (command === "export") cmdExport(parseFlags(rest));
    else if (command === "make-reference") cmdMakeReference(parseFlags(rest));
    else throw new Error(USAGE);
  } catch (err) {
    console.error(err instanceof Error ? err.message : String(err));
    return 1;
  }
  return 0;
}

if (process.argv[1] && fileURLToPath(import.meta.url) === process.argv[1]) {
  process.exit(main(process.argv.slice(2)));
}
