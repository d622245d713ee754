/**
 * Seeded reference networks for engine tests: tiny weight files plus an
 * input and the expected output of the dense reference implementation.
 * Weights and inputs are rounded to f32 at generation time so the stored
 * artifacts and the values the expectation was computed from are the same
 * bits on every platform.
 */

import { mkdirSync, writeFileSync } from "fs";
import { join } from "path";

import { Tensor, encodeWeights, floatsToBytes } from "./format.js";
import { createRng, uniformFloats } from "./prng.js";
import { FeatureImage, NetworkSpec, runReference } from "./reference.js";

export interface ReferenceCase {
  name: string;
  seed: number;
  /** Grid pyramid depth the engine needs for this network. */
  gridLevels: number;
  network: NetworkSpec;
  tensors: Tensor[];
  input: FeatureImage;
  expected: FeatureImage;
}

export const CASE_NAMES = ["identity", "averaging", "random-2-layer", "toy-unet"] as const;

export class UnknownCase extends Error {}

function randomInput(rng: () => number, height: number, width: number, channels: number): FeatureImage {
  const data = new Float64Array(height * width * channels);
  for (let i = 0; i < data.length; i++) data[i] = Math.fround(rng());
  return { height, width, channels, data };
}

function kernel3x3(fill: (dr: number, dc: number, i: number, o: number) => number, cIn: number, cOut: number): Float32Array {
  const data = new Float32Array(9 * cIn * cOut);
  for (let dr = 0; dr < 3; dr++) {
    for (let dc = 0; dc < 3; dc++) {
      for (let i = 0; i < cIn; i++) {
        for (let o = 0; o < cOut; o++) {
          data[((dr * 3 + dc) * cIn + i) * cOut + o] = Math.fround(fill(dr, dc, i, o));
        }
      }
    }
  }
  return data;
}

function conv3x3Tensors(name: string, rng: () => number, cIn: number, cOut: number): Tensor[] {
  return [
    { name: `${name}.kernel`, kind: "conv3x3", shape: [3, 3, cIn, cOut], data: uniformFloats(rng, 9 * cIn * cOut, 0.5) },
    { name: `${name}.bias`, kind: "bias", shape: [cOut], data: uniformFloats(rng, cOut, 0.1) },
  ];
}

export function buildCase(name: string, seed: number): ReferenceCase {
  const rng = createRng(seed);
  let gridLevels = 1;
  let network: NetworkSpec;
  let tensors: Tensor[];
  let input: FeatureImage;

  if (name === "identity") {
    network = { layers: [{ name: "id", kind: "conv3x3" }] };
    tensors = [{
      name: "id.kernel",
      kind: "conv3x3",
      shape: [3, 3, 3, 3],
      data: kernel3x3((dr, dc, i, o) => (dr === 1 && dc === 1 && i === o ? 1 : 0), 3, 3),
    }];
    input = randomInput(rng, 6, 9, 3);
  } else if (name === "averaging") {
    network = { layers: [{ name: "avg", kind: "conv3x3" }] };
    tensors = [{
      name: "avg.kernel",
      kind: "conv3x3",
      shape: [3, 3, 3, 3],
      data: kernel3x3((_dr, _dc, i, o) => (i === o ? 1 / 9 : 0), 3, 3),
    }];
    input = randomInput(rng, 8, 10, 3);
  } else if (name === "random-2-layer") {
    network = {
      layers: [
        { name: "conv1", kind: "conv3x3" },
        { name: "act1", kind: "relu" },
        { name: "conv2", kind: "conv3x3" },
      ],
    };
    tensors = [...conv3x3Tensors("conv1", rng, 3, 5), ...conv3x3Tensors("conv2", rng, 5, 2)];
    input = randomInput(rng, 8, 12, 3);
  } else if (name === "toy-unet") {
    gridLevels = 2;
    network = {
      layers: [
        { name: "enc1", kind: "conv3x3" },
        { name: "enc1_act", kind: "relu" },
        { name: "down", kind: "pool", pool_mode: "mean" },
        { name: "mid", kind: "conv3x3" },
        { name: "mid_act", kind: "relu" },
        { name: "up", kind: "unpool" },
        { name: "skip", kind: "concat_skip", level: 0 },
        { name: "dec1", kind: "conv3x3" },
      ],
    };
    tensors = [
      ...conv3x3Tensors("enc1", rng, 3, 4),
      ...conv3x3Tensors("mid", rng, 4, 6),
      ...conv3x3Tensors("dec1", rng, 10, 3),
    ];
    input = randomInput(rng, 8, 12, 3);
  } else {
    throw new UnknownCase(`unknown case ${name}; know ${CASE_NAMES.join(", ")}`);
  }

  const expected = runReference(network, tensors, input);
  return { name, seed, gridLevels, network, tensors, input, expected };
}

/** Write weights.bin, input.bin, expected.bin, and case.json into a directory. */
export function writeCase(dir: string, built: ReferenceCase): void {
  mkdirSync(dir, { recursive: true });
  writeFileSync(join(dir, "weights.bin"), encodeWeights(built.tensors));
  writeFileSync(join(dir, "input.bin"), floatsToBytes(new Float32Array(built.input.data)));
  writeFileSync(join(dir, "expected.bin"), floatsToBytes(new Float32Array(built.expected.data)));
  const meta = {
    name: built.name,
    seed: built.seed,
    grid_levels: built.gridLevels,
    input_shape: [built.input.height, built.input.width, built.input.channels],
    output_shape: [built.expected.height, built.expected.width, built.expected.channels],
    network: built.network,
  };
  writeFileSync(join(dir, "case.json"), JSON.stringify(meta, null, 2) + "\n");
}
