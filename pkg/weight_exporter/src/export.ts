/**
 * Checkpoint-to-weight-file conversion.
 *
 * A checkpoint is a JSON document of named source layers, each holding a
 * kernel (and optionally a bias) as shape + flat values.  Export matches
 * source layers onto the network spec's convolution layers, checks every
 * shape, and emits tensors in spec order so the resulting weight file is
 * deterministic.  No kernel resampling happens here: 3x3 kernels keep
 * their spatial layout and the engine maps taps to directions on load.
 */

import { Tensor, TensorKind } from "./format.js";
import { LayerSpec, NetworkSpec } from "./reference.js";

export interface CheckpointTensor {
  shape: number[];
  data: number[];
}

export interface Checkpoint {
  layers: Record<string, { kernel: CheckpointTensor; bias?: CheckpointTensor }>;
}

/** Maps source layer names to network spec layer names; identity by default. */
export type NameMap = Record<string, string>;

export class ExportError extends Error {}

const CONV_KINDS = new Set(["conv3x3", "conv1x1"]);

function toFloat32(raw: CheckpointTensor, what: string): Float32Array {
  const count = raw.shape.reduce((a, b) => a * b, 1);
  if (!Array.isArray(raw.data) || raw.data.length !== count) {
    throw new ExportError(`${what}: ${raw.data?.length ?? 0} values do not fill shape [${raw.shape}]`);
  }
  return Float32Array.from(raw.data);
}

function checkKernelShape(layer: LayerSpec, shape: number[]): void {
  if (layer.kind === "conv3x3") {
    if (shape.length !== 4 || shape[0] !== 3 || shape[1] !== 3) {
      throw new ExportError(`layer ${layer.name}: conv3x3 kernel must be [3,3,cin,cout], got [${shape}]`);
    }
  } else if (shape.length !== 2) {
    throw new ExportError(`layer ${layer.name}: conv1x1 kernel must be [cin,cout], got [${shape}]`);
  }
}

/** Match checkpoint layers onto the spec's conv layers and build the tensor list. */
export function exportTensors(checkpoint: Checkpoint, spec: NetworkSpec, nameMap?: NameMap): Tensor[] {
  const specByName = new Map(spec.layers.map((l) => [l.name, l]));
  const matched = new Map<string, string>();
  for (const source of Object.keys(checkpoint.layers ?? {})) {
    const target = nameMap?.[source] ?? source;
    const layer = specByName.get(target);
    if (!layer) throw new ExportError(`source layer ${source}: no spec layer named ${target}`);
    if (!CONV_KINDS.has(layer.kind)) {
      throw new ExportError(`source layer ${source}: spec layer ${target} is ${layer.kind}, not a convolution`);
    }
    if (matched.has(target)) {
      throw new ExportError(`spec layer ${target} matched by both ${matched.get(target)} and ${source}`);
    }
    matched.set(target, source);
  }

  const tensors: Tensor[] = [];
  for (const layer of spec.layers) {
    if (!CONV_KINDS.has(layer.kind)) continue;
    const source = matched.get(layer.name);
    if (!source) throw new ExportError(`spec layer ${layer.name}: no checkpoint layer matched it`);
    const entry = checkpoint.layers[source];
    if (!entry?.kernel) throw new ExportError(`source layer ${source}: missing kernel`);
    checkKernelShape(layer, entry.kernel.shape);
    const outChannels = entry.kernel.shape[entry.kernel.shape.length - 1];
    tensors.push({
      name: `${layer.name}.kernel`,
      kind: layer.kind as TensorKind,
      shape: entry.kernel.shape.slice(),
      data: toFloat32(entry.kernel, `layer ${layer.name} kernel`),
    });
    if (entry.bias) {
      if (entry.bias.shape.length !== 1 || entry.bias.shape[0] !== outChannels) {
        throw new ExportError(
          `layer ${layer.name}: bias shape [${entry.bias.shape}] does not match ${outChannels} output channels`,
        );
      }
      tensors.push({
        name: `${layer.name}.bias`,
        kind: "bias",
        shape: entry.bias.shape.slice(),
        data: toFloat32(entry.bias, `layer ${layer.name} bias`),
      });
    }
  }
  return tensors;
}
