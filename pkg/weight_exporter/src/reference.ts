/**
 * Independent dense reference for the network layer vocabulary.
 *
 * Everything here works on (height, width, channels) pixel arrays with
 * plain loops: 3x3 convolution with replicate padding, 1x1 convolution,
 * relu, 2x2 block pooling (partial blocks at odd edges average over the
 * texels they actually cover), nearest unpooling, and channel
 * concatenation for encoder-decoder skips.  It shares no code with the
 * graph engine, which is the point: expected outputs come from a second
 * opinion, not from the implementation under test.
 */

import { Tensor } from "./format.js";

export interface FeatureImage {
  height: number;
  width: number;
  channels: number;
  /** Row-major (height, width, channels). */
  data: Float64Array;
}

export type LayerKind = "conv3x3" | "conv1x1" | "relu" | "pool" | "unpool" | "concat_skip";

export interface LayerSpec {
  name: string;
  kind: LayerKind;
  pool_mode?: "mean" | "max";
  level?: number;
}

export interface NetworkSpec {
  layers: LayerSpec[];
}

export class ReferenceError_ extends Error {}

export function makeImage(height: number, width: number, channels: number): FeatureImage {
  return { height, width, channels, data: new Float64Array(height * width * channels) };
}

function at(image: FeatureImage, row: number, col: number, channel: number): number {
  return image.data[(row * image.width + col) * image.channels + channel];
}

const clamp = (v: number, hi: number) => (v < 0 ? 0 : v > hi ? hi : v);

export function conv3x3Replicate(image: FeatureImage, kernel: Float32Array, outChannels: number, bias?: Float32Array): FeatureImage {
  const { height, width, channels } = image;
  if (kernel.length !== 9 * channels * outChannels) {
    throw new ReferenceError_(`kernel holds ${kernel.length} values, need 3*3*${channels}*${outChannels}`);
  }
  const out = makeImage(height, width, outChannels);
  for (let r = 0; r < height; r++) {
    for (let c = 0; c < width; c++) {
      for (let o = 0; o < outChannels; o++) {
        let sum = bias ? bias[o] : 0;
        for (let dr = 0; dr < 3; dr++) {
          const rr = clamp(r + dr - 1, height - 1);
          for (let dc = 0; dc < 3; dc++) {
            const cc = clamp(c + dc - 1, width - 1);
            for (let i = 0; i < channels; i++) {
              sum += at(image, rr, cc, i) * kernel[((dr * 3 + dc) * channels + i) * outChannels + o];
            }
          }
        }
        out.data[(r * width + c) * outChannels + o] = sum;
      }
    }
  }
  return out;
}

export function conv1x1(image: FeatureImage, kernel: Float32Array, outChannels: number, bias?: Float32Array): FeatureImage {
  const { height, width, channels } = image;
  if (kernel.length !== channels * outChannels) {
    throw new ReferenceError_(`kernel holds ${kernel.length} values, need ${channels}*${outChannels}`);
  }
  const out = makeImage(height, width, outChannels);
  for (let p = 0; p < height * width; p++) {
    for (let o = 0; o < outChannels; o++) {
      let sum = bias ? bias[o] : 0;
      for (let i = 0; i < channels; i++) sum += image.data[p * channels + i] * kernel[i * outChannels + o];
      out.data[p * outChannels + o] = sum;
    }
  }
  return out;
}

export function relu(image: FeatureImage): FeatureImage {
  const out = makeImage(image.height, image.width, image.channels);
  for (let i = 0; i < image.data.length; i++) out.data[i] = Math.max(image.data[i], 0);
  return out;
}

export function pool2x2(image: FeatureImage, mode: "mean" | "max"): FeatureImage {
  const coarseH = Math.ceil(image.height / 2);
  const coarseW = Math.ceil(image.width / 2);
  const out = makeImage(coarseH, coarseW, image.channels);
  for (let r = 0; r < coarseH; r++) {
    for (let c = 0; c < coarseW; c++) {
      for (let ch = 0; ch < image.channels; ch++) {
        let acc = mode === "max" ? -Infinity : 0;
        let count = 0;
        for (let dr = 0; dr < 2; dr++) {
          for (let dc = 0; dc < 2; dc++) {
            const rr = 2 * r + dr;
            const cc = 2 * c + dc;
            if (rr >= image.height || cc >= image.width) continue;
            const v = at(image, rr, cc, ch);
            acc = mode === "max" ? Math.max(acc, v) : acc + v;
            count++;
          }
        }
        out.data[(r * coarseW + c) * image.channels + ch] = mode === "max" ? acc : acc / count;
      }
    }
  }
  return out;
}

export function nearestUnpool2x2(image: FeatureImage, fineHeight: number, fineWidth: number): FeatureImage {
  const out = makeImage(fineHeight, fineWidth, image.channels);
  for (let r = 0; r < fineHeight; r++) {
    for (let c = 0; c < fineWidth; c++) {
      for (let ch = 0; ch < image.channels; ch++) {
        out.data[(r * fineWidth + c) * image.channels + ch] = at(image, r >> 1, c >> 1, ch);
      }
    }
  }
  return out;
}

export function concatChannels(a: FeatureImage, b: FeatureImage): FeatureImage {
  if (a.height !== b.height || a.width !== b.width) {
    throw new ReferenceError_(`cannot concat ${a.height}x${a.width} with ${b.height}x${b.width}`);
  }
  const out = makeImage(a.height, a.width, a.channels + b.channels);
  for (let p = 0; p < a.height * a.width; p++) {
    for (let ch = 0; ch < a.channels; ch++) out.data[p * out.channels + ch] = a.data[p * a.channels + ch];
    for (let ch = 0; ch < b.channels; ch++) out.data[p * out.channels + a.channels + ch] = b.data[p * b.channels + ch];
  }
  return out;
}

function tensorMap(tensors: Tensor[]): Map<string, Tensor> {
  return new Map(tensors.map((t) => [t.name, t]));
}

function requireTensor(byName: Map<string, Tensor>, name: string, kind: string): Tensor {
  const tensor = byName.get(name);
  if (!tensor) throw new ReferenceError_(`missing tensor ${name}`);
  if (tensor.kind !== kind) throw new ReferenceError_(`tensor ${name} is ${tensor.kind}, expected ${kind}`);
  return tensor;
}

/**
 * Run a layer stack densely.  Pooling stashes its input image by level
 * for later concat_skip layers; unpooling restores the spatial size
 * recorded when that level was pooled.
 */
export function runReference(spec: NetworkSpec, tensors: Tensor[], input: FeatureImage): FeatureImage {
  const byName = tensorMap(tensors);
  const stashed = new Map<number, FeatureImage>();
  let level = 0;
  let x = input;
  for (const layer of spec.layers) {
    if (layer.kind === "conv3x3") {
      const kernel = requireTensor(byName, layer.name + ".kernel", "conv3x3");
      x = conv3x3Replicate(x, kernel.data, kernel.shape[3], byName.get(layer.name + ".bias")?.data);
    } else if (layer.kind === "conv1x1") {
      const kernel = requireTensor(byName, layer.name + ".kernel", "conv1x1");
      x = conv1x1(x, kernel.data, kernel.shape[1], byName.get(layer.name + ".bias")?.data);
    } else if (layer.kind === "relu") {
      x = relu(x);
    } else if (layer.kind === "pool") {
      stashed.set(level, x);
      x = pool2x2(x, layer.pool_mode ?? "mean");
      level++;
    } else if (layer.kind === "unpool") {
      level--;
      const below = stashed.get(level);
      if (!below) throw new ReferenceError_(`layer ${layer.name}: unpool without a matching pool`);
      x = nearestUnpool2x2(x, below.height, below.width);
    } else if (layer.kind === "concat_skip") {
      const skip = stashed.get(layer.level ?? -1);
      if (!skip) throw new ReferenceError_(`layer ${layer.name}: nothing stashed at level ${layer.level}`);
      x = concatChannels(x, skip);
    } else {
      throw new ReferenceError_(`unknown layer kind ${(layer as LayerSpec).kind}`);
    }
  }
  return x;
}
