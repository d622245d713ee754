/**
 * The weight file format the inference engine reads.
 *
 * Layout: little-endian u64 manifest byte length, JSON manifest, zero
 * padding to the next 8-byte boundary, then raw float32 blobs in manifest
 * order, each 8-aligned.  The manifest is
 * `{"checksum": <crc32 of the blob region>, "layers": [...], "version": 1}`
 * serialized compact with sorted keys, so a given set of tensors has
 * exactly one byte representation and files round-trip bit-identically
 * across languages.
 */

export const FORMAT_VERSION = 1;

export type TensorKind = "conv3x3" | "conv1x1" | "bias";

export interface Tensor {
  name: string;
  kind: TensorKind;
  shape: number[];
  data: Float32Array;
}

const KIND_RANK: Record<TensorKind, number> = { conv3x3: 4, conv1x1: 2, bias: 1 };

export class FormatError extends Error {}

const CRC_TABLE = (() => {
  const table = new Uint32Array(256);
  for (let n = 0; n < 256; n++) {
    let c = n;
    for (let k = 0; k < 8; k++) {
      c = c & 1 ? 0xedb88320 ^ (c >>> 1) : c >>> 1;
    }
    table[n] = c;
  }
  return table;
})();

export function crc32(bytes: Uint8Array): number {
  let c = 0xffffffff;
  for (let i = 0; i < bytes.length; i++) {
    c = CRC_TABLE[(c ^ bytes[i]) & 0xff] ^ (c >>> 8);
  }
  return (c ^ 0xffffffff) >>> 0;
}

function escapeAscii(s: string): string {
  // Mirrors Python's ensure_ascii JSON escaping: printable ASCII stays,
  // everything else becomes a \uXXXX escape per UTF-16 code unit.
  let out = '"';
  for (let i = 0; i < s.length; i++) {
    const code = s.charCodeAt(i);
    const ch = s[i];
    if (ch === '"') out += '\\"';
    else if (ch === "\\") out += "\\\\";
    else if (ch === "\b") out += "\\b";
    else if (ch === "\f") out += "\\f";
    else if (ch === "\n") out += "\\n";
    else if (ch === "\r") out += "\\r";
    else if (ch === "\t") out += "\\t";
    else if (code < 0x20 || code > 0x7e) out += "\\u" + code.toString(16).padStart(4, "0");
    else out += ch;
  }
  return out + '"';
}

type JsonValue = null | boolean | number | string | JsonValue[] | { [key: string]: JsonValue };

/** Compact JSON with sorted keys; integers only, so output is canonical. */
export function canonicalJson(value: JsonValue): string {
  if (value === null) return "null";
  if (typeof value === "boolean") return value ? "true" : "false";
  if (typeof value === "number") {
    if (!Number.isSafeInteger(value)) {
      throw new FormatError(`manifest numbers must be integers, got ${value}`);
    }
    return String(value);
  }
  if (typeof value === "string") return escapeAscii(value);
  if (Array.isArray(value)) return "[" + value.map(canonicalJson).join(",") + "]";
  const keys = Object.keys(value).sort();
  return "{" + keys.map((k) => escapeAscii(k) + ":" + canonicalJson(value[k])).join(",") + "}";
}

function padTo(n: number, alignment = 8): number {
  return (alignment - (n % alignment)) % alignment;
}

function product(shape: number[]): number {
  return shape.reduce((a, b) => a * b, 1);
}

function checkTensor(tensor: Tensor): void {
  if (!tensor.name) throw new FormatError("tensor name must be nonempty");
  const rank = KIND_RANK[tensor.kind];
  if (rank === undefined) throw new FormatError(`tensor ${tensor.name}: unknown kind ${tensor.kind}`);
  if (tensor.shape.length !== rank) {
    throw new FormatError(
      `tensor ${tensor.name}: kind ${tensor.kind} needs rank ${rank}, got shape [${tensor.shape}]`,
    );
  }
  if (tensor.shape.some((s) => !Number.isSafeInteger(s) || s < 1)) {
    throw new FormatError(`tensor ${tensor.name}: bad shape [${tensor.shape}]`);
  }
  if (tensor.data.length !== product(tensor.shape)) {
    throw new FormatError(
      `tensor ${tensor.name}: ${tensor.data.length} values do not fill shape [${tensor.shape}]`,
    );
  }
}

export function encodeWeights(tensors: Tensor[]): Uint8Array {
  const names = new Set<string>();
  const blobs: Uint8Array[] = [];
  const entries: JsonValue[] = [];
  let offset = 0;
  for (const tensor of tensors) {
    checkTensor(tensor);
    if (names.has(tensor.name)) throw new FormatError(`duplicate tensor name ${tensor.name}`);
    names.add(tensor.name);
    const raw = new Uint8Array(tensor.data.length * 4);
    const view = new DataView(raw.buffer);
    for (let i = 0; i < tensor.data.length; i++) view.setFloat32(i * 4, tensor.data[i], true);
    entries.push({
      name: tensor.name,
      kind: tensor.kind,
      shape: tensor.shape.slice(),
      dtype: "f32",
      offset,
      length: raw.length,
    });
    blobs.push(raw);
    const pad = padTo(raw.length);
    if (pad) blobs.push(new Uint8Array(pad));
    offset += raw.length + pad;
  }
  const blobRegion = concatBytes(blobs);
  const manifest: JsonValue = {
    version: FORMAT_VERSION,
    checksum: crc32(blobRegion),
    layers: entries,
  };
  const head = new TextEncoder().encode(canonicalJson(manifest));
  const headPad = padTo(8 + head.length);
  const out = new Uint8Array(8 + head.length + headPad + blobRegion.length);
  new DataView(out.buffer).setBigUint64(0, BigInt(head.length), true);
  out.set(head, 8);
  out.set(blobRegion, 8 + head.length + headPad);
  return out;
}

export function decodeWeights(bytes: Uint8Array): Tensor[] {
  if (bytes.length < 8) throw new FormatError("weight file too short for a manifest length");
  const headLenBig = new DataView(bytes.buffer, bytes.byteOffset, bytes.byteLength).getBigUint64(0, true);
  if (headLenBig > BigInt(bytes.length)) throw new FormatError("manifest length exceeds file size");
  const headLen = Number(headLenBig);
  if (8 + headLen > bytes.length) throw new FormatError("manifest length exceeds file size");
  let manifest: { version?: unknown; checksum?: unknown; layers?: unknown };
  try {
    manifest = JSON.parse(new TextDecoder("utf-8", { fatal: true }).decode(bytes.subarray(8, 8 + headLen)));
  } catch (err) {
    throw new FormatError(`bad weight manifest: ${err}`);
  }
  if (manifest.version !== FORMAT_VERSION) {
    throw new FormatError(`unsupported weight format version ${manifest.version}`);
  }
  const { checksum, layers } = manifest;
  if (!Number.isSafeInteger(checksum) || !Array.isArray(layers)) {
    throw new FormatError("weight manifest needs an integer 'checksum' and a 'layers' list");
  }
  const blobStart = 8 + headLen + padTo(8 + headLen);
  const blobRegion = bytes.subarray(blobStart);
  const actual = crc32(blobRegion);
  if (actual !== checksum) {
    throw new FormatError(`weight blob checksum ${actual} does not match manifest ${checksum}`);
  }
  const view = new DataView(blobRegion.buffer, blobRegion.byteOffset, blobRegion.byteLength);
  const tensors: Tensor[] = [];
  for (const entry of layers) {
    const { name, kind, shape, dtype, offset, length } = entry;
    if (typeof name !== "string" || !Array.isArray(shape)) {
      throw new FormatError(`bad manifest entry: ${canonicalJson(entry)}`);
    }
    if (dtype !== "f32") throw new FormatError(`tensor ${name}: unsupported dtype ${dtype}`);
    const count = product(shape);
    if (length !== count * 4) {
      throw new FormatError(`tensor ${name}: length ${length} does not match shape [${shape}]`);
    }
    if (!Number.isSafeInteger(offset) || offset % 8 !== 0 || offset + length > blobRegion.length) {
      throw new FormatError(`tensor ${name}: blob range out of bounds`);
    }
    const data = new Float32Array(count);
    for (let i = 0; i < count; i++) data[i] = view.getFloat32(offset + i * 4, true);
    const tensor: Tensor = { name, kind, shape: shape.map(Number), data };
    checkTensor(tensor);
    tensors.push(tensor);
  }
  return tensors;
}

export function concatBytes(parts: Uint8Array[]): Uint8Array {
  const total = parts.reduce((sum, p) => sum + p.length, 0);
  const out = new Uint8Array(total);
  let offset = 0;
  for (const part of parts) {
    out.set(part, offset);
    offset += part.length;
  }
  return out;
}

/** Raw little-endian f32 dump, the sidecar layout for inputs and expecteds. */
export function floatsToBytes(values: Float32Array): Uint8Array {
  const raw = new Uint8Array(values.length * 4);
  const view = new DataView(raw.buffer);
  for (let i = 0; i < values.length; i++) view.setFloat32(i * 4, values[i], true);
  return raw;
}

export function bytesToFloats(bytes: Uint8Array): Float32Array {
  if (bytes.length % 4 !== 0) throw new FormatError(`f32 blob length ${bytes.length} not divisible by 4`);
  const view = new DataView(bytes.buffer, bytes.byteOffset, bytes.byteLength);
  const out = new Float32Array(bytes.length / 4);
  for (let i = 0; i < out.length; i++) out[i] = view.getFloat32(i * 4, true);
  return out;
}
