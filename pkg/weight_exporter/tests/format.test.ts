import { describe, expect, it } from "vitest";

import {
  FormatError,
  Tensor,
  bytesToFloats,
  canonicalJson,
  crc32,
  decodeWeights,
  encodeWeights,
  floatsToBytes,
} from "../src/format.js";
import { createRng, uniformFloats } from "../src/prng.js";

function sampleTensors(): Tensor[] {
  const rng = createRng(7);
  return [
    { name: "a.kernel", kind: "conv3x3", shape: [3, 3, 2, 4], data: uniformFloats(rng, 72, 1) },
    { name: "a.bias", kind: "bias", shape: [4], data: uniformFloats(rng, 4, 1) },
    { name: "b.kernel", kind: "conv1x1", shape: [4, 3], data: uniformFloats(rng, 12, 1) },
  ];
}

describe("crc32", () => {
  it("matches the standard check value", () => {
    expect(crc32(new TextEncoder().encode("123456789"))).toBe(0xcbf43926);
  });

  it("of nothing is zero", () => {
    expect(crc32(new Uint8Array(0))).toBe(0);
  });
});

describe("canonicalJson", () => {
  it("sorts keys and stays compact", () => {
    expect(canonicalJson({ b: 1, a: [2, { d: 3, c: 4 }] })).toBe('{"a":[2,{"c":4,"d":3}],"b":1}');
  });

  it("escapes non-ascii the way the reader expects", () => {
    expect(canonicalJson("café\n")).toBe('"caf\\u00e9\\n"');
  });

  it("rejects non-integer numbers", () => {
    expect(() => canonicalJson({ x: 0.5 })).toThrow(FormatError);
  });
});

describe("encode / decode", () => {
  it("round-trips tensors bit-exactly", () => {
    const tensors = sampleTensors();
    const decoded = decodeWeights(encodeWeights(tensors));
    expect(decoded.map((t) => t.name)).toEqual(tensors.map((t) => t.name));
    for (let i = 0; i < tensors.length; i++) {
      expect(decoded[i].kind).toBe(tensors[i].kind);
      expect(decoded[i].shape).toEqual(tensors[i].shape);
      expect(new Uint32Array(decoded[i].data.buffer)).toEqual(new Uint32Array(tensors[i].data.buffer));
    }
  });

  it("re-encoding a decoded file reproduces the bytes", () => {
    const bytes = encodeWeights(sampleTensors());
    expect(encodeWeights(decodeWeights(bytes))).toEqual(bytes);
  });

  it("keeps every blob 8-aligned", () => {
    const bytes = encodeWeights(sampleTensors());
    const headLen = Number(new DataView(bytes.buffer).getBigUint64(0, true));
    const manifest = JSON.parse(new TextDecoder().decode(bytes.subarray(8, 8 + headLen)));
    for (const entry of manifest.layers) expect(entry.offset % 8).toBe(0);
    expect((8 + headLen + ((8 - ((8 + headLen) % 8)) % 8)) % 8).toBe(0);
  });

  it("rejects a flipped blob byte", () => {
    const bytes = encodeWeights(sampleTensors());
    bytes[bytes.length - 1] ^= 0xff;
    expect(() => decodeWeights(bytes)).toThrow(/checksum/);
  });

  it("rejects truncation and bad versions", () => {
    const bytes = encodeWeights(sampleTensors());
    expect(() => decodeWeights(bytes.subarray(0, 4))).toThrow(FormatError);
    expect(() => decodeWeights(bytes.subarray(0, 16))).toThrow(FormatError);
    const hacked = encodeWeights(sampleTensors());
    const headLen = Number(new DataView(hacked.buffer).getBigUint64(0, true));
    const text = new TextDecoder().decode(hacked.subarray(8, 8 + headLen)).replace('"version":1', '"version":9');
    hacked.set(new TextEncoder().encode(text), 8);
    expect(() => decodeWeights(hacked)).toThrow(/version/);
  });

  it("rejects shape and kind mismatches", () => {
    const rng = createRng(1);
    const bad: Tensor = { name: "x.bias", kind: "bias", shape: [2, 2], data: uniformFloats(rng, 4, 1) };
    expect(() => encodeWeights([bad])).toThrow(/rank/);
    const short: Tensor = { name: "y.kernel", kind: "conv1x1", shape: [3, 3], data: uniformFloats(rng, 4, 1) };
    expect(() => encodeWeights([short])).toThrow(/fill/);
    const dupe = sampleTensors();
    expect(() => encodeWeights([...dupe, dupe[0]])).toThrow(/duplicate/);
  });
});

describe("raw f32 sidecars", () => {
  it("round-trip bit-exactly", () => {
    const values = uniformFloats(createRng(3), 17, 2);
    const back = bytesToFloats(floatsToBytes(values));
    expect(new Uint32Array(back.buffer)).toEqual(new Uint32Array(values.buffer));
  });

  it("reject ragged byte lengths", () => {
    expect(() => bytesToFloats(new Uint8Array(6))).toThrow(FormatError);
  });
});
