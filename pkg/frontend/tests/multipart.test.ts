import { describe, expect, it } from "vitest";

import { boundaryOf, multipartParts, StreamPart } from "../src/multipart.js";

const encoder = new TextEncoder();

function framed(body: Uint8Array, boundary = "frame"): Uint8Array {
  const head = encoder.encode(
    `--${boundary}\r\nContent-Type: image/bmp\r\n` +
    `Content-Length: ${body.length}\r\n\r\n`);
  const out = new Uint8Array(head.length + body.length + 2);
  out.set(head, 0);
  out.set(body, head.length);
  out.set(encoder.encode("\r\n"), head.length + body.length);
  return out;
}

function streamOf(chunks: Uint8Array[]): ReadableStream<Uint8Array> {
  return new ReadableStream({
    start(controller) {
      for (const chunk of chunks) controller.enqueue(chunk);
      controller.close();
    },
  });
}

async function collect(stream: ReadableStream<Uint8Array>): Promise<StreamPart[]> {
  const parts: StreamPart[] = [];
  for await (const part of multipartParts(stream, "frame")) {
    parts.push(part);
  }
  return parts;
}

describe("multipartParts", () => {
  it("parses a single part delivered in one chunk", async () => {
    const body = encoder.encode("BM fake bitmap");
    const parts = await collect(streamOf([framed(body)]));
    expect(parts).toHaveLength(1);
    expect(parts[0].body).toEqual(body);
    expect(parts[0].headers["content-type"]).toBe("image/bmp");
    expect(parts[0].headers["content-length"]).toBe(String(body.length));
  });

  it("reassembles parts split into single-byte chunks", async () => {
    const bodies = [encoder.encode("first"), encoder.encode("second!")];
    const wire = new Uint8Array([...framed(bodies[0]), ...framed(bodies[1])]);
    const chunks = Array.from(wire, (byte) => new Uint8Array([byte]));
    const parts = await collect(streamOf(chunks));
    expect(parts.map((p) => p.body)).toEqual(bodies);
  });

  it("handles several parts inside one chunk", async () => {
    const bodies = [0, 1, 2].map((n) => encoder.encode(`frame-${n}`));
    const wire = new Uint8Array(bodies.flatMap((b) => [...framed(b)]));
    const parts = await collect(streamOf([wire]));
    expect(parts.map((p) => new TextDecoder().decode(p.body)))
      .toEqual(["frame-0", "frame-1", "frame-2"]);
  });

  it("skips noise before the first boundary", async () => {
    const body = encoder.encode("payload");
    const wire = new Uint8Array([
      ...encoder.encode("ignore this preamble"), ...framed(body)]);
    const parts = await collect(streamOf([wire]));
    expect(parts).toHaveLength(1);
    expect(parts[0].body).toEqual(body);
  });

  it("keeps binary bodies intact (no text decoding)", async () => {
    const body = new Uint8Array([0, 255, 13, 10, 13, 10, 66, 77]);
    const parts = await collect(streamOf([framed(body)]));
    expect(parts[0].body).toEqual(body);
  });

  it("rejects parts without a Content-Length", async () => {
    const wire = encoder.encode("--frame\r\nContent-Type: image/bmp\r\n\r\nxx\r\n");
    await expect(collect(streamOf([wire]))).rejects.toThrow(/Content-Length/);
  });
});

describe("boundaryOf", () => {
  it("extracts the boundary token", () => {
    expect(boundaryOf("multipart/x-mixed-replace; boundary=frame")).toBe("frame");
  });

  it("is null without a boundary", () => {
    expect(boundaryOf("image/bmp")).toBeNull();
    expect(boundaryOf(null)).toBeNull();
  });
});
