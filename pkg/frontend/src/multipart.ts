// Incremental parser for multipart/x-mixed-replace bodies, the framing
// the test server's /stream endpoint uses. Works on the web-standard
// ReadableStream so the same code runs in the browser and under node.

export interface StreamPart {
  headers: Record<string, string>;
  body: Uint8Array;
}

const encoder = new TextEncoder();

function concat(a: Uint8Array, b: Uint8Array): Uint8Array {
  const out = new Uint8Array(a.length + b.length);
  out.set(a, 0);
  out.set(b, a.length);
  return out;
}

function indexOf(haystack: Uint8Array, needle: Uint8Array, from = 0): number {
  outer: for (let i = from; i + needle.length <= haystack.length; i++) {
    for (let j = 0; j < needle.length; j++) {
      if (haystack[i + j] !== needle[j]) continue outer;
    }
    return i;
  }
  return -1;
}

function parseHeaders(block: string): Record<string, string> {
  const headers: Record<string, string> = {};
  for (const line of block.split("\r\n")) {
    const split = line.indexOf(":");
    if (split > 0) {
      headers[line.slice(0, split).trim().toLowerCase()] = line.slice(split + 1).trim();
    }
  }
  return headers;
}

/** Pull one complete part off the front of the buffer, if present. */
function takePart(buf: Uint8Array, delimiter: Uint8Array):
    { part: StreamPart; rest: Uint8Array } | null {
  const start = indexOf(buf, delimiter);
  if (start < 0) return null;
  const headerStart = start + delimiter.length;
  const headerEnd = indexOf(buf, encoder.encode("\r\n\r\n"), headerStart);
  if (headerEnd < 0) return null;
  const headers = parseHeaders(
    new TextDecoder().decode(buf.subarray(headerStart, headerEnd)));
  const length = Number(headers["content-length"]);
  if (!Number.isFinite(length)) {
    throw new Error("stream part without a Content-Length header");
  }
  const bodyStart = headerEnd + 4;
  if (buf.length < bodyStart + length + 2) return null; // body + trailing CRLF
  return {
    part: { headers, body: buf.slice(bodyStart, bodyStart + length) },
    rest: buf.slice(bodyStart + length + 2),
  };
}

/**
 * Yield parts as they arrive. Ends when the stream closes; aborting the
 * fetch makes the read reject, which propagates to the consumer.
 */
export async function* multipartParts(
    stream: ReadableStream<Uint8Array>,
    boundary: string): AsyncGenerator<StreamPart> {
  const delimiter = encoder.encode(`--${boundary}\r\n`);
  const reader = stream.getReader();
  let buf: Uint8Array = new Uint8Array(0);
  try {
    for (;;) {
      const { done, value } = await reader.read();
      if (done) return;
      buf = concat(buf, value);
      for (;;) {
        const taken = takePart(buf, delimiter);
        if (!taken) break;
        buf = taken.rest;
        yield taken.part;
      }
    }
  } finally {
    reader.releaseLock();
  }
}

/** Boundary token from a multipart Content-Type header, if any. */
export function boundaryOf(contentType: string | null): string | null {
  if (!contentType) return null;
  const match = /boundary=([^;]+)/.exec(contentType);
  return match ? match[1].trim() : null;
}
