// Client-layer tests with a scripted fetch. The central claim under
// test: state only ever holds what a response said (no optimistic
// updates, no fabricated values, failures leave the panel untouched).

import { describe, expect, it } from "vitest";

import { ConsoleClient, FetchLike } from "../src/client.js";

const encoder = new TextEncoder();

function jsonResponse(body: unknown, status = 200): Response {
  return new Response(JSON.stringify(body), {
    status,
    headers: { "Content-Type": "application/json" },
  });
}

interface Call {
  url: string;
  init?: RequestInit;
}

function scripted(handler: (url: string, init?: RequestInit) => Response | Promise<Response>) {
  const calls: Call[] = [];
  const impl: FetchLike = async (url, init) => {
    calls.push({ url, init });
    return handler(url, init);
  };
  return { calls, impl };
}

const IDENTITY = {
  vendor_id: "0x1131",
  device_id: "0x7134",
  subsystem_vendor_id: "0x1131",
  subsystem_device_id: "0x7134",
  driver_bound: true,
  board_type: "xc2v1000",
};

describe("ConsoleClient", () => {
  it("stores the identity response verbatim", async () => {
    const { impl } = scripted(() => jsonResponse(IDENTITY));
    const client = new ConsoleClient("http://board", impl);
    await client.refreshIdentity();
    expect(client.state.identity).toEqual(IDENTITY);
    expect(client.state.error).toBeNull();
  });

  it("stores scan results from the response only", async () => {
    const addresses = ["0x18", "0x20", "0x24", "0x30", "0x31", "0x50"];
    const { impl, calls } = scripted(() => jsonResponse({ addresses }));
    const client = new ConsoleClient("http://board", impl);
    await client.scan();
    expect(client.state.scan).toEqual(addresses);
    expect(calls[0].url).toBe("http://board/api/i2c/scan");
  });

  it("re-reads LED state after a POST instead of trusting it", async () => {
    // the POST answer lies; the client must display the GET answer
    const fromGet = { mask: "0x01", leds: [true, ...Array(7).fill(false)] };
    const fromPost = { mask: "0xff", leds: Array(8).fill(true) };
    const { impl, calls } = scripted((_url, init) =>
      jsonResponse(init?.method === "POST" ? fromPost : fromGet));
    const client = new ConsoleClient("http://board", impl);
    await client.setAllLeds(true);
    expect(client.state.leds).toEqual(fromGet);
    expect(calls.map((c) => c.init?.method ?? "GET")).toEqual(["POST", "GET"]);
  });

  it("keeps displayed state untouched when an action fails", async () => {
    let healthy = true;
    const { impl } = scripted(() => {
      if (!healthy) throw new TypeError("fetch failed");
      return jsonResponse({ mask: "0x00", leds: Array(8).fill(false) });
    });
    const client = new ConsoleClient("http://board", impl);
    await client.refreshLeds();
    const before = client.state.leds;
    healthy = false;
    await client.setLed(3, true);
    expect(client.state.leds).toBe(before);   // untouched, not refetched
    expect(client.state.error).toMatch(/led/);
  });

  it("reports http errors through the banner", async () => {
    const { impl } = scripted(() => new Response("boom", { status: 503 }));
    const client = new ConsoleClient("http://board", impl);
    await client.grab();
    expect(client.state.lastGrab).toBeNull();
    expect(client.state.error).toMatch(/503/);
  });

  it("stores grab bytes and content type from the response", async () => {
    const payload = encoder.encode("BM-grab-bytes");
    const { impl } = scripted(() => new Response(payload, {
      status: 200, headers: { "Content-Type": "image/bmp" } }));
    const client = new ConsoleClient("http://board", impl);
    await client.grab();
    expect(client.state.lastGrab?.bytes).toEqual(payload);
    expect(client.state.lastGrab?.contentType).toBe("image/bmp");
  });

  it("stores the eeprom dump text", async () => {
    const dump = "0000: a5 01 04\n";
    const { impl } = scripted(() => new Response(dump, { status: 200 }));
    const client = new ConsoleClient("http://board", impl);
    await client.queryEeprom();
    expect(client.state.eepromDump).toBe(dump);
  });

  it("counts live view updates and notices the stream ending", async () => {
    const part = (text: string) => {
      const body = encoder.encode(text);
      return encoder.encode(
        `--frame\r\nContent-Type: image/bmp\r\n` +
        `Content-Length: ${body.length}\r\n\r\n${text}\r\n`);
    };
    const stream = new ReadableStream<Uint8Array>({
      start(controller) {
        controller.enqueue(part("one"));
        controller.enqueue(part("two"));
        controller.close();
      },
    });
    const { impl } = scripted(() => new Response(stream, {
      status: 200,
      headers: { "Content-Type": "multipart/x-mixed-replace; boundary=frame" },
    }));
    const client = new ConsoleClient("http://board", impl);
    const frames: string[] = [];
    await client.startLiveView((body) => frames.push(new TextDecoder().decode(body)));
    expect(frames).toEqual(["one", "two"]);
    expect(client.state.streamUpdates).toBe(2);
    expect(client.state.streamActive).toBe(false);
    expect(client.state.error).toMatch(/reconnect/);
  });

  it("stop aborts the stream without raising an error", async () => {
    const { impl } = scripted((_url, init) => {
      const stream = new ReadableStream<Uint8Array>({
        start(controller) {
          init?.signal?.addEventListener("abort", () =>
            controller.error(new DOMException("aborted", "AbortError")));
        },
      });
      return new Response(stream, {
        status: 200,
        headers: { "Content-Type": "multipart/x-mixed-replace; boundary=frame" },
      });
    });
    const client = new ConsoleClient("http://board", impl);
    const running = client.startLiveView();
    await new Promise((resolve) => setTimeout(resolve, 20));
    expect(client.state.streamActive).toBe(true);
    client.stopLiveView();
    await running;
    expect(client.state.streamActive).toBe(false);
    expect(client.state.error).toBeNull();
  });

  it("refuses a second concurrent stream", async () => {
    let opened = 0;
    const { impl } = scripted((_url, init) => {
      opened += 1;
      const stream = new ReadableStream<Uint8Array>({
        start(controller) {
          init?.signal?.addEventListener("abort", () =>
            controller.error(new DOMException("aborted", "AbortError")));
        },
      });
      return new Response(stream, {
        status: 200,
        headers: { "Content-Type": "multipart/x-mixed-replace; boundary=frame" },
      });
    });
    const client = new ConsoleClient("http://board", impl);
    const first = client.startLiveView();
    await new Promise((resolve) => setTimeout(resolve, 10));
    await client.startLiveView();  // no-op while one is active
    expect(opened).toBe(1);
    client.stopLiveView();
    await first;
  });
});
