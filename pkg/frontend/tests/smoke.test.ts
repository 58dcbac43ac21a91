// Console smoke against a real test server: spawns `vfpbench serve` in
// a child process and drives the console client through scan, grab,
// LED control, EEPROM query and a two-second live view, comparing
// every displayed value with a direct API call.

import { ChildProcess, spawn } from "node:child_process";
import { afterAll, beforeAll, describe, expect, it } from "vitest";

import { ConsoleClient, DEVICE_LEGEND } from "../src/client.js";

let server: ChildProcess;
let baseUrl: string;

function startServer(): Promise<string> {
  return new Promise((resolve, reject) => {
    server = spawn("python3", ["-m", "vfpbench", "serve", "--bind", "127.0.0.1:0"],
                   { stdio: ["ignore", "pipe", "pipe"] });
    const timer = setTimeout(
      () => reject(new Error("server did not start within 10s")), 10_000);
    let banner = "";
    server.stdout!.on("data", (chunk: Buffer) => {
      banner += chunk.toString();
      const match = /serving on (http:\/\/[\d.:]+)/.exec(banner);
      if (match) {
        clearTimeout(timer);
        resolve(match[1]);
      }
    });
    server.on("exit", (code) =>
      reject(new Error(`server exited early with code ${code}`)));
  });
}

function bmpSize(bytes: Uint8Array): { width: number; height: number } {
  const view = new DataView(bytes.buffer, bytes.byteOffset, bytes.byteLength);
  return { width: view.getInt32(18, true), height: view.getInt32(22, true) };
}

beforeAll(async () => {
  baseUrl = await startServer();
}, 15_000);

afterAll(() => {
  server?.kill();
});

describe("console against a stock server", () => {
  it("runs the operator flow with zero fabricated values", async () => {
    const client = new ConsoleClient(baseUrl);

    // nothing is displayed before the API answered
    expect(client.state.identity).toBeNull();
    expect(client.state.scan).toBeNull();
    expect(client.state.leds).toBeNull();

    await client.refreshIdentity();
    const identity = await (await fetch(`${baseUrl}/api/identity`)).json();
    expect(client.state.identity).toEqual(identity);
    expect(client.state.identity!.driver_bound).toBe(true);

    await client.scan();
    const scan = await (await fetch(`${baseUrl}/api/i2c/scan`)).json();
    expect(client.state.scan).toEqual(scan.addresses);
    for (const address of client.state.scan!) {
      expect(DEVICE_LEGEND[address]).toBeDefined();
    }

    // LED all-on then all-off, each readback compared with the API
    await client.setAllLeds(true);
    expect(client.state.leds!.mask).toBe("0xff");
    expect(client.state.leds).toEqual(await (await fetch(`${baseUrl}/api/led`)).json());
    await client.setAllLeds(false);
    expect(client.state.leds!.mask).toBe("0x00");
    expect(client.state.leds).toEqual(await (await fetch(`${baseUrl}/api/led`)).json());

    await client.queryEeprom();
    const dump = await (await fetch(`${baseUrl}/api/eeprom`)).text();
    expect(client.state.eepromDump).toBe(dump);
    expect(client.state.eepromDump!.trimEnd().split("\n")).toHaveLength(16);

    await client.grab();
    expect(client.state.lastGrab!.contentType).toBe("image/bmp");
    const grabbed = client.state.lastGrab!.bytes;
    expect(grabbed[0]).toBe(0x42); // 'B'
    expect(grabbed[1]).toBe(0x4d); // 'M'
    expect(bmpSize(grabbed)).toEqual({ width: 720, height: 576 });
  }, 20_000);

  it("live view renders at least two updates in two seconds", async () => {
    const client = new ConsoleClient(baseUrl);
    const sizes: number[] = [];
    const running = client.startLiveView((body) => sizes.push(body.length));
    await new Promise((resolve) => setTimeout(resolve, 2000));
    expect(client.state.streamActive).toBe(true);
    client.stopLiveView();
    await running;

    expect(client.state.streamUpdates).toBeGreaterThanOrEqual(2);
    expect(sizes.length).toBe(client.state.streamUpdates);
    for (const size of sizes) {
      expect(size).toBe(54 + 720 * 3 * 576); // uncompressed 24-bit BMP
    }
    expect(client.state.streamActive).toBe(false);
  }, 20_000);
});
