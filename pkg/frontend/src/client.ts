// Console state and the API client behind it.
//
// Every value the console displays is copied verbatim out of a server
// response; nothing is synthesized client-side. Actions that fail
// leave the displayed state untouched and only raise the status/error
// banner, so a stale-but-true panel beats an optimistic lie.

import { boundaryOf, multipartParts } from "./multipart.js";

export interface Identity {
  vendor_id: string;
  device_id: string;
  subsystem_vendor_id: string;
  subsystem_device_id: string;
  driver_bound: boolean;
  board_type: string;
}

export interface LedState {
  mask: string;
  leds: boolean[];
}

export interface GrabResult {
  bytes: Uint8Array;
  contentType: string;
}

export interface ConsoleState {
  baseUrl: string;
  identity: Identity | null;
  scan: string[] | null;
  leds: LedState | null;
  lastGrab: GrabResult | null;
  eepromDump: string | null;
  videoInput: string | null;
  streamActive: boolean;
  streamUpdates: number;
  status: string;
  error: string | null;
}

// On-board device legend for the scan panel.
export const DEVICE_LEGEND: Record<string, string> = {
  "0x18": "LM83",
  "0x20": "MPEG encoder",
  "0x24": "TDA8444",
  "0x30": "FPGA I2C core",
  "0x31": "FPGA I2C core",
  "0x50": "EEPROM",
};

export type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

export class ConsoleClient {
  readonly state: ConsoleState;
  private readonly fetchImpl: FetchLike;
  private readonly listeners: Array<(state: ConsoleState) => void> = [];
  private streamAbort: AbortController | null = null;

  constructor(baseUrl: string, fetchImpl?: FetchLike) {
    this.fetchImpl = fetchImpl ?? ((input, init) => fetch(input, init));
    this.state = {
      baseUrl: baseUrl.replace(/\/$/, ""),
      identity: null,
      scan: null,
      leds: null,
      lastGrab: null,
      eepromDump: null,
      videoInput: null,
      streamActive: false,
      streamUpdates: 0,
      status: "",
      error: null,
    };
  }

  onChange(listener: (state: ConsoleState) => void): void {
    this.listeners.push(listener);
  }

  private emit(): void {
    for (const listener of this.listeners) listener(this.state);
  }

  private note(status: string): void {
    this.state.status = status;
    this.state.error = null;
    this.emit();
  }

  private fail(action: string, err: unknown): void {
    this.state.error = `${action}: ${err instanceof Error ? err.message : err}`;
    this.emit();
  }

  private async request(path: string, init?: RequestInit): Promise<Response> {
    const resp = await this.fetchImpl(this.state.baseUrl + path, init);
    if (!resp.ok) {
      const text = await resp.text();
      throw new Error(`${resp.status} ${text.slice(0, 120)}`);
    }
    return resp;
  }

  private async getJson<T>(path: string): Promise<T> {
    return (await this.request(path)).json() as Promise<T>;
  }

  private async postJson<T>(path: string, body: unknown): Promise<T> {
    const resp = await this.request(path, {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify(body),
    });
    return resp.json() as Promise<T>;
  }

  async refreshIdentity(): Promise<void> {
    try {
      this.state.identity = await this.getJson<Identity>("/api/identity");
      this.note("identity refreshed");
    } catch (err) {
      this.fail("identity", err);
    }
  }

  async scan(): Promise<void> {
    try {
      const body = await this.getJson<{ addresses: string[] }>("/api/i2c/scan");
      this.state.scan = body.addresses;
      this.note(`scan found ${body.addresses.length} devices`);
    } catch (err) {
      this.fail("scan", err);
    }
  }

  async refreshLeds(): Promise<void> {
    try {
      this.state.leds = await this.getJson<LedState>("/api/led");
      this.note("LED state refreshed");
    } catch (err) {
      this.fail("led", err);
    }
  }

  /** POST the change, then re-read; only the server's answer is shown. */
  async setAllLeds(on: boolean): Promise<void> {
    try {
      await this.postJson("/api/led", { all: on });
      this.state.leds = await this.getJson<LedState>("/api/led");
      this.note(on ? "all LEDs on" : "all LEDs off");
    } catch (err) {
      this.fail("led", err);
    }
  }

  async setLed(index: number, on: boolean): Promise<void> {
    try {
      await this.postJson("/api/led", { index, on });
      this.state.leds = await this.getJson<LedState>("/api/led");
      this.note(`LED ${index} ${on ? "on" : "off"}`);
    } catch (err) {
      this.fail("led", err);
    }
  }

  async grab(format: "bmp" | "ppm" = "bmp"): Promise<void> {
    try {
      const resp = await this.request(`/api/grab?format=${format}`);
      const bytes = new Uint8Array(await resp.arrayBuffer());
      this.state.lastGrab = {
        bytes,
        contentType: resp.headers.get("Content-Type") ?? "",
      };
      this.note(`grabbed ${bytes.length} bytes`);
    } catch (err) {
      this.fail("grab", err);
    }
  }

  async queryEeprom(): Promise<void> {
    try {
      const resp = await this.request("/api/eeprom");
      this.state.eepromDump = await resp.text();
      this.note("EEPROM dumped");
    } catch (err) {
      this.fail("eeprom", err);
    }
  }

  async selectInput(input: "vid0" | "vid1"): Promise<void> {
    try {
      const body = await this.postJson<{ input: string }>("/api/video/input", { input });
      this.state.videoInput = body.input;
      this.note(`input ${body.input}`);
    } catch (err) {
      this.fail("video input", err);
    }
  }

  /**
   * Attach to /stream and report each part through onFrame until
   * stopLiveView() or a connection drop. At most one stream at a time.
   */
  async startLiveView(onFrame?: (body: Uint8Array) => void): Promise<void> {
    if (this.streamAbort) return;
    const abort = new AbortController();
    this.streamAbort = abort;
    this.state.streamActive = true;
    this.note("live view started");
    try {
      const resp = await this.fetchImpl(this.state.baseUrl + "/stream",
                                        { signal: abort.signal });
      if (!resp.ok || !resp.body) {
        throw new Error(`stream returned ${resp.status}`);
      }
      const boundary = boundaryOf(resp.headers.get("Content-Type")) ?? "frame";
      for await (const part of multipartParts(resp.body, boundary)) {
        this.state.streamUpdates += 1;
        if (onFrame) onFrame(part.body);
        this.emit();
      }
      // server closed the stream on its own
      this.state.error = "stream ended, use Start to reconnect";
    } catch (err) {
      if (!abort.signal.aborted) this.fail("stream", err);
    } finally {
      this.streamAbort = null;
      this.state.streamActive = false;
      this.emit();
    }
  }

  stopLiveView(): void {
    if (!this.streamAbort) return;
    this.streamAbort.abort();
    this.note("live view stopped");
  }
}
