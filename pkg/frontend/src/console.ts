// DOM layer of the test console. Thin glue only: it renders whatever
// ConsoleState holds and forwards button presses to the client; all
// data shown on the page came out of an API response.

import { ConsoleClient, ConsoleState, DEVICE_LEGEND } from "./client.js";

function el<K extends keyof HTMLElementTagNameMap>(
    tag: K, attrs: Record<string, string> = {},
    ...children: (HTMLElement | string)[]): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  for (const [key, value] of Object.entries(attrs)) node.setAttribute(key, value);
  for (const child of children) node.append(child);
  return node;
}

function section(title: string, ...children: (HTMLElement | string)[]): HTMLElement {
  return el("section", { class: "panel" }, el("h2", {}, title), ...children);
}

export function buildConsole(root: HTMLElement, client: ConsoleClient): void {
  const banner = el("div", { id: "banner", class: "banner", hidden: "" });
  const status = el("div", { id: "status", class: "status" });

  // identity
  const identityTable = el("table", { id: "identity" });
  const identitySection = section("Identity",
    el("button", { id: "identity-refresh" }, "Refresh"), identityTable);

  // grab, shown in the left pane
  const grabImg = el("img", { id: "grab-image", alt: "no grab yet" });
  const grabSection = section("Image grab",
    el("button", { id: "grab-button" }, "Grab image"), el("div", {}, grabImg));

  // i2c scan
  const scanList = el("ul", { id: "scan-list" });
  const scanSection = section("I2C scan",
    el("button", { id: "scan-button" }, "Scan bus"), scanList);

  // LEDs
  const ledRow = el("div", { id: "led-row" });
  const ledButtons = el("div", {},
    el("button", { id: "led-all-on" }, "All on"),
    el("button", { id: "led-all-off" }, "All off"));
  const ledSection = section("LEDs", ledButtons, ledRow);

  // EEPROM dump, shown in the right pane
  const dumpPane = el("pre", { id: "eeprom-dump" });
  const eepromSection = section("EEPROM",
    el("button", { id: "eeprom-query" }, "Query EEPROM"), dumpPane);

  // live stream
  const streamImg = el("img", { id: "stream-image", alt: "stream stopped" });
  const streamSection = section("Streaming video",
    el("div", {},
      el("button", { id: "stream-start" }, "All live cams"),
      el("button", { id: "stream-stop" }, "Stop"),
      el("button", { id: "input-vid0" }, "Vid0"),
      el("button", { id: "input-vid1" }, "Vid1"),
      el("span", { id: "stream-counter" })),
    el("div", {}, streamImg));

  const left = el("div", { class: "column" },
    identitySection, grabSection, streamSection);
  const right = el("div", { class: "column" },
    scanSection, ledSection, eepromSection);
  root.append(banner, status, el("div", { class: "columns" }, left, right));

  let grabUrl: string | null = null;
  let streamUrl: string | null = null;

  const showFrame = (body: Uint8Array) => {
    const url = URL.createObjectURL(
      new Blob([body as BlobPart], { type: "image/bmp" }));
    if (streamUrl) URL.revokeObjectURL(streamUrl);
    streamUrl = url;
    streamImg.src = url;
  };

  byId("identity-refresh").onclick = () => void client.refreshIdentity();
  byId("grab-button").onclick = () => void client.grab();
  byId("scan-button").onclick = () => void client.scan();
  byId("led-all-on").onclick = () => void client.setAllLeds(true);
  byId("led-all-off").onclick = () => void client.setAllLeds(false);
  byId("eeprom-query").onclick = () => void client.queryEeprom();
  byId("stream-start").onclick = () => void client.startLiveView(showFrame);
  byId("stream-stop").onclick = () => client.stopLiveView();
  byId("input-vid0").onclick = () => void client.selectInput("vid0");
  byId("input-vid1").onclick = () => void client.selectInput("vid1");

  client.onChange((state) => render(state));

  function render(state: ConsoleState): void {
    banner.hidden = !state.error;
    banner.textContent = state.error ?? "";
    status.textContent = state.status;

    identityTable.replaceChildren(...(state.identity
      ? Object.entries(state.identity).map(([key, value]) =>
          el("tr", {}, el("th", {}, key), el("td", {}, String(value))))
      : []));

    scanList.replaceChildren(...(state.scan ?? []).map((address) =>
      el("li", {}, `${address} – ${DEVICE_LEGEND[address] ?? "unknown device"}`)));

    ledRow.replaceChildren(...(state.leds?.leds ?? []).map((on, index) => {
      const toggle = el("button",
        { class: on ? "led on" : "led", "data-led": String(index) },
        `${index}`);
      toggle.onclick = () => void client.setLed(index, !on);
      return toggle;
    }));

    if (state.lastGrab) {
      const url = URL.createObjectURL(new Blob(
        [state.lastGrab.bytes as BlobPart],
        { type: state.lastGrab.contentType }));
      if (grabUrl) URL.revokeObjectURL(grabUrl);
      grabUrl = url;
      grabImg.src = url;
    }

    dumpPane.textContent = state.eepromDump ?? "";
    byId("stream-counter").textContent =
      state.streamActive ? `live, ${state.streamUpdates} frames` :
      state.streamUpdates ? `stopped after ${state.streamUpdates} frames` : "";
  }

  function byId(id: string): HTMLElement {
    const node = root.querySelector(`#${id}`);
    if (!node) throw new Error(`missing element ${id}`);
    return node as HTMLElement;
  }
}

declare global {
  interface Window {
    videofpgaConsole?: ConsoleClient;
  }
}

if (typeof document !== "undefined" && document.getElementById("console")) {
  const client = new ConsoleClient(window.location.origin);
  buildConsole(document.getElementById("console") as HTMLElement, client);
  window.videofpgaConsole = client; // handy for poking from devtools
  void client.refreshIdentity();
  void client.refreshLeds();
}
