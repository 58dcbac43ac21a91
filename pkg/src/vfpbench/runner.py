"""Two-phase board test procedure.

Phase A (functional test) runs against an in-process board: identity,
EEPROM provisioning, re-identification, FPGA load and a short
streaming smoke. Phase B (in-system test) drives a running test
server over HTTP: console page, grab, bus scan, LEDs, EEPROM query
and the motion stream. Both phases produce a TestReport; failures are
report content, not exceptions, and a failed step skips everything
after it (later tests mean nothing on an unidentified board).
"""

from __future__ import annotations

import json
import time
from dataclasses import asdict, dataclass, field
from typing import Callable

import requests

from . import eeprom, urd
from .board import Board, I2cTransaction, TransactionResult, TxnStatus, stream_frames
from .board import FPGA_STAT_ADDR, REG_STAT_DONE, REG_STAT_MODEL, PCI_DEVICE_ID, PCI_VENDOR_ID
from .eeprom import BoardType
from .pattern import (
    OVERLAY_ROWS,
    OVERLAY_STEP,
    Frame,
    VideoInput,
    decode_bmp,
    frame_digest,
)

HTTP_TIMEOUT = 5.0          # per request, "a few seconds" made explicit
STREAM_MIN_WINDOW = 1.0     # seconds of stream to observe
STREAM_MAX_WINDOW = 3.0     # give a slow start room before failing
SMOKE_WINDOW = 0.5          # per-input streaming window in Phase A

EXPECTED_SCAN = (0x18, 0x20, 0x24, 0x30, 0x31, 0x50)


class ConnectionFailed(Exception):
    """The server could not be reached at all; no report was produced."""


@dataclass
class StepResult:
    name: str
    status: str  # pass | fail | skip
    detail: str
    duration_ms: int


@dataclass
class TestReport:
    __test__ = False  # keep pytest from collecting the Test* name

    phase: str  # A | B
    steps: list[StepResult] = field(default_factory=list)

    @property
    def overall(self) -> str:
        return "fail" if any(s.status == "fail" for s in self.steps) else "pass"

    @property
    def passed(self) -> bool:
        return self.overall == "pass"


StepFunction = Callable[[], tuple[bool, str]]


def _run_steps(phase: str, steps: list[tuple[str, StepFunction]],
               halt_on_failure: bool) -> TestReport:
    report = TestReport(phase)
    failed = False
    for name, fn in steps:
        if failed and halt_on_failure:
            report.steps.append(StepResult(name, "skip", "skipped after failure", 0))
            continue
        started = time.monotonic()
        try:
            ok, detail = fn()
        except ConnectionFailed:
            raise
        except Exception as exc:
            ok, detail = False, f"{type(exc).__name__}: {exc}"
        duration = int((time.monotonic() - started) * 1000)
        report.steps.append(StepResult(name, "pass" if ok else "fail", detail, duration))
        failed = failed or not ok
    return report


# -- Phase A: functional test -------------------------------------------------


def _palette_column_ok(frame: Frame) -> bool:
    """Leftmost bar colour matches the selected input's palette order."""
    overlay_top = (OVERLAY_STEP * frame.counter) % frame.height
    y = (overlay_top + OVERLAY_ROWS + 4) % frame.height
    expected = (255, 255, 255) if frame.source is VideoInput.VID0 else (0, 0, 0)
    return tuple(frame.pixels[y, 0]) == expected


def _check_smoke_frames(name: str, frames: list[Frame]) -> list[str]:
    problems = []
    if len(frames) < 3:
        problems.append(f"{name}: only {len(frames)} frames in {SMOKE_WINDOW}s")
    digests = [frame_digest(f) for f in frames]
    if len(set(digests)) != len(digests):
        problems.append(f"{name}: repeated frame digests")
    if not all(_palette_column_ok(f) for f in frames):
        problems.append(f"{name}: wrong palette orientation")
    return problems


def run_functional(board_type: BoardType, uninitialized_start: bool = False,
                   board: Board | None = None) -> TestReport:
    """Phase A against an in-process board.

    The optional board argument is a fault-injection hook for tests;
    by default the board is built fresh from the two parameters.
    """
    if board is None:
        board = Board(board_type, uninitialized=uninitialized_start)

    def identification():
        ident = board.pci_identify()
        ok = ident.vendor_id == PCI_VENDOR_ID and ident.device_id == PCI_DEVICE_ID
        if uninitialized_start:
            # The blank board must show up with the driver-error mark.
            ok = ok and not ident.driver_bound
            state = "driver unbound as expected before provisioning"
        else:
            ok = ok and ident.driver_bound
            state = "driver bound"
        return ok, f"device 0x{ident.device_id:04x}, {state}"

    def eeprom_init():
        script = urd.parse(urd.provisioning_script(board_type), name="upcb1b.urd")
        result = urd.execute(script, board.i2c_transaction)
        if not result.passed:
            return False, f"script failed at line {result.failing_line}"
        reason = eeprom.validate(board.eeprom_image())
        if reason is not None:
            return False, f"EEPROM invalid after provisioning: {reason}"
        return True, f"descriptor written and verified ({board_type.name.lower()})"

    def reidentification():
        ident = board.pci_identify()
        ok = ident.driver_bound and ident.board_type is board_type
        named = ident.board_type.name.lower() if ident.board_type else "unknown"
        return ok, f"driver_bound={ident.driver_bound}, board_type={named}"

    def fpga_load():
        board.load_fpga()
        model = board.i2c_transaction(
            I2cTransaction(FPGA_STAT_ADDR, bytes([REG_STAT_MODEL]), 1))
        done = board.i2c_transaction(
            I2cTransaction(FPGA_STAT_ADDR, bytes([REG_STAT_DONE]), 1))
        ok = (model.ok and done.ok
              and model.read[0] == board_type.value
              and done.read[0] & 0x01 == 0x01)
        return ok, f"status mirrors model code 0x{model.read[0]:02x}, done={done.read[0] & 1}"

    def streaming_smoke():
        board.select_input(VideoInput.VID1)
        board.start_stream()
        try:
            vid1 = list(stream_frames(board, duration=SMOKE_WINDOW))
            board.select_input(VideoInput.VID0)
            vid0 = list(stream_frames(board, duration=SMOKE_WINDOW))
        finally:
            board.stop_stream()
        problems = _check_smoke_frames("vid1", vid1) + _check_smoke_frames("vid0", vid0)
        if problems:
            return False, "; ".join(problems)
        return True, (f"vid1 {len(vid1)} frames, vid0 {len(vid0)} frames, "
                      "digests distinct, palettes correct")

    # A failed step invalidates everything after it: there is no point
    # testing FPGA load or video on a board the driver cannot identify.
    return _run_steps("A", [
        ("identification", identification),
        ("eeprom-init", eeprom_init),
        ("re-identification", reidentification),
        ("fpga-load", fpga_load),
        ("streaming-smoke", streaming_smoke),
    ], halt_on_failure=True)


# -- Phase B: in-system test ---------------------------------------------------


def parse_ppm(data: bytes) -> tuple[int, int, bytes]:
    """Split a binary PPM into (width, height, payload); raises ValueError."""
    if not data.startswith(b"P6"):
        raise ValueError("not a P6 PPM")
    fields = []
    pos = 2
    while len(fields) < 3:
        while pos < len(data) and data[pos:pos + 1].isspace():
            pos += 1
        start = pos
        while pos < len(data) and not data[pos:pos + 1].isspace():
            pos += 1
        fields.append(int(data[start:pos]))
    pos += 1  # single whitespace after maxval
    width, height, maxval = fields
    if maxval != 255:
        raise ValueError(f"unsupported maxval {maxval}")
    payload = data[pos:]
    if len(payload) != width * height * 3:
        raise ValueError(f"payload is {len(payload)} bytes for {width}x{height}")
    return width, height, payload


def _drain_parts(buf: bytearray, boundary: bytes = b"--frame\r\n") -> list[bytes]:
    """Pop complete multipart bodies off the front of a receive buffer."""
    parts = []
    while True:
        start = buf.find(boundary)
        if start < 0:
            break
        head_end = buf.find(b"\r\n\r\n", start)
        if head_end < 0:
            break
        headers = bytes(buf[start + len(boundary):head_end]).decode("latin-1")
        length = None
        for line in headers.split("\r\n"):
            name, _, value = line.partition(":")
            if name.strip().lower() == "content-length":
                length = int(value.strip())
        if length is None:
            raise ValueError("stream part without Content-Length")
        body_start = head_end + 4
        if len(buf) < body_start + length + 2:
            break
        parts.append(bytes(buf[body_start:body_start + length]))
        del buf[:body_start + length + 2]
    return parts


def read_stream_parts(response, min_window: float = STREAM_MIN_WINDOW,
                      min_parts: int = 2,
                      max_window: float = STREAM_MAX_WINDOW) -> list[bytes]:
    """Collect multipart bodies from a live stream response.

    Reads for at least min_window seconds; if too few parts arrived by
    then, keeps reading up to max_window before giving up.
    """
    buf = bytearray()
    parts: list[bytes] = []
    started = time.monotonic()
    for chunk in response.iter_content(chunk_size=65536):
        buf.extend(chunk)
        parts.extend(_drain_parts(buf))
        elapsed = time.monotonic() - started
        if elapsed >= min_window and len(parts) >= min_parts:
            break
        if elapsed >= max_window:
            break
    return parts


def http_bus(base_url: str, session: requests.Session | None = None,
             timeout: float = HTTP_TIMEOUT):
    """Bus function that tunnels transactions through /api/i2c/txn."""
    session = session or requests.Session()
    url = base_url.rstrip("/") + "/api/i2c/txn"

    def bus(txn: I2cTransaction) -> TransactionResult:
        resp = session.post(url, json={
            "address": txn.address,
            "write": list(txn.write),
            "read": txn.read,
        }, timeout=timeout)
        if resp.status_code not in (200, 409):
            raise RuntimeError(f"bus endpoint returned {resp.status_code}: {resp.text}")
        body = resp.json()
        return TransactionResult(TxnStatus(body["status"]),
                                 bytes(body.get("read", [])))

    return bus


def run_insystem(base_url: str) -> TestReport:
    """Phase B against a running test server."""
    base = base_url.rstrip("/")
    session = requests.Session()

    def get(path: str, **kwargs):
        return session.get(base + path, timeout=HTTP_TIMEOUT, **kwargs)

    def post(path: str, body):
        return session.post(base + path, json=body, timeout=HTTP_TIMEOUT)

    def main_page():
        try:
            resp = get("/videofpga.html")
        except requests.exceptions.ConnectionError as exc:
            raise ConnectionFailed(f"cannot reach {base}: {exc}") from exc
        return resp.status_code == 200, f"{resp.status_code} {resp.reason}"

    def grab():
        resp = get("/api/grab", params={"format": "ppm"})
        if resp.status_code != 200:
            return False, f"{resp.status_code}: {resp.text.strip()}"
        try:
            width, height, _ = parse_ppm(resp.content)
        except ValueError as exc:
            return False, f"malformed PPM: {exc}"
        return True, f"{width}x{height} PPM, {len(resp.content)} bytes"

    def i2c_scan():
        resp = get("/api/i2c/scan")
        if resp.status_code != 200:
            return False, f"{resp.status_code}: {resp.text.strip()}"
        addresses = tuple(int(a, 16) for a in resp.json()["addresses"])
        ok = addresses == EXPECTED_SCAN
        listed = " ".join(f"0x{a:02x}" for a in addresses)
        return ok, f"found {listed}"

    def led():
        for body, want in (({"all": True}, 0xFF),
                           ({"all": False}, 0x00),
                           ({"index": 0, "on": True}, 0x01)):
            resp = post("/api/led", body)
            if resp.status_code != 200:
                return False, f"{resp.status_code} on {body}"
            mask = int(get("/api/led").json()["mask"], 16)
            if mask != want:
                return False, f"after {body}: mask 0x{mask:02x}, wanted 0x{want:02x}"
        return True, "all-on, all-off and single-LED readbacks match"

    def eeprom_query():
        resp = get("/api/eeprom")
        if resp.status_code != 200:
            return False, f"{resp.status_code}: {resp.text.strip()}"
        try:
            image = eeprom.parse_hexdump(resp.text)
        except ValueError as exc:
            return False, f"bad hexdump: {exc}"
        reason = eeprom.validate(image)
        if reason is not None:
            return False, f"EEPROM invalid: {reason}"
        return True, "16x16 hexdump parses and validates"

    def streaming():
        resp = get("/stream", stream=True)
        try:
            if resp.status_code != 200:
                return False, f"{resp.status_code}: {resp.text.strip()}"
            parts = read_stream_parts(resp)
        finally:
            resp.close()
        digests = {frame_digest(decode_bmp(p)) for p in parts}
        ok = len(parts) >= 2 and len(digests) >= 2
        return ok, f"{len(parts)} parts, {len(digests)} distinct digests"

    # Phase B steps are independent probes of a live server, so each
    # one runs even after an earlier failure.
    return _run_steps("B", [
        ("main-page", main_page),
        ("grab", grab),
        ("i2c-scan", i2c_scan),
        ("led", led),
        ("eeprom-query", eeprom_query),
        ("streaming", streaming),
    ], halt_on_failure=False)


# -- reporting -------------------------------------------------------------------


def emit_report(report: TestReport, as_json: bool = False) -> str:
    """Render a report for humans, or as the JSON document verbatim."""
    if as_json:
        return json.dumps({
            "phase": report.phase,
            "steps": [asdict(s) for s in report.steps],
            "overall": report.overall,
        }, indent=2)
    lines = []
    for step in report.steps:
        lines.append(f"[{step.status.upper()}] {step.name} "
                     f"({step.duration_ms} ms) — {step.detail}")
    lines.append(f"OVERALL: {report.overall.upper()}")
    return "\n".join(lines)
