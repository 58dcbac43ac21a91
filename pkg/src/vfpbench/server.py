"""HTTP in-system test service.

Hosts one simulated board and exposes the in-system test surface over
HTTP: identity, raw bus access, LED control, EEPROM dump/provisioning,
single-frame grab and a motion stream, plus the operator console page.
The JSON API is the canonical surface; videofpga.html keeps the
original console page name.

Runs on the stdlib threading HTTP server: one thread per connection,
with all board access funneled through the board's own serialized
operations. Stream sessions are long-lived and never block control
requests.
"""

from __future__ import annotations

import json
import logging
import threading
import time
from dataclasses import dataclass
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from pathlib import Path
from urllib.parse import parse_qs, urlsplit

from .board import Board, I2cTransaction, TxnStatus
from .eeprom import BoardType
from .pattern import (
    DEFAULT_FPS,
    DEFAULT_HEIGHT,
    DEFAULT_WIDTH,
    VideoInput,
    encode_bmp,
    encode_ppm,
)
from . import eeprom, urd

log = logging.getLogger("vfpbench.server")

CONSOLE_PAGE = "videofpga.html"
STREAM_BOUNDARY = b"frame"

STATIC_TYPES = {
    ".html": "text/html; charset=utf-8",
    ".js": "text/javascript; charset=utf-8",
    ".css": "text/css; charset=utf-8",
    ".map": "application/json",
}

INDEX_PAGE = """<!DOCTYPE html>
<html>
<head><title>VideoFPGA video server</title></head>
<body>
<h1>VideoFPGA video server</h1>
<ul>
<li><a href="/stream">Streamer Output</a> (All live cams)</li>
<li><a href="/videofpga.html">Test console</a></li>
</ul>
</body>
</html>
"""

PLACEHOLDER_CONSOLE = """<!DOCTYPE html>
<html>
<head><title>VideoFPGA test server</title></head>
<body>
<h1>VideoFPGA test server</h1>
<p>No console build found; the JSON API is live:</p>
<ul>
<li>GET /api/identity</li>
<li>GET /api/i2c/scan</li>
<li>POST /api/i2c/txn</li>
<li>GET /api/eeprom, POST /api/eeprom/init</li>
<li>GET /api/led, POST /api/led</li>
<li>POST /api/video/input, /api/video/start, /api/video/stop</li>
<li>GET /api/grab?format=ppm|bmp</li>
<li>GET /stream</li>
</ul>
</body>
</html>
"""


@dataclass
class ServerConfig:
    """Bind address plus the board the service should host.

    The defaults bind loopback for desk use; the documented reference
    deployments put the server at 192.168.0.200 behind a switch or at
    10.1.1.1 over a direct crossover cable.
    """

    host: str = "127.0.0.1"
    port: int = 8080
    board_type: BoardType = BoardType.XC2V1000
    uninitialized: bool = False
    fps: float = DEFAULT_FPS
    width: int = DEFAULT_WIDTH
    height: int = DEFAULT_HEIGHT
    console: Path | None = None  # console page file, or a directory holding it

    def __post_init__(self):
        if not 0 <= self.port <= 65535:
            raise ValueError(f"bad port {self.port}")
        if self.fps <= 0:
            raise ValueError("fps must be positive")


class _HttpServer(ThreadingHTTPServer):
    daemon_threads = True
    allow_reuse_address = True
    request_queue_size = 64  # survive bursts of short-lived test clients
    app: "BoardTestServer"


class BoardTestServer:
    """One board behind one HTTP listener."""

    def __init__(self, config: ServerConfig):
        self.config = config
        self.board = Board(
            config.board_type,
            uninitialized=config.uninitialized,
            fps=config.fps,
            width=config.width,
            height=config.height,
        )
        self._httpd = _HttpServer((config.host, config.port), _Handler)
        self._httpd.app = self
        self._thread: threading.Thread | None = None
        self._closing = threading.Event()

    @property
    def host(self) -> str:
        return self._httpd.server_address[0]

    @property
    def port(self) -> int:
        return self._httpd.server_address[1]

    @property
    def base_url(self) -> str:
        return f"http://{self.host}:{self.port}"

    @property
    def closing(self) -> bool:
        return self._closing.is_set()

    def console_dir(self) -> Path | None:
        page = self.console_page()
        return page.parent if page else None

    def console_page(self) -> Path | None:
        path = self.config.console
        if path is None:
            return None
        path = Path(path)
        if path.is_dir():
            path = path / CONSOLE_PAGE
        return path if path.is_file() else None

    def serve_forever(self) -> None:
        log.info("serving on %s", self.base_url)
        self._httpd.serve_forever()

    def start(self) -> "BoardTestServer":
        """Serve on a background thread (test/embedding convenience)."""
        self._thread = threading.Thread(
            target=self._httpd.serve_forever, kwargs={"poll_interval": 0.05},
            daemon=True)
        self._thread.start()
        return self

    def stop(self) -> None:
        self._closing.set()
        self._httpd.shutdown()
        self._httpd.server_close()
        if self._thread is not None:
            self._thread.join(timeout=5)
            self._thread = None


def serve(config: ServerConfig) -> BoardTestServer:
    """Bind the service; call serve_forever() or start() on the result."""
    return BoardTestServer(config)


class _Handler(BaseHTTPRequestHandler):
    protocol_version = "HTTP/1.1"
    disable_nagle_algorithm = True  # small JSON replies must not sit in buffers
    server: _HttpServer

    @property
    def app(self) -> BoardTestServer:
        return self.server.app

    @property
    def board(self) -> Board:
        return self.server.app.board

    def log_message(self, fmt, *args):
        log.debug("%s %s", self.address_string(), fmt % args)

    # -- plumbing -----------------------------------------------------------

    def _send_bytes(self, code: int, content_type: str, payload: bytes) -> None:
        self.send_response(code)
        self.send_header("Content-Type", content_type)
        self.send_header("Content-Length", str(len(payload)))
        self.end_headers()
        self.wfile.write(payload)

    def _send_json(self, code: int, obj) -> None:
        self._send_bytes(code, "application/json",
                         json.dumps(obj).encode("utf-8"))

    def _send_error_json(self, code: int, message: str) -> None:
        self._send_json(code, {"error": message})

    def _read_json_body(self):
        """Parsed JSON object, {} for an empty body, None after a 400."""
        length = int(self.headers.get("Content-Length") or 0)
        raw = self.rfile.read(length) if length else b""
        if not raw:
            return {}
        try:
            body = json.loads(raw)
        except ValueError:
            self._send_error_json(400, "body is not valid JSON")
            return None
        if not isinstance(body, dict):
            self._send_error_json(400, "body must be a JSON object")
            return None
        return body

    def _driver_ready(self) -> bool:
        """503 unless the EEPROM validates (the driver-error state)."""
        if self.board.pci_identify().driver_bound:
            return True
        self._send_error_json(
            503, "EEPROM does not validate; driver not bound")
        return False

    def _ensure_fpga(self) -> None:
        if not self.board.fpga.done:
            self.board.load_fpga()

    # -- GET ------------------------------------------------------------------

    def do_GET(self):
        url = urlsplit(self.path)
        path = url.path
        if path == "/":
            self._send_bytes(200, "text/html; charset=utf-8", INDEX_PAGE.encode())
        elif path.lower() == "/" + CONSOLE_PAGE:
            self._get_console()
        elif path == "/api/identity":
            self._get_identity()
        elif path == "/api/i2c/scan":
            self._get_scan()
        elif path == "/api/eeprom":
            self._send_bytes(200, "text/plain; charset=utf-8",
                             eeprom.hexdump(self.board.eeprom_image()).encode())
        elif path == "/api/led":
            self._send_json(200, self._led_state())
        elif path == "/api/grab":
            self._get_grab(parse_qs(url.query))
        elif path == "/stream":
            self._get_stream()
        else:
            self._get_static(path)

    def _get_console(self):
        page = self.app.console_page()
        if page is not None:
            self._send_bytes(200, "text/html; charset=utf-8", page.read_bytes())
        else:
            self._send_bytes(200, "text/html; charset=utf-8",
                             PLACEHOLDER_CONSOLE.encode())

    def _get_static(self, path: str):
        # Assets sitting next to the console page (its scripts/styles).
        directory = self.app.console_dir()
        name = path.lstrip("/")
        if directory is not None and name and "/" not in name and "\\" not in name:
            candidate = directory / name
            content_type = STATIC_TYPES.get(candidate.suffix)
            if content_type and candidate.is_file():
                self._send_bytes(200, content_type, candidate.read_bytes())
                return
        self._send_error_json(404, f"no route for {path}")

    def _get_identity(self):
        ident = self.board.pci_identify()
        self._send_json(200, {
            "vendor_id": f"0x{ident.vendor_id:04x}",
            "device_id": f"0x{ident.device_id:04x}",
            "subsystem_vendor_id": f"0x{ident.subsystem_vendor_id:04x}",
            "subsystem_device_id": f"0x{ident.subsystem_device_id:04x}",
            "driver_bound": ident.driver_bound,
            "board_type": ident.board_type.name.lower() if ident.board_type else "unknown",
        })

    def _get_scan(self):
        addresses = [f"0x{a:02x}" for a in self.board.i2c_scan()]
        self._send_json(200, {"addresses": addresses})

    def _led_state(self):
        return {
            "mask": f"0x{self.board.led_mask:02x}",
            "leds": self.board.led_states(),
        }

    def _get_grab(self, query):
        fmt = query.get("format", ["bmp"])[0]
        if fmt not in ("ppm", "bmp"):
            self._send_error_json(400, f"unknown grab format {fmt!r}")
            return
        if not self._driver_ready():
            return
        self._ensure_fpga()
        frame = self.board.capture_frame()
        if fmt == "ppm":
            self._send_bytes(200, "image/x-portable-pixmap", encode_ppm(frame))
        else:
            self._send_bytes(200, "image/bmp", encode_bmp(frame))

    def _get_stream(self):
        if not self._driver_ready():
            return
        self._ensure_fpga()
        self.send_response(200)
        self.send_header(
            "Content-Type",
            f"multipart/x-mixed-replace; boundary={STREAM_BOUNDARY.decode()}")
        self.send_header("Connection", "close")
        self.end_headers()
        interval = 1.0 / self.board.video.fps
        next_tick = time.monotonic()
        while not self.app.closing:
            frame = self.board.capture_frame()
            payload = encode_bmp(frame)
            try:
                self.wfile.write(b"--" + STREAM_BOUNDARY + b"\r\n")
                self.wfile.write(b"Content-Type: image/bmp\r\n")
                self.wfile.write(f"Content-Length: {len(payload)}\r\n\r\n".encode())
                self.wfile.write(payload)
                self.wfile.write(b"\r\n")
                self.wfile.flush()
            except OSError:
                return  # client went away; board counters stay untouched
            next_tick += interval
            delay = next_tick - time.monotonic()
            if delay > 0:
                time.sleep(delay)

    # -- POST -----------------------------------------------------------------

    def do_POST(self):
        path = urlsplit(self.path).path
        body = self._read_json_body()
        if body is None:
            return
        if path == "/api/i2c/txn":
            self._post_txn(body)
        elif path == "/api/eeprom/init":
            self._post_eeprom_init(body)
        elif path == "/api/led":
            self._post_led(body)
        elif path == "/api/video/input":
            self._post_video_input(body)
        elif path == "/api/video/start":
            self._post_video_running(True)
        elif path == "/api/video/stop":
            self._post_video_running(False)
        else:
            self._send_error_json(404, f"no route for {path}")

    @staticmethod
    def _parse_int(value):
        if isinstance(value, bool):
            raise ValueError(f"bad integer {value!r}")
        if isinstance(value, int):
            return value
        if isinstance(value, str):
            return int(value, 16) if value.lower().startswith("0x") else int(value)
        raise ValueError(f"bad integer {value!r}")

    def _post_txn(self, body):
        try:
            address = self._parse_int(body["address"])
            write = bytes(self._parse_int(v) for v in body.get("write", []))
            read = self._parse_int(body.get("read", 0))
            txn = I2cTransaction(address, write, read)
        except (KeyError, TypeError, ValueError) as exc:
            self._send_error_json(400, f"bad transaction: {exc}")
            return
        result = self.board.i2c_transaction(txn)
        if result.ok:
            self._send_json(200, {"status": "ack", "read": list(result.read)})
        else:
            self._send_json(409, {"status": result.status.value})

    def _post_eeprom_init(self, body):
        try:
            board_type = BoardType[str(body["board_type"]).upper()]
        except (KeyError, AttributeError):
            self._send_error_json(400, "board_type must be xc2v250 or xc2v1000")
            return
        script = urd.parse(urd.provisioning_script(board_type), name="eeprom-init")
        report = urd.execute(script, self.board.i2c_transaction)
        reason = eeprom.validate(self.board.eeprom_image())
        self._send_json(200, {
            "valid": reason is None,
            "reason": reason,
            "script": "pass" if report.passed else "fail",
            "board_type": board_type.name.lower(),
        })

    def _post_led(self, body):
        if "all" in body:
            if not isinstance(body["all"], bool):
                self._send_error_json(400, "'all' must be a boolean")
                return
            self.board.set_all_leds(body["all"])
        elif "index" in body:
            try:
                index = self._parse_int(body["index"])
                on = body.get("on")
                if not isinstance(on, bool):
                    raise ValueError("'on' must be a boolean")
                self.board.set_led(index, on)
            except (TypeError, ValueError) as exc:
                self._send_error_json(400, f"bad LED request: {exc}")
                return
        else:
            self._send_error_json(400, "LED request needs 'all' or 'index'+'on'")
            return
        self._send_json(200, self._led_state())

    def _pipeline_state(self):
        video = self.board.video
        return {
            "input": video.input.value,
            "running": video.running,
            "frame_counter": video.frame_counter,
            "fps": video.fps,
            "width": video.width,
            "height": video.height,
        }

    def _post_video_input(self, body):
        try:
            source = VideoInput(str(body["input"]).lower())
        except (KeyError, ValueError):
            self._send_error_json(400, "input must be vid0 or vid1")
            return
        self.board.select_input(source)
        self._send_json(200, self._pipeline_state())

    def _post_video_running(self, running: bool):
        if running:
            if not self._driver_ready():
                return
            self._ensure_fpga()
            self.board.start_stream()
        else:
            self.board.stop_stream()
        self._send_json(200, self._pipeline_state())
