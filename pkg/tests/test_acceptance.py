"""Acceptance suite: one test per release criterion.

Each test prints an `ACCEPTANCE <name>: PASS` line on success (visible
with `pytest -s` or `-rP`); a failure shows up as a normal pytest
failure. The end-to-end criteria run the installed CLI in real
subprocesses against real sockets.
"""

import json
import random
import subprocess
import sys
import threading
import time

import numpy as np
import pytest
import requests

from vfpbench import eeprom, urd
from vfpbench.board import Board, EEPROM_ADDR, I2cTransaction
from vfpbench.eeprom import BoardDescriptor, BoardType
from vfpbench.pattern import VideoInput, encode_ppm, pixel_at, render_frame
from test_board import EepromOracle
from test_pattern import oracle_pixel

EXPECTED_SCAN = [0x18, 0x20, 0x24, 0x30, 0x31, 0x50]


def note_pass(name):
    print(f"ACCEPTANCE {name}: PASS")


def run_cli(*args, timeout):
    return subprocess.run(
        [sys.executable, "-m", "vfpbench", *args],
        capture_output=True, text=True, timeout=timeout)


class ServerProcess:
    """`vfpbench serve` in a child process, bound to an ephemeral port."""

    def __init__(self, *extra_args):
        self.proc = subprocess.Popen(
            [sys.executable, "-m", "vfpbench", "serve",
             "--bind", "127.0.0.1:0", *extra_args],
            stdout=subprocess.PIPE, stderr=subprocess.PIPE, text=True)
        self.base_url = None
        reader = threading.Thread(target=self._read_banner, daemon=True)
        reader.start()
        reader.join(timeout=10)
        if self.base_url is None:
            self.stop()
            raise RuntimeError("server did not announce its address")

    def _read_banner(self):
        line = self.proc.stdout.readline()
        if line.startswith("serving on "):
            self.base_url = line.split()[-1].strip()

    def stop(self):
        self.proc.terminate()
        try:
            self.proc.wait(timeout=5)
        except subprocess.TimeoutExpired:
            self.proc.kill()
            self.proc.wait(timeout=5)

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.stop()


def test_i2c_scan_fidelity(make_server):
    started = time.monotonic()
    board = Board(BoardType.XC2V1000)
    assert board.i2c_scan() == EXPECTED_SCAN
    server = make_server()
    resp = requests.get(server.base_url + "/api/i2c/scan", timeout=5)
    assert [int(a, 16) for a in resp.json()["addresses"]] == EXPECTED_SCAN
    assert time.monotonic() - started < 1.0
    note_pass("i2c-scan-fidelity")


def test_provisioning_round_trip(upcb1b_script):
    board = Board(BoardType.XC2V1000, uninitialized=True)
    assert board.eeprom_image() == b"\xff" * 256
    script = urd.parse(upcb1b_script, name="upcb1b.urd")
    assert urd.execute(script, board.i2c_transaction).passed

    image = board.eeprom_image()
    assert eeprom.validate(image) is None
    assert board.pci_identify().driver_bound
    assert eeprom.decode(image).board_type is BoardType.XC2V1000
    assert image[2] == 0x04

    rng = random.Random(0xEE)
    for offset in range(256):
        for _ in range(3):
            value = rng.randrange(256)
            if value == image[offset]:
                value = (value + 1) % 256
            corrupt = bytearray(image)
            corrupt[offset] = value
            assert eeprom.validate(bytes(corrupt)) is not None, \
                f"single-byte corruption at offset {offset} undetected"
    note_pass("provisioning-round-trip")


def test_eeprom_map_properties():
    rng = random.Random(0xA5A5)
    for _ in range(10_000):
        desc = BoardDescriptor(
            board_type=rng.choice([BoardType.XC2V250, BoardType.XC2V1000]),
            subsystem_vendor_id=rng.randrange(0x10000),
            subsystem_device_id=rng.randrange(0x10000),
        )
        image = eeprom.encode(desc)
        assert eeprom.decode(image) == desc
        assert sum(image) % 256 == 0
    note_pass("eeprom-map-properties")


def test_frame_determinism(golden_dir):
    frame = render_frame(720, 576, VideoInput.VID0, 0)
    golden = (golden_dir / "frame_vid0_n0.ppm").read_bytes()
    assert encode_ppm(frame) == golden

    rng = random.Random(0xF00D)
    for _ in range(1000):
        x, y = rng.randrange(720), rng.randrange(576)
        n = rng.randrange(100_000)
        source = rng.choice([VideoInput.VID0, VideoInput.VID1])
        assert pixel_at(x, y, n, source, 720, 576) == \
            oracle_pixel(x, y, n, source, 720, 576)

    # and the renderer agrees with the closed form away from n=0 too
    for n in (rng.randrange(100_000) for _ in range(5)):
        sample = render_frame(720, 576, VideoInput.VID1, n)
        for _ in range(50):
            x, y = rng.randrange(720), rng.randrange(576)
            assert tuple(sample.pixels[y, x]) == \
                pixel_at(x, y, n, VideoInput.VID1, 720, 576)
    note_pass("frame-determinism")


def test_motion_property():
    rng = random.Random(0xBEEF)
    for _ in range(100):
        n = rng.randrange(1_000_000)
        now = render_frame(720, 576, VideoInput.VID0, n)
        next_ = render_frame(720, 576, VideoInput.VID0, n + 1)
        period = render_frame(720, 576, VideoInput.VID0, n + 144)
        assert not np.array_equal(now.pixels, next_.pixels)
        assert np.array_equal(now.pixels, period.pixels)
    note_pass("motion-property")


def test_bus_linearizability():
    board = Board(BoardType.XC2V1000, uninitialized=True)
    board.txn_trace = []
    rng = random.Random(0xCAFE)
    plans = []
    for _ in range(8):
        plan = []
        for _ in range(200):
            if rng.random() < 0.6:
                plan.append(([rng.randrange(256)
                              for _ in range(rng.randrange(1, 18))], 0))
            else:
                plan.append(([rng.randrange(256)], rng.randrange(1, 18)))
        plans.append(plan)

    def worker(plan):
        for write, read in plan:
            board.i2c_transaction(I2cTransaction(EEPROM_ADDR, bytes(write), read))

    threads = [threading.Thread(target=worker, args=(p,)) for p in plans]
    for t in threads:
        t.start()
    for t in threads:
        t.join()

    assert len(board.txn_trace) == 8 * 200
    oracle = EepromOracle()
    for txn, result in board.txn_trace:
        assert list(result.read) == oracle.apply(txn.write, txn.read)
    assert board.eeprom_image() == bytes(oracle.memory)
    note_pass("bus-linearizability")


def test_end_to_end_phase_a():
    started = time.monotonic()
    result = run_cli("functional", "--board", "xc2v1000",
                     "--start-uninitialized", timeout=20)
    elapsed = time.monotonic() - started
    assert result.returncode == 0, result.stdout + result.stderr
    assert elapsed < 5.0, f"phase A took {elapsed:.1f}s"
    assert "OVERALL: PASS" in result.stdout
    note_pass("end-to-end-phase-a")


def test_end_to_end_phase_b():
    started = time.monotonic()
    with ServerProcess() as server:
        result = run_cli("insystem", "--url", server.base_url, "--json",
                         timeout=20)
    elapsed = time.monotonic() - started
    assert result.returncode == 0, result.stdout + result.stderr
    report = json.loads(result.stdout)
    assert report["overall"] == "pass"
    assert len(report["steps"]) == 6
    assert all(s["status"] == "pass" for s in report["steps"])
    assert elapsed < 15.0, f"phase B took {elapsed:.1f}s"

    with ServerProcess("--uninitialized") as server:
        result = run_cli("insystem", "--url", server.base_url, "--json",
                         timeout=20)
    assert result.returncode == 1
    report = json.loads(result.stdout)
    byname = {s["name"]: s["status"] for s in report["steps"]}
    assert byname["grab"] == "fail"
    assert byname["eeprom-query"] == "fail"
    note_pass("end-to-end-phase-b")


MALFORMED_SCRIPTS = [
    ("q 0x50 0x00", 1, "unknown command"),
    ("w 0x50 0x00\nz\n", 2, "unknown command"),
    ("# lead\n\nwx 0x50\n", 3, "unknown command"),
    ("w 0x50", 1, "at least one byte"),
    ("w 0x50 0x100", 1, "exceeds 8 bits"),
    ("w 0x50 0x00 256", 1, "exceeds 8 bits"),
    ("w 0x80 0x00", 1, "address"),
    ("w 0x07 0x00", 1, "address"),
    ("w 0x50 0x00 0x0g", 1, "bad number"),
    ("r 0x50 0x00", 1, "address, pointer and count"),
    ("r 0x50 0x00 1 2", 1, "address, pointer and count"),
    ("r 0x50 0x00 0", 1, "at least 1"),
    ("# one\nr 0x50 0x100 4\n", 2, "exceeds 8 bits"),
    ("x 0x50 0x00", 1, "at least one byte"),
    ("x 0x9a 0x00 0x01", 1, "address"),
    ("d", 1, "millisecond"),
    ("d ten", 1, "bad number"),
    ("d -1", 1, "negative"),
    ('w 0x50 0x00 0x01\np "oops\n', 2, "unterminated"),
    ("p hello", 1, "quoted"),
    ("s now", 1, "no arguments"),
]


def test_urd_interpreter(upcb1b_script):
    # golden-script idempotence
    board = Board(BoardType.XC2V1000, uninitialized=True)
    script = urd.parse(upcb1b_script, name="upcb1b.urd")
    assert urd.execute(script, board.i2c_transaction).passed
    image = board.eeprom_image()
    second = urd.execute(script, board.i2c_transaction)
    assert second.passed
    assert board.eeprom_image() == image

    # parse-error positions on a malformed corpus
    assert len(MALFORMED_SCRIPTS) >= 20
    for text, line, fragment in MALFORMED_SCRIPTS:
        with pytest.raises(urd.ParseError) as err:
            urd.parse(text)
        assert err.value.line == line, f"{text!r}: line {err.value.line}"
        assert fragment in err.value.message, f"{text!r}: {err.value.message}"
    note_pass("urd-interpreter")
