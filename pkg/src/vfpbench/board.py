"""Behavioural model of the VideoFPGA acquisition board.

Models the board at the level the test procedures observe it: a PCI
identity derived from the setup EEPROM, a serialized I2C bus carrying
the five on-board peripherals, an 8-LED bank wired behind the FPGA
core's bus interface, FPGA configuration state and a two-input capture
pipeline. There is no register-accurate decoder emulation; each device
is the minimal stub the scan/probe/provisioning tests need.

On-board I2C map (7-bit addresses):

    0x18  LM83 temperature sensor
    0x20  MPEG encoder
    0x24  TDA8444 octal DAC (write-only data port)
    0x30  FPGA core, control (0x00 id, 0x01 config, 0x02 LED mask)
    0x31  FPGA core, status  (0x00 done flag, 0x01 loaded model code)
    0x50  setup EEPROM, 256 bytes

A board instance is safe to share between request-handler threads:
every public operation is atomic behind one lock, and nothing holds
the board across a frame-period wait.
"""

from __future__ import annotations

import threading
import time
from dataclasses import dataclass
from enum import Enum
from typing import Callable, Iterator

from . import eeprom
from .eeprom import BoardDescriptor, BoardType
from .pattern import (
    DEFAULT_FPS,
    DEFAULT_HEIGHT,
    DEFAULT_WIDTH,
    Frame,
    VideoInput,
    render_frame,
)

# PCI identity of the decoder the capture driver binds to (SAA7134).
PCI_VENDOR_ID = 0x1131
PCI_DEVICE_ID = 0x7134

I2C_ADDR_MIN = 0x08
I2C_ADDR_MAX = 0x77
MAX_WRITE_BYTES = 257  # pointer byte + one full EEPROM
MAX_READ_BYTES = 256

LM83_ADDR = 0x18
MPEG_ADDR = 0x20
TDA8444_ADDR = 0x24
FPGA_CTRL_ADDR = 0x30
FPGA_STAT_ADDR = 0x31
EEPROM_ADDR = 0x50

# FPGA control registers (0x30)
REG_FPGA_ID = 0x00      # reads 0xF0
REG_FPGA_CONFIG = 0x01
REG_LED_MASK = 0x02
# FPGA status registers (0x31)
REG_STAT_DONE = 0x00    # bit0 = configuration done
REG_STAT_MODEL = 0x01   # 0x02 / 0x04 per loaded model, 0x00 when empty

LM83_REG_TEMP = 0x00
LM83_REG_MANUFACTURER = 0xFE
LM83_MANUFACTURER_ID = 0x01
MPEG_REG_CHIP_ID = 0x00
MPEG_CHIP_ID = 0x4D
MPEG_REG_STATUS = 0x01
MPEG_STATUS_READY = 0x01

DEFAULT_TEMPERATURE_C = 42


class BoardError(Exception):
    """Base for board-level operation failures."""


class ConfigRefused(BoardError):
    """FPGA configuration refused: the EEPROM does not identify the board."""


class NotConfigured(BoardError):
    """Capture requested before the FPGA was configured."""


class TxnStatus(Enum):
    """I2C transaction outcome as seen on the bus."""

    ACK = "ack"
    ADDRESS_NACK = "nack"
    WRITE_REJECTED = "write_rejected"


@dataclass(frozen=True)
class I2cTransaction:
    """One write-then-optional-read bus unit against a 7-bit address."""

    address: int
    write: bytes = b""
    read: int = 0

    def __post_init__(self):
        if not I2C_ADDR_MIN <= self.address <= I2C_ADDR_MAX:
            raise ValueError(
                f"I2C address 0x{self.address:02X} outside "
                f"0x{I2C_ADDR_MIN:02X}-0x{I2C_ADDR_MAX:02X}")
        object.__setattr__(self, "write", bytes(self.write))
        if len(self.write) > MAX_WRITE_BYTES:
            raise ValueError(f"write of {len(self.write)} bytes exceeds {MAX_WRITE_BYTES}")
        if not 0 <= self.read <= MAX_READ_BYTES:
            raise ValueError(f"read count {self.read} outside 0-{MAX_READ_BYTES}")


@dataclass(frozen=True)
class TransactionResult:
    status: TxnStatus
    read: bytes = b""

    @property
    def ok(self) -> bool:
        return self.status is TxnStatus.ACK


@dataclass(frozen=True)
class PciIdentity:
    vendor_id: int
    device_id: int
    subsystem_vendor_id: int
    subsystem_device_id: int
    driver_bound: bool
    board_type: BoardType | None  # None = unknown (EEPROM does not validate)


@dataclass
class FpgaState:
    done: bool = False
    loaded_model: BoardType | None = None
    config_file: str | None = None


@dataclass
class VideoPipeline:
    input: VideoInput = VideoInput.VID0
    running: bool = False
    frame_counter: int = 0
    fps: float = DEFAULT_FPS
    width: int = DEFAULT_WIDTH
    height: int = DEFAULT_HEIGHT


class EepromDevice:
    """256-byte serial EEPROM with a persistent word pointer.

    The first written byte sets the pointer; further bytes store with
    auto-increment mod 256. Reads return from the pointer onward, also
    auto-incrementing, so a bare read continues where the last access
    stopped. write_protected is a fault-injection hook: data writes
    are refused without touching memory or pointer.
    """

    def __init__(self, contents: bytes | None = None):
        self.memory = bytearray(contents if contents is not None else b"\xff" * 256)
        if len(self.memory) != eeprom.EEPROM_SIZE:
            raise ValueError("EEPROM contents must be 256 bytes")
        self.pointer = 0
        self.write_protected = False

    def transact(self, write: bytes, read_count: int) -> tuple[TxnStatus, bytes]:
        if self.write_protected and len(write) > 1:
            return TxnStatus.WRITE_REJECTED, b""
        pointer = self.pointer
        if write:
            pointer = write[0]
            for b in write[1:]:
                self.memory[pointer] = b
                pointer = (pointer + 1) % 256
        out = bytearray()
        for _ in range(read_count):
            out.append(self.memory[pointer])
            pointer = (pointer + 1) % 256
        self.pointer = pointer
        return TxnStatus.ACK, bytes(out)


class RegisterDevice:
    """Register file behind a one-byte pointer, the usual small-IC shape.

    A transaction's first written byte selects a register; remaining
    bytes write successive registers, and reads return successive
    registers, both auto-incrementing mod 256. Writes that touch any
    non-writable register reject the whole transaction and change
    nothing.
    """

    def __init__(self):
        self.regs: dict[int, int] = {}
        self.pointer = 0

    def read_reg(self, reg: int) -> int:
        return self.regs.get(reg, 0x00)

    def writable(self, reg: int) -> bool:
        return True

    def transact(self, write: bytes, read_count: int) -> tuple[TxnStatus, bytes]:
        pointer = self.pointer
        if write:
            pointer = write[0]
            stores = [((pointer + i) % 256, b) for i, b in enumerate(write[1:])]
            if any(not self.writable(reg) for reg, _ in stores):
                return TxnStatus.WRITE_REJECTED, b""
            for reg, value in stores:
                self.regs[reg] = value
            pointer = (pointer + len(stores)) % 256 if stores else pointer
        out = bytearray()
        for _ in range(read_count):
            out.append(self.read_reg(pointer) & 0xFF)
            pointer = (pointer + 1) % 256
        self.pointer = pointer
        return TxnStatus.ACK, bytes(out)


class Lm83Device(RegisterDevice):
    """LM83 stub: local temperature at 0x00, manufacturer id at 0xFE."""

    def __init__(self, read_temperature: Callable[[], int]):
        super().__init__()
        self._read_temperature = read_temperature

    def read_reg(self, reg: int) -> int:
        if reg == LM83_REG_TEMP:
            return self._read_temperature() & 0xFF  # two's complement degC
        if reg == LM83_REG_MANUFACTURER:
            return LM83_MANUFACTURER_ID
        return super().read_reg(reg)

    def writable(self, reg: int) -> bool:
        return reg not in (LM83_REG_TEMP, LM83_REG_MANUFACTURER)


class MpegEncoderDevice(RegisterDevice):
    """MPEG encoder stub: chip id and a ready status, nothing encodes."""

    def read_reg(self, reg: int) -> int:
        if reg == MPEG_REG_CHIP_ID:
            return MPEG_CHIP_ID
        if reg == MPEG_REG_STATUS:
            return MPEG_STATUS_READY
        return super().read_reg(reg)

    def writable(self, reg: int) -> bool:
        return reg not in (MPEG_REG_CHIP_ID, MPEG_REG_STATUS)


class Tda8444Device:
    """TDA8444 octal DAC stub: write-only, 6-bit values.

    The first written byte selects DAC 0-7 (low three bits); following
    bytes land in successive DACs, wrapping after DAC 7. The stored
    values drive nothing; any attempt to read data is refused the way
    the real write-only part NACKs a read.
    """

    def __init__(self):
        self.dacs = [0] * 8
        self.subaddress = 0

    def transact(self, write: bytes, read_count: int) -> tuple[TxnStatus, bytes]:
        if read_count:
            return TxnStatus.WRITE_REJECTED, b""
        if write:
            sub = write[0] & 0x07
            for b in write[1:]:
                self.dacs[sub] = b & 0x3F
                sub = (sub + 1) % 8
            self.subaddress = sub
        return TxnStatus.ACK, b""


class FpgaControlDevice(RegisterDevice):
    """FPGA core control port: id register plus config and LED registers."""

    def read_reg(self, reg: int) -> int:
        if reg == REG_FPGA_ID:
            return 0xF0
        return super().read_reg(reg)

    def writable(self, reg: int) -> bool:
        return reg != REG_FPGA_ID


class FpgaStatusDevice(RegisterDevice):
    """FPGA core status port, read-only mirror of the configuration state."""

    def __init__(self, get_state: Callable[[], FpgaState]):
        super().__init__()
        self._get_state = get_state

    def read_reg(self, reg: int) -> int:
        state = self._get_state()
        if reg == REG_STAT_DONE:
            return 0x01 if state.done else 0x00
        if reg == REG_STAT_MODEL:
            return state.loaded_model.value if state.loaded_model else 0x00
        return 0x00

    def writable(self, reg: int) -> bool:
        return False


class Board:
    """One simulated board: bus, devices, FPGA and capture pipeline.

    board_type selects the FPGA fitted on the board, which only
    determines the factory EEPROM content; after provisioning, the
    identified type always comes from the EEPROM like the driver sees
    it. With uninitialized=True the EEPROM ships blank (all 0xFF) and
    the board starts in the driver-error state.
    """

    def __init__(self, board_type: BoardType, uninitialized: bool = False,
                 fps: float = DEFAULT_FPS,
                 width: int = DEFAULT_WIDTH, height: int = DEFAULT_HEIGHT):
        if not isinstance(board_type, BoardType):
            raise ValueError(f"bad board type {board_type!r}")
        self._lock = threading.RLock()
        self.fitted_type = board_type
        self.temperature_c = DEFAULT_TEMPERATURE_C
        self.fpga = FpgaState()
        self.video = VideoPipeline(fps=fps, width=width, height=height)
        if uninitialized:
            contents = None
        else:
            contents = eeprom.encode(BoardDescriptor(board_type))
        self.devices: dict[int, object] = {
            LM83_ADDR: Lm83Device(lambda: self.temperature_c),
            MPEG_ADDR: MpegEncoderDevice(),
            TDA8444_ADDR: Tda8444Device(),
            FPGA_CTRL_ADDR: FpgaControlDevice(),
            FPGA_STAT_ADDR: FpgaStatusDevice(lambda: self.fpga),
            EEPROM_ADDR: EepromDevice(contents),
        }
        # Test hook: set to a list to record (txn, result) in bus order.
        self.txn_trace: list[tuple[I2cTransaction, TransactionResult]] | None = None

    # -- bus ---------------------------------------------------------------

    def i2c_transaction(self, txn: I2cTransaction) -> TransactionResult:
        """Run one atomic transaction; bus errors are results, not raises."""
        with self._lock:
            device = self.devices.get(txn.address)
            if device is None:
                result = TransactionResult(TxnStatus.ADDRESS_NACK)
            else:
                status, data = device.transact(txn.write, txn.read)
                result = TransactionResult(status, data)
            if self.txn_trace is not None:
                self.txn_trace.append((txn, result))
            return result

    def i2c_scan(self) -> list[int]:
        """Probe every bus address with an empty transaction; Acks, ascending."""
        found = []
        for address in range(I2C_ADDR_MIN, I2C_ADDR_MAX + 1):
            if self.i2c_transaction(I2cTransaction(address)).ok:
                found.append(address)
        return found

    # -- identity / configuration -------------------------------------------

    @property
    def eeprom_device(self) -> EepromDevice:
        return self.devices[EEPROM_ADDR]

    def eeprom_image(self) -> bytes:
        with self._lock:
            return bytes(self.eeprom_device.memory)

    def pci_identify(self) -> PciIdentity:
        """Identity as the host would enumerate it; re-derived per call."""
        img = self.eeprom_image()
        valid = eeprom.validate(img) is None
        return PciIdentity(
            vendor_id=PCI_VENDOR_ID,
            device_id=PCI_DEVICE_ID,
            subsystem_vendor_id=img[3] | (img[4] << 8),
            subsystem_device_id=img[5] | (img[6] << 8),
            driver_bound=(PCI_DEVICE_ID == 0x7134) and valid,
            board_type=BoardType(img[2]) if valid else None,
        )

    def load_fpga(self) -> FpgaState:
        """Configure the FPGA for the EEPROM-identified board type."""
        with self._lock:
            identity = self.pci_identify()
            if identity.board_type is None:
                raise ConfigRefused("EEPROM does not identify a board type")
            model = identity.board_type
            self.fpga = FpgaState(
                done=True,
                loaded_model=model,
                config_file=f"{model.name.lower()}.bit",
            )
            return self.fpga

    # -- LEDs ----------------------------------------------------------------

    @property
    def led_mask(self) -> int:
        with self._lock:
            return self.devices[FPGA_CTRL_ADDR].read_reg(REG_LED_MASK)

    def led_states(self) -> list[bool]:
        mask = self.led_mask
        return [bool(mask & (1 << i)) for i in range(8)]

    def set_all_leds(self, on: bool) -> int:
        return self._write_led_mask(0xFF if on else 0x00)

    def set_led(self, index: int, on: bool) -> int:
        if not 0 <= index <= 7:
            raise ValueError(f"LED index {index} outside 0-7")
        with self._lock:  # read-modify-write must be one bus owner
            mask = self.led_mask
            if on:
                mask |= 1 << index
            else:
                mask &= ~(1 << index)
            return self._write_led_mask(mask)

    def _write_led_mask(self, mask: int) -> int:
        # LEDs hang off the FPGA core, so this goes over the bus like
        # any other register write.
        self.i2c_transaction(
            I2cTransaction(FPGA_CTRL_ADDR, bytes([REG_LED_MASK, mask & 0xFF])))
        return self.led_mask

    # -- video ----------------------------------------------------------------

    def select_input(self, source: VideoInput) -> VideoPipeline:
        with self._lock:
            self.video.input = source
            return self.video

    def capture_frame(self) -> Frame:
        """Single-shot grab; one counter value per frame, never reused."""
        with self._lock:
            if not self.fpga.done:
                raise NotConfigured("FPGA not configured; load it before grabbing")
            counter = self.video.frame_counter
            self.video.frame_counter += 1
            source = self.video.input
            width, height = self.video.width, self.video.height
        return render_frame(width, height, source, counter)

    def start_stream(self) -> VideoPipeline:
        with self._lock:
            if not self.fpga.done:
                raise NotConfigured("FPGA not configured; load it before streaming")
            self.video.running = True
            return self.video

    def stop_stream(self) -> VideoPipeline:
        with self._lock:
            self.video.running = False
            return self.video

    # -- test hooks -------------------------------------------------------------

    def remove_device(self, address: int) -> None:
        """Simulate a missing or unsoldered part."""
        with self._lock:
            self.devices.pop(address, None)

    def set_temperature(self, celsius: int) -> None:
        if not -128 <= celsius <= 127:
            raise ValueError(f"temperature {celsius} outside signed-byte range")
        with self._lock:
            self.temperature_c = celsius


def stream_frames(board: Board, duration: float | None = None,
                  max_frames: int | None = None) -> Iterator[Frame]:
    """Emit capture ticks at the pipeline rate while the stream runs.

    The board itself never spawns a ticker; whoever owns the pipeline
    (a stream session, the functional test) drives it through this
    generator. Ticks are scheduled on a fixed grid from the start time,
    so duration=1.0 at 10 fps yields 10 frames give or take scheduling
    slop. The generator stops as soon as stop_stream() is called, from
    any thread.
    """
    interval = 1.0 / board.video.fps
    start = time.monotonic()
    next_tick = start
    emitted = 0
    while board.video.running:
        if max_frames is not None and emitted >= max_frames:
            return
        if duration is not None and next_tick - start >= duration:
            return
        delay = next_tick - time.monotonic()
        if delay > 0:
            time.sleep(delay)
        if not board.video.running:
            return
        yield board.capture_frame()
        emitted += 1
        next_tick += interval
