"""Board-descriptor EEPROM codec.

The 256-byte setup EEPROM is what makes the board identifiable: the
driver reads it to pick the FPGA configuration file, and an image that
fails validation leaves the board in the driver-error state. Layout:

    offset 0       0xA5, magic
    offset 1       0x01, map version
    offset 2       board type code (0x02 = XC2V250, 0x04 = XC2V1000)
    offset 3-4     subsystem vendor id, little-endian
    offset 5-6     subsystem device id, little-endian
    offset 7       video input count
    offset 8       LED count
    offset 9-254   reserved, zero
    offset 255     checksum byte: sum of all 256 bytes == 0 (mod 256)
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

EEPROM_SIZE = 256
MAGIC = 0xA5
MAP_VERSION = 0x01

# validate() failure reasons, in check order
BAD_MAGIC = "bad_magic"
BAD_VERSION = "bad_version"
BAD_CHECKSUM = "bad_checksum"
UNKNOWN_BOARD_TYPE = "unknown_board_type"


class BoardType(Enum):
    """Board build variant; the enum value is the EEPROM type code."""

    XC2V250 = 0x02
    XC2V1000 = 0x04


@dataclass(frozen=True)
class BoardDescriptor:
    """Decoded EEPROM content.

    The stock subsystem ids mirror the PCI decoder identity the capture
    driver expects to find paired with a valid descriptor.
    """

    board_type: BoardType
    subsystem_vendor_id: int = 0x1131
    subsystem_device_id: int = 0x7134
    video_input_count: int = 2
    led_count: int = 8


class EepromError(ValueError):
    """Raised by decode() on an image that does not validate."""

    def __init__(self, reason: str):
        super().__init__(f"invalid EEPROM image: {reason}")
        self.reason = reason


def _check_image(img: bytes) -> bytes:
    img = bytes(img)
    if len(img) != EEPROM_SIZE:
        raise ValueError(f"EEPROM image must be {EEPROM_SIZE} bytes, got {len(img)}")
    return img


def encode(desc: BoardDescriptor) -> bytes:
    """Build the 256-byte image for a descriptor."""
    if not isinstance(desc.board_type, BoardType):
        raise ValueError(f"bad board type {desc.board_type!r}")
    for name in ("subsystem_vendor_id", "subsystem_device_id"):
        value = getattr(desc, name)
        if not 0 <= value <= 0xFFFF:
            raise ValueError(f"{name} 0x{value:X} does not fit 16 bits")
    for name in ("video_input_count", "led_count"):
        value = getattr(desc, name)
        if not 0 <= value <= 0xFF:
            raise ValueError(f"{name} {value} does not fit one byte")

    img = bytearray(EEPROM_SIZE)
    img[0] = MAGIC
    img[1] = MAP_VERSION
    img[2] = desc.board_type.value
    img[3] = desc.subsystem_vendor_id & 0xFF
    img[4] = desc.subsystem_vendor_id >> 8
    img[5] = desc.subsystem_device_id & 0xFF
    img[6] = desc.subsystem_device_id >> 8
    img[7] = desc.video_input_count
    img[8] = desc.led_count
    img[255] = (-sum(img[:255])) % 256
    return bytes(img)


def validate(img: bytes) -> str | None:
    """None if the image is a valid descriptor, else the failure reason.

    Checks run in a fixed order (magic, version, checksum, type code)
    and the first failure wins.
    """
    img = _check_image(img)
    if img[0] != MAGIC:
        return BAD_MAGIC
    if img[1] != MAP_VERSION:
        return BAD_VERSION
    if sum(img) % 256 != 0:
        return BAD_CHECKSUM
    if img[2] not in (BoardType.XC2V250.value, BoardType.XC2V1000.value):
        return UNKNOWN_BOARD_TYPE
    return None


def decode(img: bytes) -> BoardDescriptor:
    """Inverse of encode for valid images; raises EepromError otherwise."""
    img = _check_image(img)
    reason = validate(img)
    if reason is not None:
        raise EepromError(reason)
    return BoardDescriptor(
        board_type=BoardType(img[2]),
        subsystem_vendor_id=img[3] | (img[4] << 8),
        subsystem_device_id=img[5] | (img[6] << 8),
        video_input_count=img[7],
        led_count=img[8],
    )


def hexdump(img: bytes) -> str:
    """16 lines of 16 bytes: '0000: a5 01 ...', lowercase, newline-terminated."""
    img = _check_image(img)
    lines = []
    for base in range(0, EEPROM_SIZE, 16):
        row = " ".join(f"{b:02x}" for b in img[base:base + 16])
        lines.append(f"{base:04x}: {row}\n")
    return "".join(lines)


def parse_hexdump(text: str) -> bytes:
    """Read a hexdump() back into the image bytes it was made from."""
    out = bytearray()
    for lineno, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        head, sep, body = line.partition(":")
        if not sep:
            raise ValueError(f"hexdump line {lineno}: missing offset separator")
        if int(head, 16) != len(out):
            raise ValueError(f"hexdump line {lineno}: offset {head} out of sequence")
        out.extend(int(pair, 16) for pair in body.split())
    if len(out) != EEPROM_SIZE:
        raise ValueError(f"hexdump decodes to {len(out)} bytes, expected {EEPROM_SIZE}")
    return bytes(out)
