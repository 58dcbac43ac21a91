"""Test bench for the VideoFPGA video acquisition board.

A behavioural board simulator (PCI identity, I2C bus with the on-board
peripherals, LED bank, FPGA state, capture pipeline), the descriptor
EEPROM codec, a URD-style script interpreter for provisioning, an HTTP
in-system test service, and the two-phase test runner that drives it
all.
"""

from .board import (
    Board,
    BoardError,
    ConfigRefused,
    I2cTransaction,
    NotConfigured,
    PciIdentity,
    TransactionResult,
    TxnStatus,
    stream_frames,
)
from .eeprom import BoardDescriptor, BoardType, EepromError
from .pattern import Frame, VideoInput, frame_digest, render_frame
from .runner import ConnectionFailed, TestReport, run_functional, run_insystem
from .server import BoardTestServer, ServerConfig, serve

__version__ = "0.1.0"

__all__ = [
    "Board",
    "BoardDescriptor",
    "BoardError",
    "BoardTestServer",
    "BoardType",
    "ConfigRefused",
    "ConnectionFailed",
    "EepromError",
    "Frame",
    "I2cTransaction",
    "NotConfigured",
    "PciIdentity",
    "ServerConfig",
    "TestReport",
    "TransactionResult",
    "TxnStatus",
    "VideoInput",
    "frame_digest",
    "render_frame",
    "run_functional",
    "run_insystem",
    "serve",
    "stream_frames",
]
