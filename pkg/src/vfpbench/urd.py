"""Interpreter for URD-style I2C test scripts.

A small register-debugger dialect for writing EEPROM provisioning and
bus verification programs, in the spirit of the vendor Universal
Register Debugger workflow. One command per line, '#' starts a
comment, numbers are 0x-prefixed hex or decimal:

    w <addr> <byte>+          write bytes to a device
    r <addr> <ptr> <count>    set data pointer, read count bytes
    x <addr> <ptr> <byte>+    read back and compare (expect)
    d <ms>                    delay
    p "<text>"                print a message into the report
    s                         scan the bus for responding addresses

Execution halts at the first NACK or expect mismatch; later commands
are not issued. Script files use the .urd extension by convention.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from typing import Callable, Union

from . import eeprom as eeprom_map
from .board import (
    I2C_ADDR_MAX,
    I2C_ADDR_MIN,
    I2cTransaction,
    TransactionResult,
    TxnStatus,
)
from .eeprom import BoardDescriptor, BoardType

BusFunction = Callable[[I2cTransaction], TransactionResult]


@dataclass(frozen=True)
class Write:
    address: int
    data: bytes


@dataclass(frozen=True)
class Read:
    address: int
    pointer: int
    count: int


@dataclass(frozen=True)
class Expect:
    address: int
    pointer: int
    expected: bytes


@dataclass(frozen=True)
class Delay:
    milliseconds: int


@dataclass(frozen=True)
class Print:
    text: str


@dataclass(frozen=True)
class Scan:
    pass


Command = Union[Write, Read, Expect, Delay, Print, Scan]


@dataclass(frozen=True)
class Script:
    name: str
    commands: tuple[tuple[int, Command], ...]  # (1-based line number, command)


@dataclass(frozen=True)
class CommandOutcome:
    line: int
    command: str     # canonical command text
    ok: bool
    detail: str = ""
    observed: bytes | tuple[int, ...] | None = None


@dataclass
class ExecutionReport:
    script: str
    outcomes: list[CommandOutcome] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(o.ok for o in self.outcomes)

    @property
    def failing_line(self) -> int | None:
        for outcome in self.outcomes:
            if not outcome.ok:
                return outcome.line
        return None


class ParseError(ValueError):
    def __init__(self, line: int, message: str):
        super().__init__(f"line {line}: {message}")
        self.line = line
        self.message = message


def _strip_comment(line: str) -> str:
    # '#' starts a comment unless it sits inside a quoted string
    in_quote = False
    for i, ch in enumerate(line):
        if ch == '"':
            in_quote = not in_quote
        elif ch == "#" and not in_quote:
            return line[:i]
    return line


def _number(token: str, line: int) -> int:
    try:
        if token.lower().startswith("0x"):
            return int(token, 16)
        return int(token, 10)
    except ValueError:
        raise ParseError(line, f"bad number {token!r}") from None


def _byte(token: str, line: int) -> int:
    value = _number(token, line)
    if not 0 <= value <= 0xFF:
        raise ParseError(line, f"value {token} exceeds 8 bits")
    return value


def _address(token: str, line: int) -> int:
    value = _number(token, line)
    if not I2C_ADDR_MIN <= value <= I2C_ADDR_MAX:
        raise ParseError(
            line,
            f"I2C address {token} outside 0x{I2C_ADDR_MIN:02x}-0x{I2C_ADDR_MAX:02x}")
    return value


def parse(text: str, name: str = "script") -> Script:
    """Parse script text; raises ParseError with a 1-based line number."""
    commands: list[tuple[int, Command]] = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = _strip_comment(raw).strip()
        if not line:
            continue
        tokens = line.split()
        mnemonic = tokens[0].lower()
        args = tokens[1:]
        if mnemonic == "w":
            if len(args) < 2:
                raise ParseError(lineno, "w needs an address and at least one byte")
            commands.append((lineno, Write(
                _address(args[0], lineno),
                bytes(_byte(t, lineno) for t in args[1:]))))
        elif mnemonic == "r":
            if len(args) != 3:
                raise ParseError(lineno, "r needs address, pointer and count")
            count = _number(args[2], lineno)
            if count < 1:
                raise ParseError(lineno, f"read count {count} must be at least 1")
            commands.append((lineno, Read(
                _address(args[0], lineno), _byte(args[1], lineno), count)))
        elif mnemonic == "x":
            if len(args) < 3:
                raise ParseError(lineno, "x needs address, pointer and at least one byte")
            commands.append((lineno, Expect(
                _address(args[0], lineno), _byte(args[1], lineno),
                bytes(_byte(t, lineno) for t in args[2:]))))
        elif mnemonic == "d":
            if len(args) != 1:
                raise ParseError(lineno, "d needs one millisecond count")
            ms = _number(args[0], lineno)
            if ms < 0:
                raise ParseError(lineno, "delay must not be negative")
            commands.append((lineno, Delay(ms)))
        elif mnemonic == "p":
            rest = line[1:].strip()
            if not rest.startswith('"'):
                raise ParseError(lineno, 'p needs one "quoted" message')
            if len(rest) < 2 or not rest.endswith('"'):
                raise ParseError(lineno, "unterminated string")
            commands.append((lineno, Print(rest[1:-1])))
        elif mnemonic == "s":
            if args:
                raise ParseError(lineno, "s takes no arguments")
            commands.append((lineno, Scan()))
        else:
            raise ParseError(lineno, f"unknown command {tokens[0]!r}")
    return Script(name, tuple(commands))


def format_command(cmd: Command) -> str:
    """Canonical text for one command (what parse() accepts back)."""
    if isinstance(cmd, Write):
        return f"w 0x{cmd.address:02x} " + " ".join(f"0x{b:02x}" for b in cmd.data)
    if isinstance(cmd, Read):
        return f"r 0x{cmd.address:02x} 0x{cmd.pointer:02x} {cmd.count}"
    if isinstance(cmd, Expect):
        return (f"x 0x{cmd.address:02x} 0x{cmd.pointer:02x} "
                + " ".join(f"0x{b:02x}" for b in cmd.expected))
    if isinstance(cmd, Delay):
        return f"d {cmd.milliseconds}"
    if isinstance(cmd, Print):
        return f'p "{cmd.text}"'
    if isinstance(cmd, Scan):
        return "s"
    raise TypeError(f"not a command: {cmd!r}")


def format_script(script: Script) -> str:
    """Canonical script text; parse(format_script(s)) has the same commands."""
    return "".join(format_command(cmd) + "\n" for _, cmd in script.commands)


def _hex(data: bytes) -> str:
    return " ".join(f"{b:02x}" for b in data) if data else "(none)"


def execute(script: Script, bus: BusFunction) -> ExecutionReport:
    """Run a script against a bus; stops at the first failing command."""
    report = ExecutionReport(script.name)
    for lineno, cmd in script.commands:
        text = format_command(cmd)
        if isinstance(cmd, Write):
            result = bus(I2cTransaction(cmd.address, cmd.data))
            ok = result.ok
            detail = "" if ok else result.status.value
            observed = None
        elif isinstance(cmd, Read):
            result = bus(I2cTransaction(cmd.address, bytes([cmd.pointer]), cmd.count))
            ok = result.ok
            detail = _hex(result.read) if ok else result.status.value
            observed = result.read
        elif isinstance(cmd, Expect):
            result = bus(I2cTransaction(cmd.address, bytes([cmd.pointer]), len(cmd.expected)))
            observed = result.read
            if not result.ok:
                ok, detail = False, result.status.value
            elif result.read != cmd.expected:
                ok = False
                detail = f"expected {_hex(cmd.expected)}, got {_hex(result.read)}"
            else:
                ok, detail = True, ""
        elif isinstance(cmd, Delay):
            time.sleep(cmd.milliseconds / 1000.0)
            ok, detail, observed = True, "", None
        elif isinstance(cmd, Print):
            ok, detail, observed = True, cmd.text, None
        elif isinstance(cmd, Scan):
            responders = []
            for address in range(I2C_ADDR_MIN, I2C_ADDR_MAX + 1):
                if bus(I2cTransaction(address)).ok:
                    responders.append(address)
            ok = True
            detail = " ".join(f"0x{a:02x}" for a in responders)
            observed = tuple(responders)
        else:  # pragma: no cover
            raise TypeError(f"not a command: {cmd!r}")
        report.outcomes.append(CommandOutcome(lineno, text, ok, detail, observed))
        if not ok:
            break
    return report


def format_report(report: ExecutionReport) -> str:
    """One line per executed command plus a RESULT line."""
    lines = []
    for outcome in report.outcomes:
        status = "OK" if outcome.ok else "FAIL"
        if not outcome.ok and outcome.detail:
            status = f"FAIL: {outcome.detail}"
        lines.append(f"{outcome.line}: {outcome.command} {status}\n")
    lines.append(f"RESULT: {'PASS' if report.passed else 'FAIL'}\n")
    return "".join(lines)


def provisioning_script(board_type: BoardType,
                        subsystem_vendor_id: int = 0x1131,
                        subsystem_device_id: int = 0x7134) -> str:
    """Build the EEPROM provisioning program for one board variant.

    Writes the full descriptor image in 16-byte pages (which exercises
    the EEPROM's pointer auto-increment), then reads back the header
    fields and the checksum byte. The committed scripts/upcb1b.urd is
    this text for the XC2V1000 build.
    """
    image = eeprom_map.encode(BoardDescriptor(
        board_type, subsystem_vendor_id, subsystem_device_id))
    variant = board_type.name.lower()
    lines = [
        f"# EEPROM provisioning for the {variant} board build",
        f'p "writing {variant} descriptor"',
    ]
    for base in range(0, len(image), 16):
        page = " ".join(f"0x{b:02x}" for b in image[base:base + 16])
        lines.append(f"w 0x50 0x{base:02x} {page}")
    header = " ".join(f"0x{b:02x}" for b in image[:9])
    lines.append(f"x 0x50 0x00 {header}")
    lines.append(f"x 0x50 0xff 0x{image[255]:02x}")
    lines.append('p "descriptor verified"')
    return "\n".join(lines) + "\n"
