"""vfpbench command line.

    vfpbench serve       host a simulated board behind the HTTP test service
    vfpbench functional  run the stand-alone functional test (Phase A)
    vfpbench insystem    run the in-system test against a server (Phase B)
    vfpbench urd run     run a .urd script on a board or over HTTP

Exit codes for the test commands: 0 pass, 1 fail, 2 could not run.
"""

from __future__ import annotations

import argparse
import os
import sys
from pathlib import Path

import requests

from . import urd
from .board import Board
from .eeprom import BoardType
from .pattern import DEFAULT_FPS, DEFAULT_HEIGHT, DEFAULT_WIDTH
from .runner import ConnectionFailed, emit_report, http_bus, run_functional, run_insystem
from .server import CONSOLE_PAGE, ServerConfig, serve

DEFAULT_BIND = "127.0.0.1:8080"
DEFAULT_BOARD = "xc2v1000"


def _parse_bind(value: str) -> tuple[str, int]:
    host, _, port = value.rpartition(":")
    if not host or not port.isdigit():
        raise argparse.ArgumentTypeError(f"bind must be host:port, got {value!r}")
    return host, int(port)


def _parse_size(value: str) -> tuple[int, int]:
    try:
        width, height = value.lower().split("x")
        return int(width), int(height)
    except ValueError:
        raise argparse.ArgumentTypeError(f"size must be WxH, got {value!r}") from None


def _board_type(value: str) -> BoardType:
    try:
        return BoardType[value.upper()]
    except KeyError:
        raise argparse.ArgumentTypeError(
            f"board must be xc2v250 or xc2v1000, got {value!r}") from None


def _default_console() -> Path | None:
    # Use the built operator console when the frontend was built.
    candidate = Path.cwd() / "frontend" / "dist" / CONSOLE_PAGE
    return candidate if candidate.is_file() else None


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="vfpbench",
        description="VideoFPGA acquisition board test bench")
    sub = parser.add_subparsers(dest="command", required=True)

    p_serve = sub.add_parser("serve", help="run the HTTP test service")
    p_serve.add_argument("--bind", type=_parse_bind,
                         default=os.environ.get("VFPBENCH_BIND", DEFAULT_BIND),
                         help="host:port to listen on (env VFPBENCH_BIND)")
    p_serve.add_argument("--board", type=_board_type,
                         default=os.environ.get("VFPBENCH_BOARD", DEFAULT_BOARD),
                         help="board variant to simulate (env VFPBENCH_BOARD)")
    p_serve.add_argument("--uninitialized", action="store_true",
                         help="start with a blank (all 0xFF) EEPROM")
    p_serve.add_argument("--fps", type=float, default=DEFAULT_FPS,
                         help="stream/grab frame rate")
    p_serve.add_argument("--size", type=_parse_size,
                         default=(DEFAULT_WIDTH, DEFAULT_HEIGHT),
                         help="frame geometry as WxH")
    p_serve.add_argument("--console", type=Path, default=None,
                         help="console page file or directory (default: "
                              "frontend/dist if built)")
    p_serve.set_defaults(func=_cmd_serve)

    p_func = sub.add_parser("functional", help="Phase A stand-alone board test")
    p_func.add_argument("--board", type=_board_type, default=DEFAULT_BOARD)
    p_func.add_argument("--start-uninitialized", action="store_true",
                        help="begin from a blank EEPROM and provision it")
    p_func.add_argument("--json", action="store_true", help="emit the report as JSON")
    p_func.set_defaults(func=_cmd_functional)

    p_insys = sub.add_parser("insystem", help="Phase B test against a running server")
    p_insys.add_argument("--url", required=True, help="server base URL")
    p_insys.add_argument("--json", action="store_true", help="emit the report as JSON")
    p_insys.set_defaults(func=_cmd_insystem)

    p_urd = sub.add_parser("urd", help="URD script tools")
    urd_sub = p_urd.add_subparsers(dest="urd_command", required=True)
    p_run = urd_sub.add_parser("run", help="execute a .urd script")
    p_run.add_argument("file", type=Path, help="script file")
    p_run.add_argument("--url", default=None,
                       help="drive a server bus via /api/i2c/txn instead of "
                            "an in-process board")
    p_run.add_argument("--board", type=_board_type, default=DEFAULT_BOARD,
                       help="in-process board variant")
    p_run.add_argument("--uninitialized", action="store_true",
                       help="in-process board starts with a blank EEPROM")
    p_run.set_defaults(func=_cmd_urd_run)

    return parser


def _cmd_serve(args) -> int:
    if isinstance(args.bind, str):
        args.bind = _parse_bind(args.bind)
    if isinstance(args.board, str):
        args.board = _board_type(args.board)
    host, port = args.bind
    width, height = args.size
    config = ServerConfig(
        host=host, port=port, board_type=args.board,
        uninitialized=args.uninitialized, fps=args.fps,
        width=width, height=height,
        console=args.console if args.console else _default_console(),
    )
    server = serve(config)
    print(f"serving on {server.base_url}", flush=True)
    try:
        server.serve_forever()
    except KeyboardInterrupt:
        pass
    finally:
        server.stop()
    return 0


def _cmd_functional(args) -> int:
    if isinstance(args.board, str):
        args.board = _board_type(args.board)
    report = run_functional(args.board, args.start_uninitialized)
    print(emit_report(report, as_json=args.json))
    return 0 if report.passed else 1


def _cmd_insystem(args) -> int:
    try:
        report = run_insystem(args.url)
    except ConnectionFailed as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    print(emit_report(report, as_json=args.json))
    return 0 if report.passed else 1


def _cmd_urd_run(args) -> int:
    try:
        text = args.file.read_text(encoding="utf-8")
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    try:
        script = urd.parse(text, name=args.file.name)
    except urd.ParseError as exc:
        print(f"error: {args.file}:{exc}", file=sys.stderr)
        return 2
    if args.url:
        bus = http_bus(args.url)
    else:
        board = Board(args.board, uninitialized=args.uninitialized)
        bus = board.i2c_transaction
    try:
        report = urd.execute(script, bus)
    except requests.exceptions.ConnectionError as exc:
        print(f"error: cannot reach {args.url}: {exc}", file=sys.stderr)
        return 2
    print(urd.format_report(report), end="")
    return 0 if report.passed else 1


def main(argv: list[str] | None = None) -> int:
    args = _build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
