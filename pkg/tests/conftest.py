from pathlib import Path

import pytest

from vfpbench.eeprom import BoardType
from vfpbench.server import BoardTestServer, ServerConfig

REPO_ROOT = Path(__file__).resolve().parent.parent


@pytest.fixture(scope="session")
def repo_root() -> Path:
    return REPO_ROOT


@pytest.fixture(scope="session")
def golden_dir(repo_root) -> Path:
    return repo_root / "golden"


@pytest.fixture(scope="session")
def upcb1b_script(repo_root) -> str:
    return (repo_root / "scripts" / "upcb1b.urd").read_text(encoding="utf-8")


@pytest.fixture
def make_server():
    """Factory for live servers on ephemeral ports; stops them on teardown."""
    servers = []

    def _make(board_type=BoardType.XC2V1000, **kwargs) -> BoardTestServer:
        config = ServerConfig(port=0, board_type=board_type, **kwargs)
        server = BoardTestServer(config).start()
        servers.append(server)
        return server

    yield _make
    for server in servers:
        server.stop()
