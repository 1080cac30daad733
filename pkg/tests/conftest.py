from __future__ import annotations

import shutil
import sys
from dataclasses import dataclass
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).resolve().parent))

from mockserver import MockWebServer  # noqa: E402

DATA_DIR = Path(__file__).resolve().parent / "data"


@pytest.fixture
def mock_server():
    server = MockWebServer()
    server.start()
    yield server
    server.stop()


@dataclass
class E2EEnv:
    root: Path
    config_path: Path
    server: MockWebServer
    rewrites: dict[str, str]


@pytest.fixture
def e2e_env(tmp_path, mock_server) -> E2EEnv:
    """A disposable copy of the end-to-end corpus wired to the mock server."""
    root = tmp_path / "e2e"
    shutil.copytree(DATA_DIR / "e2e", root)
    for page in sorted((root / "pages").glob("*.html")):
        mock_server.add_page(f"/{page.stem}", page.read_text(encoding="utf-8"))
    return E2EEnv(
        root=root,
        config_path=root / "config.json",
        server=mock_server,
        rewrites={"https://pages.test": mock_server.base_url},
    )
