import asyncio
import io

import httpx
import pytest
from PIL import Image


# One line per top-level acceptance check, echoed after the run so the
# pass/fail verdicts survive pytest's output capture.
ACCEPTANCE_LINES = []


def record_acceptance(name: str, ok: bool, detail: str = "") -> None:
    verdict = "PASS" if ok else "FAIL"
    line = f"[{verdict}] {name}"
    if detail:
        line += f" :: {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


def png_bytes(width: int = 64, height: int = 64, color=(90, 120, 40)) -> bytes:
    buf = io.BytesIO()
    Image.new("RGB", (width, height), color).save(buf, format="PNG")
    return buf.getvalue()


@pytest.fixture
def make_png(tmp_path):
    def _make(name: str, width: int = 64, height: int = 64, color=(90, 120, 40)):
        path = tmp_path / name
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_bytes(png_bytes(width, height, color))
        return path

    return _make


class SyncASGITransport(httpx.BaseTransport):
    """Drive an ASGI app from a synchronous httpx client, in-process."""

    def __init__(self, app):
        self._inner = httpx.ASGITransport(app=app)

    def handle_request(self, request: httpx.Request) -> httpx.Response:
        async def run():
            response = await self._inner.handle_async_request(request)
            body = await response.aread()
            await response.aclose()
            return response, body

        response, body = asyncio.run(run())
        return httpx.Response(
            status_code=response.status_code, headers=response.headers, content=body
        )
