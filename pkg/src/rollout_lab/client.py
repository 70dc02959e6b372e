"""HTTP client for the experiment service.

With no server URL the requests run against the ASGI app in-process, so the
CLI works standalone; with ``server`` set the same calls go over the wire to
a running instance.
"""

from __future__ import annotations

import asyncio
from typing import Optional

import httpx

__all__ = ["ServiceClient", "ServiceError"]


class ServiceError(RuntimeError):
    def __init__(self, status: int, detail: str):
        self.status = status
        self.detail = detail
        super().__init__(f"service returned {status}: {detail}")


class ServiceClient:
    def __init__(self, server: Optional[str] = None):
        self.server = server

    def post(self, path: str, payload: dict) -> dict:
        if self.server is None:
            return asyncio.run(self._post_inprocess(path, payload))
        with httpx.Client(base_url=self.server, timeout=None) as client:
            return self._unwrap(client.post(path, json=payload))

    def get(self, path: str) -> dict:
        if self.server is None:
            return asyncio.run(self._get_inprocess(path))
        with httpx.Client(base_url=self.server, timeout=None) as client:
            return self._unwrap(client.get(path))

    async def _post_inprocess(self, path: str, payload: dict) -> dict:
        from .service.app import app

        transport = httpx.ASGITransport(app=app)
        async with httpx.AsyncClient(transport=transport, base_url="http://service") as client:
            return self._unwrap(await client.post(path, json=payload))

    async def _get_inprocess(self, path: str) -> dict:
        from .service.app import app

        transport = httpx.ASGITransport(app=app)
        async with httpx.AsyncClient(transport=transport, base_url="http://service") as client:
            return self._unwrap(await client.get(path))

    @staticmethod
    def _unwrap(response: httpx.Response) -> dict:
        if response.status_code >= 400:
            try:
                detail = response.json().get("detail")
            except Exception:
                detail = response.text
            raise ServiceError(response.status_code, str(detail))
        return response.json()
