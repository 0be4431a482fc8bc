"""Operator gateway: login, live event stream, recommendation submission.

Endpoints (all JSON; errors as ``{"error": code, "message": text}``):

    POST /login            {operator, secret} -> {token, operator}
    GET  /events           ordered stream of wire-format lines (messages)
                           interleaved with phase lines {"phase", "tick"}
    POST /recommendation   {target, action} -> {seq}
    GET  /state            current phase + situation summary

The stream always replays from the first record, so a reconnect re-renders
the identical prefix; submissions are serialized into the engine's tick loop
through the engine lock. Credentials live in a static file of
``operator:sha256-hex`` lines.
"""

from __future__ import annotations

import hashlib
import json
import secrets
import threading
import time
from dataclasses import dataclass
from typing import Optional

from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse, StreamingResponse

from .acl import wire_line
from .errors import (
    BadCredentials,
    ConfigError,
    SessionExists,
    Unauthorized,
    UnknownTarget,
    WrongPhase,
)
from .scenario import RunEngine


def hash_secret(secret: str) -> str:
    return hashlib.sha256(secret.encode("utf-8")).hexdigest()


def load_credentials(text: str) -> dict[str, str]:
    """Parse `operator:sha256hex` lines; `#` comments allowed."""
    creds = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        operator, sep, digest = line.partition(":")
        if not sep or not operator or len(digest) != 64:
            raise ConfigError(f"bad credential line {lineno}: {raw!r}")
        creds[operator] = digest.lower()
    if not creds:
        raise ConfigError("credential file defines no operators")
    return creds


@dataclass
class Session:
    token: str
    operator: str
    established_tick: int


class Gateway:
    """Session state plus the drive thread for one engine."""

    def __init__(self, engine: RunEngine, credentials: dict[str, str]):
        self.engine = engine
        self.credentials = credentials
        self.session: Optional[Session] = None
        self._lock = threading.Lock()
        self._thread: Optional[threading.Thread] = None

    def start(self) -> None:
        self._thread = threading.Thread(target=self._drive, daemon=True)
        self._thread.start()

    def _drive(self) -> None:
        while True:
            status = self.engine.tick_once()
            if status == "done":
                return
            if status == "waiting":
                self.engine.wait_for_human(timeout=0.05)

    def wait_until_done(self, timeout: float = 30.0) -> None:
        deadline = time.monotonic() + timeout
        while not self.engine.finished and time.monotonic() < deadline:
            time.sleep(0.01)

    def authenticate(self, operator: str, secret: str) -> Session:
        with self._lock:
            if self.session is not None:
                raise SessionExists("an operator session is already active")
            digest = self.credentials.get(operator)
            if digest is None or digest != hash_secret(secret):
                raise BadCredentials("operator or secret incorrect")
            self.session = Session(token=secrets.token_hex(16), operator=operator,
                                   established_tick=self.engine.clock)
            return self.session

    def check_token(self, token: Optional[str]) -> Session:
        with self._lock:
            if self.session is None or not token or token != self.session.token:
                raise Unauthorized("missing or invalid session token")
            return self.session

    def submit(self, token: Optional[str], target: str, action: str) -> int:
        self.check_token(token)
        registry = self.engine.registry
        if not registry.is_deployed(target) or target == self.engine.dm_id:
            raise UnknownTarget(f"no deployed field agent {target!r}")
        return self.engine.submit_human(target, action)

    def stream_entries(self, token: Optional[str]):
        self.check_token(token)
        index = 0
        while True:
            chunk = self.engine.stream[index:]
            finished = self.engine.finished
            for entry in chunk:
                if entry[0] == "msg":
                    yield wire_line(entry[1])
                else:
                    yield json.dumps({"phase": entry[2], "tick": entry[1]},
                                     sort_keys=True) + "\n"
            index += len(chunk)
            if finished and index >= len(self.engine.stream):
                return
            time.sleep(0.01)

    def state_snapshot(self, token: Optional[str]) -> dict:
        self.check_token(token)
        engine = self.engine
        situation = engine.pipeline.situation
        return {
            "phase": engine.pipeline.phase.value,
            "tick": engine.clock,
            "finished": engine.finished,
            "awaiting_human": engine.waiting_for_human,
            "roster": [
                {"id": d.id, "role": d.role.value}
                for d in sorted(engine.registry.deployed(), key=lambda d: d.id)
            ],
            "situation": None if situation is None else {
                "crisis_instance": situation.crisis_instance.value,
                "crisis_type": situation.crisis_type.value,
                "severity": situation.severity,
                "context": situation.context_summary,
            },
        }


_ERROR_CODES = {
    BadCredentials: ("bad-credentials", 401),
    SessionExists: ("session-exists", 409),
    Unauthorized: ("unauthorized", 401),
    WrongPhase: ("wrong-phase", 409),
    UnknownTarget: ("unknown-target", 404),
}


def _error_response(exc: Exception) -> JSONResponse:
    code, status = _ERROR_CODES.get(type(exc), ("internal", 500))
    return JSONResponse({"error": code, "message": str(exc)}, status_code=status)


def _token_from(request: Request) -> Optional[str]:
    auth = request.headers.get("authorization", "")
    if auth.lower().startswith("bearer "):
        return auth[7:].strip()
    return request.query_params.get("token")


def build_app(engine: RunEngine, credentials: dict[str, str],
              start: bool = True) -> FastAPI:
    """Assemble the ASGI app around one engine and start its drive thread."""
    gateway = Gateway(engine, credentials)
    app = FastAPI(title="crisismesh gateway")
    app.state.gateway = gateway

    @app.post("/login")
    async def login(request: Request):
        body = await request.json()
        try:
            session = gateway.authenticate(str(body.get("operator", "")),
                                           str(body.get("secret", "")))
        except (BadCredentials, SessionExists) as exc:
            return _error_response(exc)
        return {"token": session.token, "operator": session.operator,
                "established_tick": session.established_tick}

    @app.get("/events")
    def events(request: Request):
        token = _token_from(request)
        try:
            gateway.check_token(token)
        except Unauthorized as exc:
            return _error_response(exc)
        return StreamingResponse(gateway.stream_entries(token),
                                 media_type="application/x-ndjson")

    @app.post("/recommendation")
    async def recommendation(request: Request):
        body = await request.json()
        try:
            seq = gateway.submit(_token_from(request),
                                 str(body.get("target", "")),
                                 str(body.get("action", "")))
        except (Unauthorized, WrongPhase, UnknownTarget) as exc:
            return _error_response(exc)
        return {"seq": seq}

    @app.get("/state")
    def state(request: Request):
        try:
            return gateway.state_snapshot(_token_from(request))
        except Unauthorized as exc:
            return _error_response(exc)

    if start:
        gateway.start()
    return app
