"""Line-delimited JSON protocol for serving discovery sessions.

Requests are single JSON objects per line carrying an integer ``id`` and a
``type`` of  "start", "experiment", "submit", or "get_history"; responses
echo the id with ``ok`` true/false. Experiment payloads use the manual's
action blocks verbatim: ``{"action": ..., "meta_data": {...}}``. The same
handler serves TCP connections (one isolated session each) and standard
streams; every session can log a replayable transcript.
"""

from __future__ import annotations

import json
import socketserver
import sys
import threading
from pathlib import Path

from .curation import TaskInstance
from .environment import (
    ExperimentError,
    ExperimentRequest,
    Session,
    SessionConfig,
)
from .metrics import evaluate_models, report_as_dict

__all__ = ["ProtocolHandler", "SessionServer", "serve_stdio"]


class ProtocolHandler:
    """Transport-agnostic request dispatcher for one session."""

    def __init__(self, task: TaskInstance, config: SessionConfig = SessionConfig(),
                 transcript_path: str | Path | None = None):
        self.task = task
        self.config = config
        self.session: Session | None = None
        self.transcript_path = Path(transcript_path) if transcript_path else None
        self._transcript_lock = threading.Lock()
        if self.transcript_path:
            self.transcript_path.parent.mkdir(parents=True, exist_ok=True)
            self.transcript_path.write_text("")

    # -- transcript ----------------------------------------------------------

    def _log(self, direction: str, message: dict) -> None:
        if not self.transcript_path:
            return
        line = json.dumps({"direction": direction, "message": message}, sort_keys=True)
        with self._transcript_lock:
            with self.transcript_path.open("a") as fh:
                fh.write(line + "\n")

    # -- dispatch -------------------------------------------------------------

    def handle_line(self, line: str) -> dict:
        try:
            message = json.loads(line)
        except json.JSONDecodeError as exc:
            response = _error(None, "bad-json", f"request is not valid JSON: {exc}")
            self._log("response", response)
            return response
        return self.handle(message)

    def handle(self, message: dict) -> dict:
        self._log("request", message)
        response = self._dispatch(message)
        self._log("response", response)
        return response

    def _dispatch(self, message) -> dict:
        if not isinstance(message, dict):
            return _error(None, "bad-request", "request must be a JSON object")
        request_id = message.get("id")
        request_type = message.get("type")
        if not isinstance(request_id, int):
            return _error(None, "bad-request", "request requires an integer id")
        if request_type == "start":
            return self._handle_start(request_id)
        if self.session is None:
            return _error(request_id, "not-started", "send a start request first")
        if request_type == "experiment":
            return self._handle_experiment(request_id, message)
        if request_type == "submit":
            return self._handle_submit(request_id, message)
        if request_type == "get_history":
            return self._handle_history(request_id)
        return _error(request_id, "bad-request", f"unknown request type {request_type!r}")

    def _handle_start(self, request_id: int) -> dict:
        if self.session is not None:
            return _error(request_id, "bad-request", "session already started")
        try:
            self.session = Session(self.task, self.config)
        except ValueError as exc:
            return _error(request_id, "bad-task", str(exc))
        return {"id": request_id, "ok": True, **self.session.start_payload()}

    def _handle_experiment(self, request_id: int, message: dict) -> dict:
        request = ExperimentRequest(
            action=message.get("action", ""),
            meta_data=message.get("meta_data") or {},
        )
        try:
            observation = self.session.run_experiment(request)
        except ExperimentError as exc:
            return _error(request_id, exc.code, exc.message)
        return {"id": request_id, "ok": True, "observation": observation.as_payload()}

    def _handle_submit(self, request_id: int, message: dict) -> dict:
        document = message.get("sbml")
        if not isinstance(document, str):
            return _error(request_id, "bad-request", "submit requires an sbml string")
        try:
            outcome = self.session.submit(document)
        except ExperimentError as exc:
            return _error(request_id, exc.code, exc.message)
        response = {
            "id": request_id,
            "ok": True,
            "accepted": outcome.accepted,
            "diagnostics": list(outcome.diagnostics),
            "debug_attempts_remaining": outcome.debug_attempts_remaining,
            "terminated": outcome.terminated,
        }
        if outcome.terminated:
            response["evaluation"] = self._evaluate()
        return response

    def _handle_history(self, request_id: int) -> dict:
        history = {
            str(iteration): observation.as_payload()
            for iteration, observation in sorted(self.session.history.items())
        }
        return {"id": request_id, "ok": True, "history": history}

    def _evaluate(self) -> dict:
        report = evaluate_models(
            self.session.effective_submission(),
            self.task.reference,
            conditions=[{}],
            duration=self.task.duration_s,
            n_points=self.task.n_points,
        )
        return report_as_dict(report)


def _error(request_id, code: str, message: str) -> dict:
    return {"id": request_id, "ok": False, "error": {"code": code, "message": message}}


class _SessionRequestHandler(socketserver.StreamRequestHandler):
    def handle(self):
        server: SessionServer = self.server  # type: ignore[assignment]
        handler = server.new_session_handler()
        for raw in self.rfile:
            line = raw.decode("utf-8").strip()
            if not line:
                continue
            response = handler.handle_line(line)
            self.wfile.write((json.dumps(response) + "\n").encode("utf-8"))
            self.wfile.flush()


class SessionServer(socketserver.ThreadingTCPServer):
    """One task served over TCP; each connection gets an isolated session."""

    allow_reuse_address = True
    daemon_threads = True

    def __init__(self, address: tuple[str, int], task: TaskInstance,
                 config: SessionConfig = SessionConfig(),
                 log_dir: str | Path | None = None):
        super().__init__(address, _SessionRequestHandler)
        self.task = task
        self.config = config
        self.log_dir = Path(log_dir) if log_dir else None
        self._counter = 0
        self._counter_lock = threading.Lock()

    def new_session_handler(self) -> ProtocolHandler:
        with self._counter_lock:
            self._counter += 1
            n = self._counter
        transcript = self.log_dir / f"session-{n:04d}.jsonl" if self.log_dir else None
        return ProtocolHandler(self.task, self.config, transcript)

    @property
    def port(self) -> int:
        return self.server_address[1]


def serve_stdio(task: TaskInstance, config: SessionConfig = SessionConfig(),
                transcript_path: str | Path | None = None,
                stdin=None, stdout=None) -> None:
    """Serve a single session over standard streams until EOF."""
    stdin = stdin if stdin is not None else sys.stdin
    stdout = stdout if stdout is not None else sys.stdout
    handler = ProtocolHandler(task, config, transcript_path)
    stdout.write(json.dumps({"event": "ready"}) + "\n")
    stdout.flush()
    for line in stdin:
        line = line.strip()
        if not line:
            continue
        stdout.write(json.dumps(handler.handle_line(line)) + "\n")
        stdout.flush()
