"""Wire-protocol bridge: drive the environment over newline-delimited JSON.

One environment instance per connection; commands are ``spec``, ``reset``,
``step`` and ``close``.  Malformed input gets a structured error reply and
the connection stays open.  Floats are serialized with Python's shortest
round-trip representation, so values survive the wire bit for bit.
"""

from __future__ import annotations

import json
import logging
import socketserver
import sys

from parallelroads.env import TrafficEnv
from parallelroads.scenario import Scenario

__all__ = ["BridgeServer", "BridgeSession", "serve_bridge", "serve_stdio"]

log = logging.getLogger(__name__)


class BridgeSession:
    """Protocol state machine for a single connection."""

    def __init__(self, scenario: Scenario):
        self._env = TrafficEnv(scenario)
        self._ready = False

    def handle_line(self, line: str) -> tuple[str, bool]:
        """Process one request line; returns (reply line, close-flag)."""
        reply, close = self._dispatch(line)
        return json.dumps(reply), close

    def _dispatch(self, line: str) -> tuple[dict, bool]:
        try:
            message = json.loads(line)
        except json.JSONDecodeError as exc:
            return _error("bad_json", str(exc)), False
        if not isinstance(message, dict) or "cmd" not in message:
            return _error("bad_request", "expected an object with a 'cmd' field"), False
        cmd = message["cmd"]

        if cmd == "spec":
            return {
                "obs_len": self._env.observation_length,
                "action_len": self._env.action_length,
                "episode_len": self._env.episode_length,
            }, False

        if cmd == "reset":
            seed = message.get("seed")
            if seed is not None and not isinstance(seed, int):
                return _error("bad_request", "'seed' must be an integer"), False
            observation = self._env.reset(seed)
            self._ready = True
            return {"obs": observation.tolist()}, False

        if cmd == "step":
            if not self._ready:
                return _error("not_reset", "send 'reset' before 'step'"), False
            action = message.get("action")
            if not isinstance(action, list) or not all(
                isinstance(x, (int, float)) and not isinstance(x, bool) for x in action
            ):
                return _error("bad_action", "'action' must be a list of numbers"), False
            try:
                result = self._env.step(action)
            except ValueError as exc:
                return _error("bad_action", str(exc)), False
            except RuntimeError as exc:
                return _error("episode_done", str(exc)), False
            return {
                "obs": result.observation.tolist(),
                "cost": result.cost,
                "proxy_cost": result.proxy_cost,
                "done": result.done,
                "latencies": list(result.latencies),
            }, False

        if cmd == "close":
            return {"ok": True}, True

        return _error("unknown_command", f"unknown cmd {cmd!r}"), False


def _error(code: str, detail: str) -> dict:
    return {"error": code, "detail": detail}


def serve_stdio(scenario: Scenario, in_stream=None, out_stream=None) -> None:
    """Serve one session over stdin/stdout until EOF or ``close``."""
    in_stream = sys.stdin if in_stream is None else in_stream
    out_stream = sys.stdout if out_stream is None else out_stream
    session = BridgeSession(scenario)
    for line in in_stream:
        if not line.strip():
            continue
        reply, close = session.handle_line(line)
        out_stream.write(reply + "\n")
        out_stream.flush()
        if close:
            break


class _BridgeHandler(socketserver.StreamRequestHandler):
    def handle(self) -> None:
        session = BridgeSession(self.server.scenario)
        log.info("bridge connection from %s", self.client_address)
        for raw in self.rfile:
            line = raw.decode("utf-8")
            if not line.strip():
                continue
            reply, close = session.handle_line(line)
            self.wfile.write((reply + "\n").encode("utf-8"))
            self.wfile.flush()
            if close:
                break


class BridgeServer(socketserver.ThreadingTCPServer):
    """TCP server hosting one independent environment per connection."""

    allow_reuse_address = True
    daemon_threads = True

    def __init__(self, scenario: Scenario, host: str = "127.0.0.1", port: int = 0):
        super().__init__((host, port), _BridgeHandler)
        self.scenario = scenario

    @property
    def port(self) -> int:
        return self.server_address[1]


def serve_bridge(
    scenario: Scenario,
    *,
    stdio: bool = False,
    host: str = "127.0.0.1",
    port: int = 0,
) -> None:
    """Run the bridge until interrupted (stdio: until EOF or ``close``)."""
    if stdio:
        serve_stdio(scenario)
        return
    with BridgeServer(scenario, host, port) as server:
        print(f"bridge listening on {server.server_address[0]}:{server.port}", file=sys.stderr, flush=True)
        try:
            server.serve_forever()
        except KeyboardInterrupt:
            pass
