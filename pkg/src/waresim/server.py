"""Line-delimited JSON protocol server.

One TCP connection = one session = one private environment.  Requests and
responses are single JSON objects per line (UTF-8, LF-terminated).  See
PROTOCOL.md for the full schema; the protocol version is 1.

Requests:
    {"cmd": "spec"}
    {"cmd": "reset", "seed": 123}          seed optional
    {"cmd": "step", "action": [i, j]}      or {"action": 17} (flat index)
    {"cmd": "close"}

Responses always carry "ok".  Errors keep the session alive and look like
    {"ok": false, "code": "no-episode", "message": "..."}
"""

from __future__ import annotations

import hashlib
import json
import socket
import socketserver
import threading

import numpy as np

from .config import WarehouseConfig
from .mdp import Env, EpisodeDone, flat_to_coord

PROTOCOL_VERSION = 1


# -- canonical trajectory digest ----------------------------------------------
#
# The digest is defined over canonical strings so any client language can
# reproduce it: observations as comma-joined row-major integers, rewards
# with exactly three decimals (all rewards are multiples of 0.005), done as
# 0/1, and the mask as a 0/1 string.


def _obs_text(obs_nested) -> str:
    flat = np.asarray(obs_nested).ravel()
    return ",".join(str(int(v)) for v in flat)


def digest_reset_line(obs_nested) -> str:
    return "reset:" + _obs_text(obs_nested)


def digest_step_line(obs_nested, reward: float, done: bool, mask) -> str:
    mask_bits = "".join("1" if bool(b) else "0" for b in mask)
    return f"step:{_obs_text(obs_nested)};{reward:.3f};{1 if done else 0};{mask_bits}"


def finish_digest(lines: list[str]) -> str:
    return hashlib.sha256("\n".join(lines).encode("utf-8")).hexdigest()


def cycle_actions(steps: int, action_count: int) -> list[int]:
    """The documented stock action sequence for replay checks: walks the
    whole action space, valid and invalid alike."""
    return [t % action_count for t in range(steps)]


def in_process_digest(cfg: WarehouseConfig, seed: int, actions: list[int]) -> str:
    env = Env(cfg)
    obs = env.reset(seed)
    lines = [digest_reset_line(obs)]
    for a in actions:
        res = env.step(a)
        lines.append(
            digest_step_line(res.observation, res.reward, res.done,
                             res.info["valid_action_mask"])
        )
        if res.done:
            break
    return finish_digest(lines)


# -- server -------------------------------------------------------------------


class _SessionHandler(socketserver.StreamRequestHandler):
    def handle(self):
        cfg: WarehouseConfig = self.server.cfg
        env = Env(cfg)
        episode_active = False
        while True:
            line = self.rfile.readline()
            if not line:
                return
            line = line.strip()
            if not line:
                continue
            try:
                request = json.loads(line)
            except json.JSONDecodeError as exc:
                self._send({"ok": False, "code": "bad-json", "message": str(exc)})
                continue
            if not isinstance(request, dict) or "cmd" not in request:
                self._send({"ok": False, "code": "bad-request",
                            "message": "request must be an object with a 'cmd' key"})
                continue

            cmd = request["cmd"]
            if cmd == "spec":
                self._send({
                    "ok": True,
                    "protocol": PROTOCOL_VERSION,
                    "r": cfg.rows,
                    "c": cfg.cols,
                    "d": cfg.num_planes,
                    "m": cfg.num_materials,
                    "actions": cfg.action_count,
                    "max_steps": cfg.max_steps_per_episode,
                })
            elif cmd == "reset":
                seed = request.get("seed")
                if seed is not None and not isinstance(seed, int):
                    self._send({"ok": False, "code": "bad-request",
                                "message": "seed must be an integer"})
                    continue
                obs = env.reset(seed)
                episode_active = True
                self._send({
                    "ok": True,
                    "observation": obs.tolist(),
                    "valid_action_mask": env.current_mask().tolist(),
                })
            elif cmd == "step":
                if not episode_active:
                    self._send({"ok": False, "code": "no-episode",
                                "message": "reset before stepping"})
                    continue
                action = request.get("action")
                parsed = self._parse_action(action, cfg)
                if parsed is None:
                    self._send({"ok": False, "code": "bad-action",
                                "message": f"action {action!r} is not a coordinate "
                                           f"or flat index within the grid"})
                    continue
                try:
                    result = env.step(parsed)
                except EpisodeDone:
                    self._send({"ok": False, "code": "episode-done",
                                "message": "episode finished; reset to continue"})
                    continue
                if result.done:
                    episode_active = False
                info = result.info
                self._send({
                    "ok": True,
                    "observation": result.observation.tolist(),
                    "reward": result.reward,
                    "done": result.done,
                    "info": {
                        "action_class": info["action_class"].value,
                        "delivered_box_age": info["delivered_box_age"],
                        "oldest_available_age": info["oldest_available_age"],
                        "valid_action_mask": info["valid_action_mask"].tolist(),
                    },
                })
            elif cmd == "close":
                self._send({"ok": True})
                return
            else:
                self._send({"ok": False, "code": "bad-request",
                            "message": f"unknown cmd {cmd!r}"})

    @staticmethod
    def _parse_action(action, cfg: WarehouseConfig):
        if isinstance(action, bool):
            return None
        if isinstance(action, int):
            if 0 <= action < cfg.action_count:
                return flat_to_coord(action, cfg.cols)
            return None
        if (isinstance(action, list) and len(action) == 2
                and all(isinstance(v, int) and not isinstance(v, bool) for v in action)):
            cell = (action[0], action[1])
            return cell if cfg.is_inside(cell) else None
        return None

    def _send(self, payload: dict) -> None:
        self.wfile.write((json.dumps(payload) + "\n").encode("utf-8"))
        self.wfile.flush()


class WarehouseServer(socketserver.ThreadingTCPServer):
    """Listener; every accepted connection gets its own session thread and
    environment.  Port 0 binds an ephemeral port (see .port)."""

    allow_reuse_address = True
    daemon_threads = True

    def __init__(self, cfg: WarehouseConfig, host: str = "127.0.0.1", port: int = 0):
        self.cfg = cfg
        super().__init__((host, port), _SessionHandler)

    @property
    def port(self) -> int:
        return self.server_address[1]

    def serve_in_background(self) -> threading.Thread:
        thread = threading.Thread(target=self.serve_forever, daemon=True)
        thread.start()
        return thread


def serve(cfg: WarehouseConfig, host: str, port: int,
          announce=None) -> None:
    """Run the listener until interrupted.  ``announce`` (if given) receives
    the bound port before serving starts."""
    with WarehouseServer(cfg, host, port) as server:
        if announce is not None:
            announce(server.port)
        server.serve_forever()


# -- wire client & replay check ------------------------------------------------


class WireClient:
    """Minimal blocking ndjson client used for replay checks and tests."""

    def __init__(self, host: str, port: int, timeout: float = 30.0):
        self._sock = socket.create_connection((host, port), timeout=timeout)
        self._file = self._sock.makefile("rwb")

    def request(self, payload: dict) -> dict:
        self._file.write((json.dumps(payload) + "\n").encode("utf-8"))
        self._file.flush()
        line = self._file.readline()
        if not line:
            raise ConnectionError("server closed the connection")
        return json.loads(line)

    def close(self) -> None:
        try:
            self._file.close()
        finally:
            self._sock.close()


def over_wire_digest(host: str, port: int, seed: int, actions: list[int]) -> str:
    client = WireClient(host, port)
    try:
        reset = client.request({"cmd": "reset", "seed": seed})
        if not reset.get("ok"):
            raise RuntimeError(f"reset failed: {reset}")
        lines = [digest_reset_line(reset["observation"])]
        for a in actions:
            res = client.request({"cmd": "step", "action": a})
            if not res.get("ok"):
                raise RuntimeError(f"step failed: {res}")
            lines.append(
                digest_step_line(res["observation"], res["reward"], res["done"],
                                 res["info"]["valid_action_mask"])
            )
            if res["done"]:
                break
        client.request({"cmd": "close"})
        return finish_digest(lines)
    finally:
        client.close()


def replay_check(cfg: WarehouseConfig, seed: int,
                 actions: list[int]) -> tuple[str, str, bool]:
    """Run the action sequence in-process and over a loopback server;
    returns (in_process_digest, wire_digest, match)."""
    local = in_process_digest(cfg, seed, actions)
    server = WarehouseServer(cfg)
    server.serve_in_background()
    try:
        wire = over_wire_digest("127.0.0.1", server.port, seed, actions)
    finally:
        server.shutdown()
        server.server_close()
    return local, wire, local == wire
