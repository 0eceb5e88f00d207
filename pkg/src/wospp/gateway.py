"""Live steering of a running simulation over newline-delimited JSON.

One TCP listener accepts any number of operator consoles. Snapshots stream
out every snapshot period; commands are queued by reader threads and applied
by the stepping thread exactly at step boundaries, each acknowledged with
its request id and the timestep it took effect.

All messages carry ``"v": 1``. Snapshot: type=snapshot, seq, timestep,
paused, active_binding, agents[], metrics{}. Command: kind in {set_primitive,
pause, resume, step_n, set_param, place_stimulus, reset} plus request_id.
Ack: type=ack, request_id, ok, applied_at | error.
"""

from __future__ import annotations

import json
import logging
import queue
import socket
import threading
import time
from typing import Optional

import numpy as np

from .engine import STATE_NAMES
from .metrics import (
    candidate_count, delta_phi_max, rms_to_centroid,
)
from .scenario import Scenario, SimSession

log = logging.getLogger("wospp.gateway")

PROTOCOL_VERSION = 1

COMMAND_KINDS = {"set_primitive", "pause", "resume", "step_n", "set_param",
                 "place_stimulus", "reset"}
# parameters an operator may change on a live run
PARAM_WHITELIST = {"cycle_max", "refractory_time", "loss_probability",
                   "snapshot_period"}


def apply_command(session: SimSession, command: dict) -> dict:
    """Apply one validated command at a step boundary; returns the ack."""
    request_id = command.get("request_id")

    def ack(ok: bool, error: Optional[str] = None) -> dict:
        msg = {"v": PROTOCOL_VERSION, "type": "ack", "request_id": request_id,
               "ok": ok, "applied_at": session.time}
        if error is not None:
            msg["error"] = error
        return msg

    kind = command.get("kind")
    try:
        if kind == "set_primitive":
            name = command.get("primitive")
            carry = tuple(command.get("carryover", ("leader",)))
            session.switch_primitive(name, command.get("parameters"),
                                     carryover=carry)
        elif kind == "set_param":
            name, value = command.get("param"), command.get("value")
            if name not in PARAM_WHITELIST:
                return ack(False, f"parameter {name!r} is not live-tunable "
                                  f"(allowed: {sorted(PARAM_WHITELIST)})")
            if name == "snapshot_period":
                value = int(value)
                if value < 1:
                    return ack(False, "snapshot_period must be >= 1")
                session.snapshot_period = value
            elif name == "loss_probability":
                value = float(value)
                if not 0.0 <= value <= 1.0:
                    return ack(False, "loss_probability must be in [0, 1]")
                session.config.loss_probability = value
                session.state.config.loss_probability = value
            else:
                value = int(value)
                if value < 1:
                    return ack(False, f"{name} must be >= 1")
                setattr(session.config, name, value)
                setattr(session.state.config, name, value)
        elif kind == "place_stimulus":
            session.place_stimulus(float(command["x"]), float(command["y"]),
                                   float(command.get("detection_radius", 1.0)))
        elif kind == "reset":
            seed = command.get("seed")
            session.reset(None if seed is None else int(seed))
        elif kind in ("pause", "resume", "step_n"):
            pass  # handled by the serve loop itself
        else:
            return ack(False, f"unknown command kind {kind!r}")
    except (ValueError, KeyError, TypeError) as exc:
        return ack(False, str(exc))
    return ack(True)


def snapshot_message(session: SimSession, seq: int, paused: bool) -> dict:
    state = session.state
    agents = []
    for i in range(state.n_agents):
        sc = state.scratch[i] if state.scratch else None
        est = sc.estimate_bearing if sc is not None else None
        agents.append({
            "id": i,
            "x": float(state.positions[i, 0]),
            "y": float(state.positions[i, 1]),
            "state": STATE_NAMES[int(state.states[i])],
            "candidate": bool(sc.candidate) if sc else False,
            "leader": bool(sc.leader) if sc else False,
            "periphery": bool(sc.periphery) if sc else False,
            "estimate": None if est is None else [float(est[0]),
                                                  float(est[1])],
        })
    dphi = delta_phi_max(state.timers, state.config.cycle_max)
    metrics = {
        "rms_to_centroid": rms_to_centroid(state.positions),
        "candidate_count": candidate_count(state.scratch)
        if state.scratch else 0,
        "delta_phi_max": dphi,
        "n_est_mean": float(np.mean([sc.n_est for sc in state.scratch]))
        if state.scratch else 0.0,
    }
    stim = session.stimulus
    return {
        "v": PROTOCOL_VERSION,
        "type": "snapshot",
        "seq": seq,
        "timestep": state.time,
        "paused": paused,
        "active_binding": session.active_binding,
        "agents": agents,
        "metrics": metrics,
        "stimulus": None if stim is None else {
            "x": float(stim.position[0]), "y": float(stim.position[1]),
            "detection_radius": stim.detection_radius},
    }


class _Client:
    def __init__(self, sock: socket.socket):
        self.sock = sock
        self.lock = threading.Lock()
        self.alive = True

    def send(self, message: dict) -> None:
        data = (json.dumps(message) + "\n").encode("utf-8")
        with self.lock:
            if not self.alive:
                return
            try:
                self.sock.sendall(data)
            except OSError:
                self.alive = False


class SteeringServer:
    """Steps one simulation and serves it to NDJSON console clients."""

    def __init__(self, scenario: Scenario, port: int, host: str = "127.0.0.1",
                 seed_override: Optional[int] = None,
                 steps_override: Optional[int] = None,
                 trace_path: Optional[str] = None,
                 metrics_path: Optional[str] = None,
                 step_delay: float = 0.0):
        self._trace_sink = open(trace_path or scenario.trace_path, "w") \
            if (trace_path or scenario.trace_path) else None
        self._metrics_sink = open(metrics_path or scenario.metrics_path, "w") \
            if (metrics_path or scenario.metrics_path) else None
        self.session = SimSession(
            scenario, seed_override=seed_override,
            steps_override=steps_override,
            trace_sink=self._trace_sink, metrics_sink=self._metrics_sink)
        self.step_delay = step_delay
        self.paused = False
        self._step_budget = 0  # pending step_n steps while paused
        self._seq = 0
        self._commands: "queue.Queue[dict]" = queue.Queue()
        self._clients: list[_Client] = []
        self._clients_lock = threading.Lock()
        self._stop = threading.Event()
        self._listener = socket.create_server((host, port))
        self.port = self._listener.getsockname()[1]
        self._accept_thread = threading.Thread(
            target=self._accept_loop, daemon=True)

    # -- transport ---------------------------------------------------------

    def _accept_loop(self) -> None:
        while not self._stop.is_set():
            try:
                sock, _ = self._listener.accept()
            except OSError:
                return
            client = _Client(sock)
            with self._clients_lock:
                self._clients.append(client)
            threading.Thread(target=self._reader_loop, args=(client,),
                             daemon=True).start()

    def _reader_loop(self, client: _Client) -> None:
        buf = b""
        while not self._stop.is_set() and client.alive:
            try:
                chunk = client.sock.recv(4096)
            except OSError:
                break
            if not chunk:
                break
            buf += chunk
            while b"\n" in buf:
                line, buf = buf.split(b"\n", 1)
                if not line.strip():
                    continue
                try:
                    command = json.loads(line)
                    if not isinstance(command, dict):
                        raise ValueError("command must be a JSON object")
                except (json.JSONDecodeError, ValueError) as exc:
                    client.send({"v": PROTOCOL_VERSION, "type": "ack",
                                 "request_id": None, "ok": False,
                                 "applied_at": self.session.time,
                                 "error": f"malformed command: {exc}"})
                    continue
                command["_client"] = client
                self._commands.put(command)
        client.alive = False

    def _broadcast(self, message: dict) -> None:
        with self._clients_lock:
            clients = list(self._clients)
        for client in clients:
            client.send(message)
        with self._clients_lock:
            self._clients = [c for c in self._clients if c.alive]

    def _push_snapshot(self) -> None:
        self._seq += 1
        self._broadcast(snapshot_message(self.session, self._seq, self.paused))

    # -- stepping ------------------------------------------------------------

    def _drain_commands(self) -> None:
        while True:
            try:
                command = self._commands.get_nowait()
            except queue.Empty:
                return
            client = command.pop("_client", None)
            kind = command.get("kind")
            if kind not in COMMAND_KINDS:
                ackmsg = {"v": PROTOCOL_VERSION, "type": "ack",
                          "request_id": command.get("request_id"),
                          "ok": False, "applied_at": self.session.time,
                          "error": f"unknown command kind {kind!r}"}
            else:
                ackmsg = apply_command(self.session, command)
                if ackmsg["ok"]:
                    if kind == "pause":
                        self.paused = True
                    elif kind == "resume":
                        self.paused = False
                        self._step_budget = 0
                    elif kind == "step_n":
                        try:
                            n = int(command.get("n"))
                            if n < 0:
                                raise ValueError
                            if not self.paused:
                                ackmsg = {**ackmsg, "ok": False,
                                          "error": "step_n requires pause"}
                            else:
                                self._step_budget += n
                        except (TypeError, ValueError):
                            ackmsg = {**ackmsg, "ok": False,
                                      "error": "step_n needs n >= 0"}
            if client is not None:
                client.send(ackmsg)

    def serve_forever(self) -> None:
        """Step, snapshot, and apply commands until stopped."""
        self._accept_thread.start()
        try:
            self._push_snapshot()
            while not self._stop.is_set():
                self._drain_commands()
                stepping = ((not self.paused and not self.session.done)
                            or (self.paused and self._step_budget > 0))
                if stepping:
                    self.session.step_once()
                    if self.paused:
                        self._step_budget -= 1
                    if self.session.time % self.session.snapshot_period == 0:
                        self._push_snapshot()
                    if self.step_delay:
                        time.sleep(self.step_delay)
                else:
                    time.sleep(0.01)
        finally:
            self._close()

    def start(self) -> threading.Thread:
        """Run serve_forever on a background thread (used by tests)."""
        thread = threading.Thread(target=self.serve_forever, daemon=True)
        thread.start()
        return thread

    def stop(self) -> None:
        self._stop.set()
        try:
            self._listener.close()
        except OSError:
            pass

    def _close(self) -> None:
        self.stop()
        with self._clients_lock:
            for client in self._clients:
                client.alive = False
                try:
                    client.sock.close()
                except OSError:
                    pass
            self._clients = []
        for sink in (self._trace_sink, self._metrics_sink):
            if sink is not None:
                try:
                    sink.close()
                except OSError:
                    pass
