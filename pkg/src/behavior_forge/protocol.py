"""Wire protocol between the engine session and operator UIs.

Every message is one JSON text frame: {"type", "seq", "timestamp", "payload"}.
seq is sender-monotonic per connection per direction. Commands are
acknowledged in arrival order with {"type": "ack"} carrying the command's seq
and either a result or an error; domain errors ride inside the ack, protocol
errors get a "protocol_error" reply and the connection stays open.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from behavior_forge import actions as am
from behavior_forge.actions import (
    ActionSequence,
    canonical_json_bytes,
    deserialize,
    sequence_to_obj,
    validate_against_frames,
)
from behavior_forge.executor import (
    AlreadyExecuting,
    EditConflict,
    InsertEdit,
    RemoveEdit,
    SequenceExhausted,
    UpdateEdit,
    ValidationFailed,
)
from behavior_forge.geometry import Pose6D, UnknownFrame, compose, invert
from behavior_forge.kinematics import UnknownChain, solve_ik
from behavior_forge.session import Session
from behavior_forge.stance import Stance, UnreachableGoal, plan_to_stance
from behavior_forge.world import IkUnreachable

PROTOCOL_COMMANDS = (
    "sequence_replace", "sequence_edit", "execute_manual", "set_automatic",
    "abort", "request_ik_preview", "request_stance_preview", "load_scene",
    "load_behavior",
)

_DOMAIN_ERRORS = (
    AlreadyExecuting, EditConflict, SequenceExhausted, ValidationFailed,
    UnreachableGoal, IkUnreachable, UnknownFrame, UnknownChain,
    am.ParseError, am.SchemaError, am.UnknownKind, am.ValidationError,
    am.IndexOutOfRange, FileNotFoundError,
)


class ProtocolError(ValueError):
    def __init__(self, reason: str, detail: str = ""):
        super().__init__(f"{reason}{f': {detail}' if detail else ''}")
        self.reason = reason


@dataclass(frozen=True)
class Envelope:
    type: str
    seq: int
    timestamp: float
    payload: dict = field(default_factory=dict)

    def to_obj(self) -> dict:
        return {"type": self.type, "seq": self.seq, "timestamp": self.timestamp,
                "payload": self.payload}


def frame_message(envelope: Envelope) -> bytes:
    return canonical_json_bytes(envelope.to_obj())


def parse_frame(data: bytes | str) -> Envelope:
    if isinstance(data, bytes):
        try:
            data = data.decode("utf-8")
        except UnicodeDecodeError as e:
            raise ProtocolError("parse", str(e)) from None
    try:
        obj = json.loads(data)
    except json.JSONDecodeError as e:
        raise ProtocolError("parse", e.msg) from None
    if not isinstance(obj, dict):
        raise ProtocolError("parse", "envelope must be an object")
    for fld, types in (("type", str), ("seq", int), ("timestamp", (int, float))):
        if fld not in obj or not isinstance(obj[fld], types) or isinstance(obj[fld], bool):
            raise ProtocolError("schema", f"bad envelope field {fld!r}")
    payload = obj.get("payload", {})
    if not isinstance(payload, dict):
        raise ProtocolError("schema", "payload must be an object")
    return Envelope(obj["type"], obj["seq"], float(obj["timestamp"]), payload)


def _want(payload: dict, key: str, types=str):
    value = payload.get(key)
    bool_ok = types is bool or (isinstance(types, tuple) and bool in types)
    if key not in payload or not isinstance(value, types) or (isinstance(value, bool) and not bool_ok):
        raise ProtocolError("schema", f"missing or invalid {key!r}")
    return value


def _pose_from(payload, key) -> Pose6D:
    obj = _want(payload, key, dict)
    try:
        return Pose6D.from_json(obj)
    except (KeyError, TypeError, ValueError) as e:
        raise ProtocolError("schema", f"bad pose {key!r}: {e}") from None


def _ik_solution_obj(sol) -> dict:
    return {
        "configuration": {k: float(v) for k, v in sorted(sol.configuration.values.items())},
        "achieved_pose": sol.achieved_pose.to_json(),
        "position_error": sol.position_error,
        "orientation_error": sol.orientation_error,
        "converged": sol.converged,
        "iterations": sol.iterations,
    }


def _plan_obj(plan) -> dict:
    return {"steps": [{"side": s.side, "pose": s.pose.to_json(),
                       "swing_duration": s.swing_duration,
                       "transfer_duration": s.transfer_duration,
                       "phase": s.phase} for s in plan.steps],
            "duration": plan.duration()}


def tree_obj(tree) -> dict:
    return {name: {"parent": tree.parent_of(name),
                   "transform_to_parent": tree.transform_to_parent(name).to_json()}
            for name in tree.frame_names() if name != "world"}


class CommandProcessor:
    """Applies command envelopes to a session and produces ordered acks.

    One processor per connection: it owns that connection's inbound seq
    monotonicity check and outbound seq counter. All state changes go through
    the shared session object.
    """

    def __init__(self, session: Session, record: bool = True):
        self.session = session
        self.record = record
        self._last_inbound_seq = 0
        self._outbound_seq = 0

    def _next_seq(self) -> int:
        self._outbound_seq += 1
        return self._outbound_seq

    def make_envelope(self, type_: str, payload: dict) -> Envelope:
        return Envelope(type_, self._next_seq(), self.session.world.sim_time, payload)

    def hello(self) -> Envelope:
        s = self.session
        return self.make_envelope("hello", {
            "scene": s.scene.name,
            "sequence": sequence_to_obj(s.executor.sequence),
            "frames": tree_obj(s.tree),
            "world": s.world.snapshot(),
            "executor": s.executor.state_snapshot(),
        })

    def handle_frame(self, data: bytes | str) -> Envelope:
        """Parse one inbound frame and return the reply envelope."""
        try:
            env = parse_frame(data)
        except ProtocolError as e:
            return self.make_envelope("protocol_error", {"reason": e.reason, "message": str(e)})
        return self.handle_command(env)

    def handle_command(self, env: Envelope) -> Envelope:
        if env.seq <= self._last_inbound_seq:
            return self.make_envelope("protocol_error",
                                      {"reason": "seq_regression",
                                       "message": f"seq {env.seq} after {self._last_inbound_seq}",
                                       "ack_seq": env.seq})
        self._last_inbound_seq = env.seq
        if env.type not in PROTOCOL_COMMANDS:
            return self.make_envelope("protocol_error",
                                      {"reason": "unknown_type", "message": env.type,
                                       "ack_seq": env.seq})
        if self.record:
            self.session.command_log.append(
                {"tick": self.session._tick_count, "envelope": env.to_obj()})
        try:
            result = getattr(self, f"_cmd_{env.type}")(env.payload)
            return self.make_envelope("ack", {"ack_seq": env.seq, "result": result or {}})
        except _DOMAIN_ERRORS as e:
            return self.make_envelope("ack", {
                "ack_seq": env.seq,
                "error": {"kind": type(e).__name__, "message": str(e)},
            })
        except ProtocolError as e:
            return self.make_envelope("protocol_error",
                                      {"reason": e.reason, "message": str(e), "ack_seq": env.seq})

    # -- commands -------------------------------------------------------------

    def _cmd_sequence_replace(self, payload):
        seq = deserialize(json.dumps(_want(payload, "sequence", dict)))
        self.session.executor.replace_sequence(seq)
        return {"length": len(seq)}

    def _cmd_sequence_edit(self, payload):
        op = _want(payload, "op")
        ex = self.session.executor
        if op == "insert":
            action = am._action_from_obj(_want(payload, "action", dict), _want(payload, "index", int))
            ex.apply_edit(InsertEdit(_want(payload, "index", int), action))
        elif op == "remove":
            ex.apply_edit(RemoveEdit(_want(payload, "index", int)))
        elif op == "update":
            action = am._action_from_obj(_want(payload, "action", dict), _want(payload, "index", int))
            ex.apply_edit(UpdateEdit(_want(payload, "index", int), action))
        else:
            raise ProtocolError("schema", f"unknown edit op {op!r}")
        return {"length": len(ex.sequence), "executor": ex.state_snapshot()}

    def _cmd_execute_manual(self, payload):
        ex = self.session.executor
        if "index" in payload:
            ex.select(_want(payload, "index", int))
        ex.execute_selected()
        return {"executor": ex.state_snapshot()}

    def _cmd_set_automatic(self, payload):
        on = _want(payload, "on", (bool, int))
        self.session.executor.set_automatic(bool(on))
        return {"executor": self.session.executor.state_snapshot()}

    def _cmd_abort(self, payload):
        self.session.executor.abort()
        return {"executor": self.session.executor.state_snapshot()}

    def _cmd_request_ik_preview(self, payload):
        side = _want(payload, "side")
        if side not in ("left", "right"):
            raise ProtocolError("schema", "side must be left or right")
        frame = _want(payload, "frame")
        goal = _pose_from(payload, "goal")
        w = self.session.world
        goal_world = compose(self.session.tree.resolve_world(frame), goal)
        goal_chest = compose(invert(w.chest_pose), goal_world)
        sol = solve_ik(w.model, f"{side}_arm", goal_chest, w.configuration())
        return {"solution": _ik_solution_obj(sol), "goal_world": goal_world.to_json()}

    def _cmd_request_stance_preview(self, payload):
        frame = _want(payload, "frame")
        parent = self.session.tree.resolve_world(frame)
        goal = Stance(compose(parent, _pose_from(payload, "left_foot")),
                      compose(parent, _pose_from(payload, "right_foot")))
        w = self.session.world
        plan = plan_to_stance(Stance(w.feet_poses["left"], w.feet_poses["right"]), goal,
                              w.scene.step_limits)
        return {"plan": _plan_obj(plan)}

    def _cmd_load_scene(self, payload):
        name = _want(payload, "scene")
        self.session.load_scene(name)
        return {"scene": self.session.scene.name,
                "frames": tree_obj(self.session.tree)}

    def _cmd_load_behavior(self, payload):
        name = _want(payload, "behavior")
        seq = self.session.load_behavior(name)
        issues = validate_against_frames(seq, self.session.tree)
        return {"sequence": sequence_to_obj(seq),
                "issues": [str(i) for i in issues]}


def replay_command_log(log: list[dict], session: Session, extra_ticks: int = 0) -> list[dict]:
    """Re-drive a recorded command log against a fresh session; returns the
    executor's status-event stream for comparison with the original."""
    proc = CommandProcessor(session, record=False)
    for entry in log:
        while session._tick_count < entry["tick"]:
            session.tick()
        env = parse_frame(json.dumps(entry["envelope"]))
        proc.handle_command(env)
    for _ in range(extra_ticks):
        session.tick()
    return [e.to_json() for e in session.executor.events]
