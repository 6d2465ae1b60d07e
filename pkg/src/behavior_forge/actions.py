"""The authored artifact: typed, frame-relative actions in a linear sequence,
serialized to a canonical *.behavior.json file.

Canonical encoding: UTF-8 JSON with lexicographically sorted keys, compact
separators, shortest round-trip decimals, newline-terminated. Serializing the
same value always yields the same bytes, so behavior files diff and hash
cleanly. The schema is closed-world per format version: unknown action kinds
and unknown fields are rejected rather than preserved.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, replace
from typing import Union

from behavior_forge.geometry import FrameTree, Pose6D

FORMAT_VERSION = "1"

LEFT = "left"
RIGHT = "right"
BOTH = "both"

MIN_FEET_SEPARATION = 0.15
MAX_FEET_SEPARATION = 0.6


class ParseError(ValueError):
    def __init__(self, message: str, line: int, column: int):
        super().__init__(f"{message} (line {line}, column {column})")
        self.line = line
        self.column = column


class UnknownKind(ValueError):
    def __init__(self, kind):
        super().__init__(f"unknown action kind {kind!r}")
        self.kind = kind


class SchemaError(ValueError):
    def __init__(self, field: str, message: str = ""):
        super().__init__(f"invalid field {field!r}" + (f": {message}" if message else ""))
        self.field = field


class ValidationError(ValueError):
    def __init__(self, violations: list[str]):
        super().__init__("; ".join(violations))
        self.violations = violations


class IndexOutOfRange(IndexError):
    pass


@dataclass(frozen=True)
class StancePose:
    """Goal feet placement relative to a task frame, for the stance planner."""

    description: str
    parent_frame: str
    left_foot: Pose6D
    right_foot: Pose6D
    swing_duration: float = 1.2
    transfer_duration: float = 0.8

    kind = "stance_pose"


@dataclass(frozen=True)
class HandPose:
    """Goal hand pose relative to a task frame, achieved via IK."""

    description: str
    parent_frame: str
    side: str
    goal: Pose6D
    trajectory_duration: float = 2.0

    kind = "hand_pose"


@dataclass(frozen=True)
class HandConfiguration:
    """Open or close a hand; closing near a grasp point picks the object up."""

    description: str
    parent_frame: str
    side: str
    state: str  # "open" | "close"

    kind = "hand_configuration"


@dataclass(frozen=True)
class ArmJointAngles:
    """Drive one or both arms to explicit joint angles (no IK involved)."""

    description: str
    parent_frame: str
    side: str  # "left" | "right" | "both"
    angles: dict[str, float]
    trajectory_duration: float = 2.0

    kind = "arm_joint_angles"


Action = Union[StancePose, HandPose, HandConfiguration, ArmJointAngles]

_KINDS = {cls.kind: cls for cls in (StancePose, HandPose, HandConfiguration, ArmJointAngles)}


@dataclass(frozen=True)
class ActionSequence:
    name: str
    task_frame: str
    actions: tuple[Action, ...] = ()
    version: str = FORMAT_VERSION

    def __len__(self) -> int:
        return len(self.actions)

    def __getitem__(self, i: int) -> Action:
        return self.actions[i]

    def descriptions(self) -> list[str]:
        return [a.description for a in self.actions]


def insert_action(seq: ActionSequence, index: int, action: Action) -> ActionSequence:
    if not 0 <= index <= len(seq.actions):
        raise IndexOutOfRange(f"insert index {index} outside [0, {len(seq.actions)}]")
    actions = seq.actions[:index] + (action,) + seq.actions[index:]
    return replace(seq, actions=actions)


def remove_action(seq: ActionSequence, index: int) -> ActionSequence:
    if not 0 <= index < len(seq.actions):
        raise IndexOutOfRange(f"remove index {index} outside [0, {len(seq.actions)})")
    return replace(seq, actions=seq.actions[:index] + seq.actions[index + 1:])


def update_action(seq: ActionSequence, index: int, action: Action) -> ActionSequence:
    if not 0 <= index < len(seq.actions):
        raise IndexOutOfRange(f"update index {index} outside [0, {len(seq.actions)})")
    return replace(seq, actions=seq.actions[:index] + (action,) + seq.actions[index + 1:])


def move_action(seq: ActionSequence, src: int, dst: int) -> ActionSequence:
    return insert_action(remove_action(seq, src), dst, seq.actions[src])


def _check_common(a: Action, out: list[str], where: str):
    if not a.description:
        out.append(f"{where}: empty description")
    if not a.parent_frame:
        out.append(f"{where}: empty parent_frame")


def validate_action(a: Action, index: int | None = None) -> list[str]:
    where = f"actions[{index}]" if index is not None else "action"
    out: list[str] = []
    _check_common(a, out, where)
    if isinstance(a, StancePose):
        if a.swing_duration <= 0:
            out.append(f"{where}: swing_duration must be > 0")
        if a.transfer_duration <= 0:
            out.append(f"{where}: transfer_duration must be > 0")
        sep = float(sum((l - r) ** 2 for l, r in zip(a.left_foot.position, a.right_foot.position)) ** 0.5)
        if not MIN_FEET_SEPARATION <= sep <= MAX_FEET_SEPARATION:
            out.append(f"{where}: feet separation {sep:.3f} m outside "
                       f"[{MIN_FEET_SEPARATION}, {MAX_FEET_SEPARATION}]")
    elif isinstance(a, HandPose):
        if a.side not in (LEFT, RIGHT):
            out.append(f"{where}: side must be left or right")
        if a.trajectory_duration <= 0:
            out.append(f"{where}: trajectory_duration must be > 0")
    elif isinstance(a, HandConfiguration):
        if a.side not in (LEFT, RIGHT):
            out.append(f"{where}: side must be left or right")
        if a.state not in ("open", "close"):
            out.append(f"{where}: state must be open or close")
    elif isinstance(a, ArmJointAngles):
        if a.side not in (LEFT, RIGHT, BOTH):
            out.append(f"{where}: side must be left, right, or both")
        if a.trajectory_duration <= 0:
            out.append(f"{where}: trajectory_duration must be > 0")
        if not a.angles:
            out.append(f"{where}: empty angles")
    return out


def validate_sequence(seq: ActionSequence) -> list[str]:
    out: list[str] = []
    if seq.version != FORMAT_VERSION:
        out.append(f"unsupported format version {seq.version!r}")
    if not seq.name:
        out.append("empty sequence name")
    if not seq.task_frame:
        out.append("empty task_frame")
    for i, a in enumerate(seq.actions):
        out.extend(validate_action(a, i))
    return out


@dataclass(frozen=True)
class FrameIssue:
    action_index: int
    frame: str

    def __str__(self) -> str:
        return f"actions[{self.action_index}] references missing frame {self.frame!r}"


def validate_against_frames(seq: ActionSequence, tree: FrameTree) -> list[FrameIssue]:
    """One issue per action whose parent frame is absent; [] means executable."""
    return [
        FrameIssue(i, a.parent_frame)
        for i, a in enumerate(seq.actions)
        if a.parent_frame not in tree
    ]


def _action_to_obj(a: Action) -> dict:
    obj = {"kind": a.kind, "description": a.description, "parent_frame": a.parent_frame}
    if isinstance(a, StancePose):
        obj.update(left_foot=a.left_foot.to_json(), right_foot=a.right_foot.to_json(),
                   swing_duration=a.swing_duration, transfer_duration=a.transfer_duration)
    elif isinstance(a, HandPose):
        obj.update(side=a.side, goal=a.goal.to_json(), trajectory_duration=a.trajectory_duration)
    elif isinstance(a, HandConfiguration):
        obj.update(side=a.side, state=a.state)
    elif isinstance(a, ArmJointAngles):
        obj.update(side=a.side, angles={k: float(v) for k, v in sorted(a.angles.items())},
                   trajectory_duration=a.trajectory_duration)
    return obj


def sequence_to_obj(seq: ActionSequence) -> dict:
    return {
        "format_version": seq.version,
        "name": seq.name,
        "task_frame": seq.task_frame,
        "actions": [_action_to_obj(a) for a in seq.actions],
    }


def canonical_json_bytes(obj) -> bytes:
    return (json.dumps(obj, sort_keys=True, separators=(",", ":"), ensure_ascii=False) + "\n").encode("utf-8")


def serialize(seq: ActionSequence) -> bytes:
    violations = validate_sequence(seq)
    if violations:
        raise ValidationError(violations)
    return canonical_json_bytes(sequence_to_obj(seq))


def _want(obj: dict, field: str, types, where: str):
    if field not in obj:
        raise SchemaError(f"{where}.{field}" if where else field, "missing")
    v = obj[field]
    if not isinstance(v, types) or isinstance(v, bool):
        raise SchemaError(f"{where}.{field}" if where else field, "wrong type")
    return v


def _pose_from_obj(obj, where: str) -> Pose6D:
    if not isinstance(obj, dict) or set(obj) - {"position", "orientation"}:
        raise SchemaError(where, "expected {position, orientation}")
    pos = _want(obj, "position", list, where)
    ori = _want(obj, "orientation", list, where)
    if len(pos) != 3 or not all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in pos):
        raise SchemaError(f"{where}.position")
    if len(ori) != 4 or not all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in ori):
        raise SchemaError(f"{where}.orientation")
    try:
        return Pose6D.from_json(obj)
    except ValueError as e:
        raise SchemaError(where, str(e)) from None


def _positive(obj: dict, field: str, where: str) -> float:
    v = float(_want(obj, field, (int, float), where))
    if v <= 0:
        raise SchemaError(f"{where}.{field}" if where else field, "must be > 0")
    return v


_ACTION_FIELDS = {
    "stance_pose": {"kind", "description", "parent_frame", "left_foot", "right_foot",
                    "swing_duration", "transfer_duration"},
    "hand_pose": {"kind", "description", "parent_frame", "side", "goal", "trajectory_duration"},
    "hand_configuration": {"kind", "description", "parent_frame", "side", "state"},
    "arm_joint_angles": {"kind", "description", "parent_frame", "side", "angles",
                         "trajectory_duration"},
}


def _action_from_obj(obj: dict, index: int) -> Action:
    where = f"actions[{index}]"
    if not isinstance(obj, dict):
        raise SchemaError(where, "expected an object")
    kind = obj.get("kind")
    if kind not in _KINDS:
        raise UnknownKind(kind)
    extra = set(obj) - _ACTION_FIELDS[kind]
    if extra:
        raise SchemaError(f"{where}.{sorted(extra)[0]}", "unknown field")
    description = _want(obj, "description", str, where)
    parent_frame = _want(obj, "parent_frame", str, where)
    if not description:
        raise SchemaError(f"{where}.description", "must be non-empty")
    if not parent_frame:
        raise SchemaError(f"{where}.parent_frame", "must be non-empty")

    if kind == "stance_pose":
        return StancePose(description, parent_frame,
                          _pose_from_obj(obj.get("left_foot"), f"{where}.left_foot"),
                          _pose_from_obj(obj.get("right_foot"), f"{where}.right_foot"),
                          _positive(obj, "swing_duration", where),
                          _positive(obj, "transfer_duration", where))
    if kind == "hand_pose":
        side = _want(obj, "side", str, where)
        if side not in (LEFT, RIGHT):
            raise SchemaError(f"{where}.side")
        return HandPose(description, parent_frame, side,
                        _pose_from_obj(obj.get("goal"), f"{where}.goal"),
                        _positive(obj, "trajectory_duration", where))
    if kind == "hand_configuration":
        side = _want(obj, "side", str, where)
        state = _want(obj, "state", str, where)
        if side not in (LEFT, RIGHT):
            raise SchemaError(f"{where}.side")
        if state not in ("open", "close"):
            raise SchemaError(f"{where}.state")
        return HandConfiguration(description, parent_frame, side, state)
    side = _want(obj, "side", str, where)
    if side not in (LEFT, RIGHT, BOTH):
        raise SchemaError(f"{where}.side")
    angles = _want(obj, "angles", dict, where)
    clean: dict[str, float] = {}
    for k, v in angles.items():
        if not isinstance(v, (int, float)) or isinstance(v, bool):
            raise SchemaError(f"{where}.angles.{k}")
        clean[k] = float(v)
    if not clean:
        raise SchemaError(f"{where}.angles", "must be non-empty")
    return ArmJointAngles(description, parent_frame, side, clean,
                          _positive(obj, "trajectory_duration", where))


def deserialize(data: bytes | str) -> ActionSequence:
    if isinstance(data, bytes):
        data = data.decode("utf-8")
    try:
        doc = json.loads(data)
    except json.JSONDecodeError as e:
        raise ParseError(e.msg, e.lineno, e.colno) from None
    if not isinstance(doc, dict):
        raise SchemaError("", "top level must be an object")
    extra = set(doc) - {"format_version", "name", "task_frame", "actions"}
    if extra:
        raise SchemaError(sorted(extra)[0], "unknown field")
    version = _want(doc, "format_version", str, "")
    if version != FORMAT_VERSION:
        raise SchemaError("format_version", f"unsupported version {version!r}")
    name = _want(doc, "name", str, "")
    task_frame = _want(doc, "task_frame", str, "")
    raw_actions = _want(doc, "actions", list, "")
    actions = tuple(_action_from_obj(a, i) for i, a in enumerate(raw_actions))
    seq = ActionSequence(name, task_frame, actions, version)
    violations = validate_sequence(seq)
    if violations:
        raise SchemaError("actions", "; ".join(violations))
    return seq


def load_behavior(path) -> ActionSequence:
    from pathlib import Path

    return deserialize(Path(path).read_bytes())


def save_behavior(seq: ActionSequence, path):
    from pathlib import Path

    Path(path).write_bytes(serialize(seq))
