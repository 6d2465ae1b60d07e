"""Execution state machine over an action sequence.

A single cursor selects the next action to run. "Manual" execution runs
exactly the selected action; automatic mode keeps dispatching the cursor as
actions complete. Completion is detected by polling the simulator against
per-kind tolerances; a timeout at 1.5x the nominal duration marks the action
failed, halts automatic mode, and leaves the cursor on the failed action so
the operator can edit and retry. Live edits are accepted anywhere except the
action currently executing.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from behavior_forge.actions import (
    Action,
    ActionSequence,
    ArmJointAngles,
    HandConfiguration,
    HandPose,
    StancePose,
    insert_action,
    remove_action,
    update_action,
    validate_against_frames,
)
from behavior_forge.geometry import Pose6D, compose, rotation_angle_between
from behavior_forge.stance import UnreachableGoal
from behavior_forge.world import (
    FootstepExecutionTask,
    HandActuationTask,
    IkUnreachable,
    SimWorld,
)

PENDING = "pending"
EXECUTING = "executing"
SUCCEEDED = "succeeded"
FAILED = "failed"

MANUAL = "manual"
AUTOMATIC = "automatic"

TIMEOUT_FACTOR = 1.5
HAND_POSITION_TOL = 0.02          # m
HAND_ORIENTATION_TOL = math.radians(5.0)
FOOT_POSITION_TOL = 0.01
FOOT_ORIENTATION_TOL = math.radians(2.0)
JOINT_ANGLE_TOL = 0.02            # rad


class AlreadyExecuting(RuntimeError):
    pass


class SequenceExhausted(RuntimeError):
    pass


class ValidationFailed(ValueError):
    def __init__(self, issues):
        super().__init__("; ".join(str(i) for i in issues))
        self.issues = list(issues)


class EditConflict(RuntimeError):
    pass


@dataclass(frozen=True)
class StatusEvent:
    sim_time: float
    index: int
    status: str
    description: str
    error: str = ""

    def to_json(self) -> dict:
        out = {"sim_time": self.sim_time, "index": self.index, "status": self.status,
               "description": self.description}
        if self.error:
            out["error"] = self.error
        return out


@dataclass(frozen=True)
class CompletionRecord:
    index: int
    sim_time: float
    description: str
    achieved: dict[str, Pose6D]


@dataclass
class _ActiveAction:
    index: int
    action: Action
    task: object
    started_at: float
    base_duration: float
    goal_hand: Pose6D | None = None
    goal_feet: dict[str, Pose6D] | None = None
    goal_joints: dict[str, float] | None = None


@dataclass(frozen=True)
class InsertEdit:
    index: int
    action: Action


@dataclass(frozen=True)
class RemoveEdit:
    index: int


@dataclass(frozen=True)
class UpdateEdit:
    index: int
    action: Action


Edit = InsertEdit | RemoveEdit | UpdateEdit


class Executor:
    """Owns the (sequence, cursor, statuses) triple against one sim world."""

    def __init__(self, world: SimWorld, sequence: ActionSequence | None = None):
        self.world = world
        self.sequence = sequence or ActionSequence("untitled", "world")
        self.selected = 0
        self.mode = MANUAL
        self.statuses: list[str] = [PENDING] * len(self.sequence)
        self.events: list[StatusEvent] = []
        self.completions: list[CompletionRecord] = []
        self._active: Optional[_ActiveAction] = None

    # -- observable state ----------------------------------------------------

    @property
    def executing_index(self) -> int | None:
        return self._active.index if self._active is not None else None

    def finished(self) -> bool:
        return self._active is None and self.selected >= len(self.sequence)

    def state_snapshot(self) -> dict:
        return {
            "selected": self.selected,
            "mode": self.mode,
            "statuses": list(self.statuses),
            "executing": self.executing_index,
        }

    def _emit(self, index: int, status: str, error: str = ""):
        desc = self.sequence[index].description if index < len(self.sequence) else ""
        self.events.append(StatusEvent(self.world.sim_time, index, status, desc, error))

    # -- sequence management ---------------------------------------------------

    def replace_sequence(self, sequence: ActionSequence):
        if self._active is not None:
            raise EditConflict("cannot replace the sequence while an action executes")
        self.sequence = sequence
        self.selected = 0
        self.mode = MANUAL
        self.statuses = [PENDING] * len(sequence)
        self._active = None

    def apply_edit(self, edit: Edit) -> ActionSequence:
        """Apply a live edit, reindexing the cursor and statuses."""
        if isinstance(edit, InsertEdit):
            if self._active is not None and edit.index <= self._active.index:
                raise EditConflict("insert would displace the executing action")
            if self._active is None:
                if edit.index < self.selected:
                    raise EditConflict("cannot insert before already-executed actions")
                if (edit.index == self.selected and edit.index < len(self.sequence)
                        and self.statuses[edit.index] == FAILED):
                    raise EditConflict("cannot insert ahead of a failed action awaiting retry")
            self.sequence = insert_action(self.sequence, edit.index, edit.action)
            self.statuses.insert(edit.index, PENDING)
        elif isinstance(edit, RemoveEdit):
            if self._active is not None and edit.index == self._active.index:
                raise EditConflict("cannot remove the executing action")
            self.sequence = remove_action(self.sequence, edit.index)
            self.statuses.pop(edit.index)
            if edit.index < self.selected:
                self.selected -= 1
            if self._active is not None and edit.index < self._active.index:
                self._active.index -= 1
            self.selected = min(self.selected, len(self.sequence))
        elif isinstance(edit, UpdateEdit):
            if self._active is not None and edit.index == self._active.index:
                raise EditConflict("cannot modify the executing action")
            self.sequence = update_action(self.sequence, edit.index, edit.action)
        else:
            raise TypeError(f"unknown edit {type(edit).__name__}")
        return self.sequence

    def select(self, index: int):
        """Move the cursor; only pending actions at or after the frontier."""
        if self._active is not None:
            raise AlreadyExecuting("cannot move the cursor during execution")
        if not 0 <= index <= len(self.sequence):
            raise IndexError(index)
        if any(s == PENDING for s in self.statuses[:index]):
            raise EditConflict("cannot skip pending actions")
        self.selected = index

    # -- execution -------------------------------------------------------------

    def execute_selected(self):
        """Dispatch the selected action (the Manually button)."""
        if self._active is not None:
            raise AlreadyExecuting(f"action {self._active.index} still executing")
        if self.selected >= len(self.sequence):
            raise SequenceExhausted(f"cursor at {self.selected} of {len(self.sequence)}")
        issues = validate_against_frames(self.sequence, self.world.tree)
        if issues:
            raise ValidationFailed(issues)
        self._dispatch(self.selected)

    def set_automatic(self, on: bool):
        self.mode = AUTOMATIC if on else MANUAL

    def abort(self):
        """Cancel the in-flight action: it becomes failed, automatic halts."""
        active = self._active
        if active is None:
            return
        active.task.done = True
        self.world.tasks = [t for t in self.world.tasks if t is not active.task]
        self.statuses[active.index] = FAILED
        self.mode = MANUAL
        self._emit(active.index, FAILED, error="aborted")
        self._active = None

    def _dispatch(self, index: int):
        action = self.sequence[index]
        try:
            task = self.world.dispatch_action(action)
        except (IkUnreachable, UnreachableGoal) as e:
            self.statuses[index] = FAILED
            self.mode = MANUAL
            self._emit(index, FAILED, error=str(e))
            raise
        active = _ActiveAction(index, action, task, self.world.sim_time, 0.0)
        if isinstance(action, HandPose):
            active.base_duration = action.trajectory_duration
            active.goal_hand = task.goal
        elif isinstance(action, StancePose):
            active.base_duration = max(task.plan.duration(), 1e-9)
            parent = self.world.tree.resolve_world(action.parent_frame)
            active.goal_feet = {"left": compose(parent, action.left_foot),
                                "right": compose(parent, action.right_foot)}
        elif isinstance(action, HandConfiguration):
            active.base_duration = task.duration
        elif isinstance(action, ArmJointAngles):
            active.base_duration = action.trajectory_duration
            active.goal_joints = dict(task.q_goal)
        self._active = active
        self.statuses[index] = EXECUTING
        self._emit(index, EXECUTING)

    def _tolerances_met(self, active: _ActiveAction) -> bool:
        w = self.world
        if active.goal_hand is not None:
            hand = w.hand_poses[active.action.side]
            if float(np.linalg.norm(hand.position - active.goal_hand.position)) > HAND_POSITION_TOL:
                return False
            return rotation_angle_between(hand, active.goal_hand) <= HAND_ORIENTATION_TOL
        if active.goal_feet is not None:
            for side, goal in active.goal_feet.items():
                foot = w.feet_poses[side]
                if float(np.linalg.norm(foot.position - goal.position)) > FOOT_POSITION_TOL:
                    return False
                if rotation_angle_between(foot, goal) > FOOT_ORIENTATION_TOL:
                    return False
            return True
        if active.goal_joints is not None:
            return all(abs(w.joint_values[n] - v) <= JOINT_ANGLE_TOL
                       for n, v in active.goal_joints.items())
        return True

    def _achieved_poses(self, active: _ActiveAction) -> dict[str, Pose6D]:
        w = self.world
        achieved: dict[str, Pose6D] = {}
        if isinstance(active.action, (HandPose, HandConfiguration)):
            achieved[f"{active.action.side}_hand"] = w.hand_poses[active.action.side]
        elif isinstance(active.action, StancePose):
            achieved["left_foot"] = w.feet_poses["left"]
            achieved["right_foot"] = w.feet_poses["right"]
        elif isinstance(active.action, ArmJointAngles):
            for side in active.task.sides:
                achieved[f"{side}_hand"] = w.hand_poses[side]
        return achieved

    def tick(self, now: float | None = None):
        """Poll completion and apply automatic dispatch; call at the sim rate."""
        now = self.world.sim_time if now is None else now
        active = self._active
        if active is not None:
            elapsed = now - active.started_at
            if active.task.done and self._tolerances_met(active):
                self.statuses[active.index] = SUCCEEDED
                self.completions.append(CompletionRecord(
                    active.index, now, active.action.description, self._achieved_poses(active)))
                self._emit(active.index, SUCCEEDED)
                self.selected = active.index + 1
                self._active = None
            elif elapsed >= TIMEOUT_FACTOR * max(active.base_duration, 1e-9):
                active.task.done = True
                self.world.tasks = [t for t in self.world.tasks if t is not active.task]
                self.statuses[active.index] = FAILED
                self.mode = MANUAL
                self._emit(active.index, FAILED, error="timeout")
                self._active = None

        if (self._active is None and self.mode == AUTOMATIC
                and self.selected < len(self.sequence)):
            issues = validate_against_frames(self.sequence, self.world.tree)
            if issues:
                self.mode = MANUAL
                self._emit(self.selected, PENDING, error=str(ValidationFailed(issues)))
                return
            try:
                self._dispatch(self.selected)
            except (IkUnreachable, UnreachableGoal):
                pass  # recorded as a failed status; automatic mode already halted
