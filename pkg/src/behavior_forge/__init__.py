"""behavior_forge: on-the-fly humanoid behavior authoring and execution.

A behavior is a linear sequence of frame-relative actions (stance goals,
hand poses, hand open/close, arm joint angles) anchored to task frames that
are registered from fiducial detections, so the same file runs anywhere the
task appears. The package bundles a kinematic simulated humanoid, a push-door
and a pick-and-place scene, an execution state machine with live editing, and
a websocket protocol for 3D operator UIs.
"""

from behavior_forge.actions import (
    Action,
    ActionSequence,
    ArmJointAngles,
    HandConfiguration,
    HandPose,
    StancePose,
    deserialize,
    insert_action,
    load_behavior,
    move_action,
    remove_action,
    save_behavior,
    serialize,
    update_action,
    validate_against_frames,
)
from behavior_forge.executor import Executor, InsertEdit, RemoveEdit, UpdateEdit
from behavior_forge.geometry import (
    CycleError,
    FrameTree,
    Pose6D,
    UnknownFrame,
    WORLD_FRAME,
    compose,
    interpolate_pose,
    invert,
)
from behavior_forge.kinematics import (
    IkSolution,
    JointConfiguration,
    RobotModel,
    forward_kinematics,
    jacobian,
    load_model,
    solve_ik,
)
from behavior_forge.session import Session, SessionConfig
from behavior_forge.stance import (
    Footstep,
    FootstepPlan,
    Stance,
    StepLimits,
    UnreachableGoal,
    plan_to_stance,
    validate_plan,
)
from behavior_forge.world import DoorState, IkUnreachable, SimWorld, load_scene

__all__ = [
    "Action", "ActionSequence", "ArmJointAngles", "CycleError", "DoorState",
    "Executor", "Footstep", "FootstepPlan", "FrameTree", "HandConfiguration",
    "HandPose", "IkSolution", "IkUnreachable", "InsertEdit",
    "JointConfiguration", "Pose6D", "RemoveEdit", "RobotModel", "Session",
    "SessionConfig", "SimWorld", "Stance", "StancePose", "StepLimits",
    "UnknownFrame", "UnreachableGoal", "UpdateEdit", "WORLD_FRAME", "compose",
    "deserialize", "forward_kinematics", "insert_action", "interpolate_pose",
    "invert", "jacobian", "load_behavior", "load_model", "load_scene",
    "move_action", "plan_to_stance", "remove_action", "save_behavior",
    "serialize", "solve_ik", "update_action", "validate_against_frames",
    "validate_plan",
]
