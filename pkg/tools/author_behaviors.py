#!/usr/bin/env python3
"""Build the bundled door and pick-place behaviors and prove them in sim.

Run from the repo root. Writes the *.behavior.json assets only when the
scenario executes cleanly (all actions succeed, scenario predicate holds,
no collision reports).
"""

import math
import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parent.parent / "src"))

import numpy as np

from behavior_forge.actions import (
    ActionSequence, ArmJointAngles, HandConfiguration, HandPose, StancePose,
    save_behavior,
)
from behavior_forge.assets import asset_path
from behavior_forge.geometry import Pose6D
from behavior_forge.kinematics import forward_kinematics, load_model
from behavior_forge.session import Session, SessionConfig

YAW90 = math.pi / 2


def feet(x, y, yaw=0.0, width=0.25):
    lat = (-math.sin(yaw), math.cos(yaw))
    left = Pose6D.from_xy_yaw(x + lat[0] * width / 2, y + lat[1] * width / 2, yaw)
    right = Pose6D.from_xy_yaw(x - lat[0] * width / 2, y - lat[1] * width / 2, yaw)
    return left, right


def hand_goal(x, y, z, yaw=YAW90):
    return Pose6D.from_axis_angle((0, 0, 1), yaw, (x, y, z))


def pointed_goal(side, x, y, z, shoulder=None, direction=None, from_pose=None):
    """Hand pose with the hand axis aimed along ``direction`` (or radially
    out from the shoulder), which is how the full 0.67 m reach is used at far
    targets. When ``from_pose`` is given, the orientation is the minimal arc
    from it, so the trajectory slerp sweeps the hand axis directly to the
    target direction without the wrist detouring."""
    from behavior_forge.geometry import Pose6D as P, compose, quat_from_axis_angle
    axis_local = np.array([0.0, 1.0, 0.0]) if side == "left" else np.array([0.0, -1.0, 0.0])
    u = np.asarray(direction, float) if direction is not None \
        else np.array([x, y, z]) - np.asarray(shoulder, float)
    u = u / np.linalg.norm(u)
    a0 = from_pose.rotate_vector(axis_local) if from_pose is not None else axis_local
    c = float(a0 @ u)
    axis = np.cross(a0, u)
    if np.linalg.norm(axis) < 1e-12:
        ori = np.array([1.0, 0.0, 0.0, 0.0])
    else:
        ori = quat_from_axis_angle(axis, math.acos(max(-1.0, min(1.0, c))))
    base = from_pose.orientation if from_pose is not None else np.array([1.0, 0, 0, 0])
    out = compose(P(np.zeros(3), ori), P(np.zeros(3), base))
    return P(np.array([x, y, z], float), out.orientation)


def lever_grip_local(phi):
    # lever frame sits at the rest grip point; the mount is 0.12 m toward the hinge
    return (0.0, 0.12 * (math.cos(phi) - 1.0), -0.12 * math.sin(phi))


def build_door_sequence(model) -> ActionSequence:
    tuck = model.named_configurations["collision_avoidance"]
    a = []
    l, r = feet(-0.22, -0.02)
    a.append(StancePose("Approach door", "door_frame", l, r))
    a.append(HandPose("Right hand approaches handle", "door_lever", "right",
                      hand_goal(-0.14, 0.0, 0.05), 2.0))
    a.append(HandPose("Pre-grasp hand pose", "door_lever", "right",
                      hand_goal(-0.02, 0.0, 0.005), 1.5))
    gx, gy, gz = lever_grip_local(0.12)
    a.append(HandPose("First handle turn contact", "door_lever", "right",
                      hand_goal(gx, gy, gz), 1.0))
    gx, gy, gz = lever_grip_local(0.72)
    a.append(HandPose("Latch disengaged", "door_lever", "right",
                      hand_goal(gx, gy, gz), 1.5))
    # shoulder positions in door-frame coordinates at the approach stance,
    # used to aim the far pushes radially for full reach
    r_shoulder = (-0.22, -0.24, 1.25)
    l_shoulder = (-0.22, 0.20, 1.25)
    left_home = forward_kinematics(model, model.named_configuration("home"), "left_arm")
    a.append(HandPose("Door pushed open with right hand", "door_frame", "right",
                      pointed_goal("right", 0.32, -0.22, 0.95, r_shoulder), 2.5))
    more = pointed_goal("left", 0.24, 0.10, 1.15, l_shoulder, from_pose=left_home)
    a.append(HandPose("Door pushed open more with left hand", "door_frame", "left", more, 2.5))
    # near the hinge the radial direction lies almost in the panel plane, so
    # blend toward the panel normal to keep the wrist on the robot side
    a.append(HandPose("Door pushed open all the way with left hand", "door_frame", "left",
                      pointed_goal("left", 0.28, 0.455, 1.0, direction=(0.35, 0.89, -0.29),
                                   from_pose=more), 2.5))
    a.append(ArmJointAngles("Arms in collision avoidance configuration", "door_frame",
                            "both", dict(tuck), 2.0))
    l, r = feet(-0.08, 0.0)
    a.append(StancePose("Step forward a little", "door_frame", l, r))
    l, r = feet(0.75, 0.0)
    a.append(StancePose("Walk through the door frame", "door_frame", l, r))
    return ActionSequence("push_door", "door_frame", tuple(a))


def build_pick_place_sequence() -> ActionSequence:
    a = []
    l, r = feet(-1.0, -0.1)
    a.append(StancePose("Begin approach", "table_frame", l, r))
    l, r = feet(-0.6, -0.1)
    a.append(StancePose("Approach table", "table_frame", l, r))
    a.append(HandPose("Right hand approaches can", "can_of_soup", "right",
                      hand_goal(-0.15, 0.0, 0.10), 2.0))
    a.append(HandPose("Pre-grasp hand pose", "can_of_soup", "right",
                      hand_goal(-0.03, 0.0, 0.05), 1.5))
    a.append(HandConfiguration("Grasp can of soup", "can_of_soup", "right", "close"))
    a.append(HandPose("Pull back hand with can of soup", "table_frame", "right",
                      hand_goal(-0.42, -0.15, 0.95), 1.5))
    l, r = feet(-0.6, 0.2)
    a.append(StancePose("Step to the side", "table_frame", l, r))
    a.append(HandPose("Set down can", "table_frame", "right",
                      hand_goal(-0.28, 0.10, 0.80), 2.0))
    a.append(HandConfiguration("Release grasp on can", "table_frame", "right", "open"))
    l, r = feet(-0.88, 0.2)
    a.append(StancePose("Back away from task", "table_frame", l, r))
    return ActionSequence("pick_place_can", "table_frame", tuple(a))


def run(scene_name, seq, seed=7, verbose=True):
    s = Session(SessionConfig(scene=asset_path(scene_name), seed=seed, behavior=seq))
    s.register_task_frames()
    s.enable_collision_monitor()
    issues = []
    from behavior_forge.actions import validate_against_frames
    issues = validate_against_frames(seq, s.tree)
    if issues:
        print("frame validation:", [str(i) for i in issues])
        return False, s
    s.executor.set_automatic(True)
    ok = s.run_until_done(max_sim_time=240.0)
    success, why = s.success_predicate()
    if verbose:
        print(f"--- {scene_name}: actions_ok={ok} predicate={success} ({why}) "
              f"sim_time={s.world.sim_time:.1f}s collisions={len(s.collision_log)}")
        for ev in s.executor.events:
            if ev.status in ("succeeded", "failed"):
                print(f"  {ev.sim_time:7.2f}s  [{ev.status:9s}] {ev.description} {ev.error}")
        if s.world.door:
            print("  door:", s.world.door)
        if s.collision_log[:6]:
            print("  collisions:", s.collision_log[:6])
    return ok and success and not s.collision_log, s


if __name__ == "__main__":
    model = load_model(asset_path("nadia_sim.json"))
    door_seq = build_door_sequence(model)
    pick_seq = build_pick_place_sequence()

    door_ok, _ = run("door_scene.json", door_seq)
    pick_ok, _ = run("table_scene.json", pick_seq)

    if door_ok and "--save" in sys.argv:
        save_behavior(door_seq, asset_path("push_door.behavior.json"))
        print("saved push_door.behavior.json")
    if pick_ok and "--save" in sys.argv:
        save_behavior(pick_seq, asset_path("pick_place_can.behavior.json"))
        print("saved pick_place_can.behavior.json")
    sys.exit(0 if (door_ok and pick_ok) else 1)
