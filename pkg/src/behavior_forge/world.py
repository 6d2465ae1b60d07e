"""Kinematic simulated robot and articulated scene.

There are two layers of truth here. The sim tracks ground-truth object poses
and robot state; the session's FrameTree holds what the engine believes,
registered from (noisy) fiducial detections. Actions resolve through the
belief tree; contact rules (grasping, the door lever and panel) evaluate
against ground truth, so perception error shows up exactly where it would on
hardware.

No forces are modeled. Hands follow task-space interpolants with cubic time
scaling, feet follow planned steps along a fixed-apex arc, and the door is
driven by proximity rules: a hand near the lever grip turns the lever, a
cleared latch plus a hand pushing into the panel swings the hinge at a capped
rate. Angles hold when contact stops (no auto-closing door).
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from behavior_forge.actions import (
    Action,
    ArmJointAngles,
    HandConfiguration,
    HandPose,
    StancePose,
)
from behavior_forge.geometry import (
    FrameTree,
    Pose6D,
    compose,
    interpolate_pose,
    invert,
    quat_from_rotvec,
    rotation_angle_between,
)
from behavior_forge.kinematics import (
    JointConfiguration,
    RobotModel,
    chain_joint_frames,
    forward_kinematics,
    load_model,
    solve_ik,
)
from behavior_forge.stance import (
    FootstepPlan,
    Stance,
    StepLimits,
    plan_to_stance,
)

SIM_DT = 0.01
HAND_ACTUATION_DURATION = 1.0

SIDES = ("left", "right")
_CHAIN = {"left": "left_arm", "right": "right_arm"}
_HAND_FRAME = {"left": "left_hand", "right": "right_hand"}
_FOOT_FRAME = {"left": "left_foot", "right": "right_foot"}
ROBOT_FRAMES = ("pelvis", "chest", "left_hand", "right_hand", "left_foot", "right_foot")


class IkUnreachable(ValueError):
    def __init__(self, side: str, solution):
        super().__init__(f"{side} hand goal unreachable "
                         f"(best position error {solution.position_error * 1000:.1f} mm)")
        self.solution = solution


class SceneError(ValueError):
    pass


@dataclass(frozen=True)
class Box:
    """Oriented box: pose of the box frame plus half extents, meters."""

    pose: Pose6D
    half_extents: np.ndarray
    color: tuple[float, float, float] = (0.6, 0.6, 0.6)

    @staticmethod
    def from_json(obj: dict) -> "Box":
        pose = Pose6D.from_json(obj["pose"]) if "pose" in obj else Pose6D(np.asarray(obj.get("center", [0, 0, 0]), dtype=float))
        return Box(pose, np.asarray(obj["half_extents"], dtype=float),
                   tuple(obj.get("color", (0.6, 0.6, 0.6))))


@dataclass
class Marker:
    id: int
    pose_in_object: Pose6D


@dataclass
class SceneObject:
    id: str
    frame: str
    initial_pose: Pose6D
    boxes: list[Box] = field(default_factory=list)
    marker: Marker | None = None
    grasp_points: list[np.ndarray] = field(default_factory=list)
    child_frames: dict[str, Pose6D] = field(default_factory=dict)


@dataclass
class DoorSpec:
    object_id: str
    hinge_in_frame: np.ndarray           # hinge base point in the object frame
    panel_size: tuple[float, float, float]  # width (from hinge), height, thickness
    lever_mount: np.ndarray              # in panel frame
    lever_axis: np.ndarray               # in panel frame, unit
    lever_arm: np.ndarray                # rest grip offset from the mount, panel frame
    hinge_side: str = "left"             # which side of the opening holds the hinge
    swing_range: tuple[float, float] = (0.0, 0.5 * math.pi * 1.1)
    lever_range: tuple[float, float] = (0.0, 1.2)
    lever_release_threshold: float = 0.52
    panel_color: tuple[float, float, float] = (0.55, 0.35, 0.2)

    @property
    def swing_sign(self) -> float:
        return 1.0 if self.hinge_side == "left" else -1.0


@dataclass
class Thresholds:
    grasp_radius: float = 0.05
    lever_track_radius: float = 0.04
    panel_contact_distance: float = 0.04
    max_hinge_rate: float = 1.5          # rad/s
    detection_sigma_pos: float = 0.005   # m
    detection_sigma_rot: float = math.radians(1.0)
    cloud_sigma: float = 0.01
    cloud_points: int = 2048
    sensor_range: float = 4.0


@dataclass
class SceneConfig:
    name: str
    spawn: Pose6D
    pelvis_height: float
    sensor_offset: Pose6D
    step_limits: StepLimits
    thresholds: Thresholds
    objects: list[SceneObject]
    door: DoorSpec | None
    success: dict
    calibration_bias: Pose6D | None = None   # optional marker-measurement bias


@dataclass
class DoorState:
    hinge_angle: float = 0.0
    lever_angle: float = 0.0
    latch_engaged: bool = True

    def to_json(self) -> dict:
        return {"hinge_angle": self.hinge_angle, "lever_angle": self.lever_angle,
                "latch_engaged": self.latch_engaged}


@dataclass(frozen=True)
class DetectionMessage:
    marker_id: int
    pose: Pose6D          # marker in sensor frame
    timestamp: float

    def to_json(self) -> dict:
        return {"marker_id": self.marker_id, "pose": self.pose.to_json(),
                "timestamp": self.timestamp}


def load_scene(source) -> SceneConfig:
    if isinstance(source, (str, Path)):
        try:
            doc = json.loads(Path(source).read_text())
        except json.JSONDecodeError as e:
            raise SceneError(f"scene does not parse: {e}") from None
    else:
        doc = source
    try:
        objects = []
        for od in doc.get("objects", []):
            marker = None
            if od.get("marker"):
                marker = Marker(int(od["marker"]["id"]), Pose6D.from_json(od["marker"]["pose_in_object"]))
            objects.append(SceneObject(
                id=od["id"], frame=od["frame"],
                initial_pose=Pose6D.from_json(od["pose"]),
                boxes=[Box.from_json(b) for b in od.get("boxes", [])],
                marker=marker,
                grasp_points=[np.asarray(g, dtype=float) for g in od.get("grasp_points", [])],
                child_frames={k: Pose6D.from_json(v) for k, v in od.get("child_frames", {}).items()},
            ))
        door = None
        if doc.get("door"):
            dd = doc["door"]
            door = DoorSpec(
                object_id=dd["object"],
                hinge_in_frame=np.asarray(dd["hinge"], dtype=float),
                panel_size=tuple(dd["panel_size"]),
                lever_mount=np.asarray(dd["lever_mount"], dtype=float),
                lever_axis=np.asarray(dd["lever_axis"], dtype=float),
                lever_arm=np.asarray(dd["lever_arm"], dtype=float),
                hinge_side=dd.get("hinge_side", "left"),
                swing_range=tuple(dd.get("swing_range", (0.0, 0.5 * math.pi * 1.1))),
                lever_range=tuple(dd.get("lever_range", (0.0, 1.2))),
                lever_release_threshold=float(dd.get("lever_release_threshold", 0.52)),
            )
        spawn = doc.get("spawn", {})
        bias = doc.get("calibration_bias")
        return SceneConfig(
            name=doc.get("name", "scene"),
            spawn=Pose6D.from_xy_yaw(float(spawn.get("x", 0)), float(spawn.get("y", 0)),
                                     float(spawn.get("yaw", 0))),
            pelvis_height=float(doc.get("pelvis_height", 0.95)),
            sensor_offset=Pose6D.from_json(doc.get("sensor_offset", {"position": [0.1, 0, 0.45]})),
            step_limits=StepLimits.from_json(doc.get("step_limits", {})),
            thresholds=Thresholds(**doc.get("thresholds", {})),
            objects=objects,
            door=door,
            success=doc.get("success", {}),
            calibration_bias=Pose6D.from_json(bias) if bias else None,
        )
    except (KeyError, TypeError, ValueError) as e:
        if isinstance(e, SceneError):
            raise
        raise SceneError(f"bad scene config: {e!r}") from None


# ---------------------------------------------------------------------------
# active tasks

def _cubic(t: float) -> float:
    if t <= 0.0:
        return 0.0
    if t >= 1.0:
        return 1.0
    return t * t * (3.0 - 2.0 * t)


@dataclass
class HandTrajectoryTask:
    side: str
    start: Pose6D
    goal: Pose6D
    q_start: dict[str, float]
    q_goal: dict[str, float]
    duration: float
    started_at: float
    done: bool = False

    def advance(self, world: "SimWorld", now: float):
        t = _cubic((now - self.started_at) / self.duration)
        # the hand pose is the task-space interpolant, so the endpoint is the
        # goal exactly; the joints co-animate toward the IK solution
        world.hand_poses[self.side] = interpolate_pose(self.start, self.goal, t)
        blend = {n: a + t * (self.q_goal[n] - a) for n, a in self.q_start.items()}
        world.joint_values.update(blend)
        if now - self.started_at >= self.duration:
            self.done = True


@dataclass
class ArmJointTask:
    sides: tuple[str, ...]
    q_start: dict[str, float]
    q_goal: dict[str, float]
    duration: float
    started_at: float
    done: bool = False

    def advance(self, world: "SimWorld", now: float):
        t = _cubic((now - self.started_at) / self.duration)
        world.joint_values.update({n: a + t * (self.q_goal[n] - a) for n, a in self.q_start.items()})
        world._moved_sides.update(self.sides)
        if now - self.started_at >= self.duration:
            self.done = True


@dataclass
class HandActuationTask:
    side: str
    state: str
    started_at: float
    duration: float = HAND_ACTUATION_DURATION
    done: bool = False

    def advance(self, world: "SimWorld", now: float):
        if self.done or now - self.started_at < self.duration:
            return
        if self.state == "close":
            world._try_grasp(self.side)
        else:
            world._release(self.side)
        self.done = True


@dataclass
class FootstepExecutionTask:
    plan: FootstepPlan
    started_at: float
    step_index: int = 0
    phase: str = "swing"        # "swing" | "transfer"
    phase_started: float = 0.0
    swing_from: Pose6D | None = None
    pelvis_from: Pose6D | None = None
    apex: float = 0.1
    done: bool = False

    def __post_init__(self):
        self.phase_started = self.started_at
        if not self.plan.steps:
            self.done = True

    def _pelvis_goal(self, world: "SimWorld") -> Pose6D:
        stance = Stance(world.feet_poses["left"], world.feet_poses["right"])
        mid = stance.midpoint()
        yaw = math.atan2(
            math.sin(world.feet_poses["left"].yaw) + math.sin(world.feet_poses["right"].yaw),
            math.cos(world.feet_poses["left"].yaw) + math.cos(world.feet_poses["right"].yaw))
        return Pose6D.from_xy_yaw(float(mid[0]), float(mid[1]), yaw, world.pelvis_height)

    def advance(self, world: "SimWorld", now: float):
        world._moved_sides.update(SIDES)
        while not self.done:
            step = self.plan.steps[self.step_index]
            if self.phase == "swing":
                if self.swing_from is None:
                    self.swing_from = world.feet_poses[step.side]
                t = (now - self.phase_started) / step.swing_duration
                s = _cubic(t)
                pose = interpolate_pose(self.swing_from, step.pose, s)
                lift = self.apex * math.sin(math.pi * min(max(t, 0.0), 1.0))
                world.feet_poses[step.side] = Pose6D(pose.position + np.array([0.0, 0.0, lift]),
                                                     pose.orientation)
                if t < 1.0:
                    return
                world.feet_poses[step.side] = step.pose
                self.phase = "transfer"
                self.phase_started += step.swing_duration
                self.pelvis_from = world.pelvis_pose
                continue
            t = (now - self.phase_started) / step.transfer_duration
            world.pelvis_pose = interpolate_pose(self.pelvis_from, self._pelvis_goal(world), _cubic(t))
            if t < 1.0:
                return
            world.pelvis_pose = self._pelvis_goal(world)
            self.phase_started += step.transfer_duration
            self.phase = "swing"
            self.swing_from = None
            self.step_index += 1
            if self.step_index >= len(self.plan.steps):
                self.done = True

    @property
    def duration(self) -> float:
        return self.plan.duration()


Task = HandTrajectoryTask | ArmJointTask | HandActuationTask | FootstepExecutionTask


# ---------------------------------------------------------------------------

class SimWorld:
    """Ground-truth world: robot state, articulated scene, synthetic sensing."""

    def __init__(self, scene: SceneConfig, model: RobotModel, tree: FrameTree, seed: int = 0):
        self.scene = scene
        self.model = model
        self.tree = tree
        self.seed = int(seed)
        self.thresholds = scene.thresholds

        self.sim_time = 0.0
        self.pelvis_height = scene.pelvis_height
        spawn = scene.spawn
        self.pelvis_pose = Pose6D.from_xy_yaw(float(spawn.position[0]), float(spawn.position[1]),
                                              spawn.yaw, scene.pelvis_height)
        self.joint_values: dict[str, float] = dict(
            model.named_configuration("home").values if "home" in model.named_configurations
            else model.configuration().values)
        width = 0.25
        self.feet_poses: dict[str, Pose6D] = {
            side: self._nominal_foot(side, width) for side in SIDES
        }
        self.hand_poses: dict[str, Pose6D] = {}
        self.grasped: tuple[str, str] | None = None
        self._grip_offset: Pose6D | None = None

        self.object_poses: dict[str, Pose6D] = {o.id: o.initial_pose for o in scene.objects}
        self.objects = {o.id: o for o in scene.objects}
        self.door = DoorState() if scene.door else None

        self.tasks: list[Task] = []
        self._moved_sides: set[str] = set()
        self._detection_counts: dict[int, int] = {}
        self._cloud_count = 0
        self._sweep_yaw = 0.0

        for name in ROBOT_FRAMES:
            self.tree.update_frame(name, "world", Pose6D.identity())
        self._refresh_derived(force_hands=True)

    # -- derived robot state ------------------------------------------------

    def _nominal_foot(self, side: str, width: float) -> Pose6D:
        off = 0.5 * width if side == "left" else -0.5 * width
        yaw = self.pelvis_pose.yaw
        p = self.pelvis_pose.position
        return Pose6D.from_xy_yaw(float(p[0]) - off * math.sin(yaw),
                                  float(p[1]) + off * math.cos(yaw), yaw,
                                  self.scene.step_limits.ground_height)

    @property
    def chest_pose(self) -> Pose6D:
        return compose(self.pelvis_pose, self.model.pelvis_to_chest)

    def configuration(self) -> JointConfiguration:
        return JointConfiguration(dict(self.joint_values))

    def hand_fk(self, side: str) -> Pose6D:
        return compose(self.chest_pose, forward_kinematics(self.model, self.configuration(), _CHAIN[side]))

    def sensor_pose(self) -> Pose6D:
        base = compose(self.pelvis_pose, self.scene.sensor_offset)
        if self._sweep_yaw:
            return compose(base, Pose6D.from_axis_angle((0, 0, 1), self._sweep_yaw))
        return base

    def teleport(self, pelvis_pose: Pose6D, configuration: JointConfiguration | None = None,
                 stance_width: float = 0.25):
        """Place the robot instantaneously (setup and tests, not execution)."""
        self.pelvis_pose = pelvis_pose
        if configuration is not None:
            self.joint_values = dict(configuration.values)
        self.feet_poses = {side: self._nominal_foot(side, stance_width) for side in SIDES}
        self._refresh_derived(force_hands=True)

    def _refresh_derived(self, force_hands: bool = False):
        # a hand pose pins to its trajectory endpoint until the body or that
        # arm moves again, keeping completed goals exact
        hand_task_sides = {t.side for t in self.tasks if isinstance(t, HandTrajectoryTask) and not t.done}
        for side in SIDES:
            if force_hands or (side in self._moved_sides and side not in hand_task_sides):
                self.hand_poses[side] = self.hand_fk(side)
        if self.grasped is not None:
            side, obj = self.grasped
            self.object_poses[obj] = compose(self.hand_poses[side], self._grip_offset)
        self.tree.set_transform("pelvis", self.pelvis_pose)
        self.tree.set_transform("chest", self.chest_pose)
        for side in SIDES:
            self.tree.set_transform(_HAND_FRAME[side], self.hand_poses[side])
            self.tree.set_transform(_FOOT_FRAME[side], self.feet_poses[side])

    # -- stepping -----------------------------------------------------------

    def step(self, dt: float = SIM_DT):
        if dt <= 0:
            raise ValueError("dt must be > 0")
        self.sim_time += dt
        self._moved_sides.clear()
        for task in self.tasks:
            if not task.done:
                task.advance(self, self.sim_time)
        self.tasks = [t for t in self.tasks if not t.done]
        self._refresh_derived()
        if self.door is not None:
            self.update_door_contact(dt)

    # -- dispatch -----------------------------------------------------------

    def dispatch_action(self, action: Action, tree: FrameTree | None = None) -> Task:
        tree = tree or self.tree
        now = self.sim_time
        if isinstance(action, HandPose):
            goal_world = compose(tree.resolve_world(action.parent_frame), action.goal)
            goal_chest = compose(invert(self.chest_pose), goal_world)
            sol = solve_ik(self.model, _CHAIN[action.side], goal_chest, self.configuration())
            if not sol.converged:
                raise IkUnreachable(action.side, sol)
            names = [j.name for j in self.model.chain_joints(_CHAIN[action.side])]
            task = HandTrajectoryTask(
                side=action.side,
                start=self.hand_poses[action.side],
                goal=goal_world,
                q_start={n: self.joint_values[n] for n in names},
                q_goal=dict(sol.configuration.values),
                duration=action.trajectory_duration,
                started_at=now,
            )
        elif isinstance(action, StancePose):
            parent = tree.resolve_world(action.parent_frame)
            goal = Stance(compose(parent, action.left_foot), compose(parent, action.right_foot))
            plan = plan_to_stance(Stance(self.feet_poses["left"], self.feet_poses["right"]),
                                  goal, self.scene.step_limits,
                                  action.swing_duration, action.transfer_duration)
            task = FootstepExecutionTask(plan, started_at=now)
        elif isinstance(action, HandConfiguration):
            task = HandActuationTask(action.side, action.state, started_at=now)
        elif isinstance(action, ArmJointAngles):
            targets = {n: self.model.clamp_value(n, v) for n, v in action.angles.items()
                       if n in self.model.joint_by_name}
            sides = tuple(s for s in SIDES
                          if any(n in targets for n in self.model.chain(_CHAIN[s]).joint_names))
            task = ArmJointTask(
                sides=sides,
                q_start={n: self.joint_values[n] for n in targets},
                q_goal=targets,
                duration=action.trajectory_duration,
                started_at=now,
            )
        else:
            raise TypeError(f"cannot dispatch {type(action).__name__}")
        self.tasks.append(task)
        return task

    # -- grasping -----------------------------------------------------------

    def _try_grasp(self, side: str):
        if self.grasped is not None:
            return
        hand = self.hand_poses[side].position
        for obj in self.objects.values():
            pose = self.object_poses[obj.id]
            for gp in obj.grasp_points:
                if float(np.linalg.norm(pose.transform_point(gp) - hand)) <= self.thresholds.grasp_radius:
                    self.grasped = (side, obj.id)
                    self._grip_offset = compose(invert(self.hand_poses[side]), pose)
                    if obj.frame in self.tree:
                        self.tree.set_parent(obj.frame, _HAND_FRAME[side])
                    return

    def _release(self, side: str):
        if self.grasped is None or self.grasped[0] != side:
            return
        _, obj_id = self.grasped
        frame = self.objects[obj_id].frame
        if frame in self.tree:
            self.tree.set_parent(frame, "world")
        self.grasped = None
        self._grip_offset = None

    # -- door ---------------------------------------------------------------

    def _door_frames(self):
        spec = self.scene.door
        base = self.object_poses[spec.object_id]
        hinge_world = base.transform_point(spec.hinge_in_frame)
        panel_pose = compose(base, compose(
            Pose6D(spec.hinge_in_frame),
            Pose6D.from_axis_angle((0, 0, 1), spec.swing_sign * self.door.hinge_angle)))
        return base, hinge_world, panel_pose

    def door_lever_grip(self) -> np.ndarray:
        """Ground-truth grip point of the lever handle, world coordinates."""
        spec = self.scene.door
        _, _, panel_pose = self._door_frames()
        arm = quat_from_rotvec(spec.lever_axis / np.linalg.norm(spec.lever_axis) * self.door.lever_angle)
        grip_local = spec.lever_mount + Pose6D(np.zeros(3), arm).rotate_vector(spec.lever_arm)
        return panel_pose.transform_point(grip_local)

    def _door_geometry(self):
        """Door frames, grip point, and panel box, cached against the
        articulation angles (the doorway object itself never moves)."""
        door = self.door
        spec = self.scene.door
        key = (door.hinge_angle, door.lever_angle)
        cached = getattr(self, "_door_geom", None)
        if cached is not None and cached[0] == key:
            return cached[1]
        base, hinge_world, panel_pose = self._door_frames()
        mount_world = panel_pose.transform_point(spec.lever_mount)
        axis_world = panel_pose.rotate_vector(spec.lever_axis)
        axis_world = axis_world / np.linalg.norm(axis_world)
        rest_dir = panel_pose.rotate_vector(spec.lever_arm)
        grip = self.door_lever_grip()
        panel_box = self.door_boxes()[0]
        geom = (base, hinge_world, mount_world, axis_world, rest_dir, grip, panel_box)
        self._door_geom = (key, geom)
        return geom

    def update_door_contact(self, dt: float = SIM_DT) -> DoorState:
        spec = self.scene.door
        door = self.door
        base, hinge_world, mount_world, axis_world, rest_dir, grip, panel_box = \
            self._door_geometry()

        # lever: a hand near the grip drives the lever angle directly
        for side in SIDES:
            hand = self.hand_poses[side].position
            if float(np.linalg.norm(hand - grip)) <= self.thresholds.lever_track_radius:
                v = hand - mount_world
                v_perp = v - float(v @ axis_world) * axis_world
                if np.linalg.norm(v_perp) > 1e-6:
                    angle = math.atan2(float(np.cross(rest_dir, v_perp) @ axis_world),
                                       float(rest_dir @ v_perp))
                    door.lever_angle = min(max(angle, spec.lever_range[0]), spec.lever_range[1])
                break

        # latch: spring-loaded, re-engages only while the door sits closed
        if door.lever_angle >= spec.lever_release_threshold:
            door.latch_engaged = False
        elif door.hinge_angle <= 1e-9:
            door.latch_engaged = True

        # panel: track a pushing hand at a capped rate while the latch is
        # clear; the panel leads the hand by half its thickness plus a skin
        # so the hand rides the surface rather than the center plane
        if not door.latch_engaged:
            for side in SIDES:
                hand = self.hand_poses[side].position
                rel = hand - hinge_world
                radius = math.hypot(float(rel[0]), float(rel[1]))
                if radius < 0.05 or radius > spec.panel_size[0] + 0.05:
                    continue
                if not 0.0 <= float(rel[2]) <= spec.panel_size[1] + 0.1:
                    continue
                if _point_box_distance(hand, panel_box) > self.thresholds.panel_contact_distance:
                    continue
                base_inv = invert(base)
                local = base_inv.transform_point(hand) - spec.hinge_in_frame
                theta_hand = math.atan2(float(local[0]), -spec.swing_sign * float(local[1]))
                theta_target = theta_hand + (0.5 * spec.panel_size[2] + 0.03) / max(radius, 0.1)
                if theta_target > door.hinge_angle:
                    door.hinge_angle = min(theta_target,
                                           door.hinge_angle + self.thresholds.max_hinge_rate * dt,
                                           spec.swing_range[1])
        return door

    def door_boxes(self) -> list[Box]:
        """Panel and lever boxes at the current articulation, world frame."""
        spec = self.scene.door
        _, _, panel_pose = self._door_frames()
        w, h, t = spec.panel_size
        panel = Box(compose(panel_pose, Pose6D(np.array([0.0, -spec.swing_sign * w / 2, h / 2]))),
                    np.array([t / 2, w / 2, h / 2]), spec.panel_color)
        arm_rot = quat_from_rotvec(spec.lever_axis / np.linalg.norm(spec.lever_axis) * self.door.lever_angle)
        arm_center = spec.lever_mount + Pose6D(np.zeros(3), arm_rot).rotate_vector(0.5 * spec.lever_arm)
        arm_len = float(np.linalg.norm(spec.lever_arm))
        lever = Box(compose(panel_pose, Pose6D(arm_center, arm_rot)),
                    np.array([0.015, arm_len / 2 + 0.015, 0.015]), (0.8, 0.8, 0.82))
        return [panel, lever]

    # -- geometry queries ----------------------------------------------------

    def scene_boxes(self, include_grasped: bool = True) -> list[tuple[str, Box]]:
        out: list[tuple[str, Box]] = []
        for obj in self.objects.values():
            if not include_grasped and self.grasped is not None and obj.id == self.grasped[1]:
                continue
            pose = self.object_poses[obj.id]
            for b in obj.boxes:
                out.append((obj.id, Box(compose(pose, b.pose), b.half_extents, b.color)))
        if self.door is not None:
            panel, lever = self.door_boxes()
            out.append((self.scene.door.object_id + "/panel", panel))
            out.append((self.scene.door.object_id + "/lever", lever))
        return out

    def robot_boxes(self) -> list[tuple[str, Box]]:
        out = []
        coll = self.model.collision
        if "pelvis_box" in coll:
            b = coll["pelvis_box"]
            out.append(("pelvis", Box(compose(self.pelvis_pose, Pose6D(np.asarray(b["center"], dtype=float))),
                                      np.asarray(b["half_extents"], dtype=float))))
        if "chest_box" in coll:
            b = coll["chest_box"]
            out.append(("chest", Box(compose(self.chest_pose, Pose6D(np.asarray(b["center"], dtype=float))),
                                     np.asarray(b["half_extents"], dtype=float))))
        thickness = float(coll.get("arm_thickness", 0.09))
        q = self.configuration()
        for side in SIDES:
            origins, _, _ = chain_joint_frames(self.model, q, _CHAIN[side])
            chest = self.chest_pose
            shoulder = chest.transform_point(origins[0])
            elbow = chest.transform_point(origins[3])
            wrist = chest.transform_point(origins[4])
            out.append((f"{side}_upper_arm", _segment_box(shoulder, elbow, thickness)))
            out.append((f"{side}_forearm", _segment_box(elbow, wrist, thickness)))
        return out

    def check_collisions(self) -> list[tuple[str, str]]:
        """Overlapping (robot box, scene box) name pairs. Hands and the door
        lever are manipulation surfaces, deliberately not collision volume."""
        pairs = []
        scene = [(n, b, float(np.linalg.norm(b.half_extents)))
                 for n, b in self.scene_boxes(include_grasped=False)
                 if not n.endswith("/lever")]
        for rname, rbox in self.robot_boxes():
            r_rad = float(np.linalg.norm(rbox.half_extents))
            r_pos = rbox.pose.position
            for oname, obox, o_rad in scene:
                gap = r_pos - obox.pose.position
                if float(gap @ gap) > (r_rad + o_rad) ** 2:
                    continue  # bounding spheres reject most pairs cheaply
                if _boxes_overlap(rbox, obox):
                    pairs.append((rname, oname))
        return pairs

    # -- synthetic perception -------------------------------------------------

    def marker_world(self, obj: SceneObject) -> Pose6D:
        pose = compose(self.object_poses[obj.id], obj.marker.pose_in_object)
        if self.scene.calibration_bias is not None:
            pose = compose(pose, self.scene.calibration_bias)
        return pose

    def _visible(self, point: np.ndarray, sensor: Pose6D) -> bool:
        v = point - sensor.position
        dist = float(np.linalg.norm(v))
        if dist > self.thresholds.sensor_range:
            return False
        forward = sensor.rotate_vector(np.array([1.0, 0.0, 0.0]))
        return float(v @ forward) > 0.0  # 90 degree half-angle cone

    def simulate_perception(self) -> tuple[list[DetectionMessage], np.ndarray]:
        """Noisy marker detections plus a colored point-cloud chunk.

        Detection noise is drawn from a per-marker counted stream so the
        k-th sighting of a marker is reproducible regardless of what else
        was visible; the chunk is a float32 array of [x y z r g b] rows.
        """
        sensor = self.sensor_pose()
        detections = []
        for obj in self.objects.values():
            if obj.marker is None:
                continue
            marker_pose = self.marker_world(obj)
            if not self._visible(marker_pose.position, sensor):
                continue
            count = self._detection_counts.get(obj.marker.id, 0)
            self._detection_counts[obj.marker.id] = count + 1
            rng = np.random.default_rng([self.seed, obj.marker.id, count])
            noise = Pose6D(rng.normal(0.0, self.thresholds.detection_sigma_pos, 3),
                           quat_from_rotvec(rng.normal(0.0, self.thresholds.detection_sigma_rot, 3)))
            observed = compose(invert(sensor), compose(marker_pose, noise))
            detections.append(DetectionMessage(obj.marker.id, observed, self.sim_time))

        cloud = self._sample_cloud(sensor)
        return detections, cloud

    def _sample_cloud(self, sensor: Pose6D) -> np.ndarray:
        rng = np.random.default_rng([self.seed, 0xC10D, self._cloud_count])
        self._cloud_count += 1
        faces = []   # (origin, u_vec, v_vec, area, color)
        for _, box in self.scene_boxes():
            c = box.pose
            h = box.half_extents
            for axis in range(3):
                for sign in (1.0, -1.0):
                    normal = np.zeros(3)
                    normal[axis] = sign
                    center = c.transform_point(normal * h)
                    if not self._visible(center, sensor):
                        continue
                    world_normal = c.rotate_vector(normal)
                    if float((sensor.position - center) @ world_normal) <= 0.0:
                        continue
                    u_axis, v_axis = ((axis + 1) % 3, (axis + 2) % 3)
                    u = np.zeros(3)
                    v = np.zeros(3)
                    u[u_axis] = h[u_axis]
                    v[v_axis] = h[v_axis]
                    faces.append((center, c.rotate_vector(u), c.rotate_vector(v),
                                  4.0 * h[u_axis] * h[v_axis], box.color))
        n = self.thresholds.cloud_points
        if not faces:
            return np.zeros((0, 6), dtype=np.float32)
        areas = np.array([f[3] for f in faces])
        counts = rng.multinomial(n, areas / areas.sum())
        rows = np.empty((n, 6), dtype=np.float32)
        k = 0
        for (center, u, v, _, color), cnt in zip(faces, counts):
            if cnt == 0:
                continue
            uv = rng.uniform(-1.0, 1.0, (cnt, 2))
            pts = center + uv[:, :1] * u + uv[:, 1:] * v
            pts = pts + rng.normal(0.0, self.thresholds.cloud_sigma, (cnt, 3))
            rows[k:k + cnt, :3] = pts
            rows[k:k + cnt, 3:] = color
            k += cnt
        return rows[:k]

    # -- snapshots ------------------------------------------------------------

    def snapshot(self) -> dict:
        snap = {
            "sim_time": self.sim_time,
            "pelvis": self.pelvis_pose.to_json(),
            "joints": {k: self.joint_values[k] for k in sorted(self.joint_values)},
            "feet": {s: self.feet_poses[s].to_json() for s in SIDES},
            "hands": {s: self.hand_poses[s].to_json() for s in SIDES},
            "grasped": list(self.grasped) if self.grasped else None,
            "objects": {k: self.object_poses[k].to_json() for k in sorted(self.object_poses)},
        }
        if self.door is not None:
            snap["door"] = self.door.to_json()
        return snap


def _segment_box(a: np.ndarray, b: np.ndarray, thickness: float) -> Box:
    d = b - a
    length = float(np.linalg.norm(d))
    center = 0.5 * (a + b)
    if length < 1e-9:
        return Box(Pose6D(center), np.array([thickness / 2] * 3))
    z = d / length
    ref = np.array([1.0, 0.0, 0.0]) if abs(z[0]) < 0.9 else np.array([0.0, 1.0, 0.0])
    x = np.cross(ref, z)
    x /= np.linalg.norm(x)
    y = np.cross(z, x)
    rot = np.column_stack([x, y, z])
    return Box(Pose6D(center, _matrix_to_quat(rot)),
               np.array([thickness / 2, thickness / 2, length / 2]))


def _matrix_to_quat(m: np.ndarray) -> np.ndarray:
    t = float(np.trace(m))
    if t > 0:
        s = math.sqrt(t + 1.0) * 2
        return np.array([0.25 * s, (m[2, 1] - m[1, 2]) / s, (m[0, 2] - m[2, 0]) / s,
                         (m[1, 0] - m[0, 1]) / s])
    i = int(np.argmax(np.diag(m)))
    j, k = (i + 1) % 3, (i + 2) % 3
    s = math.sqrt(max(1.0 + m[i, i] - m[j, j] - m[k, k], 0.0)) * 2
    q = np.empty(4)
    q[0] = (m[k, j] - m[j, k]) / s
    q[1 + i] = 0.25 * s
    q[1 + j] = (m[j, i] + m[i, j]) / s
    q[1 + k] = (m[k, i] + m[i, k]) / s
    return q


def _point_box_distance(p: np.ndarray, box: Box) -> float:
    local = invert(box.pose).transform_point(p)
    d = np.maximum(np.abs(local) - box.half_extents, 0.0)
    return float(np.linalg.norm(d))


def _boxes_overlap(a: Box, b: Box) -> bool:
    """OBB separating-axis test over the 15 candidate axes."""
    ra = a.half_extents
    rb = b.half_extents
    A = a.pose.rotation_matrix()
    B = b.pose.rotation_matrix()
    R = A.T @ B
    t = A.T @ (b.pose.position - a.pose.position)
    absR = np.abs(R) + 1e-12
    for i in range(3):
        if abs(t[i]) > ra[i] + float(absR[i] @ rb):
            return False
    for j in range(3):
        if abs(float(t @ R[:, j])) > float(ra @ absR[:, j]) + rb[j]:
            return False
    for i in range(3):
        for j in range(3):
            ii, jj = (i + 1) % 3, (i + 2) % 3
            kk, ll = (j + 1) % 3, (j + 2) % 3
            lhs = abs(t[jj] * R[ii, j] - t[ii] * R[jj, j])
            rhs = (ra[ii] * absR[jj, j] + ra[jj] * absR[ii, j]
                   + rb[kk] * absR[i, ll] + rb[ll] * absR[i, kk])
            if lhs > rhs:
                return False
    return True
