"""One authoring session: the authoritative (tree, world, sequence, executor)
plus frame registration from simulated detections and snapshot recording.

The session is the single writer for all engine state. Protocol handlers and
the tick driver serialize through it (an asyncio server runs them on one
loop; the CLI drives it single-threaded).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path

from behavior_forge.actions import ActionSequence, load_behavior
from behavior_forge.assets import asset_path
from behavior_forge.executor import Executor
from behavior_forge.geometry import FrameTree, compose, invert
from behavior_forge.kinematics import RobotModel, load_model
from behavior_forge.world import SIM_DT, SceneConfig, SimWorld, load_scene


@dataclass
class SessionConfig:
    scene: str | Path | SceneConfig
    model: str | Path | RobotModel | None = None
    seed: int = 0
    behavior: str | Path | ActionSequence | None = None


class Session:
    def __init__(self, config: SessionConfig):
        scene = config.scene if isinstance(config.scene, SceneConfig) else load_scene(config.scene)
        model = config.model
        if model is None:
            model = load_model(asset_path("nadia_sim.json"))
        elif not isinstance(model, RobotModel):
            model = load_model(model)
        self.scene = scene
        self.model = model
        self.seed = int(config.seed)
        self.tree = FrameTree()
        self.world = SimWorld(scene, model, self.tree, seed=self.seed)
        self.executor = Executor(self.world)
        self.snapshots: list[dict] = []
        self.collision_log: list[tuple[float, str, str]] = []
        self.command_log: list[dict] = []
        self._snapshot_every = 0
        self._collision_every = 0
        self._tick_count = 0
        if config.behavior is not None:
            behavior = (config.behavior if isinstance(config.behavior, ActionSequence)
                        else load_behavior(config.behavior))
            self.executor.replace_sequence(behavior)

    def load_scene(self, source):
        """Swap in a new scene: fresh tree, world, and executor state."""
        from behavior_forge.cli import _resolve_input

        scene = source if isinstance(source, SceneConfig) else load_scene(_resolve_input(source))
        self.scene = scene
        self.tree = FrameTree()
        self.world = SimWorld(scene, self.model, self.tree, seed=self.seed)
        self.executor = Executor(self.world)
        self.snapshots.clear()
        self.collision_log.clear()
        self._tick_count = 0
        self.register_task_frames()
        return scene

    def load_behavior(self, source) -> ActionSequence:
        from behavior_forge.cli import _resolve_input

        behavior = (source if isinstance(source, ActionSequence)
                    else load_behavior(_resolve_input(source)))
        self.executor.replace_sequence(behavior)
        return behavior

    # -- frame registration ---------------------------------------------------

    def register_task_frames(self, sweep_steps: int = 8) -> list[str]:
        """Sweep the sensor through a full turn, registering one frame per
        detected marker (plus preregistered child frames). Uses the first
        sighting of each marker, so results are reproducible per seed."""
        expected = {o.marker.id: o for o in self.scene.objects if o.marker is not None}
        registered: dict[str, object] = {}
        for k in range(sweep_steps):
            self.world._sweep_yaw = 2.0 * math.pi * k / sweep_steps
            detections, _ = self.world.simulate_perception()
            sensor = self.world.sensor_pose()
            for det in detections:
                obj = expected.get(det.marker_id)
                if obj is None or obj.frame in registered:
                    continue
                estimate = compose(sensor, compose(det.pose, invert(obj.marker.pose_in_object)))
                registered[obj.frame] = estimate
            if len(registered) == len(expected):
                break
        self.world._sweep_yaw = 0.0
        for frame, pose in registered.items():
            self.tree.update_frame(frame, "world", pose)
        for obj in self.scene.objects:
            if obj.frame in registered:
                for child, tf in obj.child_frames.items():
                    self.tree.update_frame(child, obj.frame, tf)
        return sorted(registered)

    # -- stepping ---------------------------------------------------------------

    def enable_recording(self, every_ticks: int = 10):
        self._snapshot_every = max(1, int(every_ticks))
        self._take_snapshot()

    def _take_snapshot(self):
        snap = self.world.snapshot()
        snap["executor"] = self.executor.state_snapshot()
        self.snapshots.append(snap)

    def enable_collision_monitor(self, every_ticks: int = 10):
        self._collision_every = max(1, int(every_ticks))

    def tick(self, dt: float = SIM_DT):
        self.world.step(dt)
        self.executor.tick()
        self._tick_count += 1
        if self._snapshot_every and self._tick_count % self._snapshot_every == 0:
            self._take_snapshot()
        if self._collision_every and self._tick_count % self._collision_every == 0:
            for a, b in self.world.check_collisions():
                self.collision_log.append((self.world.sim_time, a, b))

    def run_until_done(self, max_sim_time: float = 600.0) -> bool:
        """Tick until the sequence finishes, fails, or the time budget runs
        out. Returns True when every action succeeded."""
        ex = self.executor
        while self.world.sim_time < max_sim_time:
            self.tick()
            if ex.finished():
                break
            if ex.mode == "manual" and ex.executing_index is None:
                if any(s == "failed" for s in ex.statuses):
                    break
                if ex.selected < len(ex.sequence):
                    break  # nothing will dispatch without the operator
        return ex.finished() and all(s == "succeeded" for s in ex.statuses)

    # -- scenario success -------------------------------------------------------

    def success_predicate(self) -> tuple[bool, str]:
        """Scene-specific outcome check evaluated against ground truth."""
        spec = self.scene.success
        kind = spec.get("kind")
        if kind == "door_traversal":
            door = self.world.door
            frame_pose = self.world.object_poses[self.scene.door.object_id]
            pelvis_local = invert(frame_pose).transform_point(self.world.pelvis_pose.position)
            if door.hinge_angle < float(spec.get("min_hinge_angle", 1.48)):
                return False, f"hinge {door.hinge_angle:.3f} rad below target"
            if float(pelvis_local[0]) < float(spec.get("min_pelvis_x_in_frame", 0.3)):
                return False, f"pelvis did not cross the door plane (x={pelvis_local[0]:.2f})"
            return True, "door open and traversed"
        if kind == "pick_place":
            obj = spec["object"]
            frame_obj = next(o for o in self.scene.objects if o.frame == spec["frame"])
            frame_pose = self.world.object_poses[frame_obj.id]
            target = frame_pose.transform_point(spec["place_position_in_frame"])
            actual = self.world.object_poses[obj].position
            dist = float(sum((a - b) ** 2 for a, b in zip(actual, target)) ** 0.5)
            if dist > float(spec.get("tolerance", 0.02)):
                return False, f"object {dist * 100:.1f} cm from the authored place pose"
            if spec.get("require_released", True) and self.world.grasped is not None:
                return False, "object still grasped"
            return True, "object placed"
        return True, "no scenario predicate"
