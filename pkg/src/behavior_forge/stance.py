"""Footstep planning from the current stance to a goal stance on flat ground.

The plan is a turn-walk-turn decomposition tracked by alternating footsteps:
rotate in place toward the goal midpoint, walk the straight segment, rotate
to the goal heading, then square up. The final two steps are the goal foot
poses verbatim, so the achieved stance is exact. Short moves skip the turns
and shuffle directly; a pure rotation is a single turn segment.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from behavior_forge.geometry import Pose6D

DEFAULT_SWING_DURATION = 1.2
DEFAULT_TRANSFER_DURATION = 0.8

# below this midpoint displacement it is not worth turning to face the goal
_SHORT_MOVE = 0.3
_EPS = 1e-12


class UnreachableGoal(ValueError):
    pass


@dataclass(frozen=True)
class StepLimits:
    max_step: float = 0.45        # consecutive same-side displacement, m
    min_width: float = 0.15       # lateral stance width band, m
    max_width: float = 0.45
    max_yaw_step: float = 0.6     # consecutive same-side yaw change, rad
    ground_height: float = 0.0

    @staticmethod
    def from_json(obj: dict) -> "StepLimits":
        return StepLimits(**{k: float(v) for k, v in obj.items()})


@dataclass(frozen=True)
class Footstep:
    side: str                     # "left" | "right"
    pose: Pose6D                  # sole frame, world
    swing_duration: float = DEFAULT_SWING_DURATION
    transfer_duration: float = DEFAULT_TRANSFER_DURATION
    phase: str = "walk"           # "turn" | "walk" | "shuffle" | "goal"


@dataclass(frozen=True)
class FootstepPlan:
    steps: tuple[Footstep, ...] = ()

    def __len__(self) -> int:
        return len(self.steps)

    def duration(self) -> float:
        return sum(s.swing_duration + s.transfer_duration for s in self.steps)


@dataclass(frozen=True)
class Stance:
    left: Pose6D
    right: Pose6D

    def midpoint(self):
        return 0.5 * (self.left.position + self.right.position)


def _wrap(a: float) -> float:
    return (a + math.pi) % (2.0 * math.pi) - math.pi


def _mean_heading(a: float, b: float) -> float:
    return math.atan2(math.sin(a) + math.sin(b), math.cos(a) + math.cos(b))


@dataclass
class _Flat:
    x: float
    y: float
    yaw: float


def _flat(p: Pose6D) -> _Flat:
    return _Flat(float(p.position[0]), float(p.position[1]), p.yaw)


def _midstance(l: _Flat, r: _Flat) -> _Flat:
    return _Flat(0.5 * (l.x + r.x), 0.5 * (l.y + r.y), _mean_heading(l.yaw, r.yaw))


def lateral_width(stance: Stance) -> float:
    """Signed lateral separation in the midstance frame; positive when the
    left foot is on the left."""
    l, r = _flat(stance.left), _flat(stance.right)
    th = _mean_heading(l.yaw, r.yaw)
    return -(l.x - r.x) * math.sin(th) + (l.y - r.y) * math.cos(th)


def _nominal_foot(mid: _Flat, side: str, width: float, z: float) -> Pose6D:
    off = 0.5 * width if side == "left" else -0.5 * width
    return Pose6D.from_xy_yaw(mid.x - off * math.sin(mid.yaw),
                              mid.y + off * math.cos(mid.yaw), mid.yaw, z)


def plan_to_stance(current: Stance, goal: Stance, limits: StepLimits = StepLimits(),
                   swing_duration: float = DEFAULT_SWING_DURATION,
                   transfer_duration: float = DEFAULT_TRANSFER_DURATION) -> FootstepPlan:
    """Footstep plan from ``current`` to ``goal``; empty when already there."""
    width = lateral_width(goal)
    if not limits.min_width <= width <= limits.max_width:
        raise UnreachableGoal(f"goal stance width {width:.3f} m outside "
                              f"[{limits.min_width}, {limits.max_width}]")
    gl, gr = _flat(goal.left), _flat(goal.right)
    g_mid = _midstance(gl, gr)
    for f in (gl, gr):
        if abs(_wrap(f.yaw - g_mid.yaw)) > 0.5 * limits.max_yaw_step + 1e-9:
            raise UnreachableGoal("goal foot yaw stagger exceeds half the per-step yaw limit")

    if goal.left.almost_equal(current.left, tol=_EPS) and goal.right.almost_equal(current.right, tol=_EPS):
        return FootstepPlan()

    cl, cr = _flat(current.left), _flat(current.right)
    c_mid = _midstance(cl, cr)
    dx, dy = g_mid.x - c_mid.x, g_mid.y - c_mid.y
    dist = math.hypot(dx, dy)

    pos_inc = 0.4 * limits.max_step
    yaw_inc = 0.4 * limits.max_yaw_step
    z = limits.ground_height

    # virtual midstance path: (pose, phase) per footstep to emit
    path: list[tuple[_Flat, str]] = []
    if dist <= _EPS:
        n = max(1, math.ceil(abs(_wrap(g_mid.yaw - c_mid.yaw)) / yaw_inc))
        step = _wrap(g_mid.yaw - c_mid.yaw) / n
        for k in range(1, n + 1):
            path.append((_Flat(c_mid.x, c_mid.y, c_mid.yaw + step * k), "turn"))
    elif dist <= _SHORT_MOVE:
        dyaw = _wrap(g_mid.yaw - c_mid.yaw)
        n = max(1, math.ceil(dist / pos_inc), math.ceil(abs(dyaw) / yaw_inc))
        for k in range(1, n + 1):
            t = k / n
            path.append((_Flat(c_mid.x + dx * t, c_mid.y + dy * t, c_mid.yaw + dyaw * t), "shuffle"))
    else:
        walk_yaw = math.atan2(dy, dx)
        a1 = _wrap(walk_yaw - c_mid.yaw)
        n1 = math.ceil(abs(a1) / yaw_inc)
        for k in range(1, n1 + 1):
            path.append((_Flat(c_mid.x, c_mid.y, c_mid.yaw + a1 * k / n1), "turn"))
        n2 = math.ceil(dist / pos_inc)
        for k in range(1, n2 + 1):
            t = k / n2
            path.append((_Flat(c_mid.x + dx * t, c_mid.y + dy * t, walk_yaw), "walk"))
        a2 = _wrap(g_mid.yaw - walk_yaw)
        n3 = math.ceil(abs(a2) / yaw_inc)
        for k in range(1, n3 + 1):
            path.append((_Flat(g_mid.x, g_mid.y, walk_yaw + a2 * k / n3), "turn"))

    steps: list[Footstep] = []

    def emit(side: str, pose: Pose6D, phase: str):
        steps.append(Footstep(side, pose, swing_duration, transfer_duration, phase))

    if path:
        # start with the foot farther from its first tracked placement
        first = path[0][0]
        dl = math.hypot(_nominal_foot(first, "left", width, z).position[0] - cl.x,
                        _nominal_foot(first, "left", width, z).position[1] - cl.y)
        dr = math.hypot(_nominal_foot(first, "right", width, z).position[0] - cr.x,
                        _nominal_foot(first, "right", width, z).position[1] - cr.y)
        side = "left" if dl >= dr else "right"
        for mid, phase in path:
            emit(side, _nominal_foot(mid, side, width, z), phase)
            side = "left" if side == "right" else "right"
    else:
        side = "left"

    # square up: the goal poses themselves, alternation-preserving order
    if side == "left":
        emit("left", goal.left, "goal")
        emit("right", goal.right, "goal")
    else:
        emit("right", goal.right, "goal")
        emit("left", goal.left, "goal")
    return FootstepPlan(tuple(steps))


def validate_plan(plan: FootstepPlan, limits: StepLimits = StepLimits()) -> list[str]:
    """Check every plan invariant; an empty list means the plan is valid."""
    out: list[str] = []
    steps = plan.steps
    last_by_side: dict[str, Footstep] = {}
    for i, s in enumerate(steps):
        if s.side not in ("left", "right"):
            out.append(f"step {i}: bad side {s.side!r}")
            continue
        if s.swing_duration <= 0 or s.transfer_duration <= 0:
            out.append(f"step {i}: durations must be > 0")
        if abs(float(s.pose.position[2]) - limits.ground_height) > 1e-9:
            out.append(f"step {i}: foot not on the ground plane")
        prev = last_by_side.get(s.side)
        if prev is not None:
            d = math.hypot(float(s.pose.position[0] - prev.pose.position[0]),
                           float(s.pose.position[1] - prev.pose.position[1]))
            if d > limits.max_step + 1e-9:
                out.append(f"step {i}: same-side displacement {d:.3f} m exceeds {limits.max_step}")
            dyaw = abs(_wrap(s.pose.yaw - prev.pose.yaw))
            if dyaw > limits.max_yaw_step + 1e-9:
                out.append(f"step {i}: yaw change {dyaw:.3f} rad exceeds {limits.max_yaw_step}")
        last_by_side[s.side] = s
    # alternation with at most one same-side repeat, only at the plan end
    repeats = [i for i in range(1, len(steps)) if steps[i].side == steps[i - 1].side]
    if repeats and (len(repeats) > 1 or repeats[0] != len(steps) - 1):
        out.append(f"feet do not alternate (repeats at {repeats})")
    # stance width across each adjacent opposite-side pair
    for i in range(1, len(steps)):
        a, b = steps[i - 1], steps[i]
        if a.side == b.side:
            continue
        l, r = (a, b) if a.side == "left" else (b, a)
        w = lateral_width(Stance(l.pose, r.pose))
        if not limits.min_width - 1e-9 <= w <= limits.max_width + 1e-9:
            out.append(f"step {i}: stance width {w:.3f} m outside "
                       f"[{limits.min_width}, {limits.max_width}]")
    return out
