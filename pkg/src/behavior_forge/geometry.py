"""Rigid-transform algebra and the named reference-frame tree.

Every pose in the system is a :class:`Pose6D` (position + unit quaternion)
expressed relative to some named frame in a :class:`FrameTree` rooted at
"world". Quaternions are stored (w, x, y, z), renormalized after every
operation, and sign-canonicalized (w >= 0) so serialization is unique.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

WORLD_FRAME = "world"

_QUAT_NORM_TOL = 1e-9


class UnknownFrame(KeyError):
    """Raised when a frame name is not present in the tree."""

    def __init__(self, name: str):
        super().__init__(name)
        self.name = name

    def __str__(self) -> str:
        return f"unknown frame {self.name!r}"


class CycleError(ValueError):
    """Raised when a reparent would create a parent-link cycle."""


def _normalize_quat(q: np.ndarray) -> np.ndarray:
    n2 = float(q @ q)
    if n2 == 0.0:
        raise ValueError("zero-norm quaternion")
    # skip the divide when already unit-norm so decode/encode is a fixed point
    if abs(n2 - 1.0) > 1e-12:
        q = q / math.sqrt(n2)
    if q[0] < 0.0:
        q = -q
    return q


def _quat_mul(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    aw, ax, ay, az = a
    bw, bx, by, bz = b
    return np.array(
        [
            aw * bw - ax * bx - ay * by - az * bz,
            aw * bx + ax * bw + ay * bz - az * by,
            aw * by - ax * bz + ay * bw + az * bx,
            aw * bz + ax * by - ay * bx + az * bw,
        ]
    )


def _quat_rotate(q: np.ndarray, v: np.ndarray) -> np.ndarray:
    # v' = v + 2w(u x v) + 2(u x (u x v)) with u the vector part; expanded
    # scalar cross products, np.cross is far too slow for single 3-vectors
    w, x, y, z = (float(c) for c in q)
    vx, vy, vz = (float(c) for c in v)
    tx = 2.0 * (y * vz - z * vy)
    ty = 2.0 * (z * vx - x * vz)
    tz = 2.0 * (x * vy - y * vx)
    return np.array([
        vx + w * tx + (y * tz - z * ty),
        vy + w * ty + (z * tx - x * tz),
        vz + w * tz + (x * ty - y * tx),
    ])


def quat_from_axis_angle(axis, angle: float) -> np.ndarray:
    axis = np.asarray(axis, dtype=float)
    n = math.sqrt(float(axis @ axis))
    if n == 0.0:
        raise ValueError("zero rotation axis")
    half = 0.5 * angle
    q = np.empty(4)
    q[0] = math.cos(half)
    q[1:] = (math.sin(half) / n) * axis
    return _normalize_quat(q)


def quat_to_rotvec(q: np.ndarray) -> np.ndarray:
    """Axis-angle vector (angle * unit axis) of a unit quaternion."""
    q = _normalize_quat(np.asarray(q, dtype=float))
    s = math.sqrt(float(q[1:] @ q[1:]))
    if s < 1e-12:
        return 2.0 * q[1:]  # small-angle: sin(a/2) ~ a/2
    angle = 2.0 * math.atan2(s, q[0])
    return (angle / s) * q[1:]


def quat_from_rotvec(v) -> np.ndarray:
    v = np.asarray(v, dtype=float)
    angle = math.sqrt(float(v @ v))
    if angle < 1e-12:
        return _normalize_quat(np.array([1.0, 0.5 * v[0], 0.5 * v[1], 0.5 * v[2]]))
    return quat_from_axis_angle(v, angle)


def slerp(qa: np.ndarray, qb: np.ndarray, t: float) -> np.ndarray:
    """Shortest-arc spherical interpolation between unit quaternions."""
    dot = float(qa @ qb)
    if dot < 0.0:
        qb = -qb
        dot = -dot
    if dot > 1.0 - 1e-12:
        return _normalize_quat(qa + t * (qb - qa))
    theta = math.acos(min(dot, 1.0))
    s = math.sin(theta)
    return _normalize_quat((math.sin((1 - t) * theta) / s) * qa + (math.sin(t * theta) / s) * qb)


def interpolate_pose(a: "Pose6D", b: "Pose6D", t: float) -> "Pose6D":
    """Linear position / slerp orientation blend; exact endpoints at t=0, 1."""
    if t <= 0.0:
        return a
    if t >= 1.0:
        return b
    return Pose6D(a.position + t * (b.position - a.position),
                  slerp(a.orientation, b.orientation, t))


def quat_to_matrix(q: np.ndarray) -> np.ndarray:
    w, x, y, z = q
    return np.array(
        [
            [1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y)],
            [2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x)],
            [2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y)],
        ]
    )


@dataclass(frozen=True, eq=False)
class Pose6D:
    """Rigid transform: rotate by ``orientation`` then translate by ``position``.

    position is meters (3,), orientation a unit quaternion (w, x, y, z) with
    w >= 0. Instances are immutable; all operations return new poses.
    """

    position: np.ndarray = field(default_factory=lambda: np.zeros(3))
    orientation: np.ndarray = field(default_factory=lambda: np.array([1.0, 0, 0, 0]))

    def __eq__(self, other) -> bool:
        if not isinstance(other, Pose6D):
            return NotImplemented
        return (self.position == other.position).all() and (self.orientation == other.orientation).all()

    def __hash__(self):
        return hash((tuple(self.position), tuple(self.orientation)))

    def __post_init__(self):
        p = np.asarray(self.position, dtype=float).reshape(3).copy()
        q = _normalize_quat(np.asarray(self.orientation, dtype=float).reshape(4))
        p.setflags(write=False)
        q.setflags(write=False)
        object.__setattr__(self, "position", p)
        object.__setattr__(self, "orientation", q)

    @staticmethod
    def identity() -> "Pose6D":
        return Pose6D()

    @staticmethod
    def from_xyz(x: float, y: float, z: float) -> "Pose6D":
        return Pose6D(np.array([x, y, z], dtype=float))

    @staticmethod
    def from_axis_angle(axis, angle: float, position=(0.0, 0.0, 0.0)) -> "Pose6D":
        return Pose6D(np.asarray(position, dtype=float), quat_from_axis_angle(axis, angle))

    @staticmethod
    def from_xy_yaw(x: float, y: float, yaw: float, z: float = 0.0) -> "Pose6D":
        return Pose6D.from_axis_angle((0, 0, 1), yaw, (x, y, z))

    @property
    def yaw(self) -> float:
        w, x, y, z = self.orientation
        return math.atan2(2.0 * (w * z + x * y), 1.0 - 2.0 * (y * y + z * z))

    def rotation_matrix(self) -> np.ndarray:
        return quat_to_matrix(self.orientation)

    def transform_point(self, p) -> np.ndarray:
        return self.position + _quat_rotate(self.orientation, np.asarray(p, dtype=float))

    def rotate_vector(self, v) -> np.ndarray:
        return _quat_rotate(self.orientation, np.asarray(v, dtype=float))

    def to_json(self) -> dict:
        return {
            "position": [float(v) for v in self.position],
            "orientation": [float(v) for v in self.orientation],
        }

    @staticmethod
    def from_json(obj: dict) -> "Pose6D":
        return Pose6D(np.asarray(obj["position"], dtype=float),
                      np.asarray(obj.get("orientation", [1.0, 0.0, 0.0, 0.0]), dtype=float))

    def almost_equal(self, other: "Pose6D", tol: float = 1e-9) -> bool:
        if float(np.max(np.abs(self.position - other.position))) > tol:
            return False
        # q and -q are the same rotation; canonical sign makes this a plain diff
        return float(np.max(np.abs(self.orientation - other.orientation))) <= tol


def compose(a: Pose6D, b: Pose6D) -> Pose6D:
    """a after b: the transform that applies b, then a."""
    return Pose6D(
        a.position + _quat_rotate(a.orientation, b.position),
        _quat_mul(a.orientation, b.orientation),
    )


def invert(p: Pose6D) -> Pose6D:
    q_inv = p.orientation * np.array([1.0, -1.0, -1.0, -1.0])
    return Pose6D(-_quat_rotate(q_inv, p.position), q_inv)


def rotation_angle_between(a: Pose6D, b: Pose6D) -> float:
    """Angle of the relative rotation between two poses, radians in [0, pi]."""
    rel = _quat_mul(a.orientation * np.array([1.0, -1.0, -1.0, -1.0]), b.orientation)
    s = math.sqrt(float(rel[1:] @ rel[1:]))
    return 2.0 * math.atan2(s, abs(rel[0]))


@dataclass
class _FrameEntry:
    parent: str
    transform_to_parent: Pose6D


class FrameTree:
    """Named frames with parent links, rooted at "world".

    A tree is a plain value: mutate it only under exclusive access, or
    ``copy()`` it first. "world" is reserved, has no parent, and carries the
    identity transform.
    """

    def __init__(self):
        self._frames: dict[str, _FrameEntry] = {}

    def copy(self) -> "FrameTree":
        t = FrameTree()
        t._frames = {name: _FrameEntry(e.parent, e.transform_to_parent) for name, e in self._frames.items()}
        return t

    def __contains__(self, name: str) -> bool:
        return name == WORLD_FRAME or name in self._frames

    def frame_names(self) -> list[str]:
        return [WORLD_FRAME, *self._frames.keys()]

    def _require(self, name: str):
        if name not in self:
            raise UnknownFrame(name)

    def parent_of(self, name: str) -> str | None:
        self._require(name)
        if name == WORLD_FRAME:
            return None
        return self._frames[name].parent

    def transform_to_parent(self, name: str) -> Pose6D:
        self._require(name)
        if name == WORLD_FRAME:
            return Pose6D.identity()
        return self._frames[name].transform_to_parent

    def add_frame(self, name: str, parent: str, transform_to_parent: Pose6D):
        if not name or name == WORLD_FRAME:
            raise ValueError(f"invalid frame name {name!r}")
        if name in self._frames:
            raise ValueError(f"frame {name!r} already exists")
        self._require(parent)
        self._frames[name] = _FrameEntry(parent, transform_to_parent)

    def set_transform(self, name: str, transform_to_parent: Pose6D):
        self._require(name)
        if name == WORLD_FRAME:
            raise ValueError("world frame is immovable")
        self._frames[name].transform_to_parent = transform_to_parent

    def update_frame(self, name: str, parent: str, transform_to_parent: Pose6D):
        """Add ``name`` or overwrite its parent link and transform."""
        if name in self._frames:
            self._require(parent)
            if self._is_descendant(parent, name) or parent == name:
                raise CycleError(f"{parent!r} is {name!r} or a descendant of it")
            self._frames[name] = _FrameEntry(parent, transform_to_parent)
        else:
            self.add_frame(name, parent, transform_to_parent)

    def remove_frame(self, name: str):
        self._require(name)
        if name == WORLD_FRAME:
            raise ValueError("cannot remove the world frame")
        for other, e in self._frames.items():
            if e.parent == name:
                raise ValueError(f"frame {name!r} still has child {other!r}")
        del self._frames[name]

    def resolve_world(self, name: str) -> Pose6D:
        """World pose of a frame by chaining parent transforms."""
        self._require(name)
        pose = Pose6D.identity()
        while name != WORLD_FRAME:
            e = self._frames[name]
            pose = compose(e.transform_to_parent, pose)
            name = e.parent
        return pose

    def express_in(self, pose: Pose6D, src: str, dst: str) -> Pose6D:
        """Re-express ``pose`` (given in frame ``src``) in frame ``dst``.

        The world-frame realization is unchanged:
        resolve(dst) o result == resolve(src) o pose.
        """
        self._require(src)
        self._require(dst)
        if src == dst:
            return pose
        return compose(invert(self.resolve_world(dst)), compose(self.resolve_world(src), pose))

    def _is_descendant(self, name: str, ancestor: str) -> bool:
        while name != WORLD_FRAME:
            name = self._frames[name].parent
            if name == ancestor:
                return True
        return False

    def set_parent(self, name: str, new_parent: str):
        """Reattach ``name`` under ``new_parent``, preserving its world pose."""
        self._require(name)
        self._require(new_parent)
        if name == WORLD_FRAME:
            raise ValueError("world frame is immovable")
        if new_parent == name or self._is_descendant(new_parent, name):
            raise CycleError(f"{new_parent!r} is {name!r} or a descendant of it")
        e = self._frames[name]
        if e.parent == new_parent:
            return
        world_pose = self.resolve_world(name)
        e.transform_to_parent = compose(invert(self.resolve_world(new_parent)), world_pose)
        e.parent = new_parent
