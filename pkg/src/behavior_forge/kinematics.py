"""Kinematic humanoid model: loading, forward kinematics, and DLS inverse
kinematics for the arm chains.

The solver is a plain damped least-squares iteration with a fixed damping
factor, a per-joint step cap, and joint-limit clamping of every iterate. It
is deterministic: identical (model, chain, target, seed) inputs produce a
bit-identical solution. Non-convergence is reported, never raised.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from behavior_forge.geometry import Pose6D, compose, invert, quat_to_rotvec

# Solver constants, fixed by design so results are reproducible.
IK_DAMPING = 0.05
IK_STEP_CAP = 0.2          # rad per joint per iteration
IK_MAX_ITERATIONS = 200
IK_POSITION_TOL = 1e-3     # m
IK_ORIENTATION_TOL = 0.01  # rad
IK_ORIENTATION_WEIGHT = 0.5  # m per rad in the combined error vector


class ParseError(ValueError):
    """Model document does not parse as JSON."""

    def __init__(self, message: str, location: str = ""):
        super().__init__(f"{message}{f' at {location}' if location else ''}")
        self.location = location


class ValidationError(ValueError):
    """Model document parsed but violates a structural rule."""


class UnknownChain(KeyError):
    def __init__(self, name: str):
        super().__init__(name)
        self.name = name

    def __str__(self) -> str:
        return f"unknown chain {self.name!r}"


@dataclass(frozen=True)
class JointSpec:
    name: str
    parent: str            # parent link
    child: str             # child link
    axis: np.ndarray       # unit 3-vector, local frame
    offset: Pose6D         # fixed transform parent link -> joint frame
    limits: tuple[float, float]  # [lo, hi] radians


@dataclass(frozen=True)
class ChainSpec:
    root_link: str
    joint_names: tuple[str, ...]
    end_effector_offset: Pose6D


@dataclass(frozen=True)
class JointConfiguration:
    """Joint angles by joint name, radians. Build via RobotModel.configuration
    so values are clamped to limits on construction."""

    values: dict[str, float]

    def __getitem__(self, name: str) -> float:
        return self.values[name]

    def get(self, name: str, default: float = 0.0) -> float:
        return self.values.get(name, default)

    def merged(self, other: "JointConfiguration | dict") -> dict[str, float]:
        out = dict(self.values)
        out.update(other.values if isinstance(other, JointConfiguration) else other)
        return out


@dataclass(frozen=True)
class IkSolution:
    configuration: JointConfiguration
    achieved_pose: Pose6D
    position_error: float     # m
    orientation_error: float  # rad
    converged: bool
    iterations: int


class RobotModel:
    """Validated kinematic description: joints, links, and named arm chains."""

    def __init__(self, name: str, links: list[str], joints: list[JointSpec],
                 chains: dict[str, ChainSpec], named_configurations: dict[str, dict[str, float]],
                 pelvis_to_chest: Pose6D = Pose6D.identity(), collision: dict | None = None):
        self.name = name
        self.links = list(links)
        self.joints = list(joints)
        self.joint_by_name = {j.name: j for j in joints}
        self.chains = dict(chains)
        self.named_configurations = {k: dict(v) for k, v in named_configurations.items()}
        self.pelvis_to_chest = pelvis_to_chest
        self.collision = collision or {}

    def chain(self, name: str) -> ChainSpec:
        try:
            return self.chains[name]
        except KeyError:
            raise UnknownChain(name) from None

    def chain_joints(self, name: str) -> list[JointSpec]:
        return [self.joint_by_name[j] for j in self.chain(name).joint_names]

    def limits(self, joint: str) -> tuple[float, float]:
        return self.joint_by_name[joint].limits

    def clamp_value(self, joint: str, value: float) -> float:
        lo, hi = self.joint_by_name[joint].limits
        return min(max(value, lo), hi)

    def configuration(self, values: dict[str, float] | None = None) -> JointConfiguration:
        """Full configuration (every joint present), clamped to limits."""
        values = values or {}
        out = {}
        for j in self.joints:
            out[j.name] = self.clamp_value(j.name, float(values.get(j.name, 0.0)))
        return JointConfiguration(out)

    def named_configuration(self, name: str) -> JointConfiguration:
        return self.configuration(self.named_configurations[name])

    def reach(self, chain: str) -> float:
        """Sum of link lengths along a chain, from the chain root joint."""
        total = 0.0
        for j in self.chain_joints(chain)[1:]:
            total += float(np.linalg.norm(j.offset.position))
        total += float(np.linalg.norm(self.chain(chain).end_effector_offset.position))
        return total

    def chain_root_position(self, chain: str) -> np.ndarray:
        return self.chain_joints(chain)[0].offset.position


def _pose_from_doc(obj, where: str) -> Pose6D:
    if not isinstance(obj, dict) or "position" not in obj:
        raise ValidationError(f"{where}: expected a pose object with 'position'")
    return Pose6D.from_json({"position": obj["position"], "orientation": obj.get("orientation", [1, 0, 0, 0])})


def load_model(source) -> RobotModel:
    """Load and validate a model document (path, JSON text, or parsed dict)."""
    if isinstance(source, (str, Path)) and "\n" not in str(source) and Path(source).exists():
        text = Path(source).read_text()
    elif isinstance(source, (str, bytes)):
        text = source
    else:
        text = None

    if text is not None:
        try:
            doc = json.loads(text)
        except json.JSONDecodeError as e:
            raise ParseError(e.msg, f"line {e.lineno} column {e.colno}") from None
    else:
        doc = source

    name = doc.get("name", "robot")
    links = list(doc.get("links", []))
    if "chest" not in links:
        raise ValidationError("model must declare a 'chest' link")
    link_set = set(links)

    joints: list[JointSpec] = []
    for jd in doc.get("joints", []):
        jname = jd.get("name")
        if not jname:
            raise ValidationError("joint without a name")
        for key in ("parent", "child"):
            if jd.get(key) not in link_set:
                raise ValidationError(f"joint {jname!r}: unknown {key} link {jd.get(key)!r}")
        axis = np.asarray(jd.get("axis", [0, 0, 1]), dtype=float)
        n = float(np.linalg.norm(axis))
        if n == 0.0:
            raise ValidationError(f"joint {jname!r}: zero axis")
        lo, hi = (float(v) for v in jd.get("limits", [-math.pi, math.pi]))
        if not lo < hi:
            raise ValidationError(f"joint {jname!r}: limits lo >= hi")
        joints.append(JointSpec(jname, jd["parent"], jd["child"], axis / n,
                                _pose_from_doc(jd.get("origin", {"position": [0, 0, 0]}), f"joint {jname!r} origin"),
                                (lo, hi)))
    by_name = {j.name: j for j in joints}
    if len(by_name) != len(joints):
        raise ValidationError("duplicate joint names")

    chains: dict[str, ChainSpec] = {}
    for cname, cd in doc.get("chains", {}).items():
        jnames = list(cd.get("joints", []))
        if not jnames:
            raise ValidationError(f"chain {cname!r}: empty")
        root = cd.get("root_link", "chest")
        prev_link = root
        for jn in jnames:
            j = by_name.get(jn)
            if j is None:
                raise ValidationError(f"chain {cname!r}: unknown joint {jn!r}")
            if j.parent != prev_link:
                raise ValidationError(f"chain {cname!r}: joint {jn!r} does not connect to {prev_link!r}")
            prev_link = j.child
        chains[cname] = ChainSpec(root, tuple(jnames),
                                  _pose_from_doc(cd.get("end_effector_offset", {"position": [0, 0, 0]}),
                                                 f"chain {cname!r} end_effector_offset"))

    named = {}
    for nm, vals in doc.get("named_configurations", {}).items():
        for jn in vals:
            if jn not in by_name:
                raise ValidationError(f"configuration {nm!r}: unknown joint {jn!r}")
        named[nm] = {k: float(v) for k, v in vals.items()}

    pelvis_to_chest = _pose_from_doc(doc.get("pelvis_to_chest", {"position": [0, 0, 0]}), "pelvis_to_chest")
    return RobotModel(name, links, joints, chains, named, pelvis_to_chest, doc.get("collision"))


# Scalar-tuple transform kernels. The solver runs FK + Jacobian hundreds of
# times per request; plain floats are an order of magnitude faster here than
# building Pose6D objects or 3-element ndarrays per joint.

def _tq_mul(a, b):
    aw, ax, ay, az = a
    bw, bx, by, bz = b
    return (
        aw * bw - ax * bx - ay * by - az * bz,
        aw * bx + ax * bw + ay * bz - az * by,
        aw * by - ax * bz + ay * bw + az * bx,
        aw * bz + ax * by - ay * bx + az * bw,
    )


def _tq_rot(q, v):
    w, x, y, z = q
    vx, vy, vz = v
    tx = 2.0 * (y * vz - z * vy)
    ty = 2.0 * (z * vx - x * vz)
    tz = 2.0 * (x * vy - y * vx)
    return (
        vx + w * tx + (y * tz - z * ty),
        vy + w * ty + (z * tx - x * tz),
        vz + w * tz + (x * ty - y * tx),
    )


class _ChainData:
    """Flattened per-chain arrays for the FK/IK hot path."""

    def __init__(self, model: RobotModel, chain: str):
        joints = model.chain_joints(chain)
        self.names = [j.name for j in joints]
        self.off_p = [tuple(float(v) for v in j.offset.position) for j in joints]
        self.off_q = [tuple(float(v) for v in j.offset.orientation) for j in joints]
        self.axis = [tuple(float(v) for v in j.axis) for j in joints]
        self.lo = np.array([j.limits[0] for j in joints])
        self.hi = np.array([j.limits[1] for j in joints])
        ee = model.chain(chain).end_effector_offset
        self.ee_p = tuple(float(v) for v in ee.position)
        self.ee_q = tuple(float(v) for v in ee.orientation)

        # zero-configuration geometry used by the warm start: the "shoulder"
        # is the chain root joint, the "elbow" the first later joint with a
        # real offset from it
        n = len(joints)
        zero_origins, _, zero_p, _ = self.frames(np.zeros(n))
        self.root_pos = np.array(zero_origins[0])
        self.elbow_idx = None
        for i in range(1, n):
            if np.linalg.norm(np.array(zero_origins[i]) - self.root_pos) > 1e-6:
                self.elbow_idx = i
                break
        if self.elbow_idx is not None:
            self.upper_len = float(np.linalg.norm(np.array(zero_origins[self.elbow_idx]) - self.root_pos))
            self.fore_len = float(np.linalg.norm(np.array(zero_p) - np.array(zero_origins[self.elbow_idx])))

    def frames(self, theta):
        """Joint origins and world axes plus the end pose, chest frame."""
        p = (0.0, 0.0, 0.0)
        q = (1.0, 0.0, 0.0, 0.0)
        origins = []
        axes = []
        for i, ang in enumerate(theta):
            dp = _tq_rot(q, self.off_p[i])
            p = (p[0] + dp[0], p[1] + dp[1], p[2] + dp[2])
            q = _tq_mul(q, self.off_q[i])
            origins.append(p)
            axes.append(_tq_rot(q, self.axis[i]))
            half = 0.5 * ang
            s = math.sin(half)
            ax, ay, az = self.axis[i]
            q = _tq_mul(q, (math.cos(half), s * ax, s * ay, s * az))
        dp = _tq_rot(q, self.ee_p)
        p = (p[0] + dp[0], p[1] + dp[1], p[2] + dp[2])
        q = _tq_mul(q, self.ee_q)
        return origins, axes, p, q


def _chain_data(model: RobotModel, chain: str) -> _ChainData:
    cache = getattr(model, "_chain_cache", None)
    if cache is None:
        cache = {}
        model._chain_cache = cache
    if chain not in cache:
        model.chain(chain)  # raises UnknownChain
        cache[chain] = _ChainData(model, chain)
    return cache[chain]


def forward_kinematics(model: RobotModel, q: JointConfiguration, chain: str) -> Pose6D:
    """Hand pose in the chest frame for the given configuration."""
    data = _chain_data(model, chain)
    theta = [q.get(n, 0.0) for n in data.names]
    _, _, p, quat = data.frames(theta)
    return Pose6D(np.array(p), np.array(quat))


def chain_joint_frames(model: RobotModel, q: JointConfiguration, chain: str):
    """(origin, axis) per joint plus the end pose, all in the chest frame."""
    data = _chain_data(model, chain)
    theta = [q.get(n, 0.0) for n in data.names]
    origins, axes, p, quat = data.frames(theta)
    return ([np.array(o) for o in origins], [np.array(a) for a in axes],
            Pose6D(np.array(p), np.array(quat)))


def jacobian(model: RobotModel, q: JointConfiguration, chain: str) -> np.ndarray:
    """Geometric Jacobian (6 x n): rows 0-2 linear m/rad, rows 3-5 angular,
    both in the chest frame."""
    data = _chain_data(model, chain)
    theta = [q.get(n, 0.0) for n in data.names]
    origins, axes, p, _ = data.frames(theta)
    n = len(origins)
    J = np.empty((6, n))
    for i in range(n):
        ox, oy, oz = origins[i]
        ax, ay, az = axes[i]
        rx, ry, rz = p[0] - ox, p[1] - oy, p[2] - oz
        J[0, i] = ay * rz - az * ry
        J[1, i] = az * rx - ax * rz
        J[2, i] = ax * ry - ay * rx
        J[3, i] = ax
        J[4, i] = ay
        J[5, i] = az
    return J


class _Best:
    __slots__ = ("cost", "perr", "oerr", "q", "p", "quat")

    def __init__(self):
        self.cost = math.inf
        self.perr = math.inf
        self.oerr = math.inf
        self.q = None
        self.p = None
        self.quat = None


def _pose_errors(data: _ChainData, tp, tq, q):
    """FK plus position / shortest-arc orientation error toward the target."""
    origins, axes, p, quat = data.frames(q)
    ep = (tp[0] - p[0], tp[1] - p[1], tp[2] - p[2])
    tqw, tqx, tqy, tqz = tq
    fw, fx, fy, fz = quat
    rw = tqw * fw + tqx * fx + tqy * fy + tqz * fz
    rx = -tqw * fx + tqx * fw - tqy * fz + tqz * fy
    ry = -tqw * fy + tqx * fz + tqy * fw - tqz * fx
    rz = -tqw * fz - tqx * fy + tqy * fx + tqz * fw
    if rw < 0.0:
        rw, rx, ry, rz = -rw, -rx, -ry, -rz
    s = math.sqrt(rx * rx + ry * ry + rz * rz)
    if s < 1e-12:
        eo = (2.0 * rx, 2.0 * ry, 2.0 * rz)
    else:
        k = 2.0 * math.atan2(s, rw) / s
        eo = (k * rx, k * ry, k * rz)
    return origins, axes, p, quat, ep, eo


def _dls_chunk(data: _ChainData, tp, tq, q: np.ndarray, max_iters: int,
               best: _Best, cols: list[int] | None = None):
    """Run damped least-squares updates from ``q``; returns (converged, steps, q).

    ``cols`` restricts the update to a subset of joints and drops the
    orientation rows (used only to aim the proximal joints in the warm start).
    """
    n = len(q)
    pos_only = cols is not None
    active = cols if pos_only else range(n)
    rows = 3 if pos_only else 6
    eye = np.eye(rows)
    lam2 = IK_DAMPING * IK_DAMPING
    w = IK_ORIENTATION_WEIGHT
    J = np.empty((rows, len(active) if pos_only else n))
    steps = 0
    for it in range(max_iters + 1):
        origins, axes, p, quat, ep, eo = _pose_errors(data, tp, tq, q)
        perr = math.sqrt(ep[0] ** 2 + ep[1] ** 2 + ep[2] ** 2)
        oerr = math.sqrt(eo[0] ** 2 + eo[1] ** 2 + eo[2] ** 2)
        cost = perr + w * oerr
        if cost < best.cost:
            best.cost, best.perr, best.oerr = cost, perr, oerr
            best.q, best.p, best.quat = q.copy(), p, quat
        if perr <= IK_POSITION_TOL and (pos_only or oerr <= IK_ORIENTATION_TOL):
            return True, steps, q
        if it == max_iters:
            return False, steps, q
        for k, i in enumerate(active):
            ox, oy, oz = origins[i]
            ax, ay, az = axes[i]
            rvx, rvy, rvz = p[0] - ox, p[1] - oy, p[2] - oz
            J[0, k] = ay * rvz - az * rvy
            J[1, k] = az * rvx - ax * rvz
            J[2, k] = ax * rvy - ay * rvx
            if not pos_only:
                J[3, k] = w * ax
                J[4, k] = w * ay
                J[5, k] = w * az
        e = np.array(ep) if pos_only else np.array([*ep, w * eo[0], w * eo[1], w * eo[2]])
        dq = J.T @ np.linalg.solve(J @ J.T + lam2 * eye, e)
        np.clip(dq, -IK_STEP_CAP, IK_STEP_CAP, out=dq)
        steps += 1
        if pos_only:
            for k, i in enumerate(active):
                q[i] = min(max(q[i] + dq[k], data.lo[i]), data.hi[i])
        else:
            q = np.clip(q + dq, data.lo, data.hi)
    return False, steps, q


def _warm_start(data: _ChainData, tp, tq) -> np.ndarray | None:
    """Deterministic initial guess: set the elbow bend so the straight-line
    reach matches the target distance (bisection on the chord), then aim the
    proximal joints with a few position-only steps."""
    if data.elbow_idx is None:
        return None
    n = len(data.names)
    d = math.sqrt((tp[0] - data.root_pos[0]) ** 2 + (tp[1] - data.root_pos[1]) ** 2
                  + (tp[2] - data.root_pos[2]) ** 2)
    d = min(max(d, abs(data.upper_len - data.fore_len) + 0.02),
            data.upper_len + data.fore_len - 0.01)
    i = data.elbow_idx
    lo_e, hi_e = data.lo[i], data.hi[i]
    t_end = hi_e if abs(hi_e) > abs(lo_e) else lo_e

    def chord(theta):
        qq = np.zeros(n)
        qq[i] = theta
        _, _, p, _ = data.frames(qq)
        return math.sqrt((p[0] - data.root_pos[0]) ** 2 + (p[1] - data.root_pos[1]) ** 2
                         + (p[2] - data.root_pos[2]) ** 2)

    t0, t1 = 0.0, t_end
    c0 = chord(t0)
    for _ in range(24):
        tm = 0.5 * (t0 + t1)
        cm = chord(tm)
        if (cm - d) * (c0 - d) <= 0:
            t1 = tm
        else:
            t0, c0 = tm, cm
    q = np.zeros(n)
    q[i] = 0.95 * 0.5 * (t0 + t1)
    return q


# Restart seeds (fractions of the joint range around mid) tried when the
# caller's seed and the warm start both stall in a local minimum.
_RESTART_PATTERNS = (
    (0.5, -0.5, 0.5, -0.5, 0.5, -0.5, 0.5),
    (-0.5, 0.5, -0.5, 0.5, -0.5, 0.5, -0.5),
    (0.25, 0.25, -0.25, 0.25, -0.25, 0.25, 0.25),
    (-0.25, -0.25, 0.25, -0.25, 0.25, -0.25, -0.25),
    (0.5, 0.5, 0.5, 0.5, 0.5, 0.5, 0.5),
    (-0.5, -0.5, -0.5, -0.5, -0.5, -0.5, -0.5),
)

_IK_CHUNK = 25  # iterations granted to each start before moving on


def solve_ik(model: RobotModel, chain: str, target: Pose6D,
             seed: JointConfiguration) -> IkSolution:
    """Damped least-squares IK for ``chain`` toward ``target`` (chest frame).

    The iteration budget (200 total) is spent in chunks: first from the
    caller's seed, then from a deterministic warm start and its wrist
    variants, then from fixed restart points. Returns the best iterate found
    even when not converged; convergence means position error <= 1 mm and
    orientation error <= 0.01 rad. Fully deterministic in its inputs.
    """
    data = _chain_data(model, chain)
    n = len(data.names)
    q0 = np.clip(np.array([seed.get(nm, 0.0) for nm in data.names]), data.lo, data.hi)
    tp = tuple(float(v) for v in target.position)
    tq = tuple(float(v) for v in target.orientation)

    best = _Best()
    budget = IK_MAX_ITERATIONS
    used = 0

    def finish(q, p, quat, perr, oerr, converged):
        cfg = JointConfiguration(dict(zip(data.names, (float(v) for v in q))))
        return IkSolution(cfg, Pose6D(np.array(p), np.array(quat)), perr, oerr, converged, used)

    def try_start(q_start: np.ndarray):
        nonlocal used, budget
        ok, steps, q = _dls_chunk(data, tp, tq, q_start, min(_IK_CHUNK, budget), best)
        used += steps
        budget -= steps
        if not ok:
            return None
        _, _, p, quat, ep, eo = _pose_errors(data, tp, tq, q)
        perr = math.sqrt(ep[0] ** 2 + ep[1] ** 2 + ep[2] ** 2)
        oerr = math.sqrt(eo[0] ** 2 + eo[1] ** 2 + eo[2] ** 2)
        return finish(q, p, quat, perr, oerr, True)

    done = try_start(q0.copy())
    if done is not None:
        return done

    # the seed's basin failed: fan out from a warm start (elbow bend from the
    # target distance, proximal joints aimed), its wrist variants, then fixed
    # restart points
    later: list[np.ndarray] = []
    warm = _warm_start(data, tp, tq)
    if warm is not None:
        _, steps, warm = _dls_chunk(data, tp, tq, warm, 8, best,
                                    cols=list(range(data.elbow_idx)))
        used += steps
        budget -= steps
        later.append(warm)
        for wrist in (1.5, -1.5, 3.0):
            v = warm.copy()
            v[n - 1] = min(max(wrist, data.lo[n - 1]), data.hi[n - 1])
            later.append(v)
    mid = 0.5 * (data.lo + data.hi)
    halfspan = 0.5 * (data.hi - data.lo)
    for pat in _RESTART_PATTERNS:
        later.append(np.clip(mid + np.array(pat[:n]) * halfspan, data.lo, data.hi))

    for q_start in later:
        if budget <= 0:
            break
        done = try_start(q_start.copy())
        if done is not None:
            return done

    return finish(best.q, best.p, best.quat, best.perr, best.oerr, False)
