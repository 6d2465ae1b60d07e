// Pose math mirroring the wire encoding: position [x,y,z] meters,
// orientation [w,x,y,z] unit quaternion with w >= 0.

export type Vec3 = [number, number, number];
export type Quat = [number, number, number, number];

export interface Pose {
  position: Vec3;
  orientation: Quat;
}

export const IDENTITY: Pose = { position: [0, 0, 0], orientation: [1, 0, 0, 0] };

export function clonePose(p: Pose): Pose {
  return { position: [...p.position] as Vec3, orientation: [...p.orientation] as Quat };
}

export function normalize(q: Quat): Quat {
  const n = Math.hypot(q[0], q[1], q[2], q[3]);
  let out: Quat = [q[0] / n, q[1] / n, q[2] / n, q[3] / n];
  if (out[0] < 0) out = [-out[0], -out[1], -out[2], -out[3]];
  return out;
}

export function quatMul(a: Quat, b: Quat): Quat {
  const [aw, ax, ay, az] = a;
  const [bw, bx, by, bz] = b;
  return normalize([
    aw * bw - ax * bx - ay * by - az * bz,
    aw * bx + ax * bw + ay * bz - az * by,
    aw * by - ax * bz + ay * bw + az * bx,
    aw * bz + ax * by - ay * bx + az * bw,
  ]);
}

export function quatFromAxisAngle(axis: Vec3, angle: number): Quat {
  const n = Math.hypot(...axis);
  const s = Math.sin(angle / 2) / n;
  return normalize([Math.cos(angle / 2), axis[0] * s, axis[1] * s, axis[2] * s]);
}

export function rotate(q: Quat, v: Vec3): Vec3 {
  const [w, x, y, z] = q;
  const [vx, vy, vz] = v;
  const tx = 2 * (y * vz - z * vy);
  const ty = 2 * (z * vx - x * vz);
  const tz = 2 * (x * vy - y * vx);
  return [
    vx + w * tx + (y * tz - z * ty),
    vy + w * ty + (z * tx - x * tz),
    vz + w * tz + (x * ty - y * tx),
  ];
}

export function compose(a: Pose, b: Pose): Pose {
  const p = rotate(a.orientation, b.position);
  return {
    position: [a.position[0] + p[0], a.position[1] + p[1], a.position[2] + p[2]],
    orientation: quatMul(a.orientation, b.orientation),
  };
}

export function invert(p: Pose): Pose {
  const conj: Quat = normalize([p.orientation[0], -p.orientation[1], -p.orientation[2], -p.orientation[3]]);
  const r = rotate(conj, p.position);
  return { position: [-r[0], -r[1], -r[2]], orientation: conj };
}

export function yawOf(p: Pose): number {
  const [w, x, y, z] = p.orientation;
  return Math.atan2(2 * (w * z + x * y), 1 - 2 * (y * y + z * z));
}

export function poseFromXyYaw(x: number, y: number, yaw: number, z = 0): Pose {
  return { position: [x, y, z], orientation: quatFromAxisAngle([0, 0, 1], yaw) };
}
