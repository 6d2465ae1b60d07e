// The client-side mirror of the engine session. It is rebuilt wholesale from
// the hello snapshot and then patched by robot_state / action_status
// publications. The UI holds no authoritative state: closing and reopening
// against a live session reproduces the identical scene from hello alone.

import type { Pose } from "./math.js";
import type { Envelope, SequenceObj } from "./protocol.js";

export interface FrameEntry {
  parent: string;
  transform_to_parent: Pose;
}

export interface ExecutorView {
  selected: number;
  mode: string;
  statuses: string[];
  executing: number | null;
}

export interface WorldView {
  sim_time: number;
  pelvis: Pose;
  joints: Record<string, number>;
  feet: Record<string, Pose>;
  hands: Record<string, Pose>;
  grasped: [string, string] | null;
  objects: Record<string, Pose>;
  door?: { hinge_angle: number; lever_angle: number; latch_engaged: boolean };
}

export interface StatusEventView {
  sim_time: number;
  index: number;
  status: string;
  description: string;
  error?: string;
}

export class SceneMirror {
  scene = "";
  sequence: SequenceObj = { format_version: "1", name: "", task_frame: "", actions: [] };
  frames: Record<string, FrameEntry> = {};
  world: WorldView | null = null;
  executor: ExecutorView = { selected: 0, mode: "manual", statuses: [], executing: null };
  statusLog: StatusEventView[] = [];

  applyHello(payload: Record<string, unknown>): void {
    this.scene = payload["scene"] as string;
    this.sequence = payload["sequence"] as SequenceObj;
    this.frames = payload["frames"] as Record<string, FrameEntry>;
    this.world = payload["world"] as WorldView;
    this.executor = payload["executor"] as ExecutorView;
    this.statusLog = [];
  }

  applyEnvelope(env: Envelope): void {
    switch (env.type) {
      case "hello":
        this.applyHello(env.payload);
        break;
      case "robot_state":
        this.world = env.payload["world"] as WorldView;
        this.executor = env.payload["executor"] as ExecutorView;
        break;
      case "action_status": {
        const ev = env.payload as unknown as StatusEventView;
        this.statusLog.push(ev);
        if (ev.index < this.executor.statuses.length) {
          this.executor.statuses[ev.index] = ev.status;
        }
        break;
      }
      default:
        break;
    }
  }

  /** Resolve a frame's pose in world coordinates by chaining parents. */
  resolveWorld(name: string): Pose | null {
    if (name === "world") return { position: [0, 0, 0], orientation: [1, 0, 0, 0] };
    const chain: FrameEntry[] = [];
    let cursor = name;
    while (cursor !== "world") {
      const entry = this.frames[cursor];
      if (!entry) return null;
      chain.push(entry);
      cursor = entry.parent;
    }
    let pose: Pose = { position: [0, 0, 0], orientation: [1, 0, 0, 0] };
    for (const entry of chain) {
      pose = composePose(entry.transform_to_parent, pose);
    }
    return pose;
  }

  snapshotKey(): string {
    // canonical-ish digest for state-equality checks (tests and reconnects)
    return JSON.stringify({
      scene: this.scene,
      sequence: this.sequence,
      frames: this.frames,
      executor: this.executor,
    });
  }
}

function composePose(a: Pose, b: Pose): Pose {
  const [w, x, y, z] = a.orientation;
  const [vx, vy, vz] = b.position;
  const tx = 2 * (y * vz - z * vy);
  const ty = 2 * (z * vx - x * vz);
  const tz = 2 * (x * vy - y * vx);
  const p: [number, number, number] = [
    a.position[0] + vx + w * tx + (y * tz - z * ty),
    a.position[1] + vy + w * ty + (z * tx - x * tz),
    a.position[2] + vz + w * tz + (x * ty - y * tx),
  ];
  const [bw, bx, by, bz] = b.orientation;
  let q: [number, number, number, number] = [
    w * bw - x * bx - y * by - z * bz,
    w * bx + x * bw + y * bz - z * by,
    w * by - x * bz + y * bw + z * bx,
    w * bz + x * by - y * bx + z * bw,
  ];
  const n = Math.hypot(...q);
  q = [q[0] / n, q[1] / n, q[2] / n, q[3] / n];
  if (q[0] < 0) q = [-q[0], -q[1], -q[2], -q[3]];
  return { position: p, orientation: q };
}
