// Ghost previews: while a hand gizmo moves we stream request_ik_preview
// commands (throttled) and render whatever the engine returns — the ghost is
// the engine's payload, never a local solve. Stance selections request a
// footstep plan the same way.

import type { Pose } from "./math.js";
import type { CommandClient, Envelope, FootstepObj, IkSolutionObj } from "./protocol.js";

export const PREVIEW_MAX_HZ = 20;

export interface ArmGhost {
  side: "left" | "right";
  solution: IkSolutionObj;
  goalWorld: Pose;
  style: "ok" | "warning";
}

export interface StanceGhost {
  steps: FootstepObj[];
  duration: number;
}

/** Rate limiter for preview requests; the newest request wins. */
export class PreviewThrottle {
  private lastSent = -Infinity;
  private queued: (() => void) | null = null;

  constructor(private now: () => number = () => performance.now(),
              private maxHz: number = PREVIEW_MAX_HZ) {}

  /** Returns true when the request was sent immediately; otherwise it is
   * queued and will replace any previously queued request. */
  offer(send: () => void): boolean {
    const interval = 1000 / this.maxHz;
    if (this.now() - this.lastSent >= interval) {
      this.lastSent = this.now();
      this.queued = null;
      send();
      return true;
    }
    this.queued = send;
    return false;
  }

  /** Call from a timer: flushes a queued request once the interval passed. */
  flush(): boolean {
    if (this.queued === null) return false;
    const interval = 1000 / this.maxHz;
    if (this.now() - this.lastSent < interval) return false;
    const send = this.queued;
    this.queued = null;
    this.lastSent = this.now();
    send();
    return true;
  }
}

export class GhostPreviews {
  armGhost: ArmGhost | null = null;
  stanceGhost: StanceGhost | null = null;
  private throttle: PreviewThrottle;

  constructor(private client: CommandClient, now?: () => number) {
    this.throttle = new PreviewThrottle(now);
  }

  /** Stream an IK preview as the hand goal moves. */
  requestArmGhost(side: "left" | "right", frame: string, goal: Pose): void {
    this.throttle.offer(() => {
      this.client.command("request_ik_preview", { side, frame, goal },
                          (ack) => this.onIkAck(side, ack));
    });
  }

  flushPending(): void {
    this.throttle.flush();
  }

  private onIkAck(side: "left" | "right", ack: Envelope): void {
    const result = ack.payload["result"] as
      { solution: IkSolutionObj; goal_world: Pose } | undefined;
    if (!result) {
      this.armGhost = null;
      return;
    }
    // the ghost carries the engine's solution verbatim; a non-converged
    // solve renders the best-effort arm tinted as a warning
    this.armGhost = {
      side,
      solution: result.solution,
      goalWorld: result.goal_world,
      style: result.solution.converged ? "ok" : "warning",
    };
  }

  /** Selecting a stance action previews its footstep plan. */
  requestStanceGhost(frame: string, leftFoot: Pose, rightFoot: Pose): void {
    this.client.command("request_stance_preview",
                        { frame, left_foot: leftFoot, right_foot: rightFoot },
                        (ack) => this.onStanceAck(ack));
  }

  private onStanceAck(ack: Envelope): void {
    const result = ack.payload["result"] as
      { plan: { steps: FootstepObj[]; duration: number } } | undefined;
    this.stanceGhost = result ? { steps: result.plan.steps, duration: result.plan.duration } : null;
  }

  clear(): void {
    this.armGhost = null;
    this.stanceGhost = null;
  }
}
