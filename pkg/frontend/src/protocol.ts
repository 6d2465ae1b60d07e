// Envelope encoding and the per-connection command bookkeeping. Every user
// gesture that changes a behavior becomes exactly one command with a
// monotonic seq; acks are matched back by ack_seq.

import type { Pose } from "./math.js";

export interface Envelope {
  type: string;
  seq: number;
  timestamp: number;
  payload: Record<string, unknown>;
}

export interface ActionObj {
  kind: string;
  description: string;
  parent_frame: string;
  [key: string]: unknown;
}

export interface SequenceObj {
  format_version: string;
  name: string;
  task_frame: string;
  actions: ActionObj[];
}

export interface IkSolutionObj {
  configuration: Record<string, number>;
  achieved_pose: Pose;
  position_error: number;
  orientation_error: number;
  converged: boolean;
  iterations: number;
}

export interface FootstepObj {
  side: "left" | "right";
  pose: Pose;
  swing_duration: number;
  transfer_duration: number;
  phase: string;
}

export function encodeEnvelope(env: Envelope): string {
  return JSON.stringify(env);
}

export function parseEnvelope(data: string): Envelope {
  const obj = JSON.parse(data);
  if (typeof obj !== "object" || obj === null || Array.isArray(obj)) {
    throw new Error("envelope must be an object");
  }
  if (typeof obj.type !== "string" || typeof obj.seq !== "number"
      || typeof obj.timestamp !== "number") {
    throw new Error("bad envelope fields");
  }
  return {
    type: obj.type,
    seq: obj.seq,
    timestamp: obj.timestamp,
    payload: obj.payload ?? {},
  };
}

export type AckHandler = (ack: Envelope) => void;

/** Owns outbound seq numbering and ack correlation for one connection. */
export class CommandClient {
  private seq = 0;
  private pending = new Map<number, AckHandler>();
  readonly log: Envelope[] = [];

  constructor(private send: (data: string) => void) {}

  command(type: string, payload: Record<string, unknown>, onAck?: AckHandler): number {
    this.seq += 1;
    const env: Envelope = { type, seq: this.seq, timestamp: 0, payload };
    if (onAck) this.pending.set(this.seq, onAck);
    this.log.push(env);
    this.send(encodeEnvelope(env));
    return this.seq;
  }

  /** Route an inbound envelope; returns true when it was an ack we owned. */
  handleReply(env: Envelope): boolean {
    if (env.type !== "ack" && env.type !== "protocol_error") return false;
    const ackSeq = env.payload["ack_seq"] as number | undefined;
    if (ackSeq === undefined) return false;
    const handler = this.pending.get(ackSeq);
    if (handler) {
      this.pending.delete(ackSeq);
      handler(env);
    }
    return true;
  }

  get pendingCount(): number {
    return this.pending.size;
  }
}
