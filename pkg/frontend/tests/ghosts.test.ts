import { describe, expect, it } from "vitest";

import { GhostPreviews, PreviewThrottle } from "../src/ghosts.js";
import { CommandClient, Envelope, IkSolutionObj } from "../src/protocol.js";

function solution(converged: boolean): IkSolutionObj {
  return {
    configuration: { r_shoulder_yaw: 0.5123456789, r_elbow: 1.25 },
    achieved_pose: { position: [0.31, -0.22, 0.95], orientation: [0.9, 0.1, 0.2, 0.38] },
    position_error: converged ? 0.0004 : 0.21,
    orientation_error: 0.002,
    converged,
    iterations: 17,
  };
}

function wired() {
  const sent: Envelope[] = [];
  const client = new CommandClient((data) => sent.push(JSON.parse(data)));
  let now = 0;
  const ghosts = new GhostPreviews(client, () => now);
  return { sent, client, ghosts, tick: (ms: number) => (now += ms) };
}

function ackFor(seq: number, result: Record<string, unknown>): Envelope {
  return { type: "ack", seq: 100 + seq, timestamp: 0, payload: { ack_seq: seq, result } };
}

describe("arm ghost previews", () => {
  it("renders exactly the payload the engine returned", () => {
    const { sent, client, ghosts } = wired();
    ghosts.requestArmGhost("right", "door_lever", {
      position: [0, 0, 0.1], orientation: [1, 0, 0, 0],
    });
    expect(sent.length).toBe(1);
    expect(sent[0].type).toBe("request_ik_preview");
    const sol = solution(true);
    const goalWorld = { position: [1.9, -0.2, 1.0] as [number, number, number],
                        orientation: [1, 0, 0, 0] as [number, number, number, number] };
    client.handleReply(ackFor(sent[0].seq, { solution: sol, goal_world: goalWorld }));
    expect(ghosts.armGhost).not.toBeNull();
    // bit-exact passthrough of the engine's solution
    expect(ghosts.armGhost!.solution).toBe(sol);
    expect(JSON.stringify(ghosts.armGhost!.solution)).toBe(JSON.stringify(sol));
    expect(ghosts.armGhost!.goalWorld).toBe(goalWorld);
    expect(ghosts.armGhost!.style).toBe("ok");
  });

  it("tints non-converged solutions as warnings", () => {
    const { sent, client, ghosts } = wired();
    ghosts.requestArmGhost("left", "world", { position: [9, 9, 9], orientation: [1, 0, 0, 0] });
    client.handleReply(ackFor(sent[0].seq, { solution: solution(false), goal_world: null }));
    expect(ghosts.armGhost!.style).toBe("warning");
  });

  it("throttles preview requests to at most 20 Hz, newest wins", () => {
    const { sent, ghosts, tick } = wired();
    for (let i = 0; i < 10; i++) {
      ghosts.requestArmGhost("right", "f", { position: [i, 0, 0], orientation: [1, 0, 0, 0] });
      tick(10); // 100 Hz of gestures
    }
    expect(sent.length).toBe(2); // 100 ms span at 20 Hz: t=0 and t=50
    tick(60);
    ghosts.flushPending();
    expect(sent.length).toBe(3);
    const last = sent[sent.length - 1].payload as { goal: { position: number[] } };
    expect(last.goal.position[0]).toBe(9); // the queued request was the newest
  });
});

describe("stance ghosts", () => {
  it("keeps exactly the planned footsteps from the ack payload", () => {
    const { sent, client, ghosts } = wired();
    ghosts.requestStanceGhost("door_frame",
                              { position: [0, 0.125, 0], orientation: [1, 0, 0, 0] },
                              { position: [0, -0.125, 0], orientation: [1, 0, 0, 0] });
    const steps = [
      { side: "left", pose: { position: [0.2, 0.125, 0], orientation: [1, 0, 0, 0] },
        swing_duration: 1.2, transfer_duration: 0.8, phase: "walk" },
      { side: "right", pose: { position: [0.2, -0.125, 0], orientation: [1, 0, 0, 0] },
        swing_duration: 1.2, transfer_duration: 0.8, phase: "goal" },
    ];
    client.handleReply(ackFor(sent[0].seq, { plan: { steps, duration: 4.0 } }));
    expect(ghosts.stanceGhost!.steps.length).toBe(steps.length);
    expect(ghosts.stanceGhost!.steps).toBe(steps);
    expect(ghosts.stanceGhost!.duration).toBe(4.0);
  });
});
