import { describe, expect, it } from "vitest";

import {
  DEFAULT_NUDGE_ROTATION,
  DEFAULT_NUDGE_TRANSLATION,
  GizmoState,
  HandPoseObj,
  absolutePoseEdit,
  dragToPlaneDelta,
  gizmoNudge,
  ringDragUpdate,
  stanceFromRing,
} from "../src/gizmo.js";
import { IDENTITY, Pose, poseFromXyYaw, quatFromAxisAngle, rotate, yawOf } from "../src/math.js";

function gizmo(overrides: Partial<GizmoState> = {}): GizmoState {
  return {
    targetIndex: 3,
    adjustmentFrame: "door_frame",
    activeConstraint: "yaw",
    sensitivity: 1.0,
    metersPerPixel: 0.01,
    ...overrides,
  };
}

function handAction(): HandPoseObj {
  return {
    kind: "hand_pose",
    description: "reach",
    parent_frame: "door_lever",
    side: "right",
    goal: { position: [0.1, 0.2, 0.3], orientation: [1, 0, 0, 0] },
    trajectory_duration: 2.0,
  };
}

describe("stance ring drags", () => {
  it("maps a 100 px left-drag at 0.01 m/px to a 1.0 m in-plane translation", () => {
    expect(dragToPlaneDelta(100, 0, 0.01)).toEqual([1.0, -0]);
    const action = stanceFromRing(0, 0, 0);
    const payload = ringDragUpdate(gizmo(), action, { kind: "translate", dxPx: 100, dyPx: 0 });
    expect(payload.op).toBe("update");
    expect(payload.index).toBe(3);
    const updated = payload.action as typeof action;
    expect(updated.left_foot.position[0]).toBeCloseTo(action.left_foot.position[0] + 1.0, 12);
    expect(updated.right_foot.position[0]).toBeCloseTo(action.right_foot.position[0] + 1.0, 12);
    // lateral and vertical untouched
    expect(updated.left_foot.position[1]).toBeCloseTo(action.left_foot.position[1], 12);
    expect(updated.left_foot.position[2]).toBe(0);
  });

  it("right-drag through a full circle changes yaw by 2*pi and keeps positions", () => {
    const action = stanceFromRing(1.0, -0.5, 0.4);
    let current = action;
    const steps = 48;
    for (let i = 0; i < steps; i++) {
      const payload = ringDragUpdate(gizmo(), current, {
        kind: "yaw", dtheta: (2 * Math.PI) / steps,
      });
      current = payload.action as typeof action;
    }
    for (const side of ["left_foot", "right_foot"] as const) {
      expect(current[side].position[0]).toBeCloseTo(action[side].position[0], 9);
      expect(current[side].position[1]).toBeCloseTo(action[side].position[1], 9);
      // total yaw wraps back to the start after 2*pi
      expect(yawOf(current[side])).toBeCloseTo(yawOf(action[side]), 9);
    }
  });

  it("arrow click yaws the feet to the arrow heading with the midpoint fixed", () => {
    const action = stanceFromRing(2.0, 1.0, 0.3);
    const midBefore = [
      (action.left_foot.position[0] + action.right_foot.position[0]) / 2,
      (action.left_foot.position[1] + action.right_foot.position[1]) / 2,
    ];
    const heading = -1.2;
    const updated = ringDragUpdate(gizmo(), action, { kind: "arrow", heading })
      .action as typeof action;
    expect(yawOf(updated.left_foot)).toBeCloseTo(heading, 9);
    expect(yawOf(updated.right_foot)).toBeCloseTo(heading, 9);
    const midAfter = [
      (updated.left_foot.position[0] + updated.right_foot.position[0]) / 2,
      (updated.left_foot.position[1] + updated.right_foot.position[1]) / 2,
    ];
    expect(midAfter[0]).toBeCloseTo(midBefore[0], 9);
    expect(midAfter[1]).toBeCloseTo(midBefore[1], 9);
  });

  it("never mutates the input action", () => {
    const action = stanceFromRing(0, 0, 0);
    const frozen = JSON.stringify(action);
    ringDragUpdate(gizmo(), action, { kind: "translate", dxPx: 50, dyPx: -20 });
    ringDragUpdate(gizmo(), action, { kind: "yaw", dtheta: 0.5 });
    expect(JSON.stringify(action)).toBe(frozen);
  });
});

describe("pose gizmo nudges", () => {
  it("one nudge at default sensitivity is a 5 mm translation", () => {
    const payload = gizmoNudge(gizmo(), handAction(), "up", false, IDENTITY);
    const goal = (payload.action as HandPoseObj).goal;
    expect(goal.position[0]).toBeCloseTo(0.1 + DEFAULT_NUDGE_TRANSLATION, 12);
    expect(goal.position[1]).toBeCloseTo(0.2, 12);
    expect(goal.position[2]).toBeCloseTo(0.3, 12);
  });

  it("scales with sensitivity and respects the adjustment frame", () => {
    // adjustment frame rotated 90 degrees about z: its +x is the parent's +y
    const adjustment: Pose = {
      position: [5, 5, 5],
      orientation: quatFromAxisAngle([0, 0, 1], Math.PI / 2),
    };
    const payload = gizmoNudge(gizmo({ sensitivity: 4 }), handAction(), "up", false, adjustment);
    const goal = (payload.action as HandPoseObj).goal;
    expect(goal.position[0]).toBeCloseTo(0.1, 9);
    expect(goal.position[1]).toBeCloseTo(0.2 + 4 * DEFAULT_NUDGE_TRANSLATION, 9);
  });

  it("rotation modifier turns 1 degree about the active axis", () => {
    const payload = gizmoNudge(gizmo({ activeConstraint: "yaw" }), handAction(), "up", true, IDENTITY);
    const goal = (payload.action as HandPoseObj).goal;
    expect(yawOf({ position: [0, 0, 0], orientation: goal.orientation }))
      .toBeCloseTo(DEFAULT_NUDGE_ROTATION, 12);
    expect(goal.position).toEqual([0.1, 0.2, 0.3]);
  });

  it("absolute value entry produces a payload with the typed values verbatim", () => {
    const typed: Pose = {
      position: [0.123456789, -0.987654321, 1.5],
      orientation: [0.7071067811865476, 0, 0, 0.7071067811865476],
    };
    const payload = absolutePoseEdit(gizmo(), handAction(), typed);
    expect((payload.action as HandPoseObj).goal).toBe(typed);
    expect(JSON.stringify((payload.action as HandPoseObj).goal))
      .toBe(JSON.stringify(typed));
  });
});
