// Gesture-to-command mappings for the stance ring and the 6-DoF pose gizmo.
// These are pure: the render layer feeds screen deltas in, and every gesture
// comes out as exactly one sequence_edit update payload for the engine. The
// UI never keeps its own copy of the action; the engine's ack is the truth.

import {
  Pose, Quat, Vec3, clonePose, compose, poseFromXyYaw, quatFromAxisAngle,
  quatMul, rotate, yawOf,
} from "./math.js";
import type { ActionObj } from "./protocol.js";

export type Constraint = "x" | "y" | "z" | "yaw" | "pitch" | "roll" | "free";

export interface GizmoState {
  targetIndex: number;         // which action the gizmo is bound to
  adjustmentFrame: string;     // frame the nudges are expressed in
  activeConstraint: Constraint;
  sensitivity: number;         // scales nudge steps
  metersPerPixel: number;      // screen-to-plane scale for ring drags
}

export const DEFAULT_NUDGE_TRANSLATION = 0.005;           // 5 mm
export const DEFAULT_NUDGE_ROTATION = Math.PI / 180;      // 1 degree

export interface StancePoseObj extends ActionObj {
  kind: "stance_pose";
  left_foot: Pose;
  right_foot: Pose;
  swing_duration: number;
  transfer_duration: number;
}

export interface HandPoseObj extends ActionObj {
  kind: "hand_pose";
  side: "left" | "right";
  goal: Pose;
  trajectory_duration: number;
}

export interface UpdatePayload {
  op: "update";
  index: number;
  action: ActionObj;
  [key: string]: unknown;
}

function updateCommand(index: number, action: ActionObj): UpdatePayload {
  return { op: "update", index, action };
}

export function dragToPlaneDelta(dxPx: number, dyPx: number, metersPerPixel: number): [number, number] {
  // screen y grows downward; the ring plane's v axis grows up
  return [dxPx * metersPerPixel, -dyPx * metersPerPixel];
}

function stanceMidpoint(action: StancePoseObj): Vec3 {
  const l = action.left_foot.position;
  const r = action.right_foot.position;
  return [(l[0] + r[0]) / 2, (l[1] + r[1]) / 2, (l[2] + r[2]) / 2];
}

function meanYaw(action: StancePoseObj): number {
  const a = yawOf(action.left_foot);
  const b = yawOf(action.right_foot);
  return Math.atan2(Math.sin(a) + Math.sin(b), Math.cos(a) + Math.cos(b));
}

function rotateFootAbout(foot: Pose, center: Vec3, dyaw: number): Pose {
  const q = quatFromAxisAngle([0, 0, 1], dyaw);
  const off: Vec3 = [foot.position[0] - center[0], foot.position[1] - center[1],
                     foot.position[2] - center[2]];
  const r = rotate(q, off);
  return {
    position: [center[0] + r[0], center[1] + r[1], center[2] + r[2]],
    orientation: quatMul(q, foot.orientation),
  };
}

export type RingDrag =
  | { kind: "translate"; dxPx: number; dyPx: number }
  | { kind: "yaw"; dtheta: number }
  | { kind: "arrow"; heading: number };

/** Stance-ring gestures: left-drag translates in the ring plane, right-drag
 * yaws about the midpoint, an arrow click reorients to face its heading. */
export function ringDragUpdate(gizmo: GizmoState, action: StancePoseObj,
                               drag: RingDrag): UpdatePayload {
  const next: StancePoseObj = {
    ...action,
    left_foot: clonePose(action.left_foot),
    right_foot: clonePose(action.right_foot),
  };
  if (drag.kind === "translate") {
    const [du, dv] = dragToPlaneDelta(drag.dxPx, drag.dyPx, gizmo.metersPerPixel);
    for (const foot of [next.left_foot, next.right_foot]) {
      foot.position = [foot.position[0] + du, foot.position[1] + dv, foot.position[2]];
    }
  } else {
    const center = stanceMidpoint(next);
    const dyaw = drag.kind === "yaw" ? drag.dtheta : drag.heading - meanYaw(next);
    next.left_foot = rotateFootAbout(next.left_foot, center, dyaw);
    next.right_foot = rotateFootAbout(next.right_foot, center, dyaw);
  }
  return updateCommand(gizmo.targetIndex, next);
}

export type NudgeKey = "up" | "down" | "left" | "right" | "pageup" | "pagedown";

const TRANSLATION_DIRECTIONS: Record<NudgeKey, Vec3> = {
  up: [1, 0, 0],
  down: [-1, 0, 0],
  left: [0, 1, 0],
  right: [0, -1, 0],
  pageup: [0, 0, 1],
  pagedown: [0, 0, -1],
};

const ROTATION_AXES: Partial<Record<Constraint, Vec3>> = {
  roll: [1, 0, 0],
  pitch: [0, 1, 0],
  yaw: [0, 0, 1],
};

/** Keyboard nudges: arrows translate in the adjustment frame (5 mm default),
 * with the rotation modifier they rotate about the active axis (1 degree).
 * `adjustmentInParent` is the adjustment frame's pose expressed in the
 * action's parent frame, as reported by the engine's frame tree. */
export function gizmoNudge(gizmo: GizmoState, action: HandPoseObj, key: NudgeKey,
                           rotateModifier: boolean,
                           adjustmentInParent: Pose): UpdatePayload {
  const next: HandPoseObj = { ...action, goal: clonePose(action.goal) };
  if (!rotateModifier) {
    const step = DEFAULT_NUDGE_TRANSLATION * gizmo.sensitivity;
    const dirLocal = TRANSLATION_DIRECTIONS[key];
    const d = rotate(adjustmentInParent.orientation,
                     [dirLocal[0] * step, dirLocal[1] * step, dirLocal[2] * step]);
    next.goal.position = [next.goal.position[0] + d[0], next.goal.position[1] + d[1],
                          next.goal.position[2] + d[2]];
  } else {
    const axis = ROTATION_AXES[gizmo.activeConstraint] ?? [0, 0, 1];
    const sign = key === "up" || key === "left" || key === "pageup" ? 1 : -1;
    const angle = sign * DEFAULT_NUDGE_ROTATION * gizmo.sensitivity;
    const axisWorld = rotate(adjustmentInParent.orientation, axis);
    // rotate the pose in place about the adjustment-frame axis
    next.goal.orientation = quatMul(quatFromAxisAngle(axisWorld, angle), next.goal.orientation);
  }
  return updateCommand(gizmo.targetIndex, next);
}

/** The context menu's absolute-value editor: the command payload carries the
 * typed numbers verbatim. */
export function absolutePoseEdit(gizmo: GizmoState, action: HandPoseObj,
                                 typed: Pose): UpdatePayload {
  return updateCommand(gizmo.targetIndex, { ...action, goal: typed });
}

export function stanceFromRing(x: number, y: number, yaw: number, width = 0.25): StancePoseObj {
  const lat: [number, number] = [-Math.sin(yaw), Math.cos(yaw)];
  return {
    kind: "stance_pose",
    description: "New stance",
    parent_frame: "world",
    left_foot: poseFromXyYaw(x + lat[0] * width / 2, y + lat[1] * width / 2, yaw),
    right_foot: poseFromXyYaw(x - lat[0] * width / 2, y - lat[1] * width / 2, yaw),
    swing_duration: 1.2,
    transfer_duration: 0.8,
  };
}
