// Entry point: connect to the engine, mirror its state, and wire the panel,
// gizmo gestures, and ghost previews together.

import { GhostPreviews } from "./ghosts.js";
import { GizmoState, HandPoseObj, RingDrag, StancePoseObj, gizmoNudge, ringDragUpdate } from "./gizmo.js";
import { IDENTITY } from "./math.js";
import { CommandClient, parseEnvelope } from "./protocol.js";
import { SceneMirror } from "./sceneState.js";
import { SequencePanel } from "./panel.js";
import { View3D } from "./render.js";

const WS_URL = new URLSearchParams(location.search).get("ws") ?? "ws://localhost:8765";

const canvas = document.getElementById("view") as HTMLCanvasElement;
const panelHost = document.getElementById("panel") as HTMLElement;
const statusLine = document.getElementById("status") as HTMLElement;

const mirror = new SceneMirror();
const view = new View3D(canvas);

const socket = new WebSocket(WS_URL);
const client = new CommandClient((data) => socket.send(data));
const ghosts = new GhostPreviews(client);

const gizmo: GizmoState = {
  targetIndex: -1,
  adjustmentFrame: "world",
  activeConstraint: "yaw",
  sensitivity: 1.0,
  metersPerPixel: 0.004,
};

const panel = new SequencePanel(panelHost, client, {
  onSelectAction(index) {
    gizmo.targetIndex = index;
    const action = mirror.sequence.actions[index];
    if (action?.kind === "stance_pose") {
      const stance = action as StancePoseObj;
      ghosts.requestStanceGhost(stance.parent_frame, stance.left_foot, stance.right_foot);
    } else {
      ghosts.stanceGhost = null;
    }
  },
});

socket.addEventListener("open", () => {
  statusLine.textContent = `connected to ${WS_URL}`;
});
socket.addEventListener("close", () => {
  statusLine.textContent = "disconnected — restart the engine and reload";
});
socket.addEventListener("message", (event) => {
  const env = parseEnvelope(event.data as string);
  if (client.handleReply(env)) return;
  mirror.applyEnvelope(env);
  if (env.type === "hello" || env.type === "robot_state") {
    panel.render(mirror.sequence, mirror.executor);
    view.updateRobot(mirror);
    view.updateFrames(mirror);
  }
  if (env.type === "action_status") {
    panel.render(mirror.sequence, mirror.executor);
    const p = env.payload as { index: number; status: string; description: string };
    statusLine.textContent = `action ${p.index} ${p.status}: ${p.description}`;
  }
  if (env.type === "point_cloud") {
    view.updateCloud(env.payload["points"] as number[]);
  }
});

// gizmo interactions: drag on the canvas moves the bound stance action,
// arrow keys nudge the bound hand pose in the adjustment frame
let dragging: { button: number; lastX: number; lastY: number } | null = null;

canvas.addEventListener("mousedown", (e) => {
  dragging = { button: e.button, lastX: e.clientX, lastY: e.clientY };
});
window.addEventListener("mouseup", () => (dragging = null));
canvas.addEventListener("contextmenu", (e) => e.preventDefault());
canvas.addEventListener("mousemove", (e) => {
  if (!dragging || gizmo.targetIndex < 0) return;
  const action = mirror.sequence.actions[gizmo.targetIndex];
  if (action?.kind !== "stance_pose") return;
  const dx = e.clientX - dragging.lastX;
  const dy = e.clientY - dragging.lastY;
  dragging.lastX = e.clientX;
  dragging.lastY = e.clientY;
  const drag: RingDrag = dragging.button === 2
    ? { kind: "yaw", dtheta: -dx * 0.01 }
    : { kind: "translate", dxPx: dx, dyPx: dy };
  const payload = ringDragUpdate(gizmo, action as StancePoseObj, drag);
  client.command("sequence_edit", payload as unknown as Record<string, unknown>);
});

const NUDGE_KEYS: Record<string, "up" | "down" | "left" | "right" | "pageup" | "pagedown"> = {
  ArrowUp: "up", ArrowDown: "down", ArrowLeft: "left", ArrowRight: "right",
  PageUp: "pageup", PageDown: "pagedown",
};

window.addEventListener("keydown", (e) => {
  const key = NUDGE_KEYS[e.key];
  if (!key || gizmo.targetIndex < 0) return;
  const action = mirror.sequence.actions[gizmo.targetIndex];
  if (action?.kind !== "hand_pose") return;
  const hand = action as HandPoseObj;
  const payload = gizmoNudge(gizmo, hand, key, e.shiftKey, IDENTITY);
  client.command("sequence_edit", payload as unknown as Record<string, unknown>);
  ghosts.requestArmGhost(hand.side, hand.parent_frame, (payload.action as HandPoseObj).goal);
  e.preventDefault();
});

function animate(): void {
  ghosts.flushPending();
  view.updateGhosts(ghosts.armGhost, ghosts.stanceGhost);
  view.frame();
  requestAnimationFrame(animate);
}

function fit(): void {
  view.resize(canvas.clientWidth, canvas.clientHeight);
}
window.addEventListener("resize", fit);
fit();
animate();
