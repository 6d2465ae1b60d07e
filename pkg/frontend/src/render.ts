// The 3D view: robot state, point cloud, detected task frames, footstep
// outlines, and ghost previews, drawn with three.js. Everything here is
// recreated from mirror state each update; nothing in the view is
// authoritative.

import * as THREE from "three";
import type { ArmGhost, StanceGhost } from "./ghosts.js";
import type { Pose } from "./math.js";
import type { SceneMirror } from "./sceneState.js";

function toThree(pose: Pose): { p: THREE.Vector3; q: THREE.Quaternion } {
  const [x, y, z] = pose.position;
  const [qw, qx, qy, qz] = pose.orientation;
  return { p: new THREE.Vector3(x, y, z), q: new THREE.Quaternion(qx, qy, qz, qw) };
}

export class View3D {
  private renderer: THREE.WebGLRenderer;
  private scene: THREE.Scene;
  private camera: THREE.PerspectiveCamera;
  private robotGroup = new THREE.Group();
  private framesGroup = new THREE.Group();
  private ghostGroup = new THREE.Group();
  private cloud: THREE.Points | null = null;

  constructor(canvas: HTMLCanvasElement) {
    this.renderer = new THREE.WebGLRenderer({ canvas, antialias: true });
    this.scene = new THREE.Scene();
    this.scene.background = new THREE.Color(0x1c2023);
    this.camera = new THREE.PerspectiveCamera(55, canvas.width / canvas.height, 0.05, 50);
    this.camera.position.set(-1.6, -1.6, 1.6);
    this.camera.up.set(0, 0, 1);
    this.camera.lookAt(1.2, 0, 0.8);

    this.scene.add(new THREE.AmbientLight(0xffffff, 0.7));
    const sun = new THREE.DirectionalLight(0xffffff, 0.9);
    sun.position.set(-2, -1, 4);
    this.scene.add(sun);
    const grid = new THREE.GridHelper(10, 20, 0x445055, 0x2a3135);
    grid.rotation.x = Math.PI / 2;
    this.scene.add(grid);
    this.scene.add(this.robotGroup, this.framesGroup, this.ghostGroup);
  }

  private box(size: [number, number, number], color: number, opacity = 1): THREE.Mesh {
    const mat = opacity < 1
      ? new THREE.MeshLambertMaterial({ color, transparent: true, opacity })
      : new THREE.MeshLambertMaterial({ color });
    return new THREE.Mesh(new THREE.BoxGeometry(...size), mat);
  }

  private place(obj: THREE.Object3D, pose: Pose, offset: [number, number, number] = [0, 0, 0]) {
    const { p, q } = toThree(pose);
    obj.quaternion.copy(q);
    obj.position.copy(p).add(new THREE.Vector3(...offset).applyQuaternion(q));
  }

  updateRobot(mirror: SceneMirror): void {
    this.robotGroup.clear();
    const world = mirror.world;
    if (!world) return;
    const pelvis = this.box([0.28, 0.32, 0.28], 0x4a7dbb);
    this.place(pelvis, world.pelvis);
    const chest = this.box([0.3, 0.36, 0.48], 0x5a8dcb);
    this.place(chest, world.pelvis, [0, 0, 0.42]);
    this.robotGroup.add(pelvis, chest);
    for (const side of ["left", "right"] as const) {
      const foot = this.box([0.24, 0.1, 0.05], 0x333a40);
      this.place(foot, world.feet[side], [0.02, 0, 0.025]);
      const hand = this.box([0.07, 0.12, 0.07], side === "left" ? 0xd0a030 : 0x30a0d0);
      this.place(hand, world.hands[side]);
      this.robotGroup.add(foot, hand);
    }
    for (const [id, pose] of Object.entries(world.objects)) {
      const marker = this.box([0.06, 0.06, 0.06], id.includes("can") ? 0xcc3322 : 0x888880, 0.9);
      this.place(marker, pose);
      this.robotGroup.add(marker);
    }
  }

  updateFrames(mirror: SceneMirror): void {
    this.framesGroup.clear();
    for (const name of Object.keys(mirror.frames)) {
      const pose = mirror.resolveWorld(name);
      if (!pose) continue;
      const axes = new THREE.AxesHelper(name.startsWith("door") || name.includes("frame") ? 0.3 : 0.15);
      this.place(axes, pose);
      this.framesGroup.add(axes);
    }
  }

  updateCloud(points: number[]): void {
    if (this.cloud) this.scene.remove(this.cloud);
    const n = Math.floor(points.length / 6);
    const positions = new Float32Array(n * 3);
    const colors = new Float32Array(n * 3);
    for (let i = 0; i < n; i++) {
      positions.set(points.slice(i * 6, i * 6 + 3), i * 3);
      colors.set(points.slice(i * 6 + 3, i * 6 + 6), i * 3);
    }
    const geo = new THREE.BufferGeometry();
    geo.setAttribute("position", new THREE.BufferAttribute(positions, 3));
    geo.setAttribute("color", new THREE.BufferAttribute(colors, 3));
    this.cloud = new THREE.Points(geo, new THREE.PointsMaterial({ size: 0.015, vertexColors: true }));
    this.scene.add(this.cloud);
  }

  updateGhosts(arm: ArmGhost | null, stance: StanceGhost | null): void {
    this.ghostGroup.clear();
    if (arm) {
      const color = arm.style === "warning" ? 0xdd5533 : 0x66ccee;
      const hand = this.box([0.08, 0.13, 0.08], color, 0.45);
      this.place(hand, arm.solution.achieved_pose);
      const goal = new THREE.AxesHelper(0.12);
      this.place(goal, arm.goalWorld);
      this.ghostGroup.add(hand, goal);
    }
    if (stance) {
      for (const step of stance.steps) {
        const outline = this.box([0.24, 0.1, 0.01],
                                 step.side === "left" ? 0xd0a030 : 0x30a0d0, 0.5);
        this.place(outline, step.pose, [0.02, 0, 0.005]);
        this.ghostGroup.add(outline);
      }
      // translucent robot at the goal stance: the plan's final two steps are
      // the goal foot poses, so the ghost pelvis stands at their midpoint
      const last = stance.steps.slice(-2);
      if (last.length === 2) {
        const mid: [number, number, number] = [
          (last[0].pose.position[0] + last[1].pose.position[0]) / 2,
          (last[0].pose.position[1] + last[1].pose.position[1]) / 2,
          0.8,
        ];
        const ghostPelvis = this.box([0.28, 0.32, 0.28], 0x66ccee, 0.3);
        ghostPelvis.position.set(...mid);
        ghostPelvis.quaternion.copy(toThree(last[0].pose).q);
        const ghostChest = this.box([0.3, 0.36, 0.48], 0x66ccee, 0.3);
        ghostChest.position.set(mid[0], mid[1], mid[2] + 0.42);
        ghostChest.quaternion.copy(ghostPelvis.quaternion);
        this.ghostGroup.add(ghostPelvis, ghostChest);
      }
    }
  }

  frame(): void {
    this.renderer.render(this.scene, this.camera);
  }

  resize(width: number, height: number): void {
    this.renderer.setSize(width, height, false);
    this.camera.aspect = width / height;
    this.camera.updateProjectionMatrix();
  }
}
