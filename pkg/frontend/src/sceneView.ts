// 3D scene view: robot link chain, scene objects (dimmed when only
// remembered), ee/camera triads. buildSceneModel is pure (tested in node);
// SceneRenderer applies the model to a three.js scene with an orbit-style
// camera, so the vantage point is free.

import { Snapshot, WirePose } from "./protocol.js";

export interface LinkSegment {
  from: [number, number, number];
  to: [number, number, number];
}

export interface BoxDrawable {
  id: string;
  pose: WirePose;
  dimmed: boolean;
  attached: boolean;
}

export interface TriadDrawable {
  name: string;
  pose: WirePose;
}

export interface SceneModel {
  links: LinkSegment[];
  boxes: BoxDrawable[];
  triads: TriadDrawable[];
}

export function buildSceneModel(snap: Snapshot | null): SceneModel {
  if (!snap) return { links: [], boxes: [], triads: [] };
  const links: LinkSegment[] = [];
  const frameNames = Object.keys(snap.frames).filter((n) => n !== "camera");
  let prev: [number, number, number] = [0, 0, 0];
  for (const name of frameNames) {
    const xyz = snap.frames[name].xyz;
    links.push({ from: prev, to: xyz });
    prev = xyz;
  }
  const boxes: BoxDrawable[] = snap.objects.map((o) => ({
    id: o.id,
    pose: o.pose,
    dimmed: o.status === "remembered",
    attached: o.attached,
  }));
  const triads: TriadDrawable[] = [];
  if (snap.frames.ee) triads.push({ name: "ee", pose: snap.frames.ee });
  if (snap.frames.camera) triads.push({ name: "camera", pose: snap.frames.camera });
  return { links, boxes, triads };
}

type Three = typeof import("three");

export class SceneRenderer {
  private three: Three;
  private scene: import("three").Scene;
  private camera: import("three").PerspectiveCamera;
  private renderer: import("three").WebGLRenderer;
  private chain: import("three").Line | null = null;
  private boxMeshes = new Map<string, import("three").Mesh>();
  private triads = new Map<string, import("three").AxesHelper>();
  private orbit = { yaw: 0.8, pitch: 0.5, radius: 1.8, target: [0.3, 0, 0.3] as [number, number, number] };

  constructor(three: Three, canvas: HTMLCanvasElement) {
    this.three = three;
    this.scene = new three.Scene();
    this.scene.background = new three.Color(0x10141c);
    this.camera = new three.PerspectiveCamera(50, canvas.clientWidth / canvas.clientHeight, 0.01, 50);
    this.renderer = new three.WebGLRenderer({ canvas, antialias: true });
    this.renderer.setSize(canvas.clientWidth, canvas.clientHeight, false);
    this.scene.add(new three.AmbientLight(0xffffff, 0.7));
    const sun = new three.DirectionalLight(0xffffff, 1.2);
    sun.position.set(1, 1, 2);
    this.scene.add(sun);
    const grid = new three.GridHelper(2, 20, 0x2a3244, 0x202634);
    grid.rotation.x = Math.PI / 2; // engine world is z-up
    this.scene.add(grid);
    this.attachOrbitControls(canvas);
  }

  private attachOrbitControls(canvas: HTMLCanvasElement): void {
    let dragging = false;
    let lastX = 0;
    let lastY = 0;
    canvas.addEventListener("mousedown", (ev) => {
      dragging = true;
      lastX = ev.clientX;
      lastY = ev.clientY;
    });
    window.addEventListener("mouseup", () => (dragging = false));
    window.addEventListener("mousemove", (ev) => {
      if (!dragging) return;
      this.orbit.yaw -= (ev.clientX - lastX) * 0.01;
      this.orbit.pitch = Math.max(-1.4, Math.min(1.4, this.orbit.pitch + (ev.clientY - lastY) * 0.01));
      lastX = ev.clientX;
      lastY = ev.clientY;
    });
    canvas.addEventListener("wheel", (ev) => {
      this.orbit.radius = Math.max(0.3, Math.min(8, this.orbit.radius * (1 + ev.deltaY * 0.001)));
      ev.preventDefault();
    });
  }

  private applyPose(obj: import("three").Object3D, pose: WirePose): void {
    obj.position.set(pose.xyz[0], pose.xyz[1], pose.xyz[2]);
    const [w, x, y, z] = pose.quat_wxyz;
    obj.quaternion.set(x, y, z, w);
  }

  update(model: SceneModel, halfExtents: Map<string, [number, number, number]>): void {
    const three = this.three;
    if (this.chain) this.scene.remove(this.chain);
    const pts = model.links.flatMap((l) => [
      new three.Vector3(...l.from),
      new three.Vector3(...l.to),
    ]);
    const geom = new three.BufferGeometry().setFromPoints(pts);
    this.chain = new three.LineSegments(geom, new three.LineBasicMaterial({ color: 0x8ab4ff, linewidth: 2 })) as never;
    this.scene.add(this.chain as never);

    for (const box of model.boxes) {
      let mesh = this.boxMeshes.get(box.id);
      if (!mesh) {
        const he = halfExtents.get(box.id) ?? [0.03, 0.03, 0.03];
        mesh = new three.Mesh(
          new three.BoxGeometry(2 * he[0], 2 * he[1], 2 * he[2]),
          new three.MeshStandardMaterial({ color: 0xd9933b }),
        );
        this.boxMeshes.set(box.id, mesh);
        this.scene.add(mesh);
      }
      const mat = mesh.material as import("three").MeshStandardMaterial;
      mat.opacity = box.dimmed ? 0.35 : 1.0;
      mat.transparent = box.dimmed;
      mat.color.set(box.attached ? 0x5fd97a : 0xd9933b);
      this.applyPose(mesh, box.pose);
    }

    for (const triad of model.triads) {
      let axes = this.triads.get(triad.name);
      if (!axes) {
        axes = new three.AxesHelper(triad.name === "ee" ? 0.12 : 0.07);
        this.triads.set(triad.name, axes);
        this.scene.add(axes);
      }
      this.applyPose(axes, triad.pose);
    }
  }

  render(): void {
    const { yaw, pitch, radius, target } = this.orbit;
    this.camera.position.set(
      target[0] + radius * Math.cos(pitch) * Math.cos(yaw),
      target[1] + radius * Math.cos(pitch) * Math.sin(yaw),
      target[2] + radius * Math.sin(pitch),
    );
    this.camera.up.set(0, 0, 1);
    this.camera.lookAt(...target);
    this.renderer.render(this.scene, this.camera);
  }
}
