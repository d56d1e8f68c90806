/**
 * three.js point-cloud viewer with orbit navigation and a screen-space
 * brush. Sensor axes (forward, left, up) map to scene axes
 * (x, y, z) = (-left, up, -forward) so forward points into the screen.
 */

import * as THREE from "three";
import { OrbitControls } from "three/examples/jsm/controls/OrbitControls.js";
import { Cloud } from "./api.js";

export interface BrushEvents {
  strokeEnd: (picked: number[]) => void;
}

export class CloudViewer {
  readonly scene = new THREE.Scene();
  readonly camera: THREE.PerspectiveCamera;
  private readonly renderer: THREE.WebGLRenderer;
  private readonly controls: OrbitControls;
  private points: THREE.Points | null = null;
  private colorAttr: THREE.BufferAttribute | null = null;
  private cloud: Cloud | null = null;
  private brushing = false;
  private brushActive = false;
  private stroke = new Set<number>();
  private brushRadiusPx = 14;

  constructor(private readonly canvas: HTMLCanvasElement,
              private readonly events: BrushEvents) {
    this.renderer = new THREE.WebGLRenderer({ canvas, antialias: true });
    this.camera = new THREE.PerspectiveCamera(60, 1, 0.1, 500);
    this.camera.position.set(0, 35, 45);
    this.camera.up.set(0, 1, 0);
    this.scene.background = new THREE.Color(0x10131a);
    this.controls = new OrbitControls(this.camera, canvas);
    this.controls.target.set(0, -1.7, 0);
    canvas.addEventListener("pointerdown", (e) => this.onPointerDown(e));
    canvas.addEventListener("pointermove", (e) => this.onPointerMove(e));
    window.addEventListener("pointerup", () => this.onPointerUp());
    const animate = () => {
      requestAnimationFrame(animate);
      this.controls.update();
      this.resize();
      this.renderer.render(this.scene, this.camera);
    };
    animate();
  }

  /** Brush mode disables orbiting so drags paint instead of rotating. */
  setBrushing(brushing: boolean): void {
    this.brushing = brushing;
    this.controls.enableRotate = !brushing;
    this.controls.enablePan = !brushing;
  }

  setCloud(cloud: Cloud, colors: Float32Array): void {
    if (this.points) {
      this.scene.remove(this.points);
      this.points.geometry.dispose();
      (this.points.material as THREE.Material).dispose();
    }
    this.cloud = cloud;
    const positions = new Float32Array(cloud.count * 3);
    for (let i = 0; i < cloud.count; i++) {
      positions[3 * i] = -cloud.left[i];
      positions[3 * i + 1] = cloud.up[i];
      positions[3 * i + 2] = -cloud.forward[i];
    }
    const geometry = new THREE.BufferGeometry();
    geometry.setAttribute("position", new THREE.BufferAttribute(positions, 3));
    this.colorAttr = new THREE.BufferAttribute(colors, 3);
    geometry.setAttribute("color", this.colorAttr);
    const material = new THREE.PointsMaterial({ size: 0.12, vertexColors: true });
    this.points = new THREE.Points(geometry, material);
    this.scene.add(this.points);
  }

  updateColors(colors: Float32Array): void {
    if (this.colorAttr) {
      (this.colorAttr.array as Float32Array).set(colors);
      this.colorAttr.needsUpdate = true;
    }
  }

  /** Indices whose projection falls within the brush circle. */
  pickScreen(clientX: number, clientY: number): number[] {
    if (!this.cloud || !this.points) return [];
    const rect = this.canvas.getBoundingClientRect();
    const picked: number[] = [];
    const v = new THREE.Vector3();
    for (let i = 0; i < this.cloud.count; i++) {
      v.set(-this.cloud.left[i], this.cloud.up[i], -this.cloud.forward[i]);
      v.project(this.camera);
      if (v.z < -1 || v.z > 1) continue;
      const sx = rect.left + ((v.x + 1) / 2) * rect.width;
      const sy = rect.top + ((1 - v.y) / 2) * rect.height;
      const dx = sx - clientX;
      const dy = sy - clientY;
      if (dx * dx + dy * dy <= this.brushRadiusPx * this.brushRadiusPx) {
        picked.push(i);
      }
    }
    return picked;
  }

  private onPointerDown(e: PointerEvent): void {
    if (!this.brushing) return;
    this.brushActive = true;
    this.stroke.clear();
    this.extend(e);
  }

  private onPointerMove(e: PointerEvent): void {
    if (this.brushActive) this.extend(e);
  }

  private onPointerUp(): void {
    if (!this.brushActive) return;
    this.brushActive = false;
    const picked = [...this.stroke];
    this.stroke.clear();
    if (picked.length > 0) this.events.strokeEnd(picked);
  }

  private extend(e: PointerEvent): void {
    for (const i of this.pickScreen(e.clientX, e.clientY)) {
      this.stroke.add(i);
    }
  }

  private resize(): void {
    const w = this.canvas.clientWidth;
    const h = this.canvas.clientHeight;
    if (this.canvas.width !== w || this.canvas.height !== h) {
      this.renderer.setSize(w, h, false);
      this.camera.aspect = w / Math.max(1, h);
      this.camera.updateProjectionMatrix();
    }
  }
}
