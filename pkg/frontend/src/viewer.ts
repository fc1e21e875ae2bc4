// 3D view: orbit-controlled scene showing the current mesh payload.

import * as THREE from "three";
import { OrbitControls } from "three/addons/controls/OrbitControls.js";
import type { MeshPayload } from "./api.js";
import type { CameraState } from "./state.js";

export class MeshViewer {
  readonly renderer: THREE.WebGLRenderer;
  readonly scene: THREE.Scene;
  readonly camera: THREE.PerspectiveCamera;
  readonly controls: OrbitControls;
  private mesh: THREE.Mesh | null = null;
  private material: THREE.MeshStandardMaterial;
  onCameraChange: (() => void) | null = null;

  constructor(container: HTMLElement) {
    this.renderer = new THREE.WebGLRenderer({ antialias: true });
    this.renderer.setPixelRatio(window.devicePixelRatio);
    container.appendChild(this.renderer.domElement);

    this.scene = new THREE.Scene();
    this.scene.background = new THREE.Color(0x10141a);
    this.camera = new THREE.PerspectiveCamera(45, 1, 0.01, 50);
    this.camera.position.set(1.6, 1.2, 1.6);

    this.controls = new OrbitControls(this.camera, this.renderer.domElement);
    this.controls.enableDamping = true;
    this.controls.addEventListener("end", () => this.onCameraChange?.());

    const hemi = new THREE.HemisphereLight(0xbfd4ff, 0x202028, 0.9);
    const key = new THREE.DirectionalLight(0xffffff, 1.4);
    key.position.set(2, 3, 2);
    const rim = new THREE.DirectionalLight(0x99bbff, 0.5);
    rim.position.set(-3, -1, -2);
    this.scene.add(hemi, key, rim);
    this.scene.add(new THREE.AxesHelper(0.25));

    this.material = new THREE.MeshStandardMaterial({
      color: 0x6fa8dc,
      metalness: 0.05,
      roughness: 0.55,
      flatShading: false,
    });

    const resize = () => {
      const w = container.clientWidth || 640;
      const h = container.clientHeight || 480;
      this.renderer.setSize(w, h);
      this.camera.aspect = w / h;
      this.camera.updateProjectionMatrix();
    };
    new ResizeObserver(resize).observe(container);
    resize();

    const animate = () => {
      requestAnimationFrame(animate);
      this.controls.update();
      this.renderer.render(this.scene, this.camera);
    };
    animate();
  }

  setMesh(payload: MeshPayload): void {
    const geometry = new THREE.BufferGeometry();
    geometry.setAttribute(
      "position",
      new THREE.Float32BufferAttribute(payload.vertices, 3)
    );
    geometry.setIndex(payload.triangles);
    geometry.computeVertexNormals();
    if (this.mesh) {
      this.mesh.geometry.dispose();
      this.mesh.geometry = geometry;
    } else {
      this.mesh = new THREE.Mesh(geometry, this.material);
      this.scene.add(this.mesh);
    }
  }

  setWireframe(on: boolean): void {
    this.material.wireframe = on;
  }

  readCamera(): CameraState {
    const p = this.camera.position;
    const t = this.controls.target;
    return { position: [p.x, p.y, p.z], target: [t.x, t.y, t.z] };
  }

  applyCamera(state: CameraState): void {
    this.camera.position.set(...state.position);
    this.controls.target.set(...state.target);
    this.controls.update();
  }
}
