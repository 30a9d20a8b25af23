import * as THREE from "three";
import { OrbitControls } from "three/examples/jsm/controls/OrbitControls.js";

/** Orbitable shaded view of one body mesh at a time. */
export class MeshViewer {
  private readonly renderer: THREE.WebGLRenderer;
  private readonly scene: THREE.Scene;
  private readonly camera: THREE.PerspectiveCamera;
  private readonly controls: OrbitControls;
  private readonly observer: ResizeObserver;
  private body: THREE.Mesh | null = null;
  private disposed = false;

  constructor(private readonly container: HTMLElement) {
    this.renderer = new THREE.WebGLRenderer({ antialias: true });
    this.renderer.setPixelRatio(Math.min(window.devicePixelRatio, 2));
    this.renderer.setSize(container.clientWidth, container.clientHeight);
    container.appendChild(this.renderer.domElement);

    this.scene = new THREE.Scene();
    this.scene.background = new THREE.Color(0x0f172a);

    const aspect = container.clientWidth / Math.max(1, container.clientHeight);
    this.camera = new THREE.PerspectiveCamera(45, aspect, 0.01, 100);
    this.camera.position.set(1.6, 1.4, 2.4);

    this.controls = new OrbitControls(this.camera, this.renderer.domElement);
    this.controls.enableDamping = true;
    this.controls.dampingFactor = 0.08;
    this.controls.target.set(0, 0.9, 0);

    this.scene.add(new THREE.HemisphereLight(0xffffff, 0x334155, 1.6));
    const key = new THREE.DirectionalLight(0xffffff, 2.2);
    key.position.set(2, 4, 3);
    this.scene.add(key);
    const fill = new THREE.DirectionalLight(0x93c5fd, 0.6);
    fill.position.set(-3, 1, -2);
    this.scene.add(fill);

    const grid = new THREE.GridHelper(4, 20, 0x475569, 0x1e293b);
    this.scene.add(grid);

    this.observer = new ResizeObserver(() => this.resize());
    this.observer.observe(container);

    const animate = () => {
      if (this.disposed) return;
      requestAnimationFrame(animate);
      this.controls.update();
      this.renderer.render(this.scene, this.camera);
    };
    animate();
  }

  showMesh(vertices: number[][], faces: number[][]): void {
    this.clear();
    const geometry = new THREE.BufferGeometry();
    const positions = new Float32Array(vertices.length * 3);
    for (let i = 0; i < vertices.length; i++) {
      positions[3 * i] = vertices[i][0];
      positions[3 * i + 1] = vertices[i][1];
      positions[3 * i + 2] = vertices[i][2];
    }
    const index = new Uint32Array(faces.length * 3);
    for (let i = 0; i < faces.length; i++) {
      index[3 * i] = faces[i][0];
      index[3 * i + 1] = faces[i][1];
      index[3 * i + 2] = faces[i][2];
    }
    geometry.setAttribute("position", new THREE.BufferAttribute(positions, 3));
    geometry.setIndex(new THREE.BufferAttribute(index, 1));
    geometry.computeVertexNormals();

    const material = new THREE.MeshStandardMaterial({
      color: 0x7dd3fc,
      metalness: 0.05,
      roughness: 0.65,
    });
    this.body = new THREE.Mesh(geometry, material);
    this.scene.add(this.body);
    this.frame(geometry);
  }

  clear(): void {
    if (!this.body) return;
    this.scene.remove(this.body);
    this.body.geometry.dispose();
    (this.body.material as THREE.Material).dispose();
    this.body = null;
  }

  dispose(): void {
    this.disposed = true;
    this.clear();
    this.observer.disconnect();
    this.controls.dispose();
    this.renderer.dispose();
    this.renderer.domElement.remove();
  }

  private frame(geometry: THREE.BufferGeometry): void {
    geometry.computeBoundingSphere();
    const sphere = geometry.boundingSphere;
    if (!sphere) return;
    this.controls.target.copy(sphere.center);
    const distance = sphere.radius * 2.6;
    const direction = new THREE.Vector3(0.55, 0.25, 1).normalize();
    this.camera.position.copy(sphere.center).addScaledVector(direction, distance);
    this.camera.near = sphere.radius / 100;
    this.camera.far = sphere.radius * 100;
    this.camera.updateProjectionMatrix();
  }

  private resize(): void {
    const w = this.container.clientWidth;
    const h = Math.max(1, this.container.clientHeight);
    this.camera.aspect = w / h;
    this.camera.updateProjectionMatrix();
    this.renderer.setSize(w, h);
  }
}
