// Point-cloud view: orthographic-ish perspective projection onto a 2D
// canvas with orbit controls. 25k points redraw comfortably per frame;
// visited vertices turn blue, unvisited stay red, matching the scan
// convention. Capsule and magnet render as markers.

export interface OrbitCamera {
  yaw: number;
  pitch: number;
  distance: number;
  target: [number, number, number];
}

const UNVISITED = "#d84334";
const VISITED = "#2962ff";

export class PointCloudRenderer {
  private ctx: CanvasRenderingContext2D;
  camera: OrbitCamera = { yaw: 0.6, pitch: 0.35, distance: 0.28, target: [0, 0, 0] };

  constructor(private canvas: HTMLCanvasElement) {
    const ctx = canvas.getContext("2d");
    if (!ctx) throw new Error("2d canvas unavailable");
    this.ctx = ctx;
  }

  fitTo(positions: Float32Array): void {
    if (positions.length === 0) return;
    const center: [number, number, number] = [0, 0, 0];
    let maxR = 1e-6;
    const n = positions.length / 3;
    for (let i = 0; i < n; i++) {
      center[0] += positions[3 * i];
      center[1] += positions[3 * i + 1];
      center[2] += positions[3 * i + 2];
    }
    center[0] /= n; center[1] /= n; center[2] /= n;
    for (let i = 0; i < n; i++) {
      const dx = positions[3 * i] - center[0];
      const dy = positions[3 * i + 1] - center[1];
      const dz = positions[3 * i + 2] - center[2];
      maxR = Math.max(maxR, Math.hypot(dx, dy, dz));
    }
    this.camera.target = center;
    this.camera.distance = maxR * 3.2;
  }

  project(x: number, y: number, z: number): [number, number, number] {
    const { yaw, pitch, distance, target } = this.camera;
    const dx = x - target[0];
    const dy = y - target[1];
    const dz = z - target[2];
    // rotate the world so the camera looks down +z in view space
    const cx = Math.cos(yaw), sx = Math.sin(yaw);
    const cy = Math.cos(pitch), sy = Math.sin(pitch);
    const vx = cx * dx + sx * dz;
    const vz0 = -sx * dx + cx * dz;
    const vy = cy * dy - sy * vz0;
    const vz = sy * dy + cy * vz0 + distance;
    const w = this.canvas.width, h = this.canvas.height;
    const focal = 1.2 * Math.min(w, h);
    const scale = focal / Math.max(vz, 1e-4);
    return [w / 2 + vx * scale, h / 2 - vy * scale, vz];
  }

  draw(positions: Float32Array, visited: Uint8Array,
       capsulePos?: number[], magnetPos?: number[]): void {
    const { ctx, canvas } = this;
    ctx.fillStyle = "#10141c";
    ctx.fillRect(0, 0, canvas.width, canvas.height);
    const n = positions.length / 3;
    ctx.fillStyle = UNVISITED;
    for (let pass = 0; pass < 2; pass++) {
      ctx.fillStyle = pass === 0 ? UNVISITED : VISITED;
      const want = pass === 1 ? 1 : 0;
      for (let i = 0; i < n; i++) {
        if (visited[i] !== want) continue;
        const [px, py, vz] = this.project(
          positions[3 * i], positions[3 * i + 1], positions[3 * i + 2]);
        if (vz <= 0) continue;
        ctx.fillRect(px, py, 2, 2);
      }
    }
    if (capsulePos) this.marker(capsulePos, "#ffd54f", 5);
    if (magnetPos) this.marker(magnetPos, "#69f0ae", 6);
  }

  private marker(pos: number[], color: string, r: number): void {
    const [px, py, vz] = this.project(pos[0], pos[1], pos[2]);
    if (vz <= 0) return;
    const { ctx } = this;
    ctx.strokeStyle = color;
    ctx.lineWidth = 2;
    ctx.beginPath();
    ctx.arc(px, py, r, 0, 2 * Math.PI);
    ctx.stroke();
  }

  attachOrbitControls(): void {
    let dragging = false;
    let lastX = 0, lastY = 0;
    this.canvas.addEventListener("pointerdown", (e) => {
      dragging = true;
      lastX = e.clientX;
      lastY = e.clientY;
      this.canvas.setPointerCapture(e.pointerId);
    });
    this.canvas.addEventListener("pointermove", (e) => {
      if (!dragging) return;
      this.camera.yaw += (e.clientX - lastX) * 0.008;
      this.camera.pitch = Math.max(-1.4, Math.min(1.4,
        this.camera.pitch + (e.clientY - lastY) * 0.008));
      lastX = e.clientX;
      lastY = e.clientY;
    });
    this.canvas.addEventListener("pointerup", () => { dragging = false; });
    this.canvas.addEventListener("wheel", (e) => {
      e.preventDefault();
      this.camera.distance *= e.deltaY > 0 ? 1.1 : 0.9;
    }, { passive: false });
  }
}
