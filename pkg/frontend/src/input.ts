// Two-axis operator input: WASD/arrow keys plus a pointer joystick pad.
// Axes map to the magnet's horizontal velocity command (x, z), each
// clamped to [-1, 1].

export class AxisInput {
  ax = 0;
  az = 0;
  private keys = new Set<string>();

  attachKeyboard(target: Window): void {
    target.addEventListener("keydown", (e) => {
      this.keys.add((e as KeyboardEvent).key.toLowerCase());
      this.recompute();
    });
    target.addEventListener("keyup", (e) => {
      this.keys.delete((e as KeyboardEvent).key.toLowerCase());
      this.recompute();
    });
  }

  attachJoystick(pad: HTMLElement, knob: HTMLElement): void {
    let active = false;
    const radius = pad.clientWidth / 2;
    const move = (e: PointerEvent) => {
      const rect = pad.getBoundingClientRect();
      let dx = (e.clientX - rect.left - radius) / radius;
      let dz = (e.clientY - rect.top - radius) / radius;
      const mag = Math.hypot(dx, dz);
      if (mag > 1) { dx /= mag; dz /= mag; }
      this.ax = dx;
      this.az = dz;
      knob.style.transform =
        `translate(${dx * radius * 0.6}px, ${dz * radius * 0.6}px)`;
    };
    pad.addEventListener("pointerdown", (e) => {
      active = true;
      pad.setPointerCapture(e.pointerId);
      move(e);
    });
    pad.addEventListener("pointermove", (e) => { if (active) move(e); });
    const release = () => {
      active = false;
      this.ax = 0;
      this.az = 0;
      knob.style.transform = "translate(0px, 0px)";
    };
    pad.addEventListener("pointerup", release);
    pad.addEventListener("pointercancel", release);
  }

  private recompute(): void {
    const k = this.keys;
    let ax = 0, az = 0;
    if (k.has("a") || k.has("arrowleft")) ax -= 1;
    if (k.has("d") || k.has("arrowright")) ax += 1;
    if (k.has("w") || k.has("arrowup")) az -= 1;
    if (k.has("s") || k.has("arrowdown")) az += 1;
    this.ax = ax;
    this.az = az;
  }
}
