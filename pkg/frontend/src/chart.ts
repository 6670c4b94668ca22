// Live coverage-vs-time strip chart on a small canvas.

import { ChartPoint } from "./session.js";

export class CoverageChart {
  private ctx: CanvasRenderingContext2D;

  constructor(private canvas: HTMLCanvasElement) {
    const ctx = canvas.getContext("2d");
    if (!ctx) throw new Error("2d canvas unavailable");
    this.ctx = ctx;
  }

  draw(points: ChartPoint[], maxTime: number): void {
    const { ctx, canvas } = this;
    const w = canvas.width, h = canvas.height;
    ctx.fillStyle = "#10141c";
    ctx.fillRect(0, 0, w, h);
    ctx.strokeStyle = "#3a4356";
    ctx.lineWidth = 1;
    for (const frac of [0.25, 0.5, 0.75]) {
      ctx.beginPath();
      ctx.moveTo(0, h * frac);
      ctx.lineTo(w, h * frac);
      ctx.stroke();
    }
    if (points.length === 0) return;
    const tmax = Math.max(maxTime, points[points.length - 1].simTime, 1);
    ctx.strokeStyle = "#64b5f6";
    ctx.lineWidth = 2;
    ctx.beginPath();
    points.forEach((p, i) => {
      const x = (p.simTime / tmax) * w;
      const y = h - (p.coverage / 100) * h;
      if (i === 0) ctx.moveTo(x, y);
      else ctx.lineTo(x, y);
    });
    ctx.stroke();
    ctx.fillStyle = "#e8eaf0";
    ctx.font = "11px sans-serif";
    const last = points[points.length - 1];
    ctx.fillText(`${last.coverage.toFixed(1)}%`, w - 48, 14);
  }
}
