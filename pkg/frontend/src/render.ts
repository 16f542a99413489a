/** Canvas drawing: map render, mask tint, compare divider, seam strips. */

import { EditorState } from "./state.js";
import { seamOverlay } from "./seams.js";
import { chunkKey } from "./types.js";

async function toBitmap(png: Uint8Array): Promise<ImageBitmap> {
  return createImageBitmap(new Blob([png.slice().buffer], { type: "image/png" }));
}

export class CanvasView {
  private readonly canvas: HTMLCanvasElement;
  private readonly ctx: CanvasRenderingContext2D;
  private readonly state: EditorState;
  private currentBitmap: ImageBitmap | null = null;
  private beforeBitmap: ImageBitmap | null = null;
  private renderToken = 0;
  showSeams = false;

  constructor(canvas: HTMLCanvasElement, state: EditorState) {
    this.canvas = canvas;
    this.ctx = canvas.getContext("2d")!;
    this.state = state;
    state.onChange = () => void this.redraw();
  }

  async redraw(): Promise<void> {
    const token = ++this.renderToken;
    if (this.state.currentRender) {
      const bitmap = await toBitmap(this.state.currentRender);
      if (token !== this.renderToken) return;
      this.currentBitmap = bitmap;
    }
    if (this.state.compareMode && this.state.beforeRender) {
      this.beforeBitmap = await toBitmap(this.state.beforeRender);
    }
    this.paint();
  }

  private paint(): void {
    const { ctx, canvas, state } = this;
    const vp = state.viewport;
    ctx.imageSmoothingEnabled = false;
    ctx.fillStyle = "#181818";
    ctx.fillRect(0, 0, canvas.width, canvas.height);
    if (!this.currentBitmap) return;

    const origin = vp.mapToScreen({ x: 0, y: 0 });
    const w = vp.mapWidth * vp.zoom;
    const h = vp.mapHeight * vp.zoom;

    if (state.compareMode && this.beforeBitmap) {
      const split = Math.round(canvas.width * state.compareDivider);
      ctx.save();
      ctx.beginPath();
      ctx.rect(0, 0, split, canvas.height);
      ctx.clip();
      ctx.drawImage(this.beforeBitmap, origin.x, origin.y, w, h);
      ctx.restore();
      ctx.save();
      ctx.beginPath();
      ctx.rect(split, 0, canvas.width - split, canvas.height);
      ctx.clip();
      ctx.drawImage(this.currentBitmap, origin.x, origin.y, w, h);
      ctx.restore();
      ctx.strokeStyle = "#ffffff";
      ctx.beginPath();
      ctx.moveTo(split, 0);
      ctx.lineTo(split, canvas.height);
      ctx.stroke();
    } else {
      ctx.drawImage(this.currentBitmap, origin.x, origin.y, w, h);
    }

    this.paintMasks();
    if (this.showSeams && state.seamReport) {
      this.paintSeams();
    }
  }

  private paintMasks(): void {
    const { ctx, state } = this;
    const vp = state.viewport;
    const ts = state.session.tile_size;
    ctx.save();
    ctx.fillStyle = "rgba(40, 120, 255, 0.45)";
    for (let cy = 0; cy < state.session.grid.height; cy++) {
      for (let cx = 0; cx < state.session.grid.width; cx++) {
        const layer = state.masks.layers.get(chunkKey(cx, cy));
        if (!layer || layer.isEmpty()) continue;
        for (let y = 0; y < ts; y++) {
          for (let x = 0; x < ts; x++) {
            if (!layer.get(x, y)) continue;
            const p = vp.mapToScreen({ x: cx * ts + x, y: cy * ts + y });
            ctx.fillRect(p.x, p.y, vp.zoom, vp.zoom);
          }
        }
      }
    }
    ctx.restore();
  }

  private paintSeams(): void {
    const { ctx, state } = this;
    const vp = state.viewport;
    for (const seg of seamOverlay(state.seamReport!, state.session.tile_size)) {
      const a = vp.mapToScreen({ x: seg.x0, y: seg.y0 });
      const b = vp.mapToScreen({ x: seg.x1, y: seg.y1 });
      ctx.strokeStyle = seg.color;
      ctx.lineWidth = Math.max(2, vp.zoom * 1.5);
      ctx.beginPath();
      ctx.moveTo(a.x, a.y);
      ctx.lineTo(b.x, b.y);
      ctx.stroke();
    }
  }
}
