/** Per-chunk brush mask layers and stroke rasterization.
 *
 * Strokes are rasterized in map-pixel space at tile resolution (the same
 * grid the service expects), then split into per-chunk layers, so a stroke
 * crossing a chunk border lands in both layers with no resampling.
 */

import { encodeGrayPng, bytesToBase64 } from "./png.js";
import { chunkKey, Point } from "./types.js";

export class MaskLayer {
  readonly side: number;
  readonly data: Uint8Array;

  constructor(side: number) {
    this.side = side;
    this.data = new Uint8Array(side * side);
  }

  set(x: number, y: number, value: number): void {
    this.data[y * this.side + x] = value;
  }

  get(x: number, y: number): number {
    return this.data[y * this.side + x];
  }

  pixelCount(): number {
    let count = 0;
    for (const v of this.data) if (v > 0) count++;
    return count;
  }

  isEmpty(): boolean {
    return this.pixelCount() === 0;
  }

  clear(): void {
    this.data.fill(0);
  }

  toPngBase64(): string {
    const bytes = new Uint8Array(this.data.length);
    for (let i = 0; i < this.data.length; i++) bytes[i] = this.data[i] > 0 ? 255 : 0;
    return bytesToBase64(encodeGrayPng(bytes, this.side, this.side));
  }
}

export class MaskSet {
  readonly tileSize: number;
  readonly gridWidth: number;
  readonly gridHeight: number;
  readonly layers = new Map<string, MaskLayer>();

  constructor(tileSize: number, gridWidth: number, gridHeight: number) {
    this.tileSize = tileSize;
    this.gridWidth = gridWidth;
    this.gridHeight = gridHeight;
  }

  get mapWidth(): number {
    return this.gridWidth * this.tileSize;
  }

  get mapHeight(): number {
    return this.gridHeight * this.tileSize;
  }

  layerAt(cx: number, cy: number): MaskLayer {
    const key = chunkKey(cx, cy);
    let layer = this.layers.get(key);
    if (!layer) {
      layer = new MaskLayer(this.tileSize);
      this.layers.set(key, layer);
    }
    return layer;
  }

  /** Stamp one disk in map pixels; returns the touched chunk keys. */
  stampDisk(center: Point, radius: number, value: number, touched: Set<string>): void {
    const ts = this.tileSize;
    const x0 = Math.max(0, Math.floor(center.x - radius - 1));
    const x1 = Math.min(this.mapWidth - 1, Math.ceil(center.x + radius + 1));
    const y0 = Math.max(0, Math.floor(center.y - radius - 1));
    const y1 = Math.min(this.mapHeight - 1, Math.ceil(center.y + radius + 1));
    const r2 = radius * radius;
    for (let y = y0; y <= y1; y++) {
      for (let x = x0; x <= x1; x++) {
        const dx = x + 0.5 - center.x;
        const dy = y + 0.5 - center.y;
        if (dx * dx + dy * dy > r2) continue;
        const cx = Math.floor(x / ts);
        const cy = Math.floor(y / ts);
        this.layerAt(cx, cy).set(x - cx * ts, y - cy * ts, value);
        touched.add(chunkKey(cx, cy));
      }
    }
  }

  /**
   * Rasterize a pointer path (map pixels) as disks stamped along each
   * segment; eraser strokes clear instead of set.  Returns the keys of the
   * chunks whose layers changed.
   */
  paintStroke(path: Point[], radius: number, erase = false): Set<string> {
    const touched = new Set<string>();
    if (path.length === 0 || radius <= 0) return touched;
    const value = erase ? 0 : 255;
    const spacing = Math.max(0.5, radius / 2);
    this.stampDisk(path[0], radius, value, touched);
    for (let i = 1; i < path.length; i++) {
      const a = path[i - 1];
      const b = path[i];
      const dist = Math.hypot(b.x - a.x, b.y - a.y);
      const steps = Math.max(1, Math.ceil(dist / spacing));
      for (let s = 1; s <= steps; s++) {
        const t = s / steps;
        this.stampDisk({ x: a.x + t * (b.x - a.x), y: a.y + t * (b.y - a.y) }, radius, value, touched);
      }
    }
    return touched;
  }

  totalPixelCount(): number {
    let total = 0;
    for (const layer of this.layers.values()) total += layer.pixelCount();
    return total;
  }

  /** Base64 PNG payloads for every non-empty layer, keyed "x,y". */
  nonEmptyPayloads(): Record<string, string> {
    const out: Record<string, string> = {};
    for (const [key, layer] of this.layers) {
      if (!layer.isEmpty()) out[key] = layer.toPngBase64();
    }
    return out;
  }

  /**
   * Upload payloads including clears: layers the eraser emptied upload as
   * empty strings so the service drops its stored copy.
   */
  uploadPayloads(): Record<string, string> {
    const out: Record<string, string> = {};
    for (const [key, layer] of this.layers) {
      out[key] = layer.isEmpty() ? "" : layer.toPngBase64();
    }
    return out;
  }

  clearAll(): void {
    this.layers.clear();
  }
}
