/** Pan/zoom state mapping between screen and map pixel coordinates, with
 * the view center clamped to the map extent. */

import { Point } from "./types.js";

export class Viewport {
  readonly mapWidth: number;
  readonly mapHeight: number;
  screenWidth: number;
  screenHeight: number;
  zoom: number;
  center: Point;
  readonly minZoom: number;
  readonly maxZoom: number;

  constructor(mapWidth: number, mapHeight: number, screenWidth: number, screenHeight: number) {
    this.mapWidth = mapWidth;
    this.mapHeight = mapHeight;
    this.screenWidth = screenWidth;
    this.screenHeight = screenHeight;
    this.minZoom = 0.25;
    this.maxZoom = 16;
    this.zoom = Math.min(screenWidth / mapWidth, screenHeight / mapHeight);
    this.zoom = Math.min(this.maxZoom, Math.max(this.minZoom, this.zoom));
    this.center = { x: mapWidth / 2, y: mapHeight / 2 };
  }

  clamp(): void {
    this.zoom = Math.min(this.maxZoom, Math.max(this.minZoom, this.zoom));
    this.center.x = Math.min(this.mapWidth, Math.max(0, this.center.x));
    this.center.y = Math.min(this.mapHeight, Math.max(0, this.center.y));
  }

  pan(dxScreen: number, dyScreen: number): void {
    this.center.x -= dxScreen / this.zoom;
    this.center.y -= dyScreen / this.zoom;
    this.clamp();
  }

  /** Zoom by a factor keeping the map point under the cursor fixed. */
  zoomAt(screenPoint: Point, factor: number): void {
    const before = this.screenToMap(screenPoint);
    this.zoom *= factor;
    this.clamp();
    const after = this.screenToMap(screenPoint);
    this.center.x += before.x - after.x;
    this.center.y += before.y - after.y;
    this.clamp();
  }

  screenToMap(p: Point): Point {
    return {
      x: this.center.x + (p.x - this.screenWidth / 2) / this.zoom,
      y: this.center.y + (p.y - this.screenHeight / 2) / this.zoom,
    };
  }

  mapToScreen(p: Point): Point {
    return {
      x: (p.x - this.center.x) * this.zoom + this.screenWidth / 2,
      y: (p.y - this.center.y) * this.zoom + this.screenHeight / 2,
    };
  }
}
