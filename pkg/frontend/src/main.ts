/** Browser entry point: wires pointer events and the toolbar to the state. */

import { openEditor } from "./state.js";
import { CanvasView } from "./render.js";
import { Point } from "./types.js";

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing element #${id}`);
  return node as T;
}

async function boot(): Promise<void> {
  const params = new URLSearchParams(location.search);
  const baseUrl = params.get("service") ?? "http://127.0.0.1:8750";
  const bundle = params.get("bundle") ?? "fixture";

  const status = el<HTMLSpanElement>("status");
  status.textContent = `opening ${bundle}...`;
  const state = await openEditor(baseUrl, bundle, {
    screenWidth: 800,
    screenHeight: 600,
  });
  const canvas = el<HTMLCanvasElement>("map");
  const view = new CanvasView(canvas, state);

  const radius = el<HTMLInputElement>("radius");
  const generator = el<HTMLSelectElement>("generator");
  const seed = el<HTMLInputElement>("seed");
  const generate = el<HTMLButtonElement>("generate");
  const undo = el<HTMLButtonElement>("undo");
  const compare = el<HTMLButtonElement>("compare");
  const seams = el<HTMLButtonElement>("seams");
  const divider = el<HTMLInputElement>("divider");

  const refreshControls = () => {
    generate.disabled = !state.canGenerate();
    status.textContent = state.activeJob
      ? `job ${state.activeJob.status}...`
      : state.lastError
        ? `error: ${state.lastError}`
        : "ready";
  };
  const prevOnChange = state.onChange;
  state.onChange = () => {
    prevOnChange?.();
    refreshControls();
  };

  let stroke: Point[] | null = null;
  let panning = false;
  let last: Point = { x: 0, y: 0 };

  canvas.addEventListener("pointerdown", (ev) => {
    const p = { x: ev.offsetX, y: ev.offsetY };
    if (ev.button === 1 || ev.shiftKey) {
      panning = true;
      last = p;
    } else {
      stroke = [p];
      state.tool = {
        kind: ev.button === 2 ? "eraser" : "brush",
        radius: Number(radius.value),
      };
      state.paintStroke([p]);
    }
    canvas.setPointerCapture(ev.pointerId);
  });
  canvas.addEventListener("pointermove", (ev) => {
    const p = { x: ev.offsetX, y: ev.offsetY };
    if (panning) {
      state.viewport.pan(p.x - last.x, p.y - last.y);
      last = p;
      void view.redraw();
    } else if (stroke) {
      state.paintStroke([stroke[stroke.length - 1], p]);
      stroke.push(p);
    }
  });
  const endStroke = () => {
    stroke = null;
    panning = false;
  };
  canvas.addEventListener("pointerup", endStroke);
  canvas.addEventListener("pointercancel", endStroke);
  canvas.addEventListener("contextmenu", (ev) => ev.preventDefault());
  canvas.addEventListener("wheel", (ev) => {
    ev.preventDefault();
    state.viewport.zoomAt({ x: ev.offsetX, y: ev.offsetY }, ev.deltaY < 0 ? 1.25 : 0.8);
    void view.redraw();
  });

  generate.addEventListener("click", () => {
    void state
      .requestGenerate(generator.value, Number(seed.value))
      .catch(() => undefined); // surfaced via lastError; masks retained
  });
  undo.addEventListener("click", () => void state.undo().catch(() => undefined));
  compare.addEventListener("click", () => {
    state.toggleCompare();
  });
  seams.addEventListener("click", () => {
    view.showSeams = !view.showSeams;
    void view.redraw();
  });
  divider.addEventListener("input", () => {
    state.compareDivider = Number(divider.value) / 100;
    void view.redraw();
  });

  refreshControls();
  await view.redraw();
}

void boot().catch((err) => {
  const status = document.getElementById("status");
  if (status) status.textContent = `failed to start: ${err}`;
});
