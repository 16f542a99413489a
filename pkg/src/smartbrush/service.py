"""JSON-over-HTTP service binding the pipeline for interactive editing:
sessions over map bundles, mask submission, async generation jobs, renders,
undo and export."""

from __future__ import annotations

import base64
import enum
import io
import secrets
import threading
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from fastapi import FastAPI, HTTPException
from PIL import Image

from .bundle import load_map_bundle, save_map_bundle
from .core import Chunk, Coord, GameMap, blend_chunk
from .generators import GeneratorConfig, resolve_generator
from .stitching import generate_region

DEFAULT_UNDO_DEPTH = 10


class JobStatus(enum.Enum):
    QUEUED = "queued"
    RUNNING = "running"
    DONE = "done"
    FAILED = "failed"


@dataclass
class GenerationJob:
    id: str
    session_id: str
    generator: str
    seed: int
    coords: list[Coord]
    status: JobStatus = JobStatus.QUEUED
    error: str = ""
    result: dict = field(default_factory=dict)
    created_at: float = field(default_factory=time.time)
    finished_at: float | None = None

    def as_dict(self) -> dict:
        return {
            "id": self.id,
            "session_id": self.session_id,
            "generator": self.generator,
            "seed": self.seed,
            "chunks": [list(c) for c in self.coords],
            "status": self.status.value,
            "error": self.error,
            "result": self.result,
        }


@dataclass
class Session:
    id: str
    bundle_path: str
    game_map: GameMap
    masks: dict[Coord, np.ndarray] = field(default_factory=dict)
    undo_stack: list[dict[Coord, Chunk]] = field(default_factory=list)
    active_job: str | None = None
    lock: threading.Lock = field(default_factory=threading.Lock)


class ServiceState:
    def __init__(self, bundle_root: Path, undo_depth: int = DEFAULT_UNDO_DEPTH):
        self.bundle_root = Path(bundle_root)
        self.undo_depth = undo_depth
        self.sessions: dict[str, Session] = {}
        self.jobs: dict[str, GenerationJob] = {}
        self.registry_lock = threading.Lock()

    def session(self, session_id: str) -> Session:
        try:
            return self.sessions[session_id]
        except KeyError:
            raise HTTPException(404, f"unknown session {session_id!r}") from None

    def job(self, job_id: str) -> GenerationJob:
        try:
            return self.jobs[job_id]
        except KeyError:
            raise HTTPException(404, f"unknown job {job_id!r}") from None


def _decode_mask_png(data_b64: str, tile_size: int) -> np.ndarray:
    try:
        raw = base64.b64decode(data_b64)
        with Image.open(io.BytesIO(raw)) as im:
            arr = np.asarray(im.convert("L"))
    except Exception as exc:
        raise HTTPException(400, f"undecodable mask image: {exc}") from exc
    if arr.shape != (tile_size, tile_size):
        raise HTTPException(400, f"mask shape {arr.shape} != tile size {tile_size}")
    return (arr > 127).astype(np.float32)


def _encode_png(rgb: np.ndarray) -> bytes:
    data = np.round(np.asarray(rgb, dtype=np.float64) * 255.0).astype(np.uint8)
    buf = io.BytesIO()
    Image.fromarray(data, mode="RGB").save(buf, format="PNG")
    return buf.getvalue()


def render_region(game_map: GameMap, x0: int, y0: int, x1: int, y1: int, zoom: float = 1.0) -> np.ndarray:
    """Blend all chunks in an inclusive chunk-coord box into one RGB image."""
    w, h = game_map.grid_size
    if not (0 <= x0 <= x1 < w and 0 <= y0 <= y1 < h):
        raise HTTPException(400, f"region ({x0},{y0})-({x1},{y1}) outside grid {game_map.grid_size}")
    ts = game_map.tile_size
    out = np.zeros(((y1 - y0 + 1) * ts, (x1 - x0 + 1) * ts, 3), dtype=np.float32)
    for y in range(y0, y1 + 1):
        for x in range(x0, x1 + 1):
            if (x, y) not in game_map.grid:
                continue
            render = blend_chunk(game_map.grid[(x, y)], game_map.materials).pixels
            out[(y - y0) * ts : (y - y0 + 1) * ts, (x - x0) * ts : (x - x0 + 1) * ts] = render
    if zoom != 1.0:
        if zoom <= 0:
            raise HTTPException(400, "zoom must be positive")
        new_w = max(1, int(round(out.shape[1] * zoom)))
        new_h = max(1, int(round(out.shape[0] * zoom)))
        im = Image.fromarray(np.round(out * 255.0).astype(np.uint8), mode="RGB")
        out = np.asarray(im.resize((new_w, new_h), Image.NEAREST), dtype=np.float32) / 255.0
    return out


def _run_job(state: ServiceState, session: Session, job: GenerationJob) -> None:
    job.status = JobStatus.RUNNING
    try:
        with session.lock:
            working = session.game_map.copy()
            brushed = {c: m.copy() for c, m in session.masks.items()}
        generator_config = GeneratorConfig(
            tile_side=working.tile_size,
            context_channels=3 + 1 + len(working.object_masks) + 8,
        )
        generator = resolve_generator(job.generator, generator_config)
        report: dict = {}
        started = time.perf_counter()
        generate_region(working, brushed, generator, seed=job.seed, report=report)
        report["total_seconds"] = time.perf_counter() - started
        with session.lock:
            snapshot = {c: session.game_map.grid[c].copy() for c in brushed}
            session.undo_stack.append(snapshot)
            if len(session.undo_stack) > state.undo_depth:
                session.undo_stack.pop(0)
            for coord in brushed:
                session.game_map.grid[coord] = working.grid[coord]
            session.active_job = None
        job.result = report
        job.status = JobStatus.DONE
    except Exception as exc:  # failure must release the session writer slot
        with session.lock:
            session.active_job = None
        job.error = str(exc)
        job.status = JobStatus.FAILED
    finally:
        job.finished_at = time.time()


def create_app(bundle_root: str | Path = ".", undo_depth: int = DEFAULT_UNDO_DEPTH) -> FastAPI:
    app = FastAPI(title="smartbrush", version="1")
    state = ServiceState(Path(bundle_root), undo_depth)
    app.state.service = state

    @app.post("/v1/sessions")
    def open_session(body: dict):
        bundle = body.get("bundle", "")
        path = Path(bundle)
        if not path.is_absolute():
            path = state.bundle_root / bundle
        try:
            game_map = load_map_bundle(path)
        except Exception as exc:
            raise HTTPException(400, f"cannot load bundle {bundle!r}: {exc}") from exc
        session = Session(id=secrets.token_urlsafe(16), bundle_path=str(path), game_map=game_map)
        with state.registry_lock:
            state.sessions[session.id] = session
        return {
            "session_id": session.id,
            "grid": {"width": game_map.grid_size[0], "height": game_map.grid_size[1]},
            "tile_size": game_map.tile_size,
            "materials": game_map.materials.ids,
        }

    @app.get("/v1/sessions/{session_id}/render")
    def get_render(session_id: str, x0: int = 0, y0: int = 0, x1: int | None = None, y1: int | None = None, zoom: float = 1.0):
        from fastapi.responses import Response

        session = state.session(session_id)
        with session.lock:
            gm = session.game_map
            x1 = gm.grid_size[0] - 1 if x1 is None else x1
            y1 = gm.grid_size[1] - 1 if y1 is None else y1
            image = render_region(gm, x0, y0, x1, y1, zoom)
        return Response(content=_encode_png(image), media_type="image/png")

    @app.put("/v1/sessions/{session_id}/masks")
    def submit_masks(session_id: str, body: dict):
        session = state.session(session_id)
        masks = body.get("masks", {})
        decoded: dict[Coord, np.ndarray] = {}
        cleared: list[Coord] = []
        for key, data in masks.items():
            try:
                x_str, y_str = key.split(",")
                coord = (int(x_str), int(y_str))
            except ValueError:
                raise HTTPException(400, f"bad chunk key {key!r}, expected 'x,y'") from None
            if coord not in session.game_map.grid:
                raise HTTPException(400, f"chunk {coord} not in map")
            if data == "":  # empty payload drops the chunk's mask
                cleared.append(coord)
            else:
                decoded[coord] = _decode_mask_png(data, session.game_map.tile_size)
        with session.lock:
            session.masks.update(decoded)
            for coord in cleared:
                session.masks.pop(coord, None)
        return {"ok": True, "chunks": sorted(f"{c[0]},{c[1]}" for c in session.masks)}

    @app.get("/v1/sessions/{session_id}/masks")
    def get_masks(session_id: str):
        session = state.session(session_id)
        with session.lock:
            masks = {}
            for coord, mask in session.masks.items():
                data = np.where(mask > 0, 255, 0).astype(np.uint8)
                buf = io.BytesIO()
                Image.fromarray(data, mode="L").save(buf, format="PNG")
                masks[f"{coord[0]},{coord[1]}"] = base64.b64encode(buf.getvalue()).decode()
        return {"masks": masks}

    @app.post("/v1/sessions/{session_id}/generate")
    def start_generation(session_id: str, body: dict):
        session = state.session(session_id)
        generator = body.get("generator", "baseline")
        seed = int(body.get("seed", 0))
        with session.lock:
            if session.active_job is not None:
                raise HTTPException(409, "a generation job is already running on this session")
            if not session.masks:
                raise HTTPException(400, "no brush masks submitted")
            job = GenerationJob(
                id=secrets.token_urlsafe(12),
                session_id=session_id,
                generator=generator,
                seed=seed,
                coords=sorted(session.masks),
            )
            session.active_job = job.id
        with state.registry_lock:
            state.jobs[job.id] = job
        threading.Thread(target=_run_job, args=(state, session, job), daemon=True).start()
        return job.as_dict()

    @app.get("/v1/jobs/{job_id}")
    def job_status(job_id: str):
        return state.job(job_id).as_dict()

    @app.post("/v1/sessions/{session_id}/undo")
    def undo(session_id: str):
        session = state.session(session_id)
        with session.lock:
            if session.active_job is not None:
                raise HTTPException(409, "cannot undo while a job is running")
            if not session.undo_stack:
                raise HTTPException(400, "nothing to undo")
            snapshot = session.undo_stack.pop()
            for coord, chunk in snapshot.items():
                session.game_map.grid[coord] = chunk
        return {"ok": True, "restored": [list(c) for c in snapshot]}

    @app.post("/v1/sessions/{session_id}/export")
    def export(session_id: str, body: dict):
        session = state.session(session_id)
        out = body.get("out_path")
        if not out:
            raise HTTPException(400, "out_path required")
        out_path = Path(out)
        if not out_path.is_absolute():
            out_path = state.bundle_root / out_path
        with session.lock:
            save_map_bundle(session.game_map, out_path)
        return {"ok": True, "path": str(out_path)}

    return app


def serve(bundle_root: str, port: int = 8750, host: str = "127.0.0.1") -> None:
    import uvicorn

    uvicorn.run(create_app(bundle_root), host=host, port=port, log_level="warning")
