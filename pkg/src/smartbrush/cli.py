"""Command-line interface for the map-editing toolkit."""

from __future__ import annotations

import json
from pathlib import Path

import click
import numpy as np

from .bundle import load_map_bundle, save_map_bundle

EVAL_MODES = ["medium", "hard", "complete"]
EVAL_METRICS = ["fid", "ssim"]


@click.group()
def main() -> None:
    """Smart-brush map editing toolkit."""


def _parse_coord(text: str) -> tuple[int, int]:
    try:
        x_str, y_str = text.split(",")
        return int(x_str), int(y_str)
    except ValueError:
        raise click.BadParameter(f"expected 'x,y', got {text!r}") from None


@main.command("split-dataset")
@click.option("--bundle-dir", required=True, type=click.Path(exists=True, file_okay=False))
@click.option("--per-category", default=3, show_default=True)
@click.option("--out", required=True, type=click.Path(dir_okay=False))
def split_dataset(bundle_dir: str, per_category: int, out: str) -> None:
    """Score map similarity pairwise and split bundles into train/test."""
    from .dataset import LabeledMap, propose_split

    labeled = []
    for sub in sorted(Path(bundle_dir).iterdir()):
        if not (sub / "manifest.json").exists():
            continue
        game_map = load_map_bundle(sub)
        labeled.append(
            LabeledMap(
                map_id=game_map.name or sub.name,
                category=game_map.category or "default",
                game_map=game_map,
            )
        )
    if not labeled:
        raise click.ClickException(f"no bundles found under {bundle_dir}")
    result = propose_split(labeled, per_category)
    payload = {
        "train": result.train,
        "test": result.test,
        "scores": [
            {
                "a": a,
                "b": b,
                "fid_global_am": score.fid_global_am,
                "fid_tiles": score.fid_tiles,
                "p_material": score.p_material,
                "s": score.s,
            }
            for (a, b), score in sorted(result.scores.items())
        ],
    }
    Path(out).write_text(json.dumps(payload, indent=2))
    click.echo(f"split: {len(result.train)} train / {len(result.test)} test -> {out}")


@main.command("eval")
@click.option("--pred-dir", required=True, type=click.Path(exists=True, file_okay=False))
@click.option("--gt-dir", required=True, type=click.Path(exists=True, file_okay=False))
@click.option("--metrics", default="fid,ssim", show_default=True)
@click.option("--mask-mode", required=True, type=click.Choice(EVAL_MODES))
@click.option("--model-name", default=None, help="Row label; defaults to the pred dir name.")
@click.option("--out", required=True, type=click.Path(dir_okay=False))
def eval_cmd(pred_dir: str, gt_dir: str, metrics: str, mask_mode: str, model_name: str | None, out: str) -> None:
    """Compare renders against ground truth and fill one mask-mode column of
    the report.  Repeated runs into the same report merge their cells."""
    from .metrics import evaluate_dirs

    names = tuple(m.strip() for m in metrics.split(",") if m.strip())
    scores = evaluate_dirs(pred_dir, gt_dir, names)
    model = model_name or Path(pred_dir).name

    out_path = Path(out)
    if out_path.exists():
        report = json.loads(out_path.read_text())
    else:
        report = {"modes": EVAL_MODES, "metrics": EVAL_METRICS, "rows": []}
    row = next((r for r in report["rows"] if r["model"] == model), None)
    if row is None:
        row = {"model": model, "scores": {}}
        report["rows"].append(row)
    row["scores"][mask_mode] = scores
    out_path.write_text(json.dumps(report, indent=2))
    cells = ", ".join(f"{k}={v:.4f}" for k, v in scores.items())
    click.echo(f"{model} [{mask_mode}]: {cells} -> {out}")


@main.command("train")
@click.option("--arch", required=True, type=click.Choice(["brushgan", "brushcldm"]))
@click.option("--bundle-dir", required=True, type=click.Path(exists=True, file_okay=False))
@click.option("--epochs", default=200, show_default=True)
@click.option("--seed", default=0, show_default=True)
@click.option("--out", required=True, type=click.Path(dir_okay=False))
def train(arch: str, bundle_dir: str, epochs: int, seed: int, out: str) -> None:
    """Train a toy generator on every chunk of a bundle."""
    from .coherence import build_context
    from .generators import GeneratorConfig
    from .generators.brushgan import ToyBrushGAN, TrainSample, TrainSchedule, train_brushgan
    from .generators.checkpoint import save_checkpoint
    from .generators.diffusion import CLDMTrainSchedule, ToyBrushCLDM, train_brushcldm

    game_map = load_map_bundle(bundle_dir)
    samples = [
        TrainSample(
            tiles=game_map.grid[coord].tile_stack(),
            context_planes=build_context(game_map, coord).as_planes(),
        )
        for coord in sorted(game_map.grid)
    ]
    config = GeneratorConfig(
        tile_side=game_map.tile_size,
        context_channels=3 + 1 + len(game_map.object_masks) + 8,
        init_seed=seed,
    )
    half = epochs // 2
    if arch == "brushgan":
        model = ToyBrushGAN(config)
        result = train_brushgan(
            model, samples, TrainSchedule(coarse_epochs=half, fine_epochs=epochs - half, mask_seed=seed)
        )
        history = result.history
        final = history["fine_mse"][-1] if history["fine_mse"] else history["coarse_mse"][-1]
    else:
        model = ToyBrushCLDM(config)
        history = train_brushcldm(
            model,
            samples,
            CLDMTrainSchedule(autoencoder_epochs=half, denoiser_epochs=epochs - half, mask_seed=seed),
        )
        final = history["denoiser"][-1] if history["denoiser"] else history["autoencoder"][-1]
    save_checkpoint(model, out)
    click.echo(f"trained {arch} for {epochs} epochs (final loss {final:.6f}) -> {out}")


@main.command("generate")
@click.option("--bundle-dir", required=True, type=click.Path(exists=True, file_okay=False))
@click.option("--model", default="baseline", show_default=True, help="baseline | brushgan | brushcldm | checkpoint path")
@click.option("--chunk", required=True, help="x,y chunk coordinate")
@click.option("--mask", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--seed", default=0, show_default=True)
@click.option("--out-dir", required=True, type=click.Path(file_okay=False))
def generate(bundle_dir: str, model: str, chunk: str, mask: str, seed: int, out_dir: str) -> None:
    """Regenerate one chunk under a brush mask and write tiles plus render."""
    from .bundle import _load_gray8, _save_gray8, _save_rgb8
    from .core import blend_chunk
    from .generators import GeneratorConfig, resolve_generator
    from .stitching import generate_region

    game_map = load_map_bundle(bundle_dir)
    coord = _parse_coord(chunk)
    if coord not in game_map.grid:
        raise click.ClickException(f"chunk {coord} not in map")
    brush = (_load_gray8(Path(mask)) > 0.5).astype(np.float32)
    config = GeneratorConfig(
        tile_side=game_map.tile_size,
        context_channels=3 + 1 + len(game_map.object_masks) + 8,
    )
    generator = resolve_generator(model, config)
    generate_region(game_map, {coord: brush}, generator, seed=seed)

    out_path = Path(out_dir)
    out_path.mkdir(parents=True, exist_ok=True)
    result = game_map.grid[coord]
    for k, tile in enumerate(result.tiles):
        _save_gray8(tile.pixels, out_path / f"tile_{k}.png")
    _save_rgb8(blend_chunk(result, game_map.materials).pixels, out_path / "render.png")
    click.echo(f"generated chunk {coord} with {generator.kind} -> {out_dir}")


@main.command("rank-materials")
@click.option("--bundle-dir", required=True, type=click.Path(exists=True, file_okay=False))
@click.option("--chunk", required=True, help="x,y chunk coordinate")
@click.option("--out", required=True, type=click.Path(dir_okay=False))
def rank_materials_cmd(bundle_dir: str, chunk: str, out: str) -> None:
    """Rank a chunk's materials by template-match dominance."""
    from .coherence import rank_materials

    game_map = load_map_bundle(bundle_dir)
    coord = _parse_coord(chunk)
    if coord not in game_map.grid:
        raise click.ClickException(f"chunk {coord} not in map")
    y0, y1, x0, x1 = game_map.chunk_pixel_box(coord)
    ranking = rank_materials(
        game_map.grid[coord], game_map.materials, game_map.global_am[y0:y1, x0:x1]
    )
    payload = {
        "chunk": list(coord),
        "ranking": [{"material": mid, "score": score} for mid, score in ranking.entries],
    }
    Path(out).write_text(json.dumps(payload, indent=2))
    click.echo(f"dominant material for {coord}: {ranking.dominant} -> {out}")


@main.command("stitch")
@click.option("--bundle-dir", required=True, type=click.Path(exists=True, file_okay=False))
@click.option("--region", required=True, help="x0,y0:x1,y1 inclusive chunk box")
@click.option("--mask-dir", required=True, type=click.Path(exists=True, file_okay=False))
@click.option("--model", default="baseline", show_default=True)
@click.option("--seed", default=0, show_default=True)
@click.option("--report", "report_path", required=True, type=click.Path(dir_okay=False))
@click.option("--out-bundle", default=None, type=click.Path(file_okay=False))
def stitch(bundle_dir: str, region: str, mask_dir: str, model: str, seed: int, report_path: str, out_bundle: str | None) -> None:
    """Run the multi-chunk pipeline over a region; masks come from
    <mask-dir>/<x>_<y>.png and missing files leave chunks untouched."""
    from .bundle import _load_gray8
    from .generators import GeneratorConfig, resolve_generator
    from .stitching import generate_region

    game_map = load_map_bundle(bundle_dir)
    try:
        lo, hi = region.split(":")
        x0, y0 = _parse_coord(lo)
        x1, y1 = _parse_coord(hi)
    except ValueError:
        raise click.BadParameter(f"expected 'x0,y0:x1,y1', got {region!r}") from None

    brushed = {}
    for y in range(y0, y1 + 1):
        for x in range(x0, x1 + 1):
            mask_file = Path(mask_dir) / f"{x}_{y}.png"
            if mask_file.exists():
                brushed[(x, y)] = (_load_gray8(mask_file) > 0.5).astype(np.float32)
    if not brushed:
        raise click.ClickException(f"no mask files found in {mask_dir} for region {region}")

    config = GeneratorConfig(
        tile_side=game_map.tile_size,
        context_channels=3 + 1 + len(game_map.object_masks) + 8,
    )
    generator = resolve_generator(model, config)
    report: dict = {}
    generate_region(game_map, brushed, generator, seed=seed, report=report)
    Path(report_path).write_text(json.dumps(report, indent=2))
    if out_bundle:
        save_map_bundle(game_map, out_bundle)
        click.echo(f"updated bundle -> {out_bundle}")
    click.echo(f"stitched {len(brushed)} chunks, {len(report['pairs'])} pairs -> {report_path}")


@main.command("serve")
@click.option("--port", default=8750, show_default=True)
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--bundle-root", default=".", show_default=True, type=click.Path(exists=True, file_okay=False))
def serve_cmd(port: int, host: str, bundle_root: str) -> None:
    """Run the HTTP editing service."""
    from .service import serve

    click.echo(f"serving bundles from {bundle_root} on http://{host}:{port}/v1")
    serve(bundle_root, port=port, host=host)


if __name__ == "__main__":
    main()
