"""Command-line entry point: ``plancomplete <subcommand> ...``.

Exit codes: 0 success, 1 runtime or validation failure, 2 bad usage.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

log = logging.getLogger("plancomplete")


@dataclass
class PipelineConfig:
    """Flag defaults; a ``--config`` JSON file may override any of them."""

    mask: str | None = None
    graph: str | None = None
    vocab: str | None = None
    roomtype_params: str | None = None
    denoiser_params: str | None = None
    out_dir: str | None = None
    foreground_labels: list = field(default_factory=lambda: [1])
    tolerance: float = 1.5
    min_length: float = 4.0
    wall_eps: float = 0.004
    raster_size: list | None = None
    seed: int = 0
    steps: int | None = None
    discrete_steps: int | None = None
    max_rooms: int | None = None
    macro: bool = False

    def validate(self) -> None:
        if self.tolerance <= 0 or self.wall_eps <= 0 or self.min_length < 0:
            raise ValueError("tolerance and wall_eps must be positive, min_length non-negative")
        for name in ("steps", "discrete_steps", "max_rooms"):
            v = getattr(self, name)
            if v is not None and v < 0:
                raise ValueError(f"{name} must be non-negative")
        if self.raster_size is not None and (len(self.raster_size) != 2 or min(self.raster_size) <= 0):
            raise ValueError("raster size must be two positive integers")


class CliError(Exception):
    pass


def _vocab(path):
    from .graph import LabelVocabulary, default_vocabulary

    return LabelVocabulary.load(path) if path else default_vocabulary()


def _labels(text) -> list:
    return [int(v) for v in str(text).split(",") if v.strip()]


def _size(text) -> list:
    parts = [int(v) for v in str(text).lower().replace("x", ",").split(",")]
    if len(parts) == 1:
        parts = parts * 2
    return parts


# ---------------------------------------------------------------------------
# subcommands


def cmd_extract_walls(args) -> int:
    from .raster import load_mask
    from .skeleton import vectorize_walls

    mask = load_mask(args.mask, args.foreground_labels)
    walls = vectorize_walls(mask, args.tolerance, args.min_length)
    walls.save(args.out)
    log.info("wrote %d segments to %s", len(walls), args.out)
    return 0


def _load_plan_like(path, vocab):
    from .geometry import FloorPlan, Polygon, Room
    from .graph import graph_from_dict

    doc = json.loads(Path(path).read_text())
    if "rooms" in doc:
        return FloorPlan.from_dict(doc)
    graph = graph_from_dict(doc, vocab)
    rooms = []
    for n in graph.nodes:
        if n.polygon is None or n.room_type is None:
            raise CliError(f"node {n.id} needs both a polygon and a room type")
        rooms.append(Room(Polygon(np.asarray(n.polygon)), n.room_type, n.id))
    return FloorPlan(rooms)


def cmd_approx_mrr(args) -> int:
    from .geometry import FloorPlan, MRRApproximator
    from .raster import load_mask
    from .skeleton import WallSet, vectorize_walls

    vocab = _vocab(args.vocab)
    plan = _load_plan_like(args.plan, vocab)
    if args.walls:
        walls = WallSet.load(args.walls)
    elif args.mask:
        walls = vectorize_walls(load_mask(args.mask, args.foreground_labels), args.tolerance, args.min_length)
    else:
        walls = plan.walls
    approx = MRRApproximator(refine=not args.no_refine, wall_eps=args.wall_eps).fit().transform(FloorPlan(plan.rooms, walls))[0]
    approx.save(args.out)
    return 0


def _dataset_vocab(args, directory: Path):
    if args.vocab:
        return _vocab(args.vocab)
    if (directory / "vocab.json").exists():
        return _vocab(directory / "vocab.json")
    return _vocab(None)


def _load_dataset(directory, vocab):
    from .graph import load_access_graph

    directory = Path(directory)
    if not directory.is_dir():
        raise CliError(f"{directory} is not a directory")
    files = sorted(p for p in directory.glob("*.json") if p.name != "vocab.json")
    graphs = [load_access_graph(p, vocab) for p in files]
    if not graphs:
        raise CliError(f"no graphs found in {directory}")
    for p, g in zip(files, graphs):
        if any(n.room_type is None for n in g.nodes):
            raise CliError(f"{p.name}: every node needs a room_type for training")
    return graphs


def _layer_table(rows) -> str:
    lines = [f"{'#GATConv layers':>15}  {'val loss':>8}  {'mean val acc':>12}"]
    for n, loss, acc in rows:
        lines.append(f"{n:>15d}  {loss:>8.2f}  {acc:>12.2f}")
    return "\n".join(lines)


def cmd_train_roomtype(args) -> int:
    from .roomtype import GatConfig, save_model, train, write_history

    directory = Path(args.dataset)
    vocab = _dataset_vocab(args, directory)
    graphs = _load_dataset(directory, vocab)
    base = dict(
        hidden_dim=args.hidden_dim,
        dropout_rate=args.dropout,
        learning_rate=args.lr,
        batch_size=args.batch_size,
        max_epochs=args.epochs,
        early_stop_tolerance=args.patience,
        seed=args.seed,
        val_fraction=args.val_fraction,
    )
    layers = _labels(args.layers) if args.layers else [args.num_layers]
    rows, best = [], None
    for n in layers:
        config = GatConfig(num_layers=n, **base)
        params, history = train(graphs, config, vocab)
        best_row = min(history, key=lambda r: r["val_loss"])
        rows.append((n, best_row["val_loss"], best_row["mean_val_acc"]))
        if args.history:
            hist = Path(args.history)
            if len(layers) > 1:
                hist = hist.with_name(f"{hist.stem}_N{n}{hist.suffix}")
            write_history(hist, history)
        if best is None or best_row["val_loss"] < best[0]:
            best = (best_row["val_loss"], params, config)
    save_model(args.out, best[1], best[2], vocab)
    if len(layers) > 1:
        table = _layer_table(rows)
        print(table)
        if args.table:
            Path(args.table).write_text(table + "\n")
    return 0


def cmd_predict_roomtype(args) -> int:
    from .graph import load_access_graph
    from .roomtype import load_model, predict_room_types

    params, config, vocab = load_model(args.params)
    graph = load_access_graph(args.graph, vocab)
    predict_room_types(graph, params, config, vocab).save(args.out)
    return 0


def cmd_init_denoiser(args) -> int:
    from .denoiser import FloorPlanDenoiser

    est = FloorPlanDenoiser(
        model_dim=args.model_dim,
        num_blocks=args.blocks,
        encoder_layers=args.encoder_layers,
        steps=args.steps or 1000,
        discrete_steps=args.discrete_steps if args.discrete_steps is not None else 32,
        seed=args.seed,
        vocab=_vocab(args.vocab),
    ).fit()
    est.save(args.out)
    return 0


def _load_denoiser(path, steps, discrete_steps):
    from .denoiser import DiffusionSchedule, FloorPlanDenoiser

    est = FloorPlanDenoiser.load(path)
    if steps is not None or discrete_steps is not None:
        T = steps if steps is not None else est.schedule_.T
        Td = discrete_steps if discrete_steps is not None else min(est.schedule_.T_discrete, T)
        est.schedule_ = DiffusionSchedule.cosine(T, Td)
        est.set_params(steps=T, discrete_steps=Td)
    return est


def cmd_sample(args) -> int:
    from .graph import load_access_graph
    from .skeleton import WallSet

    est = _load_denoiser(args.params, args.steps, args.discrete_steps)
    graph = load_access_graph(args.graph, est.vocab_)
    if args.max_rooms is not None and len(graph) > args.max_rooms:
        raise CliError(f"graph has {len(graph)} rooms, limit is {args.max_rooms}")
    walls = WallSet.load(args.walls) if args.walls else WallSet()
    est.sample(graph, walls, seed=args.seed).save(args.out)
    return 0


def cmd_autocomplete(args) -> int:
    from .graph import load_access_graph
    from .pipeline import autocomplete
    from .raster import load_mask
    from .render import save_colour_png, save_label_png, save_svg
    from .roomtype import RoomTypeClassifier

    try:
        mask = load_mask(args.mask, args.foreground_labels)
        roomtype = RoomTypeClassifier.load(args.roomtype_params)
        denoiser = _load_denoiser(args.denoiser_params, args.steps, args.discrete_steps)
        graph = load_access_graph(args.graph, roomtype.vocab_)
    except Exception as exc:
        raise CliError(f"load: {exc}") from exc
    result = autocomplete(
        mask,
        graph,
        roomtype,
        denoiser,
        seed=args.seed,
        refine=not args.no_refine,
        tolerance=args.tolerance,
        min_length=args.min_length,
        wall_eps=args.wall_eps,
        raster_size=tuple(args.raster_size) if args.raster_size else None,
        max_rooms=args.max_rooms,
    )
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    result.walls.save(out / "walls.json")
    result.graph.save(out / "graph_typed.json")
    result.plan.save(out / "floorplan.json")
    save_label_png(out / "labels.png", result.grid)
    save_colour_png(out / "labels_rgb.png", result.grid, denoiser.vocab_)
    save_svg(out / "overlay.svg", result.plan, denoiser.vocab_)
    return 0


def cmd_evaluate(args) -> int:
    from .evaluation import evaluate_corpus
    from .raster import load_grid

    vocab = _vocab(args.vocab)
    manifest_path = Path(args.manifest)
    entries = json.loads(manifest_path.read_text())
    if not isinstance(entries, list) or not entries:
        raise CliError("manifest must be a non-empty list of {pred, truth} entries")
    base = manifest_path.parent
    pairs = []
    for k, entry in enumerate(entries):
        pred = load_grid(base / entry["pred"])
        truth = load_grid(base / entry["truth"])
        if pred.cells.shape != truth.cells.shape:
            raise CliError(f"pair {k} ({entry['pred']} vs {entry['truth']}): size mismatch {pred.cells.shape} vs {truth.cells.shape}")
        pairs.append((pred, truth))
    report = evaluate_corpus(pairs, vocab, macro=args.macro)
    Path(args.out).write_text(report.to_json() + "\n")
    table = report.table("macro" if args.macro else "micro")
    if args.table:
        Path(args.table).write_text(table + "\n")
    print(table)
    return 0


def cmd_render(args) -> int:
    from .geometry import FloorPlan, rasterize_floorplan
    from .render import save_colour_png, save_label_png, save_svg

    vocab = _vocab(args.vocab)
    plan = FloorPlan.load(args.plan)
    w, h = args.size
    grid = rasterize_floorplan(plan, w, h, vocab)
    if args.png:
        save_label_png(args.png, grid)
    if args.rgb:
        save_colour_png(args.rgb, grid, vocab)
    if args.svg:
        save_svg(args.svg, plan, vocab, (w, h))
    return 0


def cmd_synth_dataset(args) -> int:
    from .synthetic import make_dataset

    graphs, vocab = make_dataset(args.n, args.rule, seed=args.seed)
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    vocab.save(out / "vocab.json")
    for k, g in enumerate(graphs):
        g.save(out / f"graph_{k:04d}.json")
    return 0


# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="plancomplete", description="Floor-plan auto-completion toolkit.")
    parser.add_argument("--config", help="PipelineConfig JSON overriding flag defaults")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)
    d = PipelineConfig()

    def walls_opts(p):
        p.add_argument("--foreground-labels", type=_labels, default=d.foreground_labels, help="comma-separated wall labels")
        p.add_argument("--tolerance", type=float, default=d.tolerance, help="straight-split tolerance (px)")
        p.add_argument("--min-length", type=float, default=d.min_length, help="drop segments shorter than this (px)")

    def sampler_opts(p):
        p.add_argument("--seed", type=int, default=d.seed)
        p.add_argument("--steps", type=int, default=d.steps, help="override total diffusion steps T")
        p.add_argument("--discrete-steps", type=int, default=d.discrete_steps, help="override discrete steps")
        p.add_argument("--max-rooms", type=int, default=d.max_rooms)

    p = sub.add_parser("extract-walls", help="wall mask -> WallSet JSON")
    p.add_argument("mask")
    p.add_argument("--out", required=True)
    walls_opts(p)
    p.set_defaults(func=cmd_extract_walls)

    p = sub.add_parser("approx-mrr", help="room polygons -> (refined) minimum rotated rectangles")
    p.add_argument("plan", help="FloorPlan JSON or AccessGraph JSON with polygons")
    p.add_argument("--walls", help="WallSet JSON")
    p.add_argument("--mask", help="wall mask to vectorize instead of --walls")
    p.add_argument("--out", required=True)
    p.add_argument("--no-refine", action="store_true")
    p.add_argument("--wall-eps", type=float, default=d.wall_eps)
    p.add_argument("--vocab", default=d.vocab)
    walls_opts(p)
    p.set_defaults(func=cmd_approx_mrr)

    p = sub.add_parser("train-roomtype", help="train the GAT room-type predictor")
    p.add_argument("dataset", help="directory of AccessGraph JSON files with room types")
    p.add_argument("--out", required=True, help="checkpoint (.npz or .json)")
    p.add_argument("--history", help="history CSV path")
    p.add_argument("--layers", help="comma-separated layer counts to sweep, e.g. 2,3,4")
    p.add_argument("--table", help="write the sweep table here")
    p.add_argument("--num-layers", type=int, default=3)
    p.add_argument("--hidden-dim", type=int, default=64)
    p.add_argument("--dropout", type=float, default=0.1)
    p.add_argument("--lr", type=float, default=1e-3)
    p.add_argument("--batch-size", type=int, default=32)
    p.add_argument("--epochs", type=int, default=100)
    p.add_argument("--patience", type=int, default=5, help="early-stopping tolerance (epochs)")
    p.add_argument("--val-fraction", type=float, default=0.2)
    p.add_argument("--seed", type=int, default=d.seed)
    p.add_argument("--vocab", default=d.vocab)
    p.set_defaults(func=cmd_train_roomtype)

    p = sub.add_parser("predict-roomtype", help="fill in room types of an access graph")
    p.add_argument("graph")
    p.add_argument("--params", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_predict_roomtype)

    p = sub.add_parser("init-denoiser", help="write a randomly initialised denoiser checkpoint")
    p.add_argument("--out", required=True)
    p.add_argument("--model-dim", type=int, default=128)
    p.add_argument("--blocks", type=int, default=4)
    p.add_argument("--encoder-layers", type=int, default=2)
    p.add_argument("--seed", type=int, default=d.seed)
    p.add_argument("--steps", type=int, default=None)
    p.add_argument("--discrete-steps", type=int, default=None)
    p.add_argument("--vocab", default=d.vocab)
    p.set_defaults(func=cmd_init_denoiser)

    p = sub.add_parser("sample", help="sample room rectangles for a typed access graph")
    p.add_argument("graph")
    p.add_argument("--walls", help="WallSet JSON (omit for no structural conditioning)")
    p.add_argument("--params", required=True)
    p.add_argument("--out", required=True)
    sampler_opts(p)
    p.set_defaults(func=cmd_sample)

    p = sub.add_parser("autocomplete", help="mask + graph -> floor plan, label map and overlay")
    p.add_argument("--mask", default=d.mask)
    p.add_argument("--graph", default=d.graph)
    p.add_argument("--roomtype-params", default=d.roomtype_params)
    p.add_argument("--denoiser-params", default=d.denoiser_params)
    p.add_argument("--out-dir", default=d.out_dir)
    p.add_argument("--no-refine", action="store_true", help="skip structural wall refinement")
    p.add_argument("--wall-eps", type=float, default=d.wall_eps)
    p.add_argument("--raster-size", type=_size, default=d.raster_size, help="WxH of the label map")
    walls_opts(p)
    sampler_opts(p)
    p.set_defaults(func=cmd_autocomplete)

    p = sub.add_parser("evaluate", help="IoU report for a manifest of prediction/truth label maps")
    p.add_argument("manifest")
    p.add_argument("--out", required=True)
    p.add_argument("--table")
    p.add_argument("--macro", action="store_true", help="average per pair instead of pooling pixels")
    p.add_argument("--vocab", default=d.vocab)
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("render", help="rasterize a FloorPlan to PNG/SVG")
    p.add_argument("plan")
    p.add_argument("--size", type=_size, default=[512, 512])
    p.add_argument("--png", help="8-bit label map")
    p.add_argument("--rgb", help="colour PNG")
    p.add_argument("--svg")
    p.add_argument("--vocab", default=d.vocab)
    p.set_defaults(func=cmd_render)

    p = sub.add_parser("synth-dataset", help="write rule-labelled synthetic access graphs")
    p.add_argument("--out-dir", required=True)
    p.add_argument("--n", type=int, default=64)
    p.add_argument("--rule", choices=["bijective", "majority", "door"], default="bijective")
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_synth_dataset)
    return parser


_REQUIRED = {
    "autocomplete": ("mask", "graph", "roomtype_params", "denoiser_params", "out_dir"),
}


def _apply_config(parser, argv):
    pre = argparse.ArgumentParser(add_help=False)
    pre.add_argument("--config")
    known, _ = pre.parse_known_args(argv)
    if not known.config:
        return
    try:
        data = json.loads(Path(known.config).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise CliError(f"cannot read config {known.config}: {exc}") from exc
    allowed = set(asdict(PipelineConfig()))
    unknown = set(data) - allowed
    if unknown:
        raise CliError(f"unknown config keys: {sorted(unknown)}")
    PipelineConfig(**{**asdict(PipelineConfig()), **data}).validate()
    for action in parser._subparsers._group_actions:
        for sp in action.choices.values():
            dests = {a.dest for a in sp._actions}
            sp.set_defaults(**{k: v for k, v in data.items() if k in dests})


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        _apply_config(parser, argv)
    except (CliError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code is not None else 0
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    missing = [k for k in _REQUIRED.get(args.command, ()) if getattr(args, k, None) is None]
    if missing:
        print(f"error: missing required options: {', '.join('--' + m.replace('_', '-') for m in missing)}", file=sys.stderr)
        return 2
    try:
        return args.func(args)
    except Exception as exc:  # report and fail; tracebacks only when verbose
        if args.verbose:
            log.exception("command failed")
        stage = getattr(exc, "stage", None)
        print(f"error: {exc}" if stage else f"error ({args.command}): {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
