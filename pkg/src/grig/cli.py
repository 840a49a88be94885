"""Command-line surface: dataset conversion, transforms, visualization,
verification, statistics, and scaling benchmarks.

Exit codes: 0 success, 2 usage, 3 I/O failure, 4 format failure,
5 verification failure.
"""

from __future__ import annotations

import argparse
import base64
import io
import math
import os
import sys
import time
from multiprocessing import Pool
from pathlib import Path

import numpy as np

from .granular import SearchParams, partition
from .graph import ImageGraph, build_edges, build_graph, with_features
from .imaging import (
    DatasetFormatError,
    GrayImage,
    RgbImage,
    decode_cifar10,
    decode_mnist_idx,
    load_labeled_image_dir,
    to_grayscale,
)
from .oracle import verify_partition
from .serialize import (
    GraphDataset,
    GraphJsonError,
    GrigError,
    graph_from_json,
    graph_to_json,
    read_dataset,
    record_from_graph,
    write_dataset,
)

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_IO = 3
EXIT_FORMAT = 4
EXIT_VERIFY = 5


class UsageError(ValueError):
    pass


def _add_param_flags(p: argparse.ArgumentParser):
    p.add_argument("--purity", type=float, default=SearchParams().p_thr, help="initial purity threshold")
    p.add_argument("--thr1", type=float, default=SearchParams().thr1, help="gray-difference threshold")
    p.add_argument("--var-thr", type=float, default=SearchParams().var_thr, help="variance ceiling")
    p.add_argument("--growth", type=float, default=SearchParams().growth, help="threshold schedule factor")
    p.add_argument("--sigma", type=float, default=SearchParams().sigma, help="Gaussian sigma")
    p.add_argument("--global-schedule", action="store_true", help="carry the threshold schedule across regions")


def _params_from_args(args) -> SearchParams:
    return SearchParams(
        p_thr=args.purity,
        thr1=args.thr1,
        var_thr=args.var_thr,
        growth=args.growth,
        sigma=args.sigma,
        global_schedule=getattr(args, "global_schedule", False),
    )


def _params_to_meta(params: SearchParams) -> dict:
    return {
        "p_thr": params.p_thr,
        "thr1": params.thr1,
        "var_thr": params.var_thr,
        "growth": params.growth,
        "sigma": params.sigma,
        "global_schedule": params.global_schedule,
    }


def _params_from_meta(meta: dict) -> SearchParams:
    return SearchParams(
        p_thr=meta["p_thr"],
        thr1=meta["thr1"],
        var_thr=meta["var_thr"],
        growth=meta["growth"],
        sigma=meta["sigma"],
        global_schedule=meta.get("global_schedule", False),
    )


def load_records(fmt: str, input_path: str, labels_path: str | None, limit: int | None):
    """Decode (images, labels, class_count) for one of the dataset formats."""
    if fmt == "mnist":
        if not labels_path:
            raise UsageError("--format mnist needs --labels")
        pairs = decode_mnist_idx(Path(input_path).read_bytes(), Path(labels_path).read_bytes())
        class_count = 10
    elif fmt == "cifar10":
        path = Path(input_path)
        if path.is_dir():
            data = b"".join(p.read_bytes() for p in sorted(path.glob("*.bin")))
        else:
            data = path.read_bytes()
        pairs = [(to_grayscale(img), lab) for img, lab in decode_cifar10(data)]
        class_count = 10
    elif fmt == "image-dir":
        pairs, classes = load_labeled_image_dir(input_path)
        class_count = len(classes)
    else:
        raise UsageError(f"unknown format {fmt!r}")
    if limit is not None:
        pairs = pairs[:limit]
    return pairs, class_count


_WORKER_PARAMS: SearchParams | None = None


def _init_worker(params: SearchParams):
    global _WORKER_PARAMS
    _WORKER_PARAMS = params


def _convert_one(task):
    idx, values, label = task
    g = build_graph(GrayImage(values), _WORKER_PARAMS)
    rec = record_from_graph(g, label)
    return idx, rec


def convert_images(pairs, params: SearchParams, class_count: int, jobs: int, metadata: dict) -> GraphDataset:
    """Convert decoded (image, label) pairs into a dataset; output order
    follows input order for any worker count."""
    tasks = [(i, img.values, label) for i, (img, label) in enumerate(pairs)]
    records = [None] * len(tasks)
    if jobs <= 1:
        _init_worker(params)
        for task in tasks:
            idx, rec = _convert_one(task)
            records[idx] = rec
    else:
        with Pool(jobs, initializer=_init_worker, initargs=(params,)) as pool:
            for idx, rec in pool.imap_unordered(_convert_one, tasks, chunksize=16):
                records[idx] = rec
    ds = GraphDataset(10, class_count, list(records), metadata)
    return ds


def _default_jobs(args) -> int:
    if args.jobs is not None:
        return max(1, args.jobs)
    env = os.environ.get("GRIG_JOBS")
    return max(1, int(env)) if env else 1


def cmd_convert(args) -> int:
    params = _params_from_args(args)
    pairs, class_count = load_records(args.format, args.input, args.labels, args.limit)
    if pairs:
        dims = {"image_width": pairs[0][0].width, "image_height": pairs[0][0].height}
    else:
        dims = {}
    metadata = {
        "source": args.format,
        "input": str(args.input),
        "params": _params_to_meta(params),
        "created": time.strftime("%Y-%m-%dT%H:%M:%S"),
        **dims,
    }
    ds = convert_images(pairs, params, class_count, _default_jobs(args), metadata)
    write_dataset(ds, args.out)
    print(f"wrote {len(ds.graphs)} graphs to {args.out}")
    return EXIT_OK


def _load_gray_image(path: str) -> GrayImage:
    from PIL import Image

    with Image.open(path) as im:
        if im.mode in ("L", "I;16", "I", "1"):
            return GrayImage(np.asarray(im.convert("L"), dtype=np.uint8))
        return to_grayscale(RgbImage(np.asarray(im.convert("RGB"), dtype=np.uint8)))


def cmd_graph(args) -> int:
    img = _load_gray_image(args.input)
    g = build_graph(img, _params_from_args(args))
    Path(args.out).write_text(graph_to_json(g))
    print(f"{g.node_count} nodes, {g.edge_count} edges -> {args.out}")
    return EXIT_OK


def _spec_from_args(args) -> "TransformSpec":
    from .ops import TransformSpec

    chosen = []
    if args.rotate is not None:
        center = None
        if args.center:
            x, y = args.center.split(",")
            center = (float(x), float(y))
        chosen.append(TransformSpec("rotate", angle=args.rotate, center=center))
    if args.flip_h:
        chosen.append(TransformSpec("flip_horizontal"))
    if args.flip_v:
        chosen.append(TransformSpec("flip_vertical"))
    if args.upsample is not None:
        chosen.append(TransformSpec("upsample", count=args.upsample, seed=args.seed))
    if args.downsample is not None:
        chosen.append(TransformSpec("downsample", count=args.downsample))
    if len(chosen) != 1:
        raise UsageError(f"transform needs exactly one operation, got {len(chosen)}")
    return chosen[0]


def cmd_transform(args) -> int:
    from .ops import apply_transform

    spec = _spec_from_args(args)
    g = graph_from_json(Path(args.infile).read_text())
    Path(args.out).write_text(graph_to_json(apply_transform(g, spec)))
    return EXIT_OK


def cmd_subgraph(args) -> int:
    from .ops import TransformSpec, apply_transform

    try:
        x0, y0, x1, y1 = (int(v) for v in args.rect.split(","))
    except ValueError:
        raise UsageError(f"--rect wants x0,y0,x1,y1, got {args.rect!r}") from None
    g = graph_from_json(Path(args.infile).read_text())
    out = apply_transform(g, TransformSpec("subgraph", region=(x0, y0, x1, y1)))
    Path(args.out).write_text(graph_to_json(out))
    return EXIT_OK


def graph_to_svg(g: ImageGraph, image: GrayImage | None = None, scale: int = 12) -> str:
    """Deterministic SVG overlay: edges, covered-rect outlines, centers."""
    w, h = g.width * scale, g.height * scale
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" '
        f'viewBox="-0.5 -0.5 {g.width} {g.height}">'
    ]
    if image is not None:
        from PIL import Image

        buf = io.BytesIO()
        Image.fromarray(image.values.astype(np.uint8), mode="L").save(buf, format="PNG")
        b64 = base64.b64encode(buf.getvalue()).decode("ascii")
        parts.append(
            f'<image x="-0.5" y="-0.5" width="{g.width}" height="{g.height}" '
            f'image-rendering="pixelated" href="data:image/png;base64,{b64}"/>'
        )
    for i, j in g.edges:
        a, b = g.nodes[i], g.nodes[j]
        parts.append(
            f'<line x1="{a.cx}" y1="{a.cy}" x2="{b.cx}" y2="{b.cy}" '
            f'stroke="#2b8cbe" stroke-width="0.08"/>'
        )
    for n in g.nodes:
        x0, y0, x1, y1 = n.covered_bounds(g.width, g.height)
        parts.append(
            f'<rect x="{x0 - 0.5}" y="{y0 - 0.5}" width="{x1 - x0 + 1}" height="{y1 - y0 + 1}" '
            f'fill="none" stroke="#e34a33" stroke-width="0.06"/>'
        )
    for n in g.nodes:
        parts.append(f'<circle cx="{n.cx}" cy="{n.cy}" r="0.18" fill="#31a354"/>')
    parts.append("</svg>")
    return "\n".join(parts)


def cmd_viz(args) -> int:
    g = graph_from_json(Path(args.infile).read_text())
    image = _load_gray_image(args.image) if args.image else None
    Path(args.out).write_text(graph_to_svg(g, image))
    return EXIT_OK


def _quantiles(values: list[int]) -> str:
    if not values:
        return "n/a"
    arr = np.asarray(values)
    return (
        f"min {arr.min()}  median {float(np.median(arr)):g}  "
        f"mean {arr.mean():.2f}  max {arr.max()}"
    )


def cmd_stats(args) -> int:
    ds = read_dataset(args.infile)
    node_counts = [rec.node_count for rec in ds.graphs]
    edge_counts = [rec.edges.shape[0] for rec in ds.graphs]
    print(f"graphs: {len(ds.graphs)}   feature_dim: {ds.feature_dim}   classes: {ds.class_count}")
    hist = {}
    for rec in ds.graphs:
        hist[rec.label] = hist.get(rec.label, 0) + 1
    print("labels: " + " ".join(f"{k}:{v}" for k, v in sorted(hist.items())))
    print(f"nodes per graph: {_quantiles(node_counts)}")
    print(f"edges per graph: {_quantiles(edge_counts)}")
    # Feature slots 2 and 3 hold covered width/height fractions, so their
    # product summed over nodes is coverage redundancy (regions per pixel).
    redundancy = [float((rec.features[:, 2] * rec.features[:, 3]).sum()) for rec in ds.graphs if rec.node_count]
    if redundancy:
        print(f"mean regions per pixel: {np.mean(redundancy):.4f}")
    meta = ds.metadata
    if "image_width" in meta and "image_height" in meta and redundancy:
        n_px = meta["image_width"] * meta["image_height"]
        per_region = [
            float((rec.features[:, 2] * rec.features[:, 3]).sum()) * n_px / rec.node_count
            for rec in ds.graphs
            if rec.node_count
        ]
        print(f"mean pixels per region: {np.mean(per_region):.2f}")
    return EXIT_OK


def cmd_verify(args) -> int:
    ds = read_dataset(args.grig)
    meta = ds.metadata
    params = _params_from_meta(meta["params"]) if "params" in meta else _params_from_args(args)
    pairs, _ = load_records(args.format, args.input, args.labels, limit=len(ds.graphs))
    if len(pairs) < len(ds.graphs):
        print(f"source has only {len(pairs)} records for {len(ds.graphs)} graphs", file=sys.stderr)
        return EXIT_VERIFY
    failures = 0
    for gi, rec in enumerate(ds.graphs):
        img, label = pairs[gi]
        rects = partition(img, params)
        report = verify_partition(img, params, rects)
        for v in report.violations:
            failures += 1
            print(f"graph {gi} rect {v.rect_id}: [{v.kind}] {v.detail}", file=sys.stderr)
        fresh = record_from_graph(with_features(ImageGraph(img.width, img.height, tuple(rects), tuple(build_edges(rects)))), label)
        if rec.label != fresh.label:
            failures += 1
            print(f"graph {gi}: stored label {rec.label} != source {fresh.label}", file=sys.stderr)
        if not np.array_equal(rec.features, fresh.features):
            failures += 1
            print(f"graph {gi}: stored features differ from reconstruction", file=sys.stderr)
        if not np.array_equal(rec.edges, fresh.edges):
            failures += 1
            print(f"graph {gi}: stored edges differ from reconstruction", file=sys.stderr)
    if failures:
        print(f"verification failed: {failures} violations over {len(ds.graphs)} graphs", file=sys.stderr)
        return EXIT_VERIFY
    print(f"verified {len(ds.graphs)} graphs: zero violations")
    return EXIT_OK


def synthetic_gradient_image(side: int, seed: int = 0) -> GrayImage:
    """Smooth deterministic test pattern: diagonal ramp plus low-frequency waves."""
    y, x = np.mgrid[0:side, 0:side].astype(np.float64)
    v = (
        96.0
        + 80.0 * (x + y) / (2 * side - 2)
        + 40.0 * np.sin(2.0 * math.pi * x / side) * np.cos(2.0 * math.pi * y / side)
    )
    return GrayImage(np.clip(np.rint(v), 0, 255).astype(np.uint8))


def run_benchmark(sizes: list[int], trials: int, params: SearchParams | None = None):
    """Median wall time per size plus the fitted log-log scaling exponent."""
    params = params or SearchParams()
    build_graph(synthetic_gradient_image(32), params)  # warm the jitted kernels
    rows = []
    for side in sizes:
        img = synthetic_gradient_image(side)
        times = []
        for _ in range(trials):
            t0 = time.perf_counter()
            g = build_graph(img, params)
            times.append(time.perf_counter() - t0)
        rows.append((side, side * side, float(np.median(times)), g.node_count, g.edge_count))
    logn = np.log([r[1] for r in rows])
    logt = np.log([r[2] for r in rows])
    exponent = float(np.polyfit(logn, logt, 1)[0])
    return rows, exponent


def cmd_bench(args) -> int:
    sizes = [int(s) for s in args.sizes.split(",")]
    rows, exponent = run_benchmark(sizes, args.trials)
    print(f"{'side':>6} {'pixels':>9} {'median_s':>10} {'nodes':>7} {'edges':>8}")
    for side, n, t, nodes, edges in rows:
        print(f"{side:>6} {n:>9} {t:>10.4f} {nodes:>7} {edges:>8}")
    print(f"fitted exponent: {exponent:.3f}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="grig", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("convert", help="convert an image dataset to a GRIG file")
    p.add_argument("--format", required=True, choices=["mnist", "cifar10", "image-dir"])
    p.add_argument("--input", required=True)
    p.add_argument("--labels", default=None)
    p.add_argument("--out", required=True)
    p.add_argument("--jobs", type=int, default=None, help="worker count (default $GRIG_JOBS or 1)")
    p.add_argument("--limit", type=int, default=None)
    _add_param_flags(p)
    p.set_defaults(func=cmd_convert)

    p = sub.add_parser("graph", help="convert one image to a JSON graph")
    p.add_argument("--input", required=True)
    p.add_argument("--out", required=True)
    _add_param_flags(p)
    p.set_defaults(func=cmd_graph)

    p = sub.add_parser("transform", help="apply one geometric op to a JSON graph")
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--rotate", type=float, default=None, help="angle in degrees")
    p.add_argument("--center", default=None, help="rotation center X,Y (default: canvas center)")
    p.add_argument("--flip-h", action="store_true")
    p.add_argument("--flip-v", action="store_true")
    p.add_argument("--upsample", type=int, default=None, metavar="K")
    p.add_argument("--downsample", type=int, default=None, metavar="K")
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_transform)

    p = sub.add_parser("subgraph", help="extract the graph of a rectangular region")
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--rect", required=True, help="x0,y0,x1,y1")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_subgraph)

    p = sub.add_parser("viz", help="render a JSON graph as SVG")
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--image", default=None, help="optional source image underlay")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_viz)

    p = sub.add_parser("stats", help="summarize a GRIG dataset")
    p.add_argument("--in", dest="infile", required=True)
    p.set_defaults(func=cmd_stats)

    p = sub.add_parser("verify", help="re-derive a GRIG dataset and report violations")
    p.add_argument("--in", dest="grig", required=True)
    p.add_argument("--format", required=True, choices=["mnist", "cifar10", "image-dir"])
    p.add_argument("--input", required=True)
    p.add_argument("--labels", default=None)
    _add_param_flags(p)
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("bench", help="scaling benchmark on synthetic images")
    p.add_argument("--sizes", default="64,128,256,512")
    p.add_argument("--trials", type=int, default=5)
    p.set_defaults(func=cmd_bench)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code) if e.code else EXIT_OK
    try:
        return args.func(args)
    except UsageError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except (DatasetFormatError, GrigError, GraphJsonError) as e:
        print(f"format error: {e}", file=sys.stderr)
        return EXIT_FORMAT
    except OSError as e:
        print(f"I/O error: {e}", file=sys.stderr)
        return EXIT_IO
    except ValueError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_USAGE


def entrypoint():
    sys.exit(main(sys.argv[1:]))


if __name__ == "__main__":
    entrypoint()
