"""Command-line entry point: ``fovea detect|batch|eval|bench``."""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

import numpy as np

from fovea import evaluation, imaging, serialize
from fovea.errors import FoveaError
from fovea.phantom import make_phantom
from fovea.pipeline import PipelineConfig, centroid_error, default_parallelism, detect, detect_batch

log = logging.getLogger("fovea")

IMAGE_SUFFIXES = {".png", ".jpg", ".jpeg"}
STAGE_FILES = ("grayscale", "enhanced", "equalized", "denoised", "binary", "components")
HIT_RADIUS_PX = 10.0


class UsageError(Exception):
    pass


def _load_config(args) -> PipelineConfig:
    try:
        cfg = PipelineConfig()
        if args.config:
            with open(args.config, encoding="utf-8") as fh:
                cfg = PipelineConfig.from_dict(json.load(fh))
        return cfg.with_overrides(args.set or [])
    except (OSError, ValueError, TypeError) as exc:
        raise UsageError(f"bad configuration: {exc}") from exc


def _out_dir(args) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _write_outputs(result, img, out: Path, debug: bool) -> None:
    stem = Path(result.source).stem
    imaging.render_annotation(img, result, out / f"{stem}_annotated.png")
    if debug and result.stages:
        stage_dir = out / f"{stem}_stages"
        stage_dir.mkdir(exist_ok=True)
        for i, name in enumerate(STAGE_FILES, 1):
            imaging.save_png(result.stages[name], stage_dir / f"{i:02d}_{name}.png")


def _describe(r) -> str:
    if r.error:
        return f"{r.source}: ERROR {r.error}"
    if not r.detected:
        return f"{r.source}: no macula detected ({r.timings.get('total', 0):.1f} ms)"
    c = r.candidate
    return (
        f"{r.source}: fovea at ({r.fovea[0]}, {r.fovea[1]}) area={c.area} "
        f"circularity={c.circularity:.3f} otsu={c.otsu_level} ({r.timings['total']:.1f} ms)"
    )


def cmd_detect(args) -> int:
    cfg = _load_config(args)
    out = _out_dir(args)
    try:
        img = imaging.load_image(args.image)
        result = detect(img, cfg, source=str(args.image), debug=args.debug_stages)
        _write_outputs(result, img, out, args.debug_stages)
    except FoveaError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    print(serialize.dumps(serialize.result_to_dict(result)) if args.json else _describe(result))
    return 0


def discover_images(directory) -> list[Path]:
    directory = Path(directory)
    if not directory.is_dir():
        raise UsageError(f"not a directory: {directory}")
    return sorted(
        (p for p in directory.iterdir() if p.is_file() and p.suffix.lower() in IMAGE_SUFFIXES),
        key=lambda p: p.name,
    )


def cmd_batch(args) -> int:
    cfg = _load_config(args)
    paths = discover_images(args.directory)
    out = _out_dir(args)
    workers = args.workers or default_parallelism()
    results = detect_batch(paths, cfg, parallelism=workers, debug=args.debug_stages)
    failed = 0
    for path, res in zip(paths, results):
        if res.error is None:
            try:
                _write_outputs(res, imaging.load_image(path), out, args.debug_stages)
            except FoveaError as exc:
                res.error = f"{type(exc).__name__}: {exc}"
        res.stages = None
        failed += res.error is not None
        log.info(_describe(res))
    (out / "results.json").write_text(serialize.dumps_results(results), encoding="utf-8")
    print(f"{len(results)} images, {sum(r.detected for r in results)} detected, {failed} errors -> {out / 'results.json'}")
    return 1 if failed else 0


def cmd_eval(args) -> int:
    try:
        results = serialize.load_results(args.results)
        truth = evaluation.load_truth(args.truth)
        report = evaluation.score(results, truth)
    except (OSError, ValueError, FoveaError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    if args.json:
        print(serialize.dumps(report.to_dict()))
        return 0

    def fmt(x):
        return "n/a" if x is None else f"{x:.3f}"

    print(f"tp={report.tp} fp={report.fp} tn={report.tn} fn={report.fn}")
    print(f"sensitivity {fmt(report.sensitivity)}")
    print(f"specificity {fmt(report.specificity)}")
    print(f"false positive rate {fmt(report.false_positive_rate)}")
    ce = report.to_dict()["centroid_error"]
    if ce["count"]:
        print(f"centroid error px: median {ce['median']:.3f} max {ce['max']:.3f} (n={ce['count']})")
    if report.timing:
        t = report.timing
        print(f"total ms: mean {t['mean']:.1f} median {t['median']:.1f} p95 {t['p95']:.1f}")
    return 0


def run_bench(n: int, seed: int, cfg: PipelineConfig, noise: float = 5.0, width: int = 1050, height: int = 700) -> dict:
    """Detect on ``n`` seeded phantoms and summarize accuracy and timing."""
    seeds = np.random.SeedSequence(seed).spawn(n)
    detected = hits = 0
    errors = []
    stage_times: dict[str, list[float]] = {}
    for ss in seeds:
        ph = make_phantom(np.random.default_rng(ss), width=width, height=height, noise=noise)
        res = detect(ph.image, cfg)
        for k, v in res.timings.items():
            stage_times.setdefault(k, []).append(v)
        if res.detected:
            detected += 1
            err = centroid_error(res, ph.fovea)
            errors.append(err)
            hits += err <= HIT_RADIUS_PX
    totals = stage_times.get("total", [])
    return {
        "phantoms": n,
        "seed": seed,
        "detection_rate": detected / n if n else 0.0,
        "hit_rate": hits / n if n else 0.0,
        "centroid_error": {
            "median": float(np.median(errors)) if errors else None,
            "mean": float(np.mean(errors)) if errors else None,
            "max": float(max(errors)) if errors else None,
        },
        "timing_ms": {
            "median": float(np.median(totals)) if totals else None,
            "p95": float(np.percentile(totals, 95)) if totals else None,
            "stages_median": {k: float(np.median(v)) for k, v in stage_times.items() if k != "total"},
        },
    }


def cmd_bench(args) -> int:
    cfg = _load_config(args)
    if args.phantoms < 1:
        raise UsageError("--phantoms must be >= 1")
    stats = run_bench(args.phantoms, args.seed, cfg, args.noise, args.width, args.height)
    if args.json:
        print(serialize.dumps(stats))
    else:
        ce, tm = stats["centroid_error"], stats["timing_ms"]
        print(f"phantoms {stats['phantoms']} seed {stats['seed']} ({args.width}x{args.height}, noise {args.noise})")
        print(f"detection rate {stats['detection_rate']:.3f}  within {HIT_RADIUS_PX:g} px {stats['hit_rate']:.3f}")
        if ce["median"] is not None:
            print(f"centroid error px: median {ce['median']:.3f} mean {ce['mean']:.3f} max {ce['max']:.3f}")
        print(f"total ms: median {tm['median']:.1f} p95 {tm['p95']:.1f}")
        for name, ms in tm["stages_median"].items():
            print(f"  {name:<15s}{ms:8.1f} ms")
    if args.max_median_ms is not None and stats["timing_ms"]["median"] > args.max_median_ms:
        print(f"median {stats['timing_ms']['median']:.1f} ms exceeds budget {args.max_median_ms:g} ms", file=sys.stderr)
        return 1
    return 0


def _add_config_args(p):
    p.add_argument("--config", help="JSON file with PipelineConfig fields")
    p.add_argument("--set", action="append", metavar="KEY=VALUE", help="override one config field (repeatable)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="fovea", description="Locate the macula fovea in color fundus images.")
    parser.add_argument("-v", "--verbose", action="store_true", help="log one line per file")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("detect", help="detect the fovea in one image")
    p.add_argument("image")
    p.add_argument("--out", default="fovea-out", help="directory for the annotated image")
    p.add_argument("--json", action="store_true", help="print the result as one JSON line")
    p.add_argument("--debug-stages", action="store_true", help="dump intermediate stages as PNG")
    _add_config_args(p)
    p.set_defaults(func=cmd_detect)

    p = sub.add_parser("batch", help="detect over every PNG/JPEG in a directory")
    p.add_argument("directory")
    p.add_argument("--out", default="fovea-out")
    p.add_argument("--workers", type=int, default=None, help="parallel workers (default $FOVEA_THREADS or 1)")
    p.add_argument("--debug-stages", action="store_true")
    _add_config_args(p)
    p.set_defaults(func=cmd_batch)

    p = sub.add_parser("eval", help="score results.json against a truth CSV")
    p.add_argument("--results", required=True)
    p.add_argument("--truth", required=True)
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("bench", help="accuracy and timing on synthetic phantoms")
    p.add_argument("--phantoms", type=int, default=100)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--noise", type=float, default=5.0, help="per-pixel Gaussian noise sigma in levels")
    p.add_argument("--width", type=int, default=1050)
    p.add_argument("--height", type=int, default=700)
    p.add_argument("--max-median-ms", type=float, default=None, help="exit 1 if the median total exceeds this")
    p.add_argument("--json", action="store_true")
    _add_config_args(p)
    p.set_defaults(func=cmd_bench)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s", stream=sys.stderr)
    if getattr(args, "workers", None) is not None and args.workers < 1:
        parser.error("--workers must be >= 1")
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"fovea: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
