"""Exit criteria. Each test records one PASS/FAIL line shown in the terminal summary."""

import statistics
import time

import numpy as np
import pytest

from conftest import ACCEPTANCE_LINES, random_images
from fovea.blobs import Component, feret_diameter, feret_diameter_brute, label_components
from fovea.cli import main, run_bench
from fovea.enhancement import Histogram, build_histogram, equalize_adaptive, equalize_global
from fovea.evaluation import GroundTruthRecord, score
from fovea.imaging import save_png
from fovea.morphology import closing, dilate, erode, make_disk, opening
from fovea.phantom import make_phantom
from fovea.pipeline import DetectionResult, PipelineConfig, detect, detect_batch
from fovea.segmentation import otsu
from oracles import class_stats, disk_offsets_brute, flood_fill_labels, naive_dilate, naive_erode, otsu_brute

pytestmark = pytest.mark.slow


class Criterion:
    def __init__(self, title):
        self.title = title
        self.checks = []
        self.finished = False

    def __call__(self, name, ok, detail=""):
        self.checks.append((name, bool(ok), detail))

    def done(self):
        self.finished = True
        failed = [c for c in self.checks if not c[1]]
        shown = failed or self.checks
        status = "FAIL" if failed or not self.checks else "PASS"
        ACCEPTANCE_LINES.append(f"[{status}] {self.title}: " + "; ".join(f"{n} ({d})" if d else n for n, _, d in shown))
        assert not failed, [f"{n} ({d})" for n, _, d in failed]


@pytest.fixture
def criterion(request):
    crit = Criterion(request.node.function.__doc__.strip().splitlines()[0])
    yield crit
    assert crit.finished, f"{crit.title}: outcome never recorded"


def test_1_morphology_algebra(criterion):
    """1 morphology algebra"""
    t0 = time.perf_counter()
    images = random_images(101, 100, max_side=128)
    ok = dict.fromkeys(["duality", "ordering", "extensivity", "idempotence", "fast==naive"], True)
    for radius in (0, 1, 3, 15):
        se = make_disk(radius)
        off = disk_offsets_brute(radius)
        for f in images:
            d, e = dilate(f, se), erode(f, se)
            o, c = opening(f, se), closing(f, se)
            ok["duality"] &= np.array_equal(e, 255 - dilate(255 - f, se))
            ok["ordering"] &= bool((e <= f).all() and (f <= d).all())
            ok["extensivity"] &= bool((o <= f).all() and (f <= c).all())
            ok["idempotence"] &= np.array_equal(opening(o, se), o) and np.array_equal(closing(c, se), c)
            ok["fast==naive"] &= np.array_equal(d, naive_dilate(f, off)) and np.array_equal(e, naive_erode(f, off))
    elapsed = time.perf_counter() - t0
    for k, v in ok.items():
        criterion(k, v, "400 image/radius pairs")
    criterion("runtime < 60 s", elapsed < 60, f"{elapsed:.1f} s")
    criterion.done()


def test_2_otsu_oracle(criterion):
    """2 otsu oracle equivalence"""
    t0 = time.perf_counter()
    r = np.random.default_rng(202)
    mismatches = 0
    worst = 0.0
    for k in range(1000):
        density = r.uniform(0.02, 1.0)
        counts = (r.integers(0, r.integers(2, 500), 256) * (r.random(256) < density)).astype(np.int64)
        if counts.sum() == 0:
            counts[r.integers(256)] = r.integers(1, 10)
        h = Histogram(counts, int(counts.sum()))
        rep = otsu(h)
        mismatches += rep.otsu_level != otsu_brute(counts)
        if k % 10 == 0:
            for t in range(1, 256):
                w0, w1, mu0, mu1, mu = class_stats(counts, t)
                if w0 == 0 or w1 == 0:
                    continue
                a = w0 * (mu0 - mu) ** 2 + w1 * (mu1 - mu) ** 2
                b = w0 * w1 * (mu0 - mu1) ** 2
                if b > 0:
                    worst = max(worst, abs(a - b) / b, abs(rep.sigma2_curve[t] - b) / b)
    criterion("sweep == brute force on 1000 histograms", mismatches == 0, f"{mismatches} mismatches")
    criterion("variance forms agree", worst <= 1e-9, f"max rel err {worst:.1e}")

    g = np.random.default_rng(0)
    samples = np.concatenate([g.normal(60, 10, 10_000), g.normal(180, 10, 10_000)])
    h = build_histogram(np.clip(np.rint(samples), 0, 255).astype(np.uint8)[None, :])
    t = otsu(h).otsu_level
    criterion("two-Gaussian threshold in [110, 130]", 110 <= t <= 130 and t == otsu_brute(h.counts), f"t={t}")
    elapsed = time.perf_counter() - t0
    criterion("runtime < 10 s", elapsed < 10, f"{elapsed:.1f} s")
    criterion.done()


def test_3_equalization(criterion):
    """3 equalization"""
    const = np.full((16, 16), 77, np.uint8)
    two = np.array([[10, 200] * 8] * 8, np.uint8)
    ramp = np.arange(256, dtype=np.uint8)[None, :]
    hand = (
        np.array_equal(equalize_global(const), const)
        and np.array_equal(equalize_global(two), np.where(two == 10, 0, 255))
        and np.array_equal(equalize_global(ramp), ramp)
    )
    criterion("hand-derived mappings exact", hand)

    worst = 0.0
    for seed, (mean, sd) in enumerate([(128, 30), (80, 20), (170, 40), (110, 55)]):
        r = np.random.default_rng(seed)
        f = np.clip(np.rint(r.normal(mean, sd, (128, 128))), 0, 255).astype(np.uint8)
        out = equalize_global(f)
        emp = np.cumsum(np.bincount(out.ravel(), minlength=256)) / out.size
        worst = max(worst, float(np.abs(emp - np.arange(256) / 255.0).max()))
    criterion("KS distance to uniform <= 0.05", worst <= 0.05, f"max {worst:.4f} on 16384-px images")

    same = all(np.array_equal(equalize_adaptive(f, 1, float("inf")), equalize_global(f)) for f in random_images(303, 100, max_side=96, min_side=2))
    criterion("adaptive(1, inf) == global on 100 images", same)
    criterion.done()


def test_4_connected_components(criterion):
    """4 connected components"""
    t0 = time.perf_counter()
    r = np.random.default_rng(404)
    bad = 0
    for _ in range(500):
        h, w = r.integers(1, 65, 2)
        b = r.random((h, w)) < r.uniform(0.1, 0.8)
        for conn in (4, 8):
            ref, n = flood_fill_labels(b, conn)
            cs = label_components(b, conn)
            same = len(cs) == n and np.array_equal(cs.labels, ref) and sum(c.area for c in cs) == int(b.sum())
            bad += not same
    elapsed = time.perf_counter() - t0
    criterion("partition == flood fill (500 images x {4, 8})", bad == 0, f"{bad} mismatches")
    criterion("runtime < 30 s", elapsed < 30, f"{elapsed:.1f} s")
    criterion.done()


def _comp(mask):
    ys, xs = np.nonzero(mask)
    return Component(1, np.column_stack((xs, ys)))


def test_5_shape_metrics(criterion):
    """5 shape metrics"""
    circ = []
    for radius in range(10, 51):
        n = 2 * radius + 5
        yy, xx = np.mgrid[0:n, 0:n] - (radius + 2)
        circ.append(_comp(xx**2 + yy**2 <= radius**2).circularity)
    criterion("disk circularity r=10..50 in [0.85, 1.05]", all(0.85 <= c <= 1.05 for c in circ), f"range {min(circ):.3f}..{max(circ):.3f}")

    rect = [_comp(np.ones((h, h * k), bool)).circularity for h in (1, 2, 3, 5, 8) for k in (10, 12, 20)]
    criterion("rectangles aspect >= 10 below 0.2", max(rect) < 0.2, f"max {max(rect):.3f}")

    r = np.random.default_rng(505)
    n_comp = mismatch = 0
    for _ in range(200):
        h, w = r.integers(4, 48, 2)
        b = r.random((h, w)) < r.uniform(0.2, 0.65)
        for c in label_components(b, 8):
            n_comp += 1
            mismatch += feret_diameter(c) != feret_diameter_brute(c.pixels)
    criterion("Feret hull path == brute force", mismatch == 0, f"{n_comp} components, {mismatch} mismatches")
    criterion.done()


def test_6_phantoms(criterion):
    """6 end-to-end phantoms"""
    t0 = time.perf_counter()
    # randomized macula center, disc side and vessel angles, per-pixel noise sigma 5
    stats = run_bench(100, 2024, PipelineConfig(), noise=5.0)
    elapsed = time.perf_counter() - t0
    ce = stats["centroid_error"]
    criterion(f"detection rate >= 0.90", stats["detection_rate"] >= 0.90, f"{stats['detection_rate']:.2f}")
    criterion(f"median error <= 5 px", ce["median"] is not None and ce["median"] <= 5, f"{ce['median']:.2f} px")
    criterion(f"max error among detections <= 10 px", ce["max"] is not None and ce["max"] <= 10, f"{ce['max']:.2f} px")
    criterion("runtime < 120 s", elapsed < 120, f"{elapsed:.1f} s")
    criterion.done()


def test_7_metric_arithmetic(criterion):
    """7 metric arithmetic"""
    results, truth = [], []
    for i, (pred, actual) in enumerate([(1, 1)] * 239 + [(0, 1)] * 8 + [(0, 0)] * 7):
        results.append(DetectionResult(f"r{i}", bool(pred), (0, 0) if pred else None))
        truth.append(GroundTruthRecord(f"r{i}", bool(actual)))
    rep = score(results, truth)
    criterion("counts 239/8/7/0", (rep.tp, rep.fn, rep.tn, rep.fp) == (239, 8, 7, 0))
    criterion("sensitivity 0.968", rep.sensitivity == 0.968, f"{rep.sensitivity}")
    criterion("specificity 1.000", rep.specificity == 1.0, f"{rep.specificity}")
    criterion("FPR 0.000", rep.false_positive_rate == 0.0, f"{rep.false_positive_rate}")
    criterion.done()


def test_8_performance(criterion, capsys):
    """8 performance"""
    img = make_phantom(88, width=700, height=1050, noise=5).image
    detect(img)  # warm-up
    times = [detect(img).timings["total"] for _ in range(15)]
    med = statistics.median(times)
    criterion("median detect on 700x1050 <= 500 ms", med <= 500, f"{med:.1f} ms")
    code = main(["bench", "--phantoms", "5", "--seed", "3", "--width", "700", "--height", "1050", "--max-median-ms", "750"])
    out = capsys.readouterr().out
    criterion("bench reports stages and passes 750 ms gate", code == 0 and "enhance" in out and "equalize" in out, f"exit {code}")
    criterion.done()


def test_9_determinism(criterion, tmp_path):
    """9 determinism"""
    paths = []
    for i in range(20):
        p = tmp_path / f"f{i:02d}.png"
        save_png(make_phantom(900 + i, noise=5).image, p)
        paths.append(p)
    one = detect_batch(paths, parallelism=1)
    eight = detect_batch(paths, parallelism=8)
    criterion("batch parallelism 1 == 8 on 20 images", [r.detection_fields() for r in one] == [r.detection_fields() for r in eight])
    a = run_bench(20, 7, PipelineConfig())
    b = run_bench(20, 7, PipelineConfig())
    same = {k: v for k, v in a.items() if k != "timing_ms"} == {k: v for k, v in b.items() if k != "timing_ms"}
    criterion("seeded bench statistics reproduce", same)
    criterion.done()
