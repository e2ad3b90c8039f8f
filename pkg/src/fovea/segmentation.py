"""Otsu threshold selection and dark-region binarization."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from fovea.enhancement import Histogram


@dataclass(frozen=True)
class ThresholdReport:
    otsu_level: int
    normalized_t: float
    sigma2_curve: np.ndarray  # index t = 0..255; entry 0 is unused and stays 0

    def effective_t(self, offset: float) -> float:
        return min(max(self.normalized_t - offset, 0.0), 1.0)


def otsu(hist: Histogram) -> ThresholdReport:
    """Exhaustive between-class variance sweep over t = 1..255.

    Class 0 holds levels ``< t`` and class 1 levels ``>= t``; a split with an
    empty class scores 0. Scores are compared exactly in integers via
    ``(S0*n1 - S1*n0)**2 / (n0*n1)``, which is proportional to the variance.

    The variance is flat across any run of empty bins, so a histogram with a
    gap between its modes has a whole plateau of maximizers. The reported
    level is the lower median of all maximizers, i.e. the middle of the gap.
    """
    counts = [int(c) for c in hist.counts]
    total = hist.total
    if total < 1:
        raise ValueError("histogram is empty")
    weighted_total = sum(i * c for i, c in enumerate(counts))

    curve = np.zeros(256, dtype=np.float64)
    best, best_num, best_den = [], -1, 1
    n0 = s0 = 0
    for t in range(1, 256):
        n0 += counts[t - 1]
        s0 += (t - 1) * counts[t - 1]
        n1 = total - n0
        if n0 == 0 or n1 == 0:
            num, den = 0, 1
        else:
            s1 = weighted_total - s0
            num = (s0 * n1 - s1 * n0) ** 2
            den = n0 * n1
            # sigma^2 = n0 n1 (mu0 - mu1)^2 / N^2 = num / (den N^2)
            curve[t] = num / (den * float(total) ** 2)
        if num * best_den > best_num * den:
            best, best_num, best_den = [t], num, den
        elif num * best_den == best_num * den:
            best.append(t)
    level = best[(len(best) - 1) // 2]
    return ThresholdReport(level, level / 255.0, curve)


def binarize_dark(
    f: np.ndarray,
    report: ThresholdReport,
    offset: float = 0.2,
    mask: np.ndarray | None = None,
) -> np.ndarray:
    """Foreground = masked-in pixels darker than the offset-lowered threshold."""
    if not 0.0 <= offset <= 1.0:
        raise ValueError(f"offset must be in [0, 1], got {offset}")
    f = np.asarray(f)
    fg = (f / 255.0) < report.effective_t(offset)
    if mask is not None:
        fg &= np.asarray(mask, dtype=bool)
    return fg
