"""Haar DWT, histogram mutual information and the universal quality index."""

from dataclasses import dataclass
from typing import Callable

import numpy as np
import pywt
from numpy.typing import NDArray

from .errors import DimensionError
from .imaging import GrayImage

MI_BINS = 64
# Denominators below this make the quality index undefined
QUALITY_EPSILON = 1e-12


@dataclass(frozen=True, eq=False)
class WaveletQuad:
    """One-level Haar sub-bands, each half the (even-padded) source size.

    Attributes:
        ll (GrayImage): approximation
        hl (GrayImage): vertical detail (column differences)
        lh (GrayImage): horizontal detail (row differences)
        hh (GrayImage): diagonal detail
    """

    ll: GrayImage
    hl: GrayImage
    lh: GrayImage
    hh: GrayImage

    def bands(self) -> tuple[GrayImage, GrayImage, GrayImage, GrayImage]:
        return self.ll, self.hl, self.lh, self.hh


@dataclass(frozen=True, eq=False)
class JointHistogram:
    bins: NDArray[np.int64]
    n: int

    def pmf(self) -> NDArray[np.float64]:
        return self.bins / self.n

    def marginals(self) -> tuple[NDArray[np.int64], NDArray[np.int64]]:
        return self.bins.sum(axis=1), self.bins.sum(axis=0)


@dataclass(frozen=True)
class QualityStats:
    """Sample statistics of an image pair, N - 1 denominators."""

    mean_x: float
    mean_y: float
    var_x: float
    var_y: float
    cov: float


def _check_pair(x: GrayImage, y: GrayImage) -> tuple[GrayImage, GrayImage]:
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.shape != y.shape:
        raise DimensionError(f"Image shapes differ: {x.shape} vs {y.shape}")
    if x.size == 0:
        raise DimensionError("Images must not be empty")
    return x, y


def haar_dwt(img: GrayImage) -> WaveletQuad:
    """One-level orthonormal Haar DWT; odd sides are edge-padded to even."""

    img = np.asarray(img, dtype=np.float64)
    if img.ndim != 2 or img.size == 0:
        raise DimensionError(f"Expected a non-empty 2-D image, got shape {img.shape}")
    pad = ((0, img.shape[0] % 2), (0, img.shape[1] % 2))
    if any(p for _, p in pad):
        img = np.pad(img, pad, mode="edge")
    ll, (lh, hl, hh) = pywt.dwt2(img, "haar", mode="periodization")
    return WaveletQuad(ll=ll, hl=hl, lh=lh, hh=hh)


def inverse_haar(quad: WaveletQuad) -> GrayImage:
    """Rebuild the (even-padded) source image from its sub-bands."""

    return pywt.idwt2((quad.ll, (quad.lh, quad.hl, quad.hh)), "haar", mode="periodization")


def joint_histogram(x: GrayImage, y: GrayImage, bins: int = MI_BINS) -> JointHistogram:
    """Joint counts of `x` and `y` over `bins` equal cells spanning both images' range."""

    x, y = _check_pair(x, y)
    lo = float(min(x.min(), y.min()))
    hi = float(max(x.max(), y.max()))
    if hi <= lo:
        # histogram2d widens a degenerate range, but a constant pair is one cell
        counts = np.zeros((bins, bins), dtype=np.int64)
        counts[0, 0] = x.size
        return JointHistogram(counts, int(x.size))
    counts, _, _ = np.histogram2d(
        x.ravel(), y.ravel(), bins=bins, range=[[lo, hi], [lo, hi]]
    )
    return JointHistogram(counts.astype(np.int64), int(x.size))


def mutual_information(x: GrayImage, y: GrayImage, bins: int = MI_BINS) -> float:
    """Plug-in mutual information of two images in bits."""

    hist = joint_histogram(x, y, bins)
    p = hist.pmf()
    px, py = (m / hist.n for m in hist.marginals())
    nz = p > 0
    outer = np.outer(px, py)
    mi = float(np.sum(p[nz] * np.log2(p[nz] / outer[nz])))
    return max(mi, 0.0)


def quality_stats(x: GrayImage, y: GrayImage) -> QualityStats:
    x, y = _check_pair(x, y)
    if x.size < 2:
        raise DimensionError("The quality index needs at least 2 samples")
    x, y = x.ravel(), y.ravel()
    mean_x, mean_y = x.mean(), y.mean()
    dx, dy = x - mean_x, y - mean_y
    n1 = x.size - 1
    return QualityStats(
        mean_x=float(mean_x),
        mean_y=float(mean_y),
        var_x=float(np.dot(dx, dx) / n1),
        var_y=float(np.dot(dy, dy) / n1),
        cov=float(np.dot(dx, dy) / n1),
    )


def quality_index(x: GrayImage, y: GrayImage) -> float:
    """Universal image quality index of `y` against `x`, in [-1, 1]."""

    s = quality_stats(x, y)
    if np.array_equal(x, y):
        return 1.0
    den = (s.var_x + s.var_y) * (s.mean_x * s.mean_x + s.mean_y * s.mean_y)
    if abs(den) < QUALITY_EPSILON:
        return 0.0
    q = 4.0 * s.cov * (s.mean_x * s.mean_y) / den
    return float(np.clip(q, -1.0, 1.0))


def subband_average(
    f: Callable[[GrayImage, GrayImage], float], cur: WaveletQuad, prev: WaveletQuad
) -> float:
    """Mean of a pairwise measure over the four matching sub-bands."""

    return sum(f(c, p) for c, p in zip(cur.bands(), prev.bands())) / 4.0


def count_feature_points(band: GrayImage) -> int:
    """Coefficients strictly outside [median - sigma, median + sigma]."""

    band = np.asarray(band, dtype=np.float64)
    if band.size == 0:
        raise DimensionError("Cannot count feature points of an empty band")
    median = np.median(band)
    sigma = band.std()
    return int(np.count_nonzero((band > median + sigma) | (band < median - sigma)))
