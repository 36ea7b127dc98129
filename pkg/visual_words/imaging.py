"""Raster types, colour conversions and small geometric helpers.

A frame is a ``uint8`` array of shape (height, width, 3); a grey image is a
``float64`` array of shape (height, width). Everything here is a pure
function of its inputs.
"""

from dataclasses import dataclass

import numpy as np
from numpy.typing import NDArray
from scipy.signal import convolve2d
from skimage import color

from .errors import DimensionError

Frame = NDArray[np.uint8]
GrayImage = NDArray[np.float64]

SOBEL_V = np.array([[-1, 0, 1], [-2, 0, 2], [-1, 0, 1]], dtype=np.float64)
SOBEL_H = SOBEL_V.T.copy()

# ITU-R BT.601 full range
_YCBCR = np.array(
    [
        [0.299, 0.587, 0.114],
        [-0.168736, -0.331264, 0.5],
        [0.5, -0.418688, -0.081312],
    ]
)
_YCBCR_OFFSET = np.array([0.0, 128.0, 128.0])


def as_frame(pixels) -> Frame:
    """Validate and return an RGB frame.

    Args:
        pixels: array-like of shape (height, width, 3) with values in [0, 255]

    Raises:
        DimensionError: The array is not a non-empty RGB raster.

    Returns:
        Frame: a read-only ``uint8`` copy
    """

    array = np.asarray(pixels)
    if array.ndim != 3 or array.shape[2] != 3 or array.shape[0] < 1 or array.shape[1] < 1:
        raise DimensionError(f"Expected an (h, w, 3) RGB raster, got shape {array.shape}")
    if array.dtype != np.uint8:
        if array.min() < 0 or array.max() > 255:
            raise DimensionError("Pixel channels must lie in [0, 255]")
        array = array.astype(np.uint8)
    frame = array.copy()
    frame.flags.writeable = False
    return frame


@dataclass(frozen=True)
class Box:
    """Axis-aligned pixel box, top-left corner plus extent."""

    x: int
    y: int
    w: int
    h: int

    def __post_init__(self):
        if self.w < 1 or self.h < 1:
            raise DimensionError(f"Box extent must be positive, got {self.w}x{self.h}")

    @property
    def area(self) -> int:
        return self.w * self.h

    def within(self, width: int, height: int) -> bool:
        return (
            self.x >= 0
            and self.y >= 0
            and self.x + self.w <= width
            and self.y + self.h <= height
        )

    def crop(self, image: NDArray) -> NDArray:
        return image[self.y : self.y + self.h, self.x : self.x + self.w]

    def lower_half(self) -> "Box":
        top = self.h // 2
        return Box(self.x, self.y + top, self.w, self.h - top)

    def iou(self, other: "Box") -> float:
        ix = max(0, min(self.x + self.w, other.x + other.w) - max(self.x, other.x))
        iy = max(0, min(self.y + self.h, other.y + other.h) - max(self.y, other.y))
        inter = ix * iy
        return inter / (self.area + other.area - inter)

    @classmethod
    def whole(cls, image: NDArray) -> "Box":
        return cls(0, 0, image.shape[1], image.shape[0])

    @classmethod
    def bounding(cls, mask: NDArray[np.bool_], x0: int = 0, y0: int = 0) -> "Box":
        """Tight bounding box of the true cells of `mask`, offset by (x0, y0)."""

        rows = np.flatnonzero(mask.any(axis=1))
        cols = np.flatnonzero(mask.any(axis=0))
        if rows.size == 0:
            raise DimensionError("Cannot bound an empty mask")
        return cls(
            x0 + int(cols[0]),
            y0 + int(rows[0]),
            int(cols[-1] - cols[0] + 1),
            int(rows[-1] - rows[0] + 1),
        )


@dataclass(frozen=True, eq=False)
class EllipseMask:
    """Largest axis-aligned ellipse inscribed in `box`, as a (h, w) raster."""

    box: Box
    inside: NDArray[np.bool_]

    @property
    def count(self) -> int:
        return int(self.inside.sum())


@dataclass(frozen=True)
class ColorCoords:
    """Every colour coordinate of one pixel used by the lip and teeth cues."""

    r: float
    g: float
    b: float
    yc: float
    cb: float
    cr: float
    h: float
    hw: float
    lab_a: float
    lab_b: float
    luv_u: float
    luv_v: float


def ycbcr_planes(rgb: NDArray) -> NDArray[np.float64]:
    """BT.601 full-range YCbCr of an (..., 3) array, channel-last."""

    return np.asarray(rgb, dtype=np.float64) @ _YCBCR.T + _YCBCR_OFFSET


def to_ycbcr(pixel) -> tuple[float, float, float]:
    yc, cb, cr = ycbcr_planes(np.asarray(pixel).reshape(1, 3))[0]
    return float(yc), float(cb), float(cr)


def chromaticity(rgb: NDArray) -> NDArray[np.float64]:
    """Normalized (r, g, b); black maps to (1/3, 1/3, 1/3)."""

    rgb = np.asarray(rgb, dtype=np.float64)
    total = rgb.sum(axis=-1, keepdims=True)
    out = np.full(rgb.shape, 1.0 / 3.0)
    np.divide(rgb, total, out=out, where=total > 0)
    return out


def hue_planes(rgb: NDArray) -> tuple[NDArray[np.float64], NDArray[np.float64]]:
    """Hue in [0, 1) and warped hue (hue + 0.5) mod 1; grey pixels have hue 0."""

    rgb = np.asarray(rgb, dtype=np.float64)
    r, g, b = rgb[..., 0], rgb[..., 1], rgb[..., 2]
    top = rgb.max(axis=-1)
    delta = top - rgb.min(axis=-1)
    safe = np.where(delta > 0, delta, 1.0)
    # on ties blue wins over green, green over red
    sector = np.select(
        [b == top, g == top],
        [4.0 + (r - g) / safe, 2.0 + (b - r) / safe],
        (g - b) / safe,
    )
    hue = np.where(delta > 0, (sector / 6.0) % 1.0, 0.0)
    return hue, (hue + 0.5) % 1.0


def lab_luv_planes(rgb: NDArray) -> tuple[NDArray[np.float64], ...]:
    """CIELAB (a*, b*) and CIELUV (u*, v*) of an (..., 3) sRGB array, D65 white."""

    rgb = np.asarray(rgb, dtype=np.float64)
    shape = rgb.shape[:-1]
    flat = rgb.reshape(-1, 1, 3) / 255.0
    xyz = color.rgb2xyz(flat)
    lab = color.xyz2lab(xyz, illuminant="D65").reshape(*shape, 3)
    luv = color.xyz2luv(xyz, illuminant="D65").reshape(*shape, 3)
    return lab[..., 1], lab[..., 2], luv[..., 1], luv[..., 2]


def to_lab_luv(pixel) -> tuple[float, float]:
    lab_a, _, luv_u, _ = lab_luv_planes(np.asarray(pixel).reshape(1, 3))
    return float(lab_a[0]), float(luv_u[0])


def color_coords(pixel) -> ColorCoords:
    rgb = np.asarray(pixel, dtype=np.float64).reshape(1, 3)
    r, g, b = chromaticity(rgb)[0]
    yc, cb, cr = ycbcr_planes(rgb)[0]
    hue, warped = hue_planes(rgb)
    lab_a, lab_b, luv_u, luv_v = lab_luv_planes(rgb)
    return ColorCoords(
        r=float(r),
        g=float(g),
        b=float(b),
        yc=float(yc),
        cb=float(cb),
        cr=float(cr),
        h=float(hue[0]),
        hw=float(warped[0]),
        lab_a=float(lab_a[0]),
        lab_b=float(lab_b[0]),
        luv_u=float(luv_u[0]),
        luv_v=float(luv_v[0]),
    )


def to_gray(frame: Frame) -> GrayImage:
    """BT.601 luma of a frame."""

    return np.asarray(frame, dtype=np.float64) @ _YCBCR[0]


def sobel_sums(img: GrayImage) -> tuple[float, float]:
    """Sum of absolute Sobel responses over the interior pixels.

    Returns:
        tuple[float, float]: (vertical-edge sum, horizontal-edge sum)
    """

    img = np.asarray(img, dtype=np.float64)
    if img.ndim != 2 or img.shape[0] < 3 or img.shape[1] < 3:
        raise DimensionError(f"Sobel needs at least a 3x3 image, got {img.shape}")
    sum_v = np.abs(convolve2d(img, SOBEL_V, mode="valid")).sum()
    sum_h = np.abs(convolve2d(img, SOBEL_H, mode="valid")).sum()
    return float(sum_v), float(sum_h)


def _sample_axis(size: int, target: int) -> tuple[NDArray, NDArray, NDArray]:
    coords = np.linspace(0.0, size - 1, target) if target > 1 else np.zeros(1)
    lo = np.floor(coords).astype(int)
    hi = np.minimum(lo + 1, size - 1)
    return lo, hi, coords - lo


def resize_bilinear(img: GrayImage, tw: int, th: int) -> GrayImage:
    """Corner-aligned bilinear resize to `tw` x `th`."""

    if tw < 1 or th < 1:
        raise DimensionError(f"Target size must be positive, got {tw}x{th}")
    img = np.asarray(img, dtype=np.float64)
    x0, x1, fx = _sample_axis(img.shape[1], tw)
    y0, y1, fy = _sample_axis(img.shape[0], th)
    # lerp as a + f * (b - a) keeps constant inputs exact
    top = img[y0][:, x0] + fx * (img[y0][:, x1] - img[y0][:, x0])
    bottom = img[y1][:, x0] + fx * (img[y1][:, x1] - img[y1][:, x0])
    return top + fy[:, None] * (bottom - top)


def inscribe_ellipse(box: Box) -> EllipseMask:
    """Mask of pixel centres inside the largest ellipse that fits `box`."""

    a, b = box.w / 2.0, box.h / 2.0
    ys, xs = np.ogrid[0 : box.h, 0 : box.w]
    inside = ((xs + 0.5 - a) / a) ** 2 + ((ys + 0.5 - b) / b) ** 2 <= 1.0
    if box.w >= 3 and box.h >= 3:
        # a 3x3 box would otherwise keep its corner centres
        inside[[0, 0, -1, -1], [0, -1, 0, -1]] = False
    inside.flags.writeable = False
    return EllipseMask(box, inside)
