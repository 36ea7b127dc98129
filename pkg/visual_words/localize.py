"""Nearest-colour lip localization.

A YCbCr (cr - cb) score marks a seed inside the lower half of the face box,
the seed's mean colour vector becomes a prototype, and every pixel of the
search area closer to that prototype than its acceptance radius is a lip
pixel. The largest 4-connected lip component, hole-filled, is the mouth.
"""

from dataclasses import dataclass

import numpy as np
from numpy.typing import NDArray
from scipy import ndimage

from .config import LocalizeConfig
from .errors import DimensionError
from .imaging import (
    Box,
    EllipseMask,
    Frame,
    chromaticity,
    hue_planes,
    inscribe_ellipse,
    ycbcr_planes,
)
from .logging import LoggerManager

PROTOTYPE_CHANNELS = ("r", "g", "b", "hw", "cr")


@dataclass(frozen=True, eq=False)
class ColourPrototype:
    mean: NDArray[np.float64]
    spread: NDArray[np.float64]
    threshold: float


@dataclass(frozen=True, eq=False)
class LipRegion:
    """
    The located mouth.

    Attributes:
        roi (Box): tight bounding box of `lip_mask`, in frame coordinates
        lip_mask (NDArray): lip pixels over `roi`
        ellipse (EllipseMask): ellipse inscribed in `roi`
        seed_pixel_count (int): size of the YCbCr seed, 0 for annotated boxes
        low_confidence (bool): the colour clustering could not separate lips
    """

    roi: Box
    lip_mask: NDArray[np.bool_]
    ellipse: EllipseMask
    seed_pixel_count: int
    low_confidence: bool = False

    @classmethod
    def from_box(cls, roi: Box) -> "LipRegion":
        """Region for an annotated ROI; the whole box counts as lip."""

        mask = np.ones((roi.h, roi.w), dtype=bool)
        return cls(roi, mask, inscribe_ellipse(roi), 0)


def prototype_channels(rgb: NDArray) -> NDArray[np.float64]:
    """(r, g, b, warped hue, cr / 255) for every pixel of an (..., 3) array."""

    _, warped = hue_planes(rgb)
    cr = ycbcr_planes(rgb)[..., 2] / 255.0
    return np.concatenate(
        [chromaticity(rgb), warped[..., None], cr[..., None]], axis=-1
    )


def _largest_component(mask: NDArray[np.bool_]) -> NDArray[np.bool_]:
    labels, count = ndimage.label(mask)
    if count <= 1:
        return labels > 0
    sizes = np.bincount(labels.ravel())[1:]
    return labels == int(np.argmax(sizes)) + 1


def _search_area(frame: Frame, face_box: Box) -> Box:
    height, width = frame.shape[:2]
    if not face_box.within(width, height):
        raise DimensionError(f"Face box {face_box} exceeds the {width}x{height} frame")
    if face_box.w < 4 or face_box.h < 4:
        raise DimensionError(f"Face box must be at least 4x4, got {face_box.w}x{face_box.h}")
    return face_box.lower_half()


def seed_lips(
    frame: Frame, face_box: Box, seed_fraction: float = 0.10
) -> NDArray[np.bool_]:
    """Mark the lip seed over the whole frame.

    Pixels of the lower half of `face_box` scoring above the
    (1 - seed_fraction) quantile of cr - cb are marked and the largest
    4-connected group of marks is kept.

    Returns:
        NDArray[np.bool_]: seed mask with the frame's height and width
    """

    area = _search_area(frame, face_box)
    ycc = ycbcr_planes(area.crop(frame))
    score = ycc[..., 2] - ycc[..., 1]
    cut = np.quantile(score, 1.0 - seed_fraction)
    marks = score > cut
    if not marks.any():
        marks = score >= cut
    seed = np.zeros(frame.shape[:2], dtype=bool)
    area.crop(seed)[...] = _largest_component(marks)
    return seed


def build_prototype(
    frame: Frame,
    seed: NDArray[np.bool_],
    threshold_sigma: float = 1.5,
    threshold_floor: float = 0.01,
) -> ColourPrototype:
    if not seed.any():
        raise DimensionError("The seed holds no pixels")
    channels = prototype_channels(frame[seed])
    flat = np.ptp(channels, axis=0) == 0
    mean = np.where(flat, channels[0], channels.mean(axis=0))
    spread = np.where(flat, 0.0, channels.std(axis=0))
    distances = np.linalg.norm(channels - mean, axis=1)
    threshold = distances.mean() + threshold_sigma * distances.std()
    return ColourPrototype(mean, spread, max(float(threshold), threshold_floor))


def grow_lips(
    frame: Frame,
    face_box: Box,
    proto: ColourPrototype,
    low_confidence_fraction: float = 0.5,
) -> LipRegion:
    area = _search_area(frame, face_box)
    distances = np.linalg.norm(prototype_channels(area.crop(frame)) - proto.mean, axis=-1)
    accepted = distances < proto.threshold
    if not accepted.any():
        # every seed sits exactly on the radius, e.g. a two-colour seed
        accepted = distances <= proto.threshold
    if not accepted.any():
        accepted = distances == distances.min()
    component = _largest_component(accepted)
    local = Box.bounding(component)
    # holes of one component never reach past its bounding box
    lip_mask = ndimage.binary_fill_holes(local.crop(component))
    roi = Box(local.x + area.x, local.y + area.y, local.w, local.h)
    low_confidence = bool(lip_mask.sum() > low_confidence_fraction * area.area)
    return LipRegion(roi, lip_mask, inscribe_ellipse(roi), 0, low_confidence)


def localize(
    frame: Frame, face_box: Box | None = None, config: LocalizeConfig | None = None
) -> LipRegion:
    """Locate the mouth of one frame.

    Args:
        frame (Frame): the RGB frame
        face_box (Box, optional): face bounding box. Defaults to the whole frame.
        config (LocalizeConfig, optional): localization settings

    Returns:
        LipRegion: the mouth region
    """

    config = config or LocalizeConfig()
    face_box = face_box or Box.whole(frame)
    seed = seed_lips(frame, face_box, config.seed_fraction)
    proto = build_prototype(
        frame, seed, config.threshold_sigma, config.threshold_floor
    )
    region = grow_lips(frame, face_box, proto, config.low_confidence_fraction)
    seed_count = int(seed.sum())
    low_confidence = region.low_confidence or seed_count > 2 * config.seed_fraction * (
        face_box.lower_half().area
    )
    if low_confidence:
        LoggerManager.get_logger().warning(
            f"Low-confidence lip localization: seed {seed_count} px, ROI {region.roi}"
        )
    return LipRegion(
        region.roi, region.lip_mask, region.ellipse, seed_count, low_confidence
    )
