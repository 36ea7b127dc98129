"""The eight per-frame mouth signals and the normalized word signature."""

import os
import re
from dataclasses import astuple, dataclass, field
from typing import Sequence

import numpy as np
from numpy.typing import NDArray

from .config import FeatureConfig
from .errors import DimensionError, FrameIOError
from .imaging import (
    EllipseMask,
    Frame,
    lab_luv_planes,
    resize_bilinear,
    sobel_sums,
    to_gray,
)
from .localize import LipRegion
from .transforms import (
    count_feature_points,
    haar_dwt,
    mutual_information,
    quality_index,
    subband_average,
)

SIGNALS = ("H", "W", "M", "Q", "R", "ER", "RC", "T")
SIGNATURE_HEADER = ["frame", *SIGNALS]
# Strict-inequality slack so flat regions never count as teeth
TEETH_TOLERANCE = 1e-9


@dataclass(frozen=True)
class FrameFeatures:
    """
    Raw features of one frame.

    Attributes:
        h (float): mouth height in pixels
        w (float): mouth width in pixels
        m (float): sub-band mutual information with the previous ROI, in bits
        q (float): sub-band quality index against the previous ROI
        r (float): vertical to horizontal wavelet feature ratio
        er (float): vertical to horizontal Sobel edge ratio
        rc (float): mean red channel inside the ellipse, in [0, 1]
        t (float): number of teeth pixels inside the ellipse
    """

    h: float
    w: float
    m: float
    q: float
    r: float
    er: float
    rc: float
    t: float

    def as_row(self) -> list[float]:
        return list(astuple(self))


@dataclass(frozen=True, eq=False)
class WordSignature:
    """
    An n x 8 word signature, columns in `SIGNALS` order.

    `raw` keeps the unnormalized features when the signature was extracted
    from frames; it is not part of the file format.
    """

    matrix: NDArray[np.float64]
    label: str | None = None
    subject: str | None = None
    session: int | None = None
    raw: NDArray[np.float64] | None = field(default=None, compare=False, repr=False)

    def __post_init__(self):
        if self.matrix.ndim != 2 or self.matrix.shape[1] != len(SIGNALS):
            raise DimensionError(f"Signature must be n x 8, got {self.matrix.shape}")
        if self.matrix.shape[0] < 1:
            raise DimensionError("Signature must hold at least one frame")

    @property
    def n(self) -> int:
        return self.matrix.shape[0]

    def column(self, signal: str) -> NDArray[np.float64]:
        return self.matrix[:, SIGNALS.index(signal)]

    def relabel(self, **kwargs) -> "WordSignature":
        values = {
            "label": self.label,
            "subject": self.subject,
            "session": self.session,
            **kwargs,
        }
        return WordSignature(self.matrix, raw=self.raw, **values)


def geometry(region: LipRegion) -> tuple[int, int]:
    """Mouth (height, width) from the ROI box."""

    return region.roi.h, region.roi.w


def masked_roi(frame: Frame, region: LipRegion) -> Frame:
    """Crop the ROI and paint everything outside its ellipse with the inside mean colour."""

    roi = region.roi.crop(frame).copy()
    inside = region.ellipse.inside
    fill = np.rint(roi[inside].mean(axis=0)).astype(np.uint8)
    roi[~inside] = fill
    return roi


def temporal_pair_features(
    cur_roi: Frame, prev_roi: Frame, config: FeatureConfig | None = None
) -> tuple[float, float]:
    """Sub-band averaged mutual information and quality index of two ROIs."""

    config = config or FeatureConfig()
    size = config.resize
    cur = haar_dwt(resize_bilinear(to_gray(cur_roi), size, size))
    prev = haar_dwt(resize_bilinear(to_gray(prev_roi), size, size))
    m = subband_average(
        lambda x, y: mutual_information(x, y, config.mi_bins), cur, prev
    )
    q = subband_average(quality_index, cur, prev)
    return m, q


def ratio_wavelet(roi: Frame) -> float:
    quad = haar_dwt(to_gray(roi))
    return (count_feature_points(quad.hl) + 1) / (count_feature_points(quad.lh) + 1)


def ratio_edges(roi: Frame, epsilon: float = 1e-6) -> float:
    gray = to_gray(roi)
    short = ((0, max(0, 3 - gray.shape[0])), (0, max(0, 3 - gray.shape[1])))
    if any(p for _, p in short):
        gray = np.pad(gray, short, mode="edge")
    sum_v, sum_h = sobel_sums(gray)
    return (sum_v + epsilon) / (sum_h + epsilon)


def red_amount(roi: Frame, ellipse: EllipseMask) -> float:
    return float(roi[..., 0][ellipse.inside].mean() / 255.0)


def teeth_rule(lab_a: NDArray, luv_u: NDArray) -> NDArray[np.bool_]:
    """Pixels whose a* or u* falls below the mean minus one std of its own values."""

    low_a = lab_a < lab_a.mean() - lab_a.std() - TEETH_TOLERANCE
    low_u = luv_u < luv_u.mean() - luv_u.std() - TEETH_TOLERANCE
    return low_a | low_u


def teeth_amount(roi: Frame, ellipse: EllipseMask) -> int:
    """Count the teeth pixels inside the ellipse."""

    pixels = roi[ellipse.inside]
    if len(pixels) < 2:
        return 0
    lab_a, _, luv_u, _ = lab_luv_planes(pixels)
    return int(np.count_nonzero(teeth_rule(lab_a, luv_u)))


def frame_features(
    frame: Frame,
    region: LipRegion,
    config: FeatureConfig | None = None,
    masked: Frame | None = None,
) -> FrameFeatures:
    """Every feature of one frame except the temporal pair (m = 0, q = 1)."""

    config = config or FeatureConfig()
    crop = region.roi.crop(frame)
    if masked is None:
        masked = masked_roi(frame, region)
    h, w = geometry(region)
    return FrameFeatures(
        h=h,
        w=w,
        m=0.0,
        q=1.0,
        r=ratio_wavelet(masked),
        er=ratio_edges(masked, config.edge_epsilon),
        rc=red_amount(crop, region.ellipse),
        t=teeth_amount(crop, region.ellipse),
    )


def normalize_columns(raw: NDArray[np.float64]) -> NDArray[np.float64]:
    """Min-max scale every column to [0, 1]; constant columns become 0.5."""

    lo = raw.min(axis=0)
    span = raw.max(axis=0) - lo
    out = np.full(raw.shape, 0.5)
    varying = span > 0
    out[:, varying] = (raw[:, varying] - lo[varying]) / span[varying]
    return out


def extract_signature(
    frames: Sequence[Frame],
    regions: Sequence[LipRegion],
    config: FeatureConfig | None = None,
) -> WordSignature:
    """Build the normalized n x 8 signature of one spoken word."""

    if len(frames) != len(regions):
        raise DimensionError(f"{len(frames)} frames but {len(regions)} regions")
    if not frames:
        raise DimensionError("A word needs at least one frame")
    config = config or FeatureConfig()

    masked = [masked_roi(f, r) for f, r in zip(frames, regions)]
    raw = np.array(
        [
            frame_features(f, r, config, m).as_row()
            for f, r, m in zip(frames, regions, masked)
        ]
    )
    for i in range(1, len(masked)):
        raw[i, 2:4] = temporal_pair_features(masked[i], masked[i - 1], config)
    if len(masked) > 1:
        raw[0, 2:4] = raw[1, 2:4]
    return WordSignature(normalize_columns(raw), raw=raw)


def visual_activity(signature: WordSignature) -> float:
    """Coefficient of variation of the raw mouth height; near zero for a still mouth."""

    if signature.raw is None:
        return float("nan")
    height = signature.raw[:, 0]
    return float(height.std() / height.mean())


_META = re.compile(r"(\w+)=(\S*)")


def format_signature(signature: WordSignature) -> str:
    """CSV text: a `# key=value` metadata line, the header, one row per frame."""

    meta = {
        "label": signature.label,
        "subject": signature.subject,
        "session": signature.session,
    }
    lines = [
        "# " + " ".join(f"{k}={v}" for k, v in meta.items() if v is not None),
        ",".join(SIGNATURE_HEADER),
    ]
    for i, row in enumerate(signature.matrix):
        lines.append(",".join([str(i), *(f"{v:.6f}" for v in row)]))
    return "\n".join(lines) + "\n"


def write_signature(signature: WordSignature, path: str | os.PathLike) -> None:
    try:
        with open(path, "w") as f:
            f.write(format_signature(signature))
    except OSError as e:
        raise FrameIOError(f"Cannot write signature {path}: {e}") from e


def read_signature(path: str | os.PathLike) -> WordSignature:
    try:
        with open(path) as f:
            lines = [line.strip() for line in f if line.strip()]
    except OSError as e:
        raise FrameIOError(f"Cannot read signature {path}: {e}") from e

    meta: dict[str, str] = {}
    while lines and lines[0].startswith("#"):
        meta.update(_META.findall(lines.pop(0)))
    if not lines or lines[0].split(",") != SIGNATURE_HEADER:
        raise FrameIOError(f"Signature {path} lacks the header {','.join(SIGNATURE_HEADER)}")
    try:
        rows = [[float(v) for v in line.split(",")[1:]] for line in lines[1:]]
        matrix = np.array(rows, dtype=np.float64).reshape(len(rows), len(SIGNALS))
        return WordSignature(
            matrix,
            label=meta.get("label"),
            subject=meta.get("subject"),
            session=int(meta["session"]) if "session" in meta else None,
        )
    except ValueError as e:
        raise FrameIOError(f"Malformed signature {path}: {e}") from e
