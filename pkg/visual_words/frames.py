"""Frame and ROI file ingestion.

Frames are numbered PNG or binary PPM (P6) files in one directory; their
order is the lexicographic order of the file names.
"""

import csv
import os
from pathlib import Path

import numpy as np
from PIL import Image, UnidentifiedImageError

from .errors import FrameIOError
from .imaging import Box, Frame, as_frame

FRAME_SUFFIXES = (".png", ".ppm")
ROI_HEADER = ["frame_index", "x", "y", "w", "h"]


def list_frames(frames_dir: str | os.PathLike) -> list[Path]:
    """List the frame files of a directory in frame order.

    Raises:
        FrameIOError: The directory is missing or holds no frames.
    """

    directory = Path(frames_dir)
    if not directory.is_dir():
        raise FrameIOError(f"Frames directory not found: {directory}")
    files = sorted(
        p for p in directory.iterdir() if p.suffix.lower() in FRAME_SUFFIXES
    )
    if not files:
        raise FrameIOError(f"No PNG or PPM frames in {directory}")
    return files


def load_frame(path: str | os.PathLike) -> Frame:
    try:
        with Image.open(path) as image:
            return as_frame(np.asarray(image.convert("RGB")))
    except (OSError, UnidentifiedImageError) as e:
        raise FrameIOError(f"Cannot read frame {path}: {e}") from e


def load_frames(frames_dir: str | os.PathLike) -> list[Frame]:
    return [load_frame(p) for p in list_frames(frames_dir)]


def save_frame(frame: Frame, path: str | os.PathLike) -> None:
    """Write a frame; PNG output uses the fastest zlib level."""

    try:
        Image.fromarray(np.ascontiguousarray(frame, dtype=np.uint8)).save(
            path, compress_level=1
        )
    except OSError as e:
        raise FrameIOError(f"Cannot write frame {path}: {e}") from e


def read_rois(path: str | os.PathLike) -> dict[int, Box]:
    """Read a `frame_index,x,y,w,h` CSV into a frame-index to box map."""

    try:
        with open(path, newline="") as f:
            reader = csv.DictReader(f)
            if reader.fieldnames != ROI_HEADER:
                raise FrameIOError(
                    f"ROI file {path} must have header {','.join(ROI_HEADER)}"
                )
            return {
                int(row["frame_index"]): Box(
                    int(row["x"]), int(row["y"]), int(row["w"]), int(row["h"])
                )
                for row in reader
            }
    except (OSError, ValueError) as e:
        raise FrameIOError(f"Cannot read ROI file {path}: {e}") from e


def write_rois(boxes: list[Box], path: str | os.PathLike) -> None:
    try:
        with open(path, "w", newline="") as f:
            writer = csv.writer(f, lineterminator="\n")
            writer.writerow(ROI_HEADER)
            for index, box in enumerate(boxes):
                writer.writerow([index, box.x, box.y, box.w, box.h])
    except OSError as e:
        raise FrameIOError(f"Cannot write ROI file {path}: {e}") from e
