"""From an utterance on disk (or a rendered one) to its word signature."""

from typing import Mapping, Sequence

import numpy as np

from .config import Config
from .dataset import DatasetManifest, Utterance
from .errors import DimensionError, ManifestError
from .features import WordSignature, extract_signature
from .frames import load_frames, read_rois
from .imaging import Box, Frame
from .localize import LipRegion, localize
from .logging import LoggerManager
from .synth import render_dataset


def annotated_regions(frames: list[Frame], roi_file) -> list[LipRegion]:
    """Regions from a `frame_index,x,y,w,h` file; every frame needs a box."""

    boxes = read_rois(roi_file)
    missing = [i for i in range(len(frames)) if i not in boxes]
    if missing:
        raise ManifestError(f"ROI file {roi_file} has no box for frames {missing}")
    height, width = frames[0].shape[:2]
    regions = []
    for i in range(len(frames)):
        if not boxes[i].within(width, height):
            raise DimensionError(f"ROI {boxes[i]} of frame {i} exceeds the frame")
        regions.append(LipRegion.from_box(boxes[i]))
    return regions


def utterance_regions(
    utterance: Utterance, frames: list[Frame], config: Config
) -> list[LipRegion]:
    if utterance.roi_file is not None:
        return annotated_regions(frames, utterance.roi_file)
    return [localize(f, utterance.face_box, config.localize) for f in frames]


def extract_utterance(utterance: Utterance, config: Config | None = None) -> WordSignature:
    """Load, localize (or read the annotated ROIs) and extract one utterance."""

    config = config or Config()
    frames = load_frames(utterance.frames_dir)
    regions = utterance_regions(utterance, frames, config)
    signature = extract_signature(frames, regions, config.features)
    return signature.relabel(
        label=utterance.word, subject=utterance.subject, session=utterance.session
    )


def extract_manifest(
    manifest: DatasetManifest, config: Config | None = None
) -> list[WordSignature]:
    """Signatures of every utterance, in manifest order."""

    config = config or Config()
    logger = LoggerManager.get_logger()
    signatures = []
    for i, utterance in enumerate(manifest.utterances):
        signatures.append(extract_utterance(utterance, config))
        logger.debug(
            f"[{i + 1}/{len(manifest.utterances)}] {utterance.subject} "
            f"session {utterance.session} {utterance.word}"
        )
    return signatures


def box_ious(boxes: Sequence[Box], truth: Mapping[int, Box]) -> list[float]:
    """IoU of every box whose frame index has a ground-truth box."""

    return [box.iou(truth[i]) for i, box in enumerate(boxes) if i in truth]


def utterance_iou(utterance: Utterance, config: Config | None = None) -> list[float]:
    """IoU of every detected ROI against the utterance's ground truth."""

    config = config or Config()
    if utterance.truth_file is None:
        raise ManifestError(f"{utterance.frames_dir} has no truth_file")
    frames = load_frames(utterance.frames_dir)
    truth = read_rois(utterance.truth_file)
    boxes = [localize(f, utterance.face_box, config.localize).roi for f in frames]
    return box_ious(boxes, truth)


def localization_iou(manifest: DatasetManifest, config: Config | None = None) -> float:
    """Mean IoU over every frame of the utterances that carry a truth file."""

    audited = [u for u in manifest.utterances if u.truth_file is not None]
    if not audited:
        raise ManifestError(f"Manifest {manifest.name} has no truth files")
    scores = [s for u in audited for s in utterance_iou(u, config)]
    if not scores:
        raise ManifestError("Truth files hold no boxes for the listed frames")
    return float(np.mean(scores))


def synthetic_signatures(
    config: Config | None = None,
) -> tuple[list[WordSignature], list[str]]:
    """Render `config.synth` in memory and extract every utterance.

    Nothing is written to disk; frames are localized exactly as files
    loaded from a generated manifest would be.

    Returns:
        tuple[list, list]: signatures in manifest order and their subject groups
    """

    config = config or Config()
    logger = LoggerManager.get_logger()
    signatures, groups = [], []
    for rendered in render_dataset(config.synth):
        regions = [localize(f, None, config.localize) for f in rendered.frames]
        signature = extract_signature(rendered.frames, regions, config.features)
        signatures.append(
            signature.relabel(
                label=rendered.script.word,
                subject=rendered.style.subject,
                session=rendered.session,
            )
        )
        groups.append(rendered.style.group)
        logger.debug(f"[{len(signatures)}] {rendered.name}")
    return signatures, groups
