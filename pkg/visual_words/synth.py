"""Synthetic talking-mouth sequences with ground-truth ROIs.

Every word class follows a scripted mouth trajectory: opening and lip spread
are eased between class-specific knots, and teeth or tongue show during
class-specific intervals. Each speaker perturbs colours, amplitude, tempo
and the knot values. A frame is skin, a lip ellipse, a dark inner mouth
(or a seam when closed), optional teeth and tongue, plus Gaussian noise.

All draws come from ``numpy.random.default_rng`` seeded with the config
seed and the indices of what is being drawn, so any single utterance can
be re-rendered on its own.
"""

from dataclasses import dataclass
from pathlib import Path
from typing import Iterator

import numpy as np
from numpy.typing import NDArray

from .config import SynthConfig
from .dataset import DatasetManifest, Utterance, save_manifest
from .errors import FrameIOError
from .frames import save_frame, write_rois
from .imaging import Box, Frame
from .logging import LoggerManager

DIGITS = ("zero", "one", "two", "three", "four", "five", "six", "seven", "eight", "nine")

SKIN = np.array([220.0, 170.0, 140.0])
LIP = np.array([200.0, 50.0, 70.0])
INNER = np.array([50.0, 15.0, 25.0])
SEAM = np.array([90.0, 30.0, 40.0])
TEETH = np.array([235.0, 235.0, 225.0])
TONGUE = np.array([205.0, 70.0, 80.0])

# fractions of the frame size
MOUTH_CY = 0.72
MOUTH_HALF_WIDTH = 0.2
LIP_THICKNESS = 0.035
MAX_OPENING = 0.11

INTERIOR_KNOTS = 3


@dataclass(frozen=True, eq=False)
class WordScript:
    """
    The articulation script of one word class.

    Attributes:
        index (int): class index
        word (str): class label
        knots (NDArray): knot times in [0, 1], first 0 and last 1
        opening (NDArray): mouth opening in [0, 1] at each knot
        spread (NDArray): lip spread in [-1, 1] at each knot
        teeth (tuple, optional): time interval with visible teeth
        tongue (tuple, optional): time interval with visible tongue
        length (int): base number of frames
    """

    index: int
    word: str
    knots: NDArray[np.float64]
    opening: NDArray[np.float64]
    spread: NDArray[np.float64]
    teeth: tuple[float, float] | None
    tongue: tuple[float, float] | None
    length: int


@dataclass(frozen=True, eq=False)
class SpeakerStyle:
    index: int
    subject: str
    group: str
    skin: NDArray[np.float64]
    lip: NDArray[np.float64]
    amplitude: float
    tempo: float
    centre_dx: float
    width_scale: float
    opening_offsets: NDArray[np.float64]
    spread_offsets: NDArray[np.float64]


def vocabulary(size: int) -> list[str]:
    return [DIGITS[i] if i < len(DIGITS) else f"word{i:02d}" for i in range(size)]


def ease(knots: NDArray, values: NDArray, t: NDArray | float) -> NDArray[np.float64]:
    """Piecewise half-cosine interpolation through (knots, values)."""

    t = np.clip(np.asarray(t, dtype=np.float64), 0.0, 1.0)
    idx = np.clip(np.searchsorted(knots, t, side="right") - 1, 0, len(knots) - 2)
    s = (t - knots[idx]) / (knots[idx + 1] - knots[idx])
    eased = (1.0 - np.cos(np.pi * s)) / 2.0
    return values[idx] + (values[idx + 1] - values[idx]) * eased


def _interval(rng: np.random.Generator, chance: float) -> tuple[float, float] | None:
    start = float(rng.uniform(0.1, 0.6))
    length = float(rng.uniform(0.2, 0.35))
    return (start, start + length) if rng.random() < chance else None


def word_scripts(cfg: SynthConfig) -> list[WordScript]:
    scripts = []
    for index, word in enumerate(vocabulary(cfg.vocabulary_size)):
        rng = np.random.default_rng([cfg.seed, 0, index])
        inner = np.sort(rng.uniform(0.15, 0.85, INTERIOR_KNOTS))
        opening = rng.uniform(0.15, 1.0, INTERIOR_KNOTS)
        spread = rng.uniform(-1.0, 1.0, INTERIOR_KNOTS)
        teeth = _interval(rng, 0.5)
        tongue = _interval(rng, 0.4)
        scripts.append(
            WordScript(
                index=index,
                word=word,
                knots=np.concatenate([[0.0], inner, [1.0]]),
                opening=np.concatenate([[0.0], opening, [0.0]]),
                spread=np.concatenate([[0.0], spread, [0.0]]),
                teeth=teeth,
                tongue=tongue,
                length=int(rng.integers(cfg.frames_min, cfg.frames_max + 1)),
            )
        )
    return scripts


def speaker_styles(cfg: SynthConfig) -> list[SpeakerStyle]:
    """Per-speaker perturbations; the last `vsp_speakers` barely move their lips."""

    var = cfg.speaker_variation
    styles = []
    for index in range(cfg.speakers):
        rng = np.random.default_rng([cfg.seed, 1, index])
        vsp = index >= cfg.speakers - cfg.vsp_speakers
        skin = np.clip(SKIN + rng.uniform(-1, 1, 3) * 60 * var, 0, 255)
        lip = np.clip(LIP + rng.uniform(-1, 1, 3) * 60 * var, 0, 255)
        amplitude = 1.0 + float(rng.uniform(-1, 1)) * var
        tempo = float(np.exp(rng.uniform(-1, 1) * 2 * var))
        centre_dx = float(rng.uniform(-0.2, 0.2)) * var
        width_scale = 1.0 + float(rng.uniform(-0.5, 0.5)) * var
        shape = (cfg.vocabulary_size, INTERIOR_KNOTS)
        styles.append(
            SpeakerStyle(
                index=index,
                subject=f"s{index + 1:02d}",
                group="vsp" if vsp else "typical",
                skin=skin,
                lip=lip,
                amplitude=cfg.vsp_amplitude if vsp else amplitude,
                tempo=tempo,
                centre_dx=centre_dx,
                width_scale=width_scale,
                opening_offsets=rng.normal(0.0, 2 * var, shape),
                spread_offsets=rng.normal(0.0, 2 * var, shape),
            )
        )
    return styles


def _ellipse(xx, yy, cx, cy, a, b) -> NDArray[np.bool_]:
    return ((xx + 0.5 - cx) / a) ** 2 + ((yy + 0.5 - cy) / b) ** 2 <= 1.0


def render_mouth(
    cfg: SynthConfig,
    style: SpeakerStyle,
    opening: float,
    spread: float,
    teeth: bool = False,
    tongue: bool = False,
    rng: np.random.Generator | None = None,
) -> tuple[Frame, Box]:
    """Render one noisy frame and return it with the lip bounding box.

    `opening` in [0, 1] and `spread` in [-1, 1] are already scaled by the
    speaker's amplitude.
    """

    width, height = cfg.width, cfg.height
    cx = width * (0.5 + style.centre_dx)
    cy = height * MOUTH_CY
    inner_b = max(0.0, opening) * MAX_OPENING * height
    outer_a = MOUTH_HALF_WIDTH * width * style.width_scale * (1 + 0.15 * spread) * (
        1 - 0.1 * max(0.0, opening)
    )
    outer_b = max(1.0, LIP_THICKNESS * height) + inner_b
    inner_a = 0.72 * outer_a

    image = np.empty((height, width, 3), dtype=np.float32)
    image[...] = style.skin
    # only the window around the lip ellipse is drawn on
    x0, x1 = max(0, int(cx - outer_a) - 1), min(width, int(cx + outer_a) + 2)
    y0, y1 = max(0, int(cy - outer_b) - 1), min(height, int(cy + outer_b) + 2)
    window = image[y0:y1, x0:x1]
    yy, xx = np.ogrid[y0:y1, x0:x1]
    outer = _ellipse(xx, yy, cx, cy, outer_a, outer_b)
    window[outer] = style.lip
    if inner_b >= 1.0:
        inner = _ellipse(xx, yy, cx, cy, inner_a, inner_b)
        window[inner] = INNER
        if teeth:
            window[inner & (yy + 0.5 < cy - 0.35 * inner_b)] = TEETH
        if tongue:
            blob = _ellipse(xx, yy, cx, cy + 0.5 * inner_b, 0.5 * inner_a, 0.45 * inner_b)
            window[inner & blob] = TONGUE
    else:
        seam = (np.abs(yy + 0.5 - cy) <= 0.5) & (np.abs(xx + 0.5 - cx) < inner_a)
        window[seam] = SEAM

    if rng is not None and cfg.noise_sigma > 0:
        noise = rng.standard_normal(image.shape, dtype=np.float32)
        image += np.float32(cfg.noise_sigma) * noise
    frame = np.clip(np.rint(image), 0, 255).astype(np.uint8)
    return frame, Box.bounding(outer, x0, y0)


def render_utterance(
    cfg: SynthConfig,
    script: WordScript,
    style: SpeakerStyle,
    session: int,
    repetition: int,
) -> tuple[list[Frame], list[Box]]:
    """Render one utterance; noise_sigma also scales tempo and amplitude jitter."""

    rng = np.random.default_rng(
        [cfg.seed, 3, style.index, session, script.index, repetition]
    )
    jitter = int(round(cfg.noise_sigma / 4))
    n = int(
        np.clip(
            script.length + rng.integers(-jitter, jitter + 1),
            max(2, cfg.frames_min),
            cfg.frames_max,
        )
    )
    amplitude = style.amplitude * (1 + rng.normal(0.0, 0.01 * cfg.noise_sigma))

    opening_knots = script.opening.copy()
    opening_knots[1:-1] = np.clip(
        opening_knots[1:-1] + style.opening_offsets[script.index], 0.05, 1.0
    )
    spread_knots = script.spread.copy()
    spread_knots[1:-1] = np.clip(
        spread_knots[1:-1] + style.spread_offsets[script.index], -1.0, 1.0
    )

    times = np.linspace(0.0, 1.0, n) ** style.tempo
    openings = ease(script.knots, opening_knots, times) * amplitude
    spreads = ease(script.knots, spread_knots, times) * amplitude

    frames, boxes = [], []
    for t, opening, spread in zip(times, openings, spreads):
        teeth = script.teeth is not None and script.teeth[0] <= t <= script.teeth[1]
        tongue = script.tongue is not None and script.tongue[0] <= t <= script.tongue[1]
        frame, box = render_mouth(
            cfg, style, float(opening), float(spread), teeth, tongue, rng
        )
        frames.append(frame)
        boxes.append(box)
    return frames, boxes


@dataclass(frozen=True, eq=False)
class RenderedUtterance:
    style: SpeakerStyle
    session: int
    script: WordScript
    repetition: int
    frames: list[Frame]
    boxes: list[Box]

    @property
    def name(self) -> str:
        return f"{self.style.subject}/session{self.session}/{self.script.word}_r{self.repetition}"


def render_dataset(cfg: SynthConfig) -> Iterator[RenderedUtterance]:
    """Render every utterance in manifest order: subject, session, word, repetition."""

    scripts = word_scripts(cfg)
    for style in speaker_styles(cfg):
        for session in range(1, cfg.sessions + 1):
            for script in scripts:
                for rep in range(cfg.repetitions):
                    frames, boxes = render_utterance(cfg, script, style, session, rep)
                    yield RenderedUtterance(style, session, script, rep, frames, boxes)


def generate(cfg: SynthConfig, out_dir: str | Path) -> DatasetManifest:
    """Render the whole synthetic dataset and write its manifest.

    Layout: ``<out>/<subject>/session<k>/<word>_r<rep>/frame_0000.png`` with a
    ``truth.csv`` of ground-truth ROIs in every utterance directory, and
    ``<out>/manifest.json``.
    """

    logger = LoggerManager.get_logger()
    root = Path(out_dir)
    utterances = []
    try:
        root.mkdir(parents=True, exist_ok=True)
    except OSError as e:
        raise FrameIOError(f"Cannot create output directory {root}: {e}") from e

    for rendered in render_dataset(cfg):
        word_dir = root / rendered.name
        try:
            word_dir.mkdir(parents=True, exist_ok=True)
        except OSError as e:
            raise FrameIOError(f"Cannot create {word_dir}: {e}") from e
        for i, frame in enumerate(rendered.frames):
            save_frame(frame, word_dir / f"frame_{i:04d}.png")
        write_rois(rendered.boxes, word_dir / "truth.csv")
        utterances.append(
            Utterance(
                subject=rendered.style.subject,
                session=rendered.session,
                word=rendered.script.word,
                frames_dir=word_dir,
                truth_file=word_dir / "truth.csv",
                group=rendered.style.group,
            )
        )
        logger.debug(f"Rendered {rendered.name} ({rendered.style.group})")

    manifest = DatasetManifest(f"synthetic-seed{cfg.seed}", tuple(utterances))
    save_manifest(manifest, root / "manifest.json")
    logger.info(f"Wrote {len(utterances)} utterances to {root / 'manifest.json'}")
    return manifest
