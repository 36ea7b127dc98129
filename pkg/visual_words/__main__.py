import logging
from dataclasses import replace
from pathlib import Path
from typing import Sequence

import click

from .config import DISTANCE_MODES, Config, load_config
from .dataset import load_manifest
from .errors import FrameIOError, VisualWordsError
from .evaluation import PROTOCOLS, report_write, run_protocol, signal_accuracy
from .features import (
    SIGNALS,
    WordSignature,
    extract_signature,
    format_signature,
    read_signature,
)
from .frames import load_frames, read_rois, write_rois
from .imaging import Box
from .localize import localize
from .logging import LoggerManager
from .pipeline import (
    annotated_regions,
    box_ious,
    extract_manifest,
    synthetic_signatures,
)
from .recognizer import TrainingIndex, classify, load_index, save_index, tuned
from .synth import generate


class VisualWordsGroup(click.Group):
    """Click group that turns toolkit errors into their exit codes."""

    def invoke(self, ctx):
        try:
            return super().invoke(ctx)
        except VisualWordsError as e:
            LoggerManager.get_logger().error(str(e))
            ctx.exit(e.exit_code)


def parse_weights(ctx, param, value):
    if value is None:
        return None
    try:
        weights = [float(v) for v in value.split(",")]
    except ValueError:
        raise click.BadParameter("weights must be comma-separated numbers")
    if len(weights) != len(SIGNALS):
        raise click.BadParameter(
            f"expected {len(SIGNALS)} weights ({','.join(SIGNALS)}), got {len(weights)}"
        )
    return weights


def parse_box(ctx, param, value):
    if value is None:
        return None
    try:
        return Box(*(int(v) for v in value.split(",")))
    except (TypeError, ValueError):
        raise click.BadParameter("expected x,y,w,h with positive w and h")


def recognizer_options(f):
    """--k, --distance, --interp-len, --weights and --tune-weights"""

    options = [
        click.option(
            "--k",
            type=click.IntRange(min=1),
            default=None,
            help="Neighbours that vote [default: config, 5]",
        ),
        click.option(
            "--distance",
            type=click.Choice(DISTANCE_MODES),
            default=None,
            help="Per-signal distance [default: config, dtw]",
        ),
        click.option(
            "--interp-len",
            type=click.IntRange(min=2),
            default=None,
            help="Resample length of the interp distance [default: config, 32]",
        ),
        click.option(
            "--weights",
            type=str,
            default=None,
            callback=parse_weights,
            help="Fusion weights w1,...,w8 for H,W,M,Q,R,ER,RC,T [default: config, all 1]",
        ),
        click.option(
            "--tune-weights",
            is_flag=True,
            default=False,
            help="Grid-search the fusion weights on the training set",
        ),
    ]
    for option in reversed(options):
        f = option(f)
    return f


def seed_option(f):
    return click.option(
        "--seed",
        type=int,
        default=None,
        help="Seed of the synthetic data [default: config, 7]",
    )(f)


def source_options(f):
    """MANIFEST argument or --synthetic, exactly one of them"""

    f = click.option(
        "--synthetic",
        is_flag=True,
        help="Render the configured synthetic dataset in memory instead of reading MANIFEST",
    )(f)
    return click.argument(
        "manifest",
        required=False,
        type=click.Path(exists=True, dir_okay=False, path_type=Path),
    )(f)


def load_signatures(
    manifest: Path | None, synthetic: bool, config: Config
) -> tuple[list[WordSignature], Sequence[str | None]]:
    """Signatures and subject groups of a manifest or of the in-memory synthetic dataset."""

    if synthetic and manifest is None:
        return synthetic_signatures(config)
    if synthetic or manifest is None:
        raise click.UsageError("Give either MANIFEST or --synthetic")
    dataset = load_manifest(manifest)
    return extract_manifest(dataset, config), [u.group for u in dataset.utterances]


def roi_option(f):
    return click.option(
        "--roi",
        type=click.Path(exists=True, dir_okay=False, path_type=Path),
        default=None,
        help="Annotated frame_index,x,y,w,h file; skips localization",
    )(f)


def face_box_option(f):
    return click.option(
        "--face-box",
        type=str,
        default=None,
        callback=parse_box,
        help="Face box x,y,w,h [default: whole frame]",
    )(f)


def build_config(
    k=None, distance=None, interp_len=None, weights=None, tune_weights=False, seed=None
) -> Config:
    """The config file's settings with the command-line overrides, validated."""

    config = load_config()
    if seed is not None:
        config.synth.seed = seed
    rec = config.recognizer
    if k is not None:
        rec.k = k
    if distance is not None:
        rec.distance = distance
    if interp_len is not None:
        rec.interp_len = interp_len
    if weights is not None:
        rec.weights = weights
    if tune_weights:
        rec.tune_weights = True
    return config.validate()


def extract_frames_dir(
    frames_dir: Path, config: Config, roi: Path | None, face_box: Box | None
) -> WordSignature:
    frames = load_frames(frames_dir)
    if roi is not None:
        regions = annotated_regions(frames, roi)
    else:
        regions = [localize(f, face_box, config.localize) for f in frames]
    return extract_signature(frames, regions, config.features)


def emit(text: str, out: Path | None) -> None:
    if out is None:
        click.echo(text, nl=False)
        return
    try:
        out.write_text(text)
    except OSError as e:
        raise FrameIOError(f"Cannot write {out}: {e}") from e


@click.group(cls=VisualWordsGroup)
@click.option("-v", "--verbose", is_flag=True, help="Enable verbose mode")
def cli(verbose):
    """
    Whole-word lip reading: synthetic data, lip localization, word
    signatures, KNN recognition and evaluation.
    """

    LoggerManager.get_logger(level=logging.DEBUG if verbose else logging.INFO)


@cli.command()
@click.option(
    "--words",
    type=click.IntRange(min=1),
    default=None,
    help="Vocabulary size [default: config, 10]",
)
@click.option(
    "--speakers",
    type=click.IntRange(min=1),
    default=None,
    help="Number of subjects [default: config, 3]",
)
@click.option(
    "--reps",
    type=click.IntRange(min=1),
    default=None,
    help="Repetitions per word and session [default: config, 5]",
)
@click.option(
    "--sessions",
    type=click.IntRange(1, 2),
    default=None,
    help="Sessions per subject [default: config, 2]",
)
@click.option(
    "--frames-min",
    type=click.IntRange(min=2),
    default=None,
    help="Shortest word in frames [default: config, 12]",
)
@click.option(
    "--frames-max",
    type=click.IntRange(min=2),
    default=None,
    help="Longest word in frames [default: config, 30]",
)
@click.option(
    "--noise",
    type=click.FloatRange(min=0),
    default=None,
    help="Pixel noise std [default: config, 4.0]",
)
@click.option(
    "--width",
    type=click.IntRange(min=16),
    default=None,
    help="Frame width [default: config, 320]",
)
@click.option(
    "--height",
    type=click.IntRange(min=16),
    default=None,
    help="Frame height [default: config, 240]",
)
@click.option(
    "--variation",
    type=click.FloatRange(min=0),
    default=None,
    help="Speaker perturbation strength [default: config, 0.15]",
)
@click.option(
    "--vsp-speakers",
    type=click.IntRange(min=0),
    default=None,
    help="Trailing near-motionless speakers [default: config, 0]",
)
@seed_option
@click.option(
    "--out",
    type=click.Path(file_okay=False, path_type=Path),
    required=True,
    help="Output directory",
)
def synth(
    words,
    speakers,
    reps,
    sessions,
    frames_min,
    frames_max,
    noise,
    width,
    height,
    variation,
    vsp_speakers,
    seed,
    out,
):
    """
    Renders a synthetic dataset and prints its manifest path.
    """

    config = load_config()
    overrides = {
        "vocabulary_size": words,
        "speakers": speakers,
        "repetitions": reps,
        "sessions": sessions,
        "frames_min": frames_min,
        "frames_max": frames_max,
        "noise_sigma": noise,
        "width": width,
        "height": height,
        "speaker_variation": variation,
        "vsp_speakers": vsp_speakers,
        "seed": seed,
    }
    for key, value in overrides.items():
        if value is not None:
            setattr(config.synth, key, value)
    config.validate()
    generate(config.synth, out)
    click.echo(out / "manifest.json")


@cli.command(name="localize")
@click.argument(
    "frames_dir",
    type=click.Path(exists=True, file_okay=False, path_type=Path),
)
@face_box_option
@click.option(
    "--truth",
    type=click.Path(exists=True, dir_okay=False, path_type=Path),
    default=None,
    help="Ground-truth ROI file to score against",
)
@click.option(
    "--out",
    type=click.Path(dir_okay=False, path_type=Path),
    default=None,
    help="ROI file to write [default: stdout]",
)
def localize_cmd(frames_dir, face_box, truth, out):
    """
    Locates the mouth in every frame and writes frame_index,x,y,w,h rows.
    """

    logger = LoggerManager.get_logger()
    config = build_config()
    frames = load_frames(frames_dir)
    boxes = [localize(f, face_box, config.localize).roi for f in frames]
    if out is None:
        click.echo("frame_index,x,y,w,h")
        for i, b in enumerate(boxes):
            click.echo(f"{i},{b.x},{b.y},{b.w},{b.h}")
    else:
        write_rois(boxes, out)
    if truth is not None:
        scores = box_ious(boxes, read_rois(truth))
        if scores:
            logger.info(f"Mean IoU against {truth}: {sum(scores) / len(scores):.4f}")


@cli.command()
@click.argument(
    "frames_dir",
    type=click.Path(exists=True, file_okay=False, path_type=Path),
)
@roi_option
@face_box_option
@click.option("--label", type=str, default=None, help="Word label stored in the file")
@click.option("--subject", type=str, default=None, help="Subject id stored in the file")
@click.option(
    "--session",
    type=click.IntRange(1, 2),
    default=None,
    help="Session stored in the file",
)
@click.option(
    "--out",
    type=click.Path(dir_okay=False, path_type=Path),
    default=None,
    help="Signature CSV to write [default: stdout]",
)
def extract(frames_dir, roi, face_box, label, subject, session, out):
    """
    Extracts the n x 8 word signature of one frames directory.
    """

    config = build_config()
    signature = extract_frames_dir(frames_dir, config, roi, face_box).relabel(
        label=label, subject=subject, session=session
    )
    emit(format_signature(signature), out)


@cli.command()
@source_options
@recognizer_options
@seed_option
@click.option(
    "--session",
    type=click.IntRange(1, 2),
    default=None,
    help="Only train on this session [default: both]",
)
@click.option(
    "--out",
    type=click.Path(file_okay=False, path_type=Path),
    required=True,
    help="Model directory",
)
def train(
    manifest, synthetic, k, distance, interp_len, weights, tune_weights, seed, session, out
):
    """
    Builds a KNN model from every utterance of a manifest.
    """

    logger = LoggerManager.get_logger()
    config = build_config(k, distance, interp_len, weights, tune_weights, seed)
    signatures, _ = load_signatures(manifest, synthetic, config)
    if session is not None:
        signatures = [s for s in signatures if s.session == session]
    index = TrainingIndex.from_config(signatures, config.recognizer)
    if config.recognizer.tune_weights:
        index = tuned(index)
        tuned_weights = ", ".join(f"{s}={w}" for s, w in zip(SIGNALS, index.weights.w))
        logger.info(f"Tuned weights: {tuned_weights}")
    save_index(index, out)
    logger.info(f"Saved {len(index.examples)} examples to {out}")


@cli.command(name="classify")
@click.argument(
    "model_dir",
    type=click.Path(exists=True, file_okay=False, path_type=Path),
)
@click.argument("query", type=click.Path(exists=True, path_type=Path))
@click.option(
    "--k",
    type=click.IntRange(min=1),
    default=None,
    help="Neighbours that vote [default: the model's k]",
)
@roi_option
@face_box_option
def classify_cmd(model_dir, query, k, roi, face_box):
    """
    Classifies a signature CSV or a frames directory.

    Prints `label distance`, then one `rank label distance` row per neighbour.
    """

    config = build_config()
    index = load_index(model_dir)
    if k is not None:
        index = replace(index, k=k)
    if query.is_dir():
        signature = extract_frames_dir(query, config, roi, face_box)
    else:
        signature = read_signature(query)
    prediction = classify(index, signature)
    click.echo(f"{prediction.label} {prediction.distance:.6f}")
    for rank, (label, distance) in enumerate(prediction.neighbours, start=1):
        click.echo(f"{rank} {label} {distance:.6f}")


@cli.command(name="evaluate")
@source_options
@click.option(
    "--protocol",
    type=click.Choice(PROTOCOLS),
    default="speaker-dependent",
    show_default=True,
    help="Evaluation protocol",
)
@recognizer_options
@seed_option
@click.option("--per-signal", is_flag=True, help="Also score every signal used alone")
@click.option(
    "--out",
    type=click.Path(dir_okay=False, path_type=Path),
    required=True,
    help="JSON report path; the text table goes beside it",
)
def evaluate_cmd(
    manifest,
    synthetic,
    protocol,
    k,
    distance,
    interp_len,
    weights,
    tune_weights,
    seed,
    per_signal,
    out,
):
    """
    Evaluates a manifest (or the in-memory synthetic dataset) and writes the report pair.
    """

    config = build_config(k, distance, interp_len, weights, tune_weights, seed)
    signatures, groups = load_signatures(manifest, synthetic, config)
    report = run_protocol(signatures, config, protocol, groups)
    if per_signal:
        report.signal_accuracy = signal_accuracy(signatures, config, protocol, groups)
    json_path, text_path = report_write(report, out)
    click.echo(f"{report.overall:.4f} {json_path} {text_path}")


@cli.command()
@click.argument("signature", type=click.Path(dir_okay=False, path_type=Path))
@click.option(
    "--out",
    type=click.Path(dir_okay=False, path_type=Path),
    default=None,
    help="CSV to write [default: stdout]",
)
def plot(signature, out):
    """
    Exports a signature as long-format frame,signal,value rows.
    """

    sig = read_signature(signature)
    lines = ["frame,signal,value"]
    for i, row in enumerate(sig.matrix):
        lines.extend(f"{i},{name},{value:.6f}" for name, value in zip(SIGNALS, row))
    emit("\n".join(lines) + "\n", out)


if __name__ == "__main__":
    cli()
