import numpy as np
import pytest

from visual_words.config import FeatureConfig, SynthConfig
from visual_words.errors import DimensionError, FrameIOError
from visual_words.features import (
    SIGNALS,
    WordSignature,
    extract_signature,
    frame_features,
    geometry,
    masked_roi,
    normalize_columns,
    ratio_edges,
    ratio_wavelet,
    read_signature,
    red_amount,
    teeth_amount,
    teeth_rule,
    temporal_pair_features,
    visual_activity,
    write_signature,
)
from visual_words.imaging import Box, inscribe_ellipse, lab_luv_planes, sobel_sums, to_gray
from visual_words.localize import LipRegion, localize
from visual_words.synth import (
    render_mouth,
    render_utterance,
    speaker_styles,
    word_scripts,
)


def solid(h, w, colour):
    roi = np.empty((h, w, 3), dtype=np.uint8)
    roi[...] = colour
    return roi


def test_geometry():
    assert geometry(LipRegion.from_box(Box(3, 4, 40, 20))) == (20, 40)
    assert geometry(LipRegion.from_box(Box(0, 0, 30, 30))) == (30, 30)


def test_masked_roi():
    frame = solid(10, 10, (255, 0, 0))
    region = LipRegion.from_box(Box(1, 1, 8, 6))
    assert np.array_equal(masked_roi(frame, region), frame[1:7, 1:9])

    frame = np.random.default_rng(0).integers(0, 256, (12, 14, 3)).astype(np.uint8)
    region = LipRegion.from_box(Box(2, 3, 10, 6))
    masked = masked_roi(frame, region)
    crop = frame[3:9, 2:12]
    inside = region.ellipse.inside
    assert np.array_equal(masked[inside], crop[inside])
    fill = np.rint(crop[inside].mean(axis=0)).astype(np.uint8)
    assert (masked[~inside] == fill).all()
    assert masked.shape == crop.shape
    changed = (masked != crop).any(axis=-1)
    assert changed.sum() <= (~inside).sum()


def test_temporal_pair_features():
    rng = np.random.default_rng(1)
    roi = rng.integers(0, 256, (20, 30, 3)).astype(np.uint8)
    m, q = temporal_pair_features(roi, roi)
    assert q == 1.0
    assert m > 0

    grey = solid(20, 30, (128, 128, 128))
    m, _ = temporal_pair_features(roi, grey)
    assert m == 0.0


def test_ratio_wavelet():
    assert ratio_wavelet(solid(16, 16, (90, 40, 50))) == 1.0
    vertical = np.zeros((16, 16, 3), dtype=np.uint8)
    vertical[:, [2, 8, 14]] = 255
    assert ratio_wavelet(vertical) > 1
    horizontal = np.zeros((16, 16, 3), dtype=np.uint8)
    horizontal[[2, 8, 14]] = 255
    assert ratio_wavelet(horizontal) < 1


def test_ratio_wavelet_open_versus_closed():
    cfg = SynthConfig(width=160, height=120, noise_sigma=0.0)
    style = speaker_styles(cfg)[0]
    ratios = []
    for opening, spread in ((1.0, 0.0), (0.0, 1.0)):
        frame, _ = render_mouth(cfg, style, opening, spread)
        ratios.append(ratio_wavelet(masked_roi(frame, localize(frame))))
    assert ratios[0] > ratios[1]


def test_ratio_edges():
    assert ratio_edges(solid(8, 8, (10, 10, 10))) == 1.0
    step = solid(8, 8, (0, 0, 0))
    step[:, 4:] = 200
    assert ratio_edges(step) > 1e6
    roi = np.random.default_rng(2).integers(0, 256, (9, 7, 3)).astype(np.uint8)
    sum_v, sum_h = sobel_sums(to_gray(roi))
    assert ratio_edges(roi, 1e-6) == pytest.approx((sum_v + 1e-6) / (sum_h + 1e-6))
    assert ratio_edges(solid(2, 1, (5, 5, 5))) == 1.0


def test_red_amount():
    ellipse = inscribe_ellipse(Box(0, 0, 10, 8))
    assert red_amount(solid(8, 10, (255, 0, 0)), ellipse) == 1.0
    assert red_amount(solid(8, 10, (0, 0, 0)), ellipse) == 0.0
    half = solid(8, 10, (0, 0, 0))
    half[:, :5] = (255, 0, 0)
    assert red_amount(half, ellipse) == pytest.approx(0.5, abs=1 / ellipse.count)


def test_teeth_amount():
    ellipse = inscribe_ellipse(Box(0, 0, 40, 30))
    assert teeth_amount(solid(30, 40, (200, 50, 70)), ellipse) == 0
    assert teeth_amount(solid(30, 40, (255, 255, 255)), ellipse) == 0

    roi = solid(30, 40, (200, 50, 70))
    roi[:6] = (250, 250, 250)
    white = np.zeros((30, 40), dtype=bool)
    white[:6] = True
    expected = int((white & ellipse.inside).sum())
    assert teeth_amount(roi, ellipse) == expected
    share = 0.2 * ellipse.count
    assert teeth_amount(roi, ellipse) == pytest.approx(share, rel=0.5)


def test_red_amount_ignores_pixel_order():
    rng = np.random.default_rng(8)
    ellipse = inscribe_ellipse(Box(0, 0, 21, 15))
    roi = rng.integers(0, 256, (15, 21, 3)).astype(np.uint8)
    shuffled = roi.copy()
    shuffled[ellipse.inside] = rng.permutation(roi[ellipse.inside])
    assert red_amount(shuffled, ellipse) == pytest.approx(red_amount(roi, ellipse))


def test_teeth_rule_ignores_constant_shift():
    roi = solid(30, 40, (200, 50, 70))
    roi[:6] = (250, 250, 250)
    roi[20:] = (150, 60, 80)
    ellipse = inscribe_ellipse(Box(0, 0, 40, 30))
    lab_a, _, luv_u, _ = lab_luv_planes(roi[ellipse.inside])
    teeth = teeth_rule(lab_a, luv_u)
    assert teeth.sum() == teeth_amount(roi, ellipse) > 0
    for shift in (-30.0, 12.5, 80.0):
        assert np.array_equal(teeth_rule(lab_a + shift, luv_u), teeth)


def test_normalize_columns():
    raw = np.array([[2.0, 7.0], [4.0, 7.0], [6.0, 7.0]])
    assert np.array_equal(normalize_columns(raw), [[0, 0.5], [0.5, 0.5], [1, 0.5]])


def test_single_frame_signature():
    cfg = SynthConfig(width=96, height=72, noise_sigma=0.0)
    frame, box = render_mouth(cfg, speaker_styles(cfg)[0], 0.6, 0.0)
    signature = extract_signature([frame], [LipRegion.from_box(box)])
    assert signature.matrix.shape == (1, 8)
    assert (signature.matrix == 0.5).all()
    assert signature.raw[0, 2] == 0.0
    assert signature.raw[0, 3] == 1.0


def test_signature_of_rendered_word():
    cfg = SynthConfig(
        width=96, height=72, noise_sigma=0.0, frames_min=10, frames_max=14
    )
    script = word_scripts(cfg)[2]
    style = speaker_styles(cfg)[0]
    frames, boxes = render_utterance(cfg, script, style, 1, 0)
    regions = [localize(f) for f in frames]
    signature = extract_signature(frames, regions)
    assert signature.n == len(frames)
    assert signature.matrix.shape == (len(frames), len(SIGNALS))
    assert ((signature.matrix >= 0) & (signature.matrix <= 1)).all()
    # frame 0 borrows the temporal pair of frame 1
    assert np.array_equal(signature.raw[0, 2:4], signature.raw[1, 2:4])

    heights = np.array([b.h for b in boxes])
    peak = int(np.argmax(heights))
    assert abs(int(np.argmax(signature.column("H"))) - peak) <= 2
    assert visual_activity(signature) > 0.1


def test_reversed_word_reverses_the_temporal_pairs():
    cfg = SynthConfig(width=96, height=72, noise_sigma=4.0, frames_min=8, frames_max=10)
    frames, boxes = render_utterance(
        cfg, word_scripts(cfg)[0], speaker_styles(cfg)[1], 1, 0
    )
    regions = [LipRegion.from_box(b) for b in boxes]
    forward = extract_signature(frames, regions).raw
    backward = extract_signature(frames[::-1], regions[::-1]).raw
    n = len(frames)
    still = [0, 1, 4, 5, 6, 7]
    assert np.array_equal(backward[:, still], forward[::-1, still])
    for i in range(1, n):
        assert backward[i, 2:4] == pytest.approx(forward[n - i, 2:4])


def test_scale_invariance_of_geometry():
    cfg = SynthConfig(
        width=96, height=72, noise_sigma=0.0, frames_min=8, frames_max=10
    )
    frames, boxes = render_utterance(
        cfg, word_scripts(cfg)[1], speaker_styles(cfg)[0], 1, 0
    )
    regions = [LipRegion.from_box(b) for b in boxes]
    big_frames = [np.repeat(np.repeat(f, 2, axis=0), 2, axis=1) for f in frames]
    big_regions = [
        LipRegion.from_box(Box(2 * b.x, 2 * b.y, 2 * b.w, 2 * b.h)) for b in boxes
    ]
    small = extract_signature(frames, regions)
    big = extract_signature(big_frames, big_regions)
    for signal in ("H", "W"):
        assert np.allclose(small.column(signal), big.column(signal), atol=1e-6)


def test_extract_signature_checks():
    frame = solid(20, 20, (200, 50, 70))
    region = LipRegion.from_box(Box(0, 0, 10, 10))
    with pytest.raises(DimensionError):
        extract_signature([frame, frame], [region])
    with pytest.raises(DimensionError):
        extract_signature([], [])
    with pytest.raises(DimensionError):
        WordSignature(np.zeros((3, 7)))


def test_frame_features_defaults():
    frame = solid(20, 20, (200, 50, 70))
    region = LipRegion.from_box(Box(2, 2, 12, 8))
    features = frame_features(frame, region, FeatureConfig())
    assert (features.h, features.w) == (8, 12)
    assert (features.m, features.q) == (0.0, 1.0)
    assert features.t == 0
    assert features.rc == pytest.approx(200 / 255)


def test_signature_file(tmp_path):
    matrix = np.random.default_rng(3).random((5, 8))
    signature = WordSignature(matrix, label="three", subject="s02", session=1)
    path = tmp_path / "three.csv"
    write_signature(signature, path)
    lines = path.read_text().splitlines()
    assert lines[0] == "# label=three subject=s02 session=1"
    assert lines[1] == "frame,H,W,M,Q,R,ER,RC,T"
    assert len(lines) == 7

    loaded = read_signature(path)
    assert (loaded.label, loaded.subject, loaded.session) == ("three", "s02", 1)
    assert np.allclose(loaded.matrix, matrix, atol=5e-7)
    write_signature(loaded, tmp_path / "again.csv")
    assert (tmp_path / "again.csv").read_text() == path.read_text()

    (tmp_path / "bad.csv").write_text("frame,H\n0,1\n")
    with pytest.raises(FrameIOError):
        read_signature(tmp_path / "bad.csv")
    with pytest.raises(FrameIOError):
        read_signature(tmp_path / "missing.csv")
