import json

import pytest
from click.testing import CliRunner

from visual_words.__main__ import cli
from visual_words.features import SIGNALS

SYNTH_ARGS = [
    "--words", "3",
    "--speakers", "2",
    "--reps", "2",
    "--frames-min", "6",
    "--frames-max", "8",
    "--noise", "0",
    "--width", "96",
    "--height", "72",
    "--seed", "5",
]  # fmt: skip


@pytest.fixture
def runner():
    return CliRunner()


@pytest.fixture
def dataset(runner, tmp_path):
    out = tmp_path / "data"
    result = runner.invoke(cli, ["synth", *SYNTH_ARGS, "--out", str(out)])
    assert result.exit_code == 0, result.output
    return out


def _tree(root):
    return {
        p.relative_to(root).as_posix(): p.read_bytes()
        for p in sorted(root.rglob("*"))
        if p.is_file()
    }


def test_synth(runner, dataset, tmp_path):
    manifest = json.loads((dataset / "manifest.json").read_text())
    assert len(manifest["utterances"]) == 2 * 2 * 3 * 2

    again = tmp_path / "again"
    result = runner.invoke(cli, ["synth", *SYNTH_ARGS, "--out", str(again)])
    assert result.stdout.strip() == str(again / "manifest.json")
    assert _tree(dataset) == _tree(again)


def test_synth_rejects_empty_vocabulary(runner, tmp_path):
    result = runner.invoke(cli, ["synth", "--words", "0", "--out", str(tmp_path)])
    assert result.exit_code == 2
    assert "--words" in result.output


def test_synth_rejects_inverted_lengths(runner, tmp_path):
    result = runner.invoke(
        cli, ["synth", "--frames-min", "9", "--frames-max", "6", "--out", str(tmp_path)]
    )
    assert result.exit_code == 2


def test_localize(runner, dataset, tmp_path):
    frames = dataset / "s01" / "session1" / "zero_r0"
    result = runner.invoke(cli, ["localize", str(frames)])
    assert result.exit_code == 0, result.output
    rows = result.stdout.splitlines()
    assert rows[0] == "frame_index,x,y,w,h"
    assert len(rows) == 1 + len(list(frames.glob("*.png")))

    out = tmp_path / "rois.csv"
    result = runner.invoke(
        cli, ["localize", str(frames), "--truth", str(frames / "truth.csv"), "--out", str(out)]
    )
    assert result.exit_code == 0
    assert out.read_text().splitlines() == rows

    result = runner.invoke(cli, ["localize", str(frames), "--face-box", "1,2"])
    assert result.exit_code == 2


def test_extract(runner, dataset, tmp_path):
    frames = dataset / "s01" / "session1" / "one_r1"
    first = tmp_path / "first.csv"
    second = tmp_path / "second.csv"
    for out in (first, second):
        result = runner.invoke(
            cli, ["extract", str(frames), "--label", "one", "--session", "1", "--out", str(out)]
        )
        assert result.exit_code == 0, result.output
    assert first.read_bytes() == second.read_bytes()
    lines = first.read_text().splitlines()
    assert lines[0].startswith("# label=one")
    assert lines[1] == "frame," + ",".join(SIGNALS)

    result = runner.invoke(cli, ["extract", str(frames), "--roi", str(frames / "truth.csv")])
    assert result.exit_code == 0
    assert result.stdout.splitlines()[1] == lines[1]

    result = runner.invoke(cli, ["extract", str(tmp_path / "nowhere")])
    assert result.exit_code == 2

    (tmp_path / "empty").mkdir()
    result = runner.invoke(cli, ["extract", str(tmp_path / "empty")])
    assert result.exit_code == 3


def test_train_and_classify(runner, dataset, tmp_path):
    model = tmp_path / "model"
    result = runner.invoke(
        cli, ["train", str(dataset / "manifest.json"), "--session", "2", "--out", str(model)]
    )
    assert result.exit_code == 0, result.output
    index = json.loads((model / "index.json").read_text())
    assert len(index["examples"]) == 2 * 3 * 2
    assert index["k"] == 5

    query = dataset / "s02" / "session2" / "two_r0"
    result = runner.invoke(cli, ["classify", str(model), str(query), "--k", "1"])
    assert result.exit_code == 0, result.output
    lines = result.stdout.splitlines()
    assert lines[0] == "two 0.000000"
    assert lines[1] == "1 two 0.000000"

    signature = tmp_path / "query.csv"
    runner.invoke(cli, ["extract", str(query), "--out", str(signature)])
    result = runner.invoke(cli, ["classify", str(model), str(signature)])
    assert result.exit_code == 0
    assert result.stdout.split()[0] == "two"
    assert len(result.stdout.splitlines()) == 1 + 5

    result = runner.invoke(cli, ["classify", str(tmp_path), str(signature)])
    assert result.exit_code == 4


def test_train_with_options(runner, dataset, tmp_path):
    model = tmp_path / "model"
    result = runner.invoke(
        cli,
        [
            "train",
            str(dataset / "manifest.json"),
            "--k", "3",
            "--distance", "interp",
            "--interp-len", "20",
            "--weights", "1,1,0.5,0.5,1,1,1,2",
            "--tune-weights",
            "--out", str(model),
        ],  # fmt: skip
    )
    assert result.exit_code == 0, result.output
    index = json.loads((model / "index.json").read_text())
    assert (index["k"], index["mode"], index["interp_len"]) == (3, "interp", 20)

    result = runner.invoke(
        cli, ["train", str(dataset / "manifest.json"), "--weights", "1,2", "--out", str(model)]
    )
    assert result.exit_code == 2
    assert "--weights" in result.output


def test_evaluate(runner, dataset, tmp_path):
    out = tmp_path / "report" / "sd.json"
    result = runner.invoke(
        cli, ["evaluate", str(dataset / "manifest.json"), "--per-signal", "--out", str(out)]
    )
    assert result.exit_code == 0, result.output
    overall, json_path, text_path = result.stdout.split()
    assert float(overall) == 1.0
    report = json.loads(out.read_text())
    assert report["protocol"] == "speaker-dependent"
    assert list(report["signal_accuracy"]) == list(SIGNALS)
    assert len(open(text_path).read().splitlines()) == 2 + 2
    assert json_path == str(out)


def test_evaluate_needs_two_subjects(runner, tmp_path):
    data = tmp_path / "one"
    result = runner.invoke(
        cli,
        ["synth", *SYNTH_ARGS, "--speakers", "1", "--out", str(data)],
    )
    assert result.exit_code == 0
    result = runner.invoke(
        cli,
        [
            "evaluate",
            str(data / "manifest.json"),
            "--protocol", "speaker-independent",
            "--out", str(tmp_path / "si.json"),
        ],  # fmt: skip
    )
    assert result.exit_code == 2
    assert not (tmp_path / "si.json").exists()


def test_plot(runner, dataset, tmp_path):
    signature = tmp_path / "sig.csv"
    runner.invoke(
        cli, ["extract", str(dataset / "s01" / "session2" / "zero_r0"), "--out", str(signature)]
    )
    n = len(signature.read_text().splitlines()) - 2
    result = runner.invoke(cli, ["plot", str(signature)])
    assert result.exit_code == 0, result.output
    rows = result.stdout.splitlines()
    assert rows[0] == "frame,signal,value"
    assert len(rows) == 1 + 8 * n
    assert [r.split(",")[1] for r in rows[1:9]] == list(SIGNALS)
    source = [line.split(",")[1:] for line in signature.read_text().splitlines()[2:]]
    assert [r.split(",")[2] for r in rows[1:]] == [v for row in source for v in row]

    result = runner.invoke(cli, ["plot", str(tmp_path / "missing.csv")])
    assert result.exit_code == 3


def test_bad_config_file(runner, tmp_path, monkeypatch, dataset):
    config = tmp_path / "bad.yaml"
    config.write_text("recognizer:\n  k: 0\n")
    monkeypatch.setenv("VISUAL_WORDS_CONFIG", str(config))
    result = runner.invoke(
        cli, ["evaluate", str(dataset / "manifest.json"), "--out", str(tmp_path / "r.json")]
    )
    assert result.exit_code == 2


@pytest.mark.parametrize(
    "command, flags",
    [
        ("synth", ["--words", "--speakers", "--reps", "--noise", "--seed", "--out"]),
        ("localize", ["--face-box", "--truth", "--out"]),
        ("extract", ["--roi", "--face-box", "--label", "--out"]),
        (
            "train",
            ["--k", "--distance", "--weights", "--tune-weights", "--seed", "--synthetic", "--out"],
        ),
        ("classify", ["--k", "--roi", "--face-box"]),
        (
            "evaluate",
            ["--protocol", "--per-signal", "--interp-len", "--seed", "--synthetic", "--out"],
        ),
        ("plot", ["--out"]),
    ],
)
def test_help(runner, command, flags):
    result = runner.invoke(cli, [command, "--help"])
    assert result.exit_code == 0
    for flag in flags:
        assert flag in result.output


TINY_YAML = """\
synth:
  vocabulary_size: 3
  speakers: 2
  repetitions: 2
  frames_min: 6
  frames_max: 8
  noise_sigma: 0.0
  width: 96
  height: 72
"""


@pytest.fixture
def tiny_config(tmp_path, monkeypatch):
    config = tmp_path / "tiny.yaml"
    config.write_text(TINY_YAML)
    monkeypatch.setenv("VISUAL_WORDS_CONFIG", str(config))
    return config


def test_train_and_evaluate_are_deterministic(runner, dataset, tmp_path):
    manifest = str(dataset / "manifest.json")
    for name in ("a", "b"):
        result = runner.invoke(cli, ["train", manifest, "--out", str(tmp_path / name / "model")])
        assert result.exit_code == 0, result.output
        result = runner.invoke(
            cli,
            ["evaluate", manifest, "--per-signal", "--out", str(tmp_path / name / "r.json")],
        )
        assert result.exit_code == 0, result.output
    assert _tree(tmp_path / "a") == _tree(tmp_path / "b")

    query = tmp_path / "query.csv"
    frames = dataset / "s01" / "session1" / "one_r0"
    runner.invoke(cli, ["extract", str(frames), "--out", str(query)])
    outputs = {
        runner.invoke(cli, ["classify", str(tmp_path / "a" / "model"), str(query)]).stdout
        for _ in range(2)
    }
    assert len(outputs) == 1
    plots = {runner.invoke(cli, ["plot", str(query)]).stdout for _ in range(2)}
    assert len(plots) == 1


def test_synthetic_source(runner, dataset, tmp_path, tiny_config):
    result = runner.invoke(
        cli, ["evaluate", "--synthetic", "--seed", "5", "--out", str(tmp_path / "mem.json")]
    )
    assert result.exit_code == 0, result.output
    assert float(result.stdout.split()[0]) == 1.0
    result = runner.invoke(
        cli, ["evaluate", str(dataset / "manifest.json"), "--out", str(tmp_path / "disk.json")]
    )
    assert result.exit_code == 0, result.output
    assert (tmp_path / "mem.txt").read_text() == (tmp_path / "disk.txt").read_text()
    mem = json.loads((tmp_path / "mem.json").read_text())
    disk = json.loads((tmp_path / "disk.json").read_text())
    assert mem["confusion"] == disk["confusion"]
    assert mem["config"]["synth"]["seed"] == 5

    model = tmp_path / "model"
    result = runner.invoke(cli, ["train", "--synthetic", "--seed", "5", "--out", str(model)])
    assert result.exit_code == 0, result.output
    assert len(json.loads((model / "index.json").read_text())["examples"]) == 2 * 2 * 3 * 2


def test_source_must_be_one_of_manifest_or_synthetic(runner, dataset, tmp_path):
    out = str(tmp_path / "r.json")
    result = runner.invoke(cli, ["evaluate", "--out", out])
    assert result.exit_code == 2
    result = runner.invoke(
        cli, ["evaluate", str(dataset / "manifest.json"), "--synthetic", "--out", out]
    )
    assert result.exit_code == 2
    result = runner.invoke(cli, ["train", "--out", str(tmp_path / "model")])
    assert result.exit_code == 2


def test_wrongly_typed_config_value(runner, dataset, tmp_path, monkeypatch):
    config = tmp_path / "typed.yaml"
    config.write_text('recognizer:\n  k: "three"\n')
    monkeypatch.setenv("VISUAL_WORDS_CONFIG", str(config))
    result = runner.invoke(
        cli, ["evaluate", str(dataset / "manifest.json"), "--out", str(tmp_path / "r.json")]
    )
    assert result.exit_code == 2
    assert not (tmp_path / "r.json").exists()
