"""Speaker-dependent, speaker-independent and leave-one-out evaluation."""

import copy
import json
import os
from collections import Counter
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .config import Config
from .dataset import DatasetManifest
from .errors import FrameIOError, ManifestError
from .features import SIGNALS, WordSignature, visual_activity
from .logging import LoggerManager
from .pipeline import extract_manifest, synthetic_signatures
from .recognizer import FusionWeights, TrainingIndex, classify, tuned

PROTOCOLS = ("speaker-dependent", "speaker-independent", "loo")
PROTOCOL_TITLES = {
    "speaker-dependent": "Speaker dependent",
    "speaker-independent": "Speaker independent",
    "loo": "Leave one out",
}


@dataclass
class Fold:
    """Training and test signature indices of one evaluation round."""

    test_subject: str
    train_subjects: list[str]
    train: list[int] = field(default_factory=list, repr=False)
    test: list[int] = field(default_factory=list, repr=False)


@dataclass
class SubjectResult:
    subject: str
    correct: int
    total: int
    activity: float | None = None
    vsp: bool = False
    group: str | None = None

    @property
    def accuracy(self) -> float:
        return self.correct / self.total if self.total else 0.0


@dataclass
class EvaluationReport:
    """
    Outcome of one evaluation protocol.

    Attributes:
        protocol (str): one of `PROTOCOLS`
        vocabulary (list): sorted word labels, the confusion matrix order
        per_subject (list): one `SubjectResult` per tested subject
        confusion (list): counts, rows are true words and columns predictions
        folds (list): test subject and training subjects of every fold
        groups (dict): accuracy per subject group
        signal_accuracy (dict): overall accuracy of every signal used alone
        vsp_subjects (list): subjects flagged as visual-speechless
        config (dict): the configuration the run used
    """

    protocol: str
    vocabulary: list[str]
    per_subject: list[SubjectResult]
    confusion: list[list[int]]
    folds: list[dict] = field(default_factory=list)
    groups: dict[str, float] = field(default_factory=dict)
    signal_accuracy: dict[str, float] = field(default_factory=dict)
    vsp_subjects: list[str] = field(default_factory=list)
    config: dict = field(default_factory=dict)

    @property
    def correct(self) -> int:
        return sum(s.correct for s in self.per_subject)

    @property
    def total(self) -> int:
        return sum(s.total for s in self.per_subject)

    @property
    def overall(self) -> float:
        return self.correct / self.total if self.total else 0.0

    def subject(self, subject: str) -> SubjectResult:
        return next(s for s in self.per_subject if s.subject == subject)

    def to_dict(self) -> dict:
        payload = asdict(self)
        for row, result in zip(payload["per_subject"], self.per_subject):
            row["accuracy"] = result.accuracy
        payload.update(overall=self.overall, correct=self.correct, total=self.total)
        return payload

    @classmethod
    def from_dict(cls, payload: dict) -> "EvaluationReport":
        rows = [
            SubjectResult(
                subject=row["subject"],
                correct=int(row["correct"]),
                total=int(row["total"]),
                activity=row.get("activity"),
                vsp=bool(row.get("vsp", False)),
                group=row.get("group"),
            )
            for row in payload["per_subject"]
        ]
        return cls(
            protocol=payload["protocol"],
            vocabulary=list(payload["vocabulary"]),
            per_subject=rows,
            confusion=[list(map(int, r)) for r in payload["confusion"]],
            folds=list(payload.get("folds", [])),
            groups=dict(payload.get("groups", {})),
            signal_accuracy=dict(payload.get("signal_accuracy", {})),
            vsp_subjects=list(payload.get("vsp_subjects", [])),
            config=dict(payload.get("config", {})),
        )


def _subject_indices(signatures: Sequence[WordSignature]) -> dict[str, list[int]]:
    subjects: dict[str, list[int]] = {}
    for i, s in enumerate(signatures):
        subjects.setdefault(str(s.subject), []).append(i)
    return dict(sorted(subjects.items()))


def speaker_dependent_folds(signatures: Sequence[WordSignature]) -> list[Fold]:
    """Per subject: train on session 2, test on session 1."""

    folds = []
    for subject, indices in _subject_indices(signatures).items():
        train = [i for i in indices if signatures[i].session == 2]
        test = [i for i in indices if signatures[i].session == 1]
        if not train or not test:
            raise ManifestError(
                f"Subject {subject} needs utterances in both sessions for the "
                "speaker-dependent protocol"
            )
        folds.append(Fold(subject, [subject], train, test))
    return folds


def speaker_independent_folds(signatures: Sequence[WordSignature]) -> list[Fold]:
    """Leave one subject out."""

    subjects = _subject_indices(signatures)
    if len(subjects) < 2:
        raise ManifestError(
            "The speaker-independent protocol needs at least 2 subjects, "
            f"got {len(subjects)}"
        )
    folds = []
    for subject, test in subjects.items():
        others = [s for s in subjects if s != subject]
        train = [i for s in others for i in subjects[s]]
        folds.append(Fold(subject, others, train, test))
    return folds


def leave_one_out_folds(signatures: Sequence[WordSignature]) -> list[Fold]:
    """One fold per utterance, trained on the rest of its subject's utterances."""

    folds = []
    for subject, indices in _subject_indices(signatures).items():
        if len(indices) < 2:
            raise ManifestError(f"Subject {subject} has a single utterance")
        for i in indices:
            folds.append(Fold(subject, [subject], [j for j in indices if j != i], [i]))
    return folds


FOLD_BUILDERS = {
    "speaker-dependent": speaker_dependent_folds,
    "speaker-independent": speaker_independent_folds,
    "loo": leave_one_out_folds,
}


def _fold_summaries(folds: list[Fold]) -> list[dict]:
    seen, out = set(), []
    for fold in folds:
        key = (fold.test_subject, tuple(fold.train_subjects))
        if key not in seen:
            seen.add(key)
            out.append({"test_subject": fold.test_subject, "train_subjects": list(key[1])})
    return out


def _subject_activity(signatures: Sequence[WordSignature], indices: list[int]) -> float | None:
    values = [visual_activity(signatures[i]) for i in indices]
    values = [v for v in values if np.isfinite(v)]
    return float(np.mean(values)) if values else None


def run_protocol(
    signatures: Sequence[WordSignature],
    config: Config,
    protocol: str,
    groups: Sequence[str | None] | None = None,
) -> EvaluationReport:
    """Evaluate already extracted signatures under `protocol`.

    Args:
        signatures (Sequence[WordSignature]): labelled signatures with subject and session
        config (Config): the configuration; its recognizer section builds every index
        protocol (str): one of `PROTOCOLS`
        groups (Sequence, optional): subject group of every signature

    Raises:
        ManifestError: The signatures do not fit the protocol.

    Returns:
        EvaluationReport: the report, without single-signal accuracies
    """

    if protocol not in FOLD_BUILDERS:
        expected = ", ".join(PROTOCOLS)
        raise ManifestError(f"Unknown protocol {protocol!r}, expected one of {expected}")
    if not signatures:
        raise ManifestError("Nothing to evaluate")
    logger = LoggerManager.get_logger()
    groups = list(groups) if groups is not None else [None] * len(signatures)
    vocabulary = sorted({str(s.label) for s in signatures})
    position = {w: i for i, w in enumerate(vocabulary)}
    confusion = np.zeros((len(vocabulary), len(vocabulary)), dtype=int)
    hits: Counter[str] = Counter()
    counts: Counter[str] = Counter()
    group_hits: Counter[str] = Counter()
    group_counts: Counter[str] = Counter()

    folds = FOLD_BUILDERS[protocol](signatures)
    for fold in folds:
        if protocol != "loo":
            logger.debug(
                f"Fold {fold.test_subject}: train on {', '.join(fold.train_subjects)} "
                f"({len(fold.train)} signatures), test {len(fold.test)} signatures"
            )
        index = TrainingIndex.from_config(
            [signatures[i] for i in fold.train], config.recognizer
        )
        if config.recognizer.tune_weights:
            index = tuned(index)
        for i in fold.test:
            query = signatures[i]
            predicted = classify(index, query).label
            confusion[position[str(query.label)], position[predicted]] += 1
            correct = predicted == query.label
            hits[fold.test_subject] += correct
            counts[fold.test_subject] += 1
            if groups[i] is not None:
                group_hits[groups[i]] += correct
                group_counts[groups[i]] += 1

    subjects = _subject_indices(signatures)
    rows = []
    for subject, indices in subjects.items():
        if not counts[subject]:
            continue
        activity = _subject_activity(signatures, indices)
        group = next((groups[i] for i in indices if groups[i] is not None), None)
        rows.append(
            SubjectResult(
                subject=subject,
                correct=hits[subject],
                total=counts[subject],
                activity=activity,
                vsp=activity is not None and activity < config.evaluation.vsp_activity,
                group=group,
            )
        )

    report = EvaluationReport(
        protocol=protocol,
        vocabulary=vocabulary,
        per_subject=rows,
        confusion=confusion.tolist(),
        folds=_fold_summaries(folds),
        groups={g: group_hits[g] / group_counts[g] for g in sorted(group_counts)},
        vsp_subjects=[r.subject for r in rows if r.vsp],
        config=config.to_dict(),
    )
    logger.info(
        f"{PROTOCOL_TITLES[protocol]}: {report.correct}/{report.total} "
        f"correct ({report.overall:.2%})"
    )
    return report


def _signatures(
    manifest: DatasetManifest, config: Config, signatures: Sequence[WordSignature] | None
) -> Sequence[WordSignature]:
    if signatures is None:
        return extract_manifest(manifest, config)
    if len(signatures) != len(manifest.utterances):
        raise ManifestError(
            f"{len(signatures)} signatures for {len(manifest.utterances)} utterances"
        )
    return signatures


def evaluate(
    manifest: DatasetManifest,
    config: Config | None = None,
    protocol: str = "speaker-dependent",
    signatures: Sequence[WordSignature] | None = None,
    per_signal: bool = False,
) -> EvaluationReport:
    """Extract (unless `signatures` are given) and evaluate a manifest.

    `signatures` must follow the manifest's utterance order.
    """

    config = config or Config()
    signatures = _signatures(manifest, config, signatures)
    groups = [u.group for u in manifest.utterances]
    report = run_protocol(signatures, config, protocol, groups)
    if per_signal:
        report.signal_accuracy = signal_accuracy(signatures, config, protocol, groups)
    return report


def evaluate_synthetic(
    config: Config | None = None,
    protocol: str = "speaker-dependent",
    per_signal: bool = False,
) -> EvaluationReport:
    """Render `config.synth` in memory and evaluate it, without touching the disk."""

    config = config or Config()
    signatures, groups = synthetic_signatures(config)
    report = run_protocol(signatures, config, protocol, groups)
    if per_signal:
        report.signal_accuracy = signal_accuracy(signatures, config, protocol, groups)
    return report


def evaluate_speaker_dependent(
    manifest: DatasetManifest,
    config: Config | None = None,
    signatures: Sequence[WordSignature] | None = None,
) -> EvaluationReport:
    return evaluate(manifest, config, "speaker-dependent", signatures)


def evaluate_speaker_independent(
    manifest: DatasetManifest,
    config: Config | None = None,
    signatures: Sequence[WordSignature] | None = None,
) -> EvaluationReport:
    return evaluate(manifest, config, "speaker-independent", signatures)


def signal_accuracy(
    signatures: Sequence[WordSignature],
    config: Config,
    protocol: str,
    groups: Sequence[str | None] | None = None,
) -> dict[str, float]:
    """Overall accuracy of the protocol with every signal used alone."""

    out = {}
    for signal in SIGNALS:
        single = copy.deepcopy(config)
        single.recognizer.weights = list(FusionWeights.one_hot(signal).w)
        single.recognizer.tune_weights = False
        out[signal] = run_protocol(signatures, single, protocol, groups).overall
    return out


def evaluate_signals(
    manifest: DatasetManifest,
    config: Config | None = None,
    protocol: str = "speaker-dependent",
    signatures: Sequence[WordSignature] | None = None,
) -> dict[str, float]:
    config = config or Config()
    signatures = _signatures(manifest, config, signatures)
    return signal_accuracy(
        signatures, config, protocol, [u.group for u in manifest.utterances]
    )


def format_table(report: EvaluationReport) -> str:
    """Plain-text accuracy table: a header, one row per subject and an `All` row."""

    title = PROTOCOL_TITLES.get(report.protocol, report.protocol)
    width = max([len("Subject"), len("All"), *(len(s.subject) for s in report.per_subject)])
    lines = [f"{'Subject':<{width}}  {'Correct':>7}  {'Total':>5}  {title:>20}"]
    for s in report.per_subject:
        flag = " (VSP)" if s.vsp else ""
        lines.append(
            f"{s.subject:<{width}}  {s.correct:>7}  {s.total:>5}  {s.accuracy:>20.2%}{flag}"
        )
    lines.append(
        f"{'All':<{width}}  {report.correct:>7}  {report.total:>5}  {report.overall:>20.2%}"
    )
    return "\n".join(lines) + "\n"


def report_write(report: EvaluationReport, path: str | os.PathLike) -> tuple[Path, Path]:
    """Write the JSON report to `path` and the text table beside it (`.txt`).

    Returns:
        tuple[Path, Path]: the JSON and text file paths
    """

    json_path = Path(path)
    text_path = json_path.with_suffix(".txt")
    try:
        json_path.parent.mkdir(parents=True, exist_ok=True)
        with open(json_path, "w") as f:
            json.dump(report.to_dict(), f, indent=2)
            f.write("\n")
        with open(text_path, "w") as f:
            f.write(format_table(report))
    except OSError as e:
        raise FrameIOError(f"Cannot write report {json_path}: {e}") from e
    return json_path, text_path


def read_report(path: str | os.PathLike) -> EvaluationReport:
    try:
        with open(path) as f:
            payload = json.load(f)
    except (OSError, json.JSONDecodeError) as e:
        raise FrameIOError(f"Cannot read report {path}: {e}") from e
    return EvaluationReport.from_dict(payload)
