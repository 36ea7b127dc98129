import json
import os
from dataclasses import dataclass, field
from pathlib import Path

from .errors import FrameIOError, ManifestError
from .imaging import Box


@dataclass(frozen=True)
class Utterance:
    """
    One recorded word.

    Attributes:
        subject (str): speaker id
        session (int): recording session, 1 or 2
        word (str): the spoken word
        frames_dir (Path): directory of numbered frame files
        face_box (Box, optional): face bounding box; the whole frame if absent
        roi_file (Path, optional): annotated ROIs that replace localization
        truth_file (Path, optional): ground-truth ROIs, only used for auditing
        group (str, optional): subject group reported separately
    """

    subject: str
    session: int
    word: str
    frames_dir: Path
    face_box: Box | None = None
    roi_file: Path | None = None
    truth_file: Path | None = None
    group: str | None = None

    def __post_init__(self):
        if self.session not in (1, 2):
            raise ManifestError(f"Session must be 1 or 2, got {self.session}")


@dataclass(frozen=True)
class DatasetManifest:
    name: str
    utterances: tuple[Utterance, ...] = field(default_factory=tuple)

    @property
    def vocabulary(self) -> list[str]:
        return sorted({u.word for u in self.utterances})

    @property
    def subjects(self) -> list[str]:
        return sorted({u.subject for u in self.utterances})


def _box(value) -> Box | None:
    if value is None:
        return None
    if isinstance(value, dict):
        return Box(**value)
    return Box(*value)


def _resolve(root: Path, value: str | None) -> Path | None:
    return None if value is None else root / value


def load_manifest(path: str | os.PathLike) -> DatasetManifest:
    """Load a JSON manifest; relative paths are resolved against its directory.

    Raises:
        FrameIOError: The manifest file cannot be read.
        ManifestError: The manifest is malformed or names a missing path.
    """

    path = Path(path)
    try:
        with open(path) as f:
            payload = json.load(f)
    except OSError as e:
        raise FrameIOError(f"Cannot read manifest {path}: {e}") from e
    except json.JSONDecodeError as e:
        raise ManifestError(f"Manifest {path} is not valid JSON: {e}") from e

    root = path.parent
    utterances = []
    try:
        for entry in payload["utterances"]:
            utterance = Utterance(
                subject=str(entry["subject"]),
                session=int(entry["session"]),
                word=str(entry["word"]),
                frames_dir=root / entry["frames_dir"],
                face_box=_box(entry.get("face_box")),
                roi_file=_resolve(root, entry.get("roi_file")),
                truth_file=_resolve(root, entry.get("truth_file")),
                group=entry.get("group"),
            )
            for p in (utterance.frames_dir, utterance.roi_file, utterance.truth_file):
                if p is not None and not p.exists():
                    raise ManifestError(f"Manifest {path} names a missing path: {p}")
            utterances.append(utterance)
        return DatasetManifest(str(payload.get("name", path.stem)), tuple(utterances))
    except (KeyError, TypeError, ValueError) as e:
        raise ManifestError(f"Malformed manifest {path}: {e}") from e


def save_manifest(manifest: DatasetManifest, path: str | os.PathLike) -> None:
    """Write a JSON manifest with paths relative to its directory."""

    path = Path(path)
    root = path.parent.resolve()

    def relative(p: Path) -> str:
        return Path(os.path.relpath(Path(p).resolve(), root)).as_posix()

    entries = []
    for u in manifest.utterances:
        entry: dict = {
            "subject": u.subject,
            "session": u.session,
            "word": u.word,
            "frames_dir": relative(u.frames_dir),
        }
        if u.face_box is not None:
            entry["face_box"] = [u.face_box.x, u.face_box.y, u.face_box.w, u.face_box.h]
        if u.roi_file is not None:
            entry["roi_file"] = relative(u.roi_file)
        if u.truth_file is not None:
            entry["truth_file"] = relative(u.truth_file)
        if u.group is not None:
            entry["group"] = u.group
        entries.append(entry)
    try:
        with open(path, "w") as f:
            json.dump({"name": manifest.name, "utterances": entries}, f, indent=2)
            f.write("\n")
    except OSError as e:
        raise FrameIOError(f"Cannot write manifest {path}: {e}") from e
