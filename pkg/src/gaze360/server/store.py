"""On-disk label store with an append-only revision log.

Layout under the data root::

    recordings/<id>.rec              canonical recordings (read-only here)
    labels/<id>.labels               materialized current track
    labels/<id>.revisions.jsonl      one JSON object per revision

Each revision line carries everything needed to replay it (a full
run-length track or an edit batch), so replaying the log from an
unlabelled track always reproduces the current state. The materialized
labels file is a cache of that replay. Writes are serialized per
recording; the service keeps no other state.
"""

from __future__ import annotations

import json
import threading
import time
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ..data import (
    FormatError,
    LabelTrack,
    PrimaryLabel,
    Recording,
    SecondaryLabel,
    parse_labels,
    parse_recording,
    serialize_labels,
)
from ..detector import ThresholdSet
from ..geometry import angular_speed_series

PRELABEL_SPEED_THRESHOLD = 140.0  # deg/s, applied to eye-in-head speeds


class ConflictError(Exception):
    """Base revision mismatch or refusing to overwrite existing labels."""


class BadEditError(ValueError):
    """An edit batch that cannot be applied atomically."""


@dataclass
class Edit:
    start_us: int
    end_us: int
    primary: str | None = None
    secondary: str | None = None

    def validate(self) -> None:
        if self.start_us >= self.end_us:
            raise BadEditError(f"edit range [{self.start_us}, {self.end_us}) is empty")
        if self.primary is None and self.secondary is None:
            raise BadEditError("edit sets neither tier")
        if self.primary is not None and self.primary not in PrimaryLabel.__members__:
            raise BadEditError(f"unknown primary label {self.primary!r}")
        if self.secondary is not None and self.secondary not in SecondaryLabel.__members__:
            raise BadEditError(f"unknown secondary label {self.secondary!r}")


def _runlength(track: LabelTrack) -> list[list[int]]:
    runs: list[list[int]] = []
    for p, s in zip(track.primary.tolist(), track.secondary.tolist()):
        if runs and runs[-1][1] == p and runs[-1][2] == s:
            runs[-1][0] += 1
        else:
            runs.append([1, p, s])
    return runs


def _from_runlength(runs: list[list[int]], t_us: np.ndarray) -> LabelTrack:
    prim = np.concatenate([[p] * c for c, p, s in runs]) if runs else np.array([], dtype=np.int8)
    sec = np.concatenate([[s] * c for c, p, s in runs]) if runs else np.array([], dtype=np.int8)
    if len(prim) != len(t_us):
        raise FormatError("revision track length does not match recording")
    return LabelTrack(t_us, prim.astype(np.int8), sec.astype(np.int8))


class LabelStore:
    def __init__(self, root: Path) -> None:
        self.root = Path(root)
        self.recordings_dir = self.root / "recordings"
        self.labels_dir = self.root / "labels"
        self._locks: dict[str, threading.Lock] = {}
        self._locks_guard = threading.Lock()
        self._cache: dict[str, tuple[float, Recording]] = {}

    # --- recordings ---------------------------------------------------------

    def recording_ids(self) -> list[str]:
        if not self.recordings_dir.is_dir():
            raise FileNotFoundError(f"no recordings directory under {self.root}")
        return sorted(p.stem for p in self.recordings_dir.glob("*.rec"))

    def recording_path(self, rec_id: str) -> Path:
        path = self.recordings_dir / f"{rec_id}.rec"
        if not path.is_file():
            raise KeyError(rec_id)
        return path

    def load_recording(self, rec_id: str) -> Recording:
        path = self.recording_path(rec_id)
        mtime = path.stat().st_mtime
        hit = self._cache.get(rec_id)
        if hit is not None and hit[0] == mtime:
            return hit[1]
        rec = parse_recording(path.read_bytes())
        self._cache[rec_id] = (mtime, rec)
        return rec

    # --- labels and revisions -------------------------------------------------

    def _lock(self, rec_id: str) -> threading.Lock:
        with self._locks_guard:
            return self._locks.setdefault(rec_id, threading.Lock())

    def _revisions_path(self, rec_id: str) -> Path:
        return self.labels_dir / f"{rec_id}.revisions.jsonl"

    def _labels_path(self, rec_id: str) -> Path:
        return self.labels_dir / f"{rec_id}.labels"

    def revisions(self, rec_id: str) -> list[dict]:
        path = self._revisions_path(rec_id)
        if not path.is_file():
            return []
        return [json.loads(line) for line in path.read_text().splitlines() if line.strip()]

    def current_revision(self, rec_id: str) -> int:
        return len(self.revisions(rec_id))

    def load_track(self, rec_id: str) -> tuple[LabelTrack, int]:
        """Current track and revision id; unlabelled track at revision 0."""
        rec = self.load_recording(rec_id)
        revision = self.current_revision(rec_id)
        path = self._labels_path(rec_id)
        if revision == 0 or not path.is_file():
            return LabelTrack.unlabelled(rec.t_us), revision
        track = parse_labels(path.read_bytes())
        if track.n_samples != rec.n_samples:
            raise FormatError(f"label file for {rec_id} does not match the recording")
        return track, revision

    def replay(self, rec_id: str) -> LabelTrack:
        """Rebuild the current track from the revision log alone."""
        rec = self.load_recording(rec_id)
        track = LabelTrack.unlabelled(rec.t_us)
        for entry in self.revisions(rec_id):
            if entry["kind"] in ("full", "prelabel"):
                track = _from_runlength(entry["track"], rec.t_us)
            elif entry["kind"] == "edits":
                edits = [Edit(**e) for e in entry["edits"]]
                _apply_edits(track, rec, edits)
            else:
                raise FormatError(f"unknown revision kind {entry['kind']!r}")
        return track

    def _commit(self, rec_id: str, track: LabelTrack, entry: dict) -> int:
        self.labels_dir.mkdir(parents=True, exist_ok=True)
        revision = self.current_revision(rec_id) + 1
        entry = {"revision": revision, "ts": time.time(), **entry}
        tmp = self._labels_path(rec_id).with_suffix(".labels.tmp")
        tmp.write_text(serialize_labels(track, [("revision", str(revision))]))
        tmp.replace(self._labels_path(rec_id))
        with self._revisions_path(rec_id).open("a", encoding="utf-8") as fh:
            fh.write(json.dumps(entry, separators=(",", ":")) + "\n")
        return revision

    def put_full(self, rec_id: str, primary: list[str], secondary: list[str],
                 base_revision: int) -> int:
        rec = self.load_recording(rec_id)
        if len(primary) != rec.n_samples or len(secondary) != rec.n_samples:
            raise BadEditError("track length does not match the recording")
        try:
            prim = np.array([PrimaryLabel[p] for p in primary], dtype=np.int8)
            sec = np.array([SecondaryLabel[s] for s in secondary], dtype=np.int8)
        except KeyError as exc:
            raise BadEditError(f"unknown label token {exc}") from exc
        track = LabelTrack(rec.t_us, prim, sec)
        with self._lock(rec_id):
            current = self.current_revision(rec_id)
            if base_revision != current:
                raise ConflictError(f"base revision {base_revision} != current {current}")
            return self._commit(rec_id, track, {"kind": "full", "track": _runlength(track)})

    def put_edits(self, rec_id: str, edits: list[Edit], base_revision: int) -> int:
        rec = self.load_recording(rec_id)
        for edit in edits:
            edit.validate()
        _check_edit_batch(edits, rec)
        with self._lock(rec_id):
            current = self.current_revision(rec_id)
            if base_revision != current:
                raise ConflictError(f"base revision {base_revision} != current {current}")
            track, _ = self.load_track(rec_id)
            _apply_edits(track, rec, edits)
            entry = {"kind": "edits", "edits": [vars(e) for e in edits]}
            return self._commit(rec_id, track, entry)

    def prelabel(self, rec_id: str, force: bool = False) -> tuple[LabelTrack, int]:
        """Speed-threshold saccade pre-annotation on eye-in-head speeds."""
        rec = self.load_recording(rec_id)
        with self._lock(rec_id):
            current = self.current_revision(rec_id)
            if current > 0 and not force:
                raise ConflictError(f"{rec_id} already has labels (revision {current})")
            az, el = rec.fov_trajectory
            speeds = angular_speed_series(az, el, rec.t_us, rec.valid)
            prim = np.where(speeds > PRELABEL_SPEED_THRESHOLD,
                            np.int8(PrimaryLabel.SACCADE), np.int8(PrimaryLabel.UNLABELLED))
            track = LabelTrack(rec.t_us, prim,
                               np.full(rec.n_samples, SecondaryLabel.NONE, dtype=np.int8))
            revision = self._commit(
                rec_id, track,
                {"kind": "prelabel", "threshold": PRELABEL_SPEED_THRESHOLD,
                 "track": _runlength(track)},
            )
            return track, revision


def _check_edit_batch(edits: list[Edit], rec: Recording) -> None:
    start = int(rec.t_us[0])
    end = int(rec.t_us[-1]) + rec.meta.nominal_dt_us
    for edit in edits:
        if edit.start_us < start or edit.end_us > end:
            raise BadEditError(
                f"edit [{edit.start_us}, {edit.end_us}) outside recording [{start}, {end})"
            )
    for i, a in enumerate(edits):
        for b in edits[i + 1:]:
            if a.start_us < b.end_us and b.start_us < a.end_us:
                if (a.primary is not None and b.primary is not None
                        and a.primary != b.primary) or (
                        a.secondary is not None and b.secondary is not None
                        and a.secondary != b.secondary):
                    raise BadEditError("overlapping contradictory edits in one batch")


def _apply_edits(track: LabelTrack, rec: Recording, edits: list[Edit]) -> None:
    for edit in edits:
        a = int(np.searchsorted(rec.t_us, edit.start_us, side="left"))
        b = int(np.searchsorted(rec.t_us, edit.end_us, side="left"))
        if edit.primary is not None:
            track.primary[a:b] = PrimaryLabel[edit.primary]
        if edit.secondary is not None:
            track.secondary[a:b] = SecondaryLabel[edit.secondary]
