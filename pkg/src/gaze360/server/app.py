"""FastAPI application for the annotation workflow.

Endpoints (all JSON):

    GET  /api/recordings                      recording list with status
    GET  /api/recordings/{id}/samples         coordinates + speeds per frame
    GET  /api/recordings/{id}/labels          current track + revision
    PUT  /api/recordings/{id}/labels          full track or edit batch
    POST /api/recordings/{id}/prelabel        speed-threshold saccade seed

Concurrency: readers are unrestricted; writes are serialized per recording
and guarded by an optimistic base-revision check, so a stale client gets
409 instead of silently overwriting. When a built frontend is present its
static files are served at /.
"""

from __future__ import annotations

import math
from pathlib import Path

import numpy as np
from fastapi import FastAPI, HTTPException, Query
from fastapi.middleware.cors import CORSMiddleware
from fastapi.staticfiles import StaticFiles

from ..data import FormatError, LabelTrack, PrimaryLabel, Recording, SecondaryLabel
from ..geometry import angular_speed_series
from .schemas import (
    LabelsResponse,
    PutLabelsRequest,
    PutLabelsResponse,
    RecordingInfo,
    SamplesResponse,
)
from .store import BadEditError, ConflictError, Edit, LabelStore


def _nullable(values: np.ndarray) -> list[float | None]:
    return [None if not math.isfinite(v) else float(v) for v in values.tolist()]


def _labels_response(rec_id: str, track: LabelTrack, revision: int) -> LabelsResponse:
    return LabelsResponse(
        id=rec_id,
        revision=revision,
        t_us=[int(t) for t in track.t_us],
        primary=[PrimaryLabel(p).name for p in track.primary],
        secondary=[SecondaryLabel(s).name for s in track.secondary],
    )


def _annotation_status(track: LabelTrack, revision: int) -> str:
    if revision == 0:
        return "none"
    return "complete" if track.is_complete() else "partial"


def create_app(data_root: Path, frontend_dir: Path | None = None) -> FastAPI:
    store = LabelStore(Path(data_root))
    app = FastAPI(title="gaze360 annotation service", version="1")
    app.state.store = store
    # single-user tool on the local machine; the UI may be served from
    # another port during development
    app.add_middleware(
        CORSMiddleware,
        allow_origins=["*"],
        allow_methods=["*"],
        allow_headers=["*"],
    )

    @app.get("/api/recordings", response_model=list[RecordingInfo])
    def list_recordings() -> list[RecordingInfo]:
        try:
            ids = store.recording_ids()
        except FileNotFoundError as exc:
            raise HTTPException(status_code=500, detail=str(exc)) from exc
        out = []
        for rec_id in ids:
            try:
                rec = store.load_recording(rec_id)
                track, revision = store.load_track(rec_id)
            except (FormatError, ValueError) as exc:
                out.append(RecordingInfo(id=rec_id, annotation="error", error=str(exc)))
                continue
            out.append(RecordingInfo(
                id=rec_id,
                n_samples=rec.n_samples,
                duration_us=rec.duration_us,
                sampling_rate_hz=rec.meta.sampling_rate_hz,
                video_id=rec.meta.video_id,
                observer_id=rec.meta.observer_id,
                revision=revision,
                annotation=_annotation_status(track, revision),
            ))
        return out

    def _recording_or_404(rec_id: str) -> Recording:
        try:
            return store.load_recording(rec_id)
        except KeyError as exc:
            raise HTTPException(status_code=404, detail=f"unknown recording {rec_id!r}") from exc
        except FormatError as exc:
            raise HTTPException(status_code=500, detail=str(exc)) from exc

    @app.get("/api/recordings/{rec_id}/samples", response_model=SamplesResponse)
    def get_samples(
        rec_id: str,
        frame: str = Query("eh", pattern="^(fov|eh)$"),
        start_us: int | None = None,
        end_us: int | None = None,
    ) -> SamplesResponse:
        rec = _recording_or_404(rec_id)
        a = 0 if start_us is None else int(np.searchsorted(rec.t_us, start_us, side="left"))
        b = rec.n_samples if end_us is None else int(np.searchsorted(rec.t_us, end_us, side="left"))
        a, b = max(0, a), min(rec.n_samples, b)
        if b <= a:
            return SamplesResponse(id=rec_id, frame=frame, t_us=[], x=[], y=[],
                                   gaze_speed=[], head_speed=[])
        if frame == "fov":
            az, el = rec.fov_trajectory
            x, y = az, el
        else:
            x, y = rec.gaze_lon, rec.gaze_lat
        gaze_speed = angular_speed_series(x, y, rec.t_us, rec.valid)
        head_speed = angular_speed_series(rec.head_yaw, rec.head_pitch, rec.t_us)
        return SamplesResponse(
            id=rec_id,
            frame=frame,
            t_us=[int(t) for t in rec.t_us[a:b]],
            x=[float(v) for v in x[a:b]],
            y=[float(v) for v in y[a:b]],
            gaze_speed=_nullable(gaze_speed[a:b]),
            head_speed=_nullable(head_speed[a:b]),
        )

    @app.get("/api/recordings/{rec_id}/labels", response_model=LabelsResponse)
    def get_labels(rec_id: str) -> LabelsResponse:
        _recording_or_404(rec_id)
        track, revision = store.load_track(rec_id)
        return _labels_response(rec_id, track, revision)

    @app.put("/api/recordings/{rec_id}/labels", response_model=PutLabelsResponse)
    def put_labels(rec_id: str, body: PutLabelsRequest) -> PutLabelsResponse:
        _recording_or_404(rec_id)
        if (body.edits is None) == (body.track is None):
            raise HTTPException(status_code=422,
                                detail="provide exactly one of 'edits' or 'track'")
        try:
            if body.track is not None:
                revision = store.put_full(rec_id, body.track.primary, body.track.secondary,
                                          body.base_revision)
            else:
                edits = [Edit(**e.model_dump()) for e in body.edits]
                revision = store.put_edits(rec_id, edits, body.base_revision)
        except ConflictError as exc:
            raise HTTPException(status_code=409, detail=str(exc)) from exc
        except BadEditError as exc:
            raise HTTPException(status_code=400, detail=str(exc)) from exc
        return PutLabelsResponse(id=rec_id, revision=revision)

    @app.post("/api/recordings/{rec_id}/prelabel", response_model=LabelsResponse)
    def prelabel(rec_id: str, force: bool = False) -> LabelsResponse:
        _recording_or_404(rec_id)
        try:
            track, revision = store.prelabel(rec_id, force=force)
        except ConflictError as exc:
            raise HTTPException(status_code=409, detail=str(exc)) from exc
        return _labels_response(rec_id, track, revision)

    if frontend_dir is not None and Path(frontend_dir).is_dir():
        app.mount("/", StaticFiles(directory=str(frontend_dir), html=True), name="ui")

    return app
