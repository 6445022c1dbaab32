"""Request/response models for the annotation service.

Field names here are the wire contract; docs/api_schema.json freezes them
and a test asserts the two stay in sync.
"""

from __future__ import annotations

from typing import Literal, Optional

from pydantic import BaseModel, Field


class RecordingInfo(BaseModel):
    id: str
    n_samples: int = 0
    duration_us: int = 0
    sampling_rate_hz: float = 0.0
    video_id: str = ""
    observer_id: str = ""
    revision: int = 0
    annotation: Literal["none", "partial", "complete", "error"] = "none"
    error: Optional[str] = None


class SamplesResponse(BaseModel):
    id: str
    frame: Literal["fov", "eh"]
    t_us: list[int]
    x: list[float]
    y: list[float]
    gaze_speed: list[Optional[float]]
    head_speed: list[Optional[float]]


class LabelsResponse(BaseModel):
    id: str
    revision: int
    t_us: list[int]
    primary: list[str]
    secondary: list[str]


class LabelEditModel(BaseModel):
    start_us: int
    end_us: int
    primary: Optional[str] = None
    secondary: Optional[str] = None


class FullTrackModel(BaseModel):
    primary: list[str]
    secondary: list[str]


class PutLabelsRequest(BaseModel):
    base_revision: int = Field(ge=0)
    edits: Optional[list[LabelEditModel]] = None
    track: Optional[FullTrackModel] = None


class PutLabelsResponse(BaseModel):
    id: str
    revision: int


class ErrorResponse(BaseModel):
    error: str
    kind: str
