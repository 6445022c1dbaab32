"""Eye movement classification for 360-degree head-free eye tracking.

The package combines eye-in-head and eye-in-world motion to label
fixations, saccades, smooth pursuit and noise, plus the eye-head
coordination patterns (VOR, OKN, OKN+VOR, head pursuit) that appear
once the head is free to move. It also ships a synthetic trace
generator, F1 evaluation, threshold grid search, and an HTTP service
backing the two-stage annotation UI.
"""

__version__ = "0.1.0"

from .data import (
    EventSegment,
    GazeSample,
    LabelTrack,
    PrimaryLabel,
    Recording,
    RecordingMeta,
    SecondaryLabel,
    parse_recording,
    serialize_recording,
)
from .detector import ThresholdSet, run_pipeline
from .geometry import FovDir, HeadPose, SphericalDir

__all__ = [
    "EventSegment",
    "FovDir",
    "GazeSample",
    "HeadPose",
    "LabelTrack",
    "PrimaryLabel",
    "Recording",
    "RecordingMeta",
    "SecondaryLabel",
    "SphericalDir",
    "ThresholdSet",
    "parse_recording",
    "run_pipeline",
    "serialize_recording",
    "__version__",
]
