"""ABX listening-test service: sessions, durable response storage, export."""

from phrasebreak.abx.manifest import StimulusManifest, StoryStimuli
from phrasebreak.abx.store import (
    AbxStore,
    DuplicateResponseError,
    OutOfOrderError,
    ResponseRecord,
    Session,
    TrialOutOfRangeError,
    UnknownSessionError,
    export_responses,
)

__all__ = [
    "AbxStore",
    "DuplicateResponseError",
    "OutOfOrderError",
    "ResponseRecord",
    "Session",
    "StimulusManifest",
    "StoryStimuli",
    "TrialOutOfRangeError",
    "UnknownSessionError",
    "export_responses",
]
