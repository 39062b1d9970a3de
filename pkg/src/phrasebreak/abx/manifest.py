"""Stimulus manifest: stories, per-condition audio files, and comparisons."""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

AUDIO_MEDIA_TYPES = {
    ".wav": "audio/wav",
    ".ogg": "audio/ogg",
    ".mp3": "audio/mpeg",
}


@dataclass
class StoryStimuli:
    story_id: str
    condition_audio: dict[str, Path]


@dataclass
class StimulusManifest:
    """Stories crossed with conditions, plus the pairwise comparisons to run.

    Validation checks that every comparison references conditions present for
    every story and that every audio file is readable up front, so a broken
    manifest fails at load time rather than mid-session.
    """

    stories: list[StoryStimuli]
    comparisons: list[tuple[str, str]]

    def __post_init__(self):
        if not self.stories:
            raise ValueError("manifest has no stories")
        if not self.comparisons:
            raise ValueError("manifest has no comparisons")
        story_ids = [s.story_id for s in self.stories]
        if len(set(story_ids)) != len(story_ids):
            raise ValueError("duplicate story ids in manifest")
        problems = []
        for cond_a, cond_b in self.comparisons:
            if cond_a == cond_b:
                problems.append(f"comparison ({cond_a!r}, {cond_b!r}) compares a condition to itself")
            for story in self.stories:
                for cond in (cond_a, cond_b):
                    if cond not in story.condition_audio:
                        problems.append(
                            f"story {story.story_id!r} has no audio for condition {cond!r}"
                        )
        for story in self.stories:
            for cond, path in story.condition_audio.items():
                path = Path(path)
                if path.suffix.lower() not in AUDIO_MEDIA_TYPES:
                    problems.append(f"{path}: unsupported audio extension")
                    continue
                try:
                    with open(path, "rb"):
                        pass
                except OSError as exc:
                    problems.append(f"{path}: {exc}")
        if problems:
            raise ValueError("invalid manifest: " + "; ".join(problems))

    @property
    def trial_count(self) -> int:
        return len(self.stories) * len(self.comparisons)

    @classmethod
    def from_json(cls, path) -> "StimulusManifest":
        """Load a manifest file; audio paths resolve relative to it."""
        path = Path(path)
        with open(path, encoding="utf-8") as fh:
            doc = json.load(fh)
        base = path.parent
        stories = [
            StoryStimuli(
                story_id=entry["story_id"],
                condition_audio={
                    cond: (base / audio).resolve()
                    for cond, audio in entry["condition_audio"].items()
                },
            )
            for entry in doc["stories"]
        ]
        comparisons = [tuple(pair) for pair in doc["comparisons"]]
        return cls(stories=stories, comparisons=comparisons)


def media_type_for(path) -> str:
    return AUDIO_MEDIA_TYPES[Path(path).suffix.lower()]
