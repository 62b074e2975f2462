"""One-dimensional track geometry: segments, chainage lookup and curvature."""

from __future__ import annotations

import bisect
import math
from dataclasses import dataclass, field
from typing import Sequence

from .common import RailguardError

INFINITE = math.inf
MIN_RADIUS = 100.0
MAX_GRADE = 0.05


class TrackRangeError(RailguardError, ValueError):
    """Chainage outside ``[0, total_length]``."""


@dataclass(frozen=True)
class TrackSegment:
    """A piece of track with constant radius and grade.

    Attributes:
        length: Segment length in m.
        radius: Horizontal curve radius in m, ``INFINITE`` for straight track.
        grade: Signed slope (rise/run); positive is uphill in the direction of travel.
        tag_positions: Offsets (m) within the segment where position tags sit.
    """

    length: float
    radius: float = INFINITE
    grade: float = 0.0
    tag_positions: tuple[float, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "tag_positions", tuple(float(x) for x in self.tag_positions))
        if not self.length > 0:
            raise ValueError(f"length > 0 violated (length={self.length})")
        if not (math.isinf(self.radius) and self.radius > 0) and not self.radius >= MIN_RADIUS:
            raise ValueError(f"radius = INFINITE or radius >= {MIN_RADIUS:g} m violated (radius={self.radius})")
        if not abs(self.grade) <= MAX_GRADE:
            raise ValueError(f"|grade| <= {MAX_GRADE} violated (grade={self.grade})")
        tags = self.tag_positions
        for a, b in zip(tags, tags[1:]):
            if not b > a:
                raise ValueError(f"tag offsets strictly increasing violated ({a} then {b})")
        for t in tags:
            if not 0 <= t < self.length:
                raise ValueError(f"tag offset in [0, length) violated (offset={t}, length={self.length})")

    @property
    def curvature(self) -> float:
        return 0.0 if math.isinf(self.radius) else 1.0 / self.radius


@dataclass(frozen=True)
class TrackProfile:
    segments: tuple[TrackSegment, ...]
    _starts: tuple[float, ...] = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "segments", tuple(self.segments))
        if not self.segments:
            raise ValueError("track must contain at least one segment")
        starts, s = [], 0.0
        for seg in self.segments:
            starts.append(s)
            s += seg.length
        object.__setattr__(self, "_starts", tuple(starts))

    @property
    def total_length(self) -> float:
        return math.fsum(seg.length for seg in self.segments)

    def segment_start(self, index: int) -> float:
        return self._starts[index]

    def tag_chainages(self) -> list[float]:
        """Absolute chainages of every tag on the track, ascending."""
        return [
            start + off
            for start, seg in zip(self._starts, self.segments)
            for off in seg.tag_positions
        ]


def straight_track(length: float) -> TrackProfile:
    return TrackProfile((TrackSegment(length),))


def segment_at(track: TrackProfile, s: float) -> tuple[int, float]:
    """Locate chainage ``s`` on the track.

    A chainage exactly on a joint belongs to the later segment, except at
    the very end of the track, which maps to the end of the last segment.

    Returns:
        ``(segment index, offset within segment)``.

    Raises:
        TrackRangeError: if ``s < 0`` or ``s > total_length``.
    """
    total = track.total_length
    if s < 0 or s > total or math.isnan(s):
        raise TrackRangeError(f"chainage {s} outside [0, {total}]")
    last = len(track.segments) - 1
    if s == total:
        return last, track.segments[last].length
    i = bisect.bisect_right(track._starts, s) - 1
    offset = s - track._starts[i]
    # float round-off can leave s a hair past the computed end of segment i
    if offset >= track.segments[i].length and i < last:
        return i + 1, 0.0
    return i, offset


def curvature_at(track: TrackProfile, s: float) -> float:
    i, _ = segment_at(track, s)
    return track.segments[i].curvature


def grade_at(track: TrackProfile, s: float) -> float:
    i, _ = segment_at(track, s)
    return track.segments[i].grade


def radius_at(track: TrackProfile, s: float) -> float:
    i, _ = segment_at(track, s)
    return track.segments[i].radius


def tags_between(track: TrackProfile, s0: float, s1: float) -> list[float]:
    """Tag chainages in the half-open interval ``(s0, s1]``."""
    tags = track.tag_chainages()
    lo = bisect.bisect_right(tags, s0)
    hi = bisect.bisect_right(tags, s1)
    return tags[lo:hi]


def as_track(segments: Sequence[TrackSegment] | TrackProfile) -> TrackProfile:
    return segments if isinstance(segments, TrackProfile) else TrackProfile(tuple(segments))
