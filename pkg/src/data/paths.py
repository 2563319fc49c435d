"""
Planar reference paths built from straight and circular segments.
"""
import math
from dataclasses import dataclass
from typing import List, Sequence, Tuple

import numpy as np


@dataclass(frozen=True)
class Line:
    start: Tuple[float, float]
    heading: float
    length: float

    def position(self, s: float) -> np.ndarray:
        return np.array([
            self.start[0] + s * math.cos(self.heading),
            self.start[1] + s * math.sin(self.heading),
        ])

    def heading_at(self, s: float) -> float:
        return self.heading

    @property
    def end(self) -> Tuple[float, float]:
        x, y = self.position(self.length)
        return float(x), float(y)

    @property
    def end_heading(self) -> float:
        return self.heading


@dataclass(frozen=True)
class Arc:
    """Circular arc; a positive sweep turns counter-clockwise."""
    center: Tuple[float, float]
    radius: float
    start_angle: float
    sweep: float

    @property
    def length(self) -> float:
        return abs(self.sweep) * self.radius

    @property
    def _turn(self) -> float:
        return 1.0 if self.sweep >= 0 else -1.0

    def angle_at(self, s: float) -> float:
        return self.start_angle + self._turn * s / self.radius

    def position(self, s: float) -> np.ndarray:
        phi = self.angle_at(s)
        return np.array([
            self.center[0] + self.radius * math.cos(phi),
            self.center[1] + self.radius * math.sin(phi),
        ])

    def heading_at(self, s: float) -> float:
        return self.angle_at(s) + self._turn * math.pi / 2

    @property
    def end(self) -> Tuple[float, float]:
        x, y = self.position(self.length)
        return float(x), float(y)

    @property
    def end_heading(self) -> float:
        return self.heading_at(self.length)


class ReferencePath:
    """
    Concatenated segments parametrised by arc length.

    Arc lengths outside [0, length] continue straight along the first or last
    heading.
    """

    def __init__(self, segments: Sequence):
        if not segments:
            raise ValueError("A reference path needs at least one segment")
        self.segments: List = list(segments)
        self.offsets = np.cumsum([0.0] + [seg.length for seg in self.segments])

    @property
    def length(self) -> float:
        return float(self.offsets[-1])

    def locate(self, s: float):
        """(segment, local arc length) holding the arc length s."""
        if s <= 0:
            return self.segments[0], s
        index = int(np.searchsorted(self.offsets, s, side='right')) - 1
        if index >= len(self.segments):
            last = self.segments[-1]
            return last, s - self.offsets[-2]
        return self.segments[index], s - self.offsets[index]

    def position(self, s: float) -> np.ndarray:
        if s > self.length:
            last = self.segments[-1]
            extra = s - self.length
            x, y = last.end
            return np.array([x + extra * math.cos(last.end_heading), y + extra * math.sin(last.end_heading)])
        if s < 0:
            first = self.segments[0]
            base = first.position(0.0)
            heading = first.heading_at(0.0)
            return base + s * np.array([math.cos(heading), math.sin(heading)])
        segment, local = self.locate(s)
        return segment.position(local)

    def heading(self, s: float) -> float:
        if s > self.length:
            return self.segments[-1].end_heading
        if s < 0:
            return self.segments[0].heading_at(0.0)
        segment, local = self.locate(s)
        return segment.heading_at(local)

    def segment_index(self, s: float) -> int:
        if s <= 0:
            return 0
        return min(int(np.searchsorted(self.offsets, s, side='right')) - 1, len(self.segments) - 1)
