"""Axis-aligned bounding boxes in 0-based pixel coordinates."""

from dataclasses import astuple, dataclass

import numpy as np

__all__ = ["BoundingBox"]


@dataclass(frozen=True)
class BoundingBox:
    """Top-left ``(x, y)`` and size ``(w, h)``; pixel ``(x, y)`` covers ``[x, x+1)``."""

    x: float
    y: float
    w: float
    h: float

    def __post_init__(self):
        vals = astuple(self)
        if not all(np.isfinite(vals)):
            raise ValueError(f"box has non-finite coordinates: {vals}")
        if self.w <= 0 or self.h <= 0:
            raise ValueError(f"box must have positive size, got w={self.w}, h={self.h}")
        for name, v in zip("xywh", vals):
            object.__setattr__(self, name, float(v))

    def __iter__(self):
        return iter(astuple(self))

    @classmethod
    def from_center(cls, cx, cy, w, h):
        return cls(cx - w / 2.0, cy - h / 2.0, w, h)

    @property
    def center(self):
        return self.x + self.w / 2.0, self.y + self.h / 2.0

    def as_array(self):
        return np.array(astuple(self))

    def inside(self, width, height):
        return self.x >= 0 and self.y >= 0 and self.x + self.w <= width and self.y + self.h <= height
