from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np


@dataclass
class Detection:
    location: int
    statistic: float
    interval: tuple[int, int]
    direction: Optional[np.ndarray] = None
    # random interval that produced the detection (wild segmentation only)
    source: Optional[tuple[int, int]] = None

    def to_dict(self) -> dict:
        return {
            "location": int(self.location),
            "statistic": float(self.statistic),
            "interval": [int(self.interval[0]), int(self.interval[1])],
            "direction": None if self.direction is None else [float(x) for x in self.direction],
            "source": None if self.source is None else [int(x) for x in self.source],
        }


@dataclass
class DetectionResult:
    """Estimated change points plus per-estimate diagnostics.

    ``records`` is ordered by detection time; ``change_points`` is sorted.
    ``params`` echoes every parameter value actually used, including
    auto-filled defaults.
    """

    change_points: list[int]
    records: list[Detection] = field(default_factory=list)
    warnings: list[str] = field(default_factory=list)
    params: dict = field(default_factory=dict)
    trace: list[dict] = field(default_factory=list, repr=False)
    # arrays kept for inspection; never serialized
    extras: dict = field(default_factory=dict, repr=False)

    @classmethod
    def from_records(cls, records, **kw) -> "DetectionResult":
        return cls(sorted({int(r.location) for r in records}), list(records), **kw)

    def to_dict(self) -> dict:
        return {
            "change_points": [int(c) for c in self.change_points],
            "diagnostics": [r.to_dict() for r in self.records],
            "params_used": self.params,
            "warnings": list(self.warnings),
        }
