"""Day-interval class schemes for lead times.

Intervals are left-open and right-closed: class 0 is ``[0, b1]``, class i is
``]b_i, b_{i+1}]`` and the last class is ``]b_{k-1}, inf)``.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import DataError

# Number of classes -> upper interval boundaries in days.
SCHEMES: dict[int, tuple[float, ...]] = {
    2: (1.0,),
    3: (1.0, 3.0),
    4: (1.0, 3.0, 7.0),
    5: (1.0, 3.0, 7.0, 28.0),
    6: (1.0, 3.0, 7.0, 28.0, 84.0),
    7: (1.0, 2.0, 3.0, 7.0, 28.0, 84.0),
    8: (1.0, 2.0, 3.0, 7.0, 14.0, 28.0, 84.0),
    9: (0.5, 1.0, 2.0, 3.0, 7.0, 14.0, 28.0, 84.0),
    10: (0.25, 0.5, 1.0, 2.0, 3.0, 7.0, 14.0, 28.0, 84.0),
}


@dataclass(frozen=True)
class LabelScheme:
    boundaries: tuple[float, ...]

    def __post_init__(self):
        b = tuple(float(x) for x in self.boundaries)
        if not 1 <= len(b) <= 9:
            raise DataError(f"a scheme needs 1..9 boundaries, got {len(b)}")
        if any(x <= 0 or not np.isfinite(x) for x in b):
            raise DataError("boundaries must be positive and finite")
        if any(b2 <= b1 for b1, b2 in zip(b, b[1:])):
            raise DataError("boundaries must be strictly ascending")
        object.__setattr__(self, "boundaries", b)

    @property
    def n_classes(self) -> int:
        return len(self.boundaries) + 1

    def interval_names(self) -> list[str]:
        b = self.boundaries
        names = [f"[<={_fmt(b[0])}]"]
        names += [f"]{_fmt(lo)}-{_fmt(hi)}]" for lo, hi in zip(b, b[1:])]
        names.append(f"[>{_fmt(b[-1])}]")
        return names


def _fmt(x: float) -> str:
    return f"{x:g}"


def scheme_for(k: int) -> LabelScheme:
    if isinstance(k, bool) or int(k) != k or k not in SCHEMES:
        raise DataError(f"number of classes must be an integer in [2, 10], got {k!r}")
    return LabelScheme(SCHEMES[int(k)])


def assign_label(lead_time_days: float, scheme: LabelScheme) -> int:
    x = float(lead_time_days)
    if not x > 0 or np.isnan(x):
        raise DataError(f"lead time must be positive, got {lead_time_days!r}")
    return int(np.searchsorted(scheme.boundaries, x, side="left"))


def assign_labels(lead_times: Sequence[float] | np.ndarray, scheme: LabelScheme) -> np.ndarray:
    """Vectorised :func:`assign_label`."""
    x = np.asarray(lead_times, dtype=np.float64)
    if x.size and not np.all(x > 0):
        raise DataError("lead times must be positive")
    return np.searchsorted(np.asarray(scheme.boundaries), x, side="left").astype(np.int64)


def class_distribution(labels: Sequence[int] | np.ndarray, n_classes: int | None = None) -> np.ndarray:
    y = np.asarray(labels, dtype=np.int64)
    if y.size == 0:
        raise DataError("class distribution of an empty label set")
    if y.min() < 0:
        raise DataError("labels must be non-negative")
    counts = np.bincount(y, minlength=n_classes or 0)
    return counts / counts.sum()
