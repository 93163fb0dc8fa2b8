"""Piecewise-constant schedules used for the mob intensity M(t) and ε(t)."""
from __future__ import annotations

import bisect
import math
from dataclasses import dataclass

from .errors import InvalidInputError


@dataclass(frozen=True)
class PiecewiseConstant:
    """Right-continuous step function.

    ``values[0]`` applies before ``breakpoints[0]``, ``values[j]`` on
    ``[breakpoints[j-1], breakpoints[j])`` and ``values[-1]`` after the
    last breakpoint.
    """

    breakpoints: tuple = ()
    values: tuple = (0.0,)

    def __post_init__(self):
        bps = tuple(float(b) for b in self.breakpoints)
        vals = tuple(float(v) for v in self.values)
        if len(vals) != len(bps) + 1:
            raise InvalidInputError(
                f"need len(values) == len(breakpoints) + 1, got {len(vals)} and {len(bps)}"
            )
        if any(not math.isfinite(x) for x in bps + vals):
            raise InvalidInputError("schedule contains non-finite entries")
        if any(b2 <= b1 for b1, b2 in zip(bps, bps[1:])):
            raise InvalidInputError("breakpoints must be strictly increasing")
        object.__setattr__(self, "breakpoints", bps)
        object.__setattr__(self, "values", vals)

    @classmethod
    def constant(cls, value):
        return cls((), (value,))

    def __call__(self, t):
        return self.values[bisect.bisect_right(self.breakpoints, t)]

    def map(self, fn):
        return type(self)(self.breakpoints, tuple(fn(v) for v in self.values))

    def to_dict(self):
        return {"breakpoints": list(self.breakpoints), "values": list(self.values)}


class MobIntensity(PiecewiseConstant):
    """Mob intensity M(t); zero outside events."""


class EpsilonSchedule(PiecewiseConstant):
    """Contact rate ε(t); values must be nonnegative."""

    def __post_init__(self):
        super().__post_init__()
        if any(v < 0 for v in self.values):
            raise InvalidInputError("epsilon schedule values must be >= 0")
