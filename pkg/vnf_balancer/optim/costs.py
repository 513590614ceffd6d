"""Piecewise-linear convex cost functions y_i(u) = a_i*u - b_i."""
from typing import List, Sequence, Tuple, Union
import logging

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

from ..exceptions import CostRangeError, ParameterError

logger = logging.getLogger(__name__)

DEFAULT_SEGMENTS = 5
DEFAULT_STEEPNESS = 10.0
RANGE_TOLERANCE = 1e-9


class LinearSegment(BaseModel):
    model_config = ConfigDict(frozen=True)

    slope: float = Field(description="a_i")
    intercept: float = Field(description="b_i")

    def at(self, u: float) -> float:
        return self.slope * u - self.intercept


class CostFunctionSet(BaseModel):
    """Upper envelope of linear segments, convex and nondecreasing on [0, 1]."""
    model_config = ConfigDict(frozen=True)

    segments: Tuple[LinearSegment, ...] = Field(min_length=1)

    @model_validator(mode="after")
    def _check_shape(self) -> "CostFunctionSet":
        first = self.segments[0]
        if first.slope < 0 or abs(first.intercept) > RANGE_TOLERANCE:
            raise ValueError("first segment must pass through the origin with nonnegative slope")
        if any(s.slope < 0 for s in self.segments):
            raise ValueError("segment slopes must be nonnegative")
        if any(s.at(0.0) > RANGE_TOLERANCE for s in self.segments):
            raise ValueError("every segment must be <= 0 at u = 0")
        return self

    @property
    def slopes(self) -> np.ndarray:
        return np.array([s.slope for s in self.segments])

    @property
    def intercepts(self) -> np.ndarray:
        return np.array([s.intercept for s in self.segments])


def make_exponential_approx(
    num_segments: int = DEFAULT_SEGMENTS,
    steepness: float = DEFAULT_STEEPNESS,
) -> CostFunctionSet:
    """Chords of g(u) = (e^(s*u) - 1) / (e^s - 1) between equally spaced breakpoints."""
    if num_segments < 1:
        raise ParameterError(f"num_segments must be >= 1, got {num_segments}")
    if steepness <= 0:
        raise ParameterError(f"steepness must be > 0, got {steepness}")
    breakpoints = np.linspace(0.0, 1.0, num_segments + 1)
    values = np.expm1(steepness * breakpoints) / np.expm1(steepness)
    values[0], values[-1] = 0.0, 1.0
    slopes = np.diff(values) / np.diff(breakpoints)
    # chord i passes through (u_i, g_i)
    intercepts = slopes * breakpoints[:-1] - values[:-1]
    intercepts[0] = 0.0
    segments = tuple(
        LinearSegment(slope=float(a), intercept=float(b)) for a, b in zip(slopes, intercepts)
    )
    logger.debug(f"Exponential cost approximation: {num_segments} segments, steepness {steepness}")
    return CostFunctionSet(segments=segments)


def from_pairs(pairs: Sequence[Sequence[float]]) -> CostFunctionSet:
    """Build a set from explicit (slope, intercept) pairs."""
    return CostFunctionSet(segments=tuple(LinearSegment(slope=a, intercept=b) for a, b in pairs))


def evaluate(cfs: CostFunctionSet, u: float) -> float:
    if u < -RANGE_TOLERANCE or u > 1.0 + RANGE_TOLERANCE:
        raise CostRangeError(f"utilization {u} outside [0, 1]")
    return max(0.0, max(s.at(u) for s in cfs.segments))


def envelope(cfs: CostFunctionSet, u: Union[Sequence[float], np.ndarray]) -> np.ndarray:
    """Upper envelope clipped at 0, without the range check (used for overloaded states)."""
    values = np.asarray(u, dtype=float)
    lines = np.outer(values, cfs.slopes) - cfs.intercepts
    return np.maximum(lines.max(axis=1), 0.0).reshape(values.shape)


def evaluate_many(cfs: CostFunctionSet, u: Union[Sequence[float], np.ndarray]) -> np.ndarray:
    """Vectorised ``evaluate`` over an array of utilizations."""
    values = np.asarray(u, dtype=float)
    if values.size and (values.min() < -RANGE_TOLERANCE or values.max() > 1.0 + RANGE_TOLERANCE):
        raise CostRangeError(f"utilizations outside [0, 1]: min {values.min()}, max {values.max()}")
    return envelope(cfs, values)


def sample_curve(cfs: CostFunctionSet, points: int = 101) -> List[Tuple[float, float]]:
    grid = np.linspace(0.0, 1.0, points)
    return list(zip(grid.tolist(), evaluate_many(cfs, grid).tolist()))
