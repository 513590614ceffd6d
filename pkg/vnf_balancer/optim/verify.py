"""Independent feasibility and objective re-check of an assignment."""
from dataclasses import dataclass, field
from typing import List, Optional
import logging

import numpy as np

from .model import ModelInstance

logger = logging.getLogger(__name__)

SLACK_TOLERANCE = 1e-9
OBJECTIVE_RTOL = 1e-6


@dataclass
class Violation:
    name: str
    activity: float
    lower: float
    upper: float

    @property
    def amount(self) -> float:
        return max(self.lower - self.activity, self.activity - self.upper, 0.0)

    def describe(self) -> str:
        return f"{self.name}: activity {self.activity:.9g} outside [{self.lower:.9g}, {self.upper:.9g}]"


@dataclass
class VerificationReport:
    row_violations: List[Violation] = field(default_factory=list)
    bound_violations: List[Violation] = field(default_factory=list)
    integrality_violations: List[str] = field(default_factory=list)
    objective: float = 0.0
    claimed_objective: Optional[float] = None

    @property
    def objective_matches(self) -> bool:
        if self.claimed_objective is None:
            return True
        scale = max(1.0, abs(self.objective), abs(self.claimed_objective))
        return abs(self.objective - self.claimed_objective) <= OBJECTIVE_RTOL * scale

    @property
    def ok(self) -> bool:
        return (
            not self.row_violations
            and not self.bound_violations
            and not self.integrality_violations
            and self.objective_matches
        )

    @property
    def violated_rows(self) -> List[str]:
        return [v.name for v in self.row_violations]

    def summary(self) -> str:
        if self.ok:
            return "no violations"
        parts = [v.describe() for v in self.row_violations[:10]]
        parts += [v.describe() for v in self.bound_violations[:10]]
        parts += [f"{name} not integral" for name in self.integrality_violations[:10]]
        if not self.objective_matches:
            parts.append(f"objective {self.objective:.9g} != claimed {self.claimed_objective:.9g}")
        return "; ".join(parts)


def verify(
    model: ModelInstance,
    values: np.ndarray,
    claimed_objective: Optional[float] = None,
    tolerance: float = SLACK_TOLERANCE,
) -> VerificationReport:
    """Evaluate every row, bound and integrality requirement against ``values``."""
    values = np.asarray(values, dtype=float)
    if values.shape != (len(model.variables),):
        raise ValueError(f"assignment has {values.size} entries for {len(model.variables)} variables")
    report = VerificationReport(claimed_objective=claimed_objective)

    a, lo, hi = model.matrix()
    activity = a @ values if a.shape[0] else np.zeros(0)
    bad = np.flatnonzero((activity < lo - tolerance) | (activity > hi + tolerance))
    report.row_violations = [
        Violation(model.constraints[r].name, float(activity[r]), float(lo[r]), float(hi[r])) for r in bad
    ]

    lower, upper = model.lower_bounds, model.upper_bounds
    for j in np.flatnonzero((values < lower - tolerance) | (values > upper + tolerance)):
        report.bound_violations.append(
            Violation(model.variables[j].name, float(values[j]), float(lower[j]), float(upper[j]))
        )
    mask = model.binary_mask
    off = mask & (np.abs(values - np.round(values)) > tolerance)
    report.integrality_violations = [model.variables[j].name for j in np.flatnonzero(off)]

    report.objective = model.objective_value(values)
    if not report.ok:
        logger.debug(f"Verification failed: {report.summary()}")
    return report
