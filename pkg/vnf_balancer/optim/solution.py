"""Solver results and budgets shared by both backends."""
from dataclasses import dataclass, field
from enum import Enum
from functools import wraps
from typing import TYPE_CHECKING, Callable, Dict, Optional, TypeVar
import logging

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from ..exceptions import ModelError, ParameterError, SolverError

if TYPE_CHECKING:
    from .model import ModelInstance, VarKey


logger = logging.getLogger(__name__)

T = TypeVar("T")


class SolveStatus(str, Enum):
    OPTIMAL = "optimal"
    FEASIBLE = "feasible"
    INFEASIBLE = "infeasible"
    BUDGET_EXHAUSTED = "budget_exhausted"

    @property
    def has_solution(self) -> bool:
        return self in (SolveStatus.OPTIMAL, SolveStatus.FEASIBLE)


class SolveBudget(BaseModel):
    """Limits for one solver call; ``None`` means unlimited."""
    model_config = ConfigDict(frozen=True)

    max_wall_time: Optional[float] = Field(default=None, gt=0, description="Seconds")
    max_nodes: Optional[int] = Field(default=100000, gt=0, description="Branch-and-bound nodes")
    max_iterations: int = Field(default=5000, ge=0, description="Local-search moves per restart")
    gap: float = Field(default=1e-9, ge=0, description="Relative optimality gap tolerance")


@dataclass
class SolverStats:
    nodes: int = 0
    iterations: int = 0
    wall_time: float = 0.0
    restarts: int = 0


@dataclass
class Solution:
    """A value for every model variable, aligned with ``model.variables``."""
    model: "ModelInstance" = field(repr=False)
    values: Optional[np.ndarray]
    objective_value: float
    status: SolveStatus
    stats: SolverStats = field(default_factory=SolverStats)
    certificate: Optional[str] = None

    def value(self, key: "VarKey") -> float:
        if self.values is None:
            return 0.0
        return float(self.values[self.model.position(key)])

    def assignment(self) -> Dict[str, float]:
        if self.values is None:
            return {}
        return {v.name: float(x) for v, x in zip(self.model.variables, self.values)}

    @classmethod
    def infeasible(cls, model: "ModelInstance", stats: SolverStats, certificate: Optional[str] = None) -> "Solution":
        return cls(
            model=model, values=None, objective_value=float("inf"),
            status=SolveStatus.INFEASIBLE, stats=stats, certificate=certificate,
        )


def with_solver_error_handling(func: Callable[..., T]) -> Callable[..., T]:
    """Decorator turning numerical-library failures inside a backend into SolverError."""
    @wraps(func)
    def wrapper(*args, **kwargs) -> T:
        try:
            return func(*args, **kwargs)
        except (SolverError, ModelError, ParameterError):
            raise
        except (ValueError, ArithmeticError, MemoryError) as e:
            logger.error(f"Numerical error in {func.__name__}: {str(e)}")
            raise SolverError(f"Solver failed: {str(e)}")
        except Exception as e:
            logger.error(f"Unexpected error in {func.__name__}: {str(e)}")
            raise SolverError(f"Unexpected solver error: {str(e)}")
    return wrapper
