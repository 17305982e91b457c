"""
Problem configuration files.

A problem instance is one YAML document validated by `ProblemConfig`:

    d: 2
    alpha: [0.5, 0.5]
    drift: {kind: constant, b0: [0.0, 0.0]}
    sigma: [[1.0, 0.0], [0.0, 1.0]]
    beta: 1.0
    running_cost: {kind: quadratic, Q: [[1, 0], [0, 1]]}
    boundary_cost: [0.0, 0.0]
    lipschitz_bound: 1.0
"""

import logging
from pathlib import Path
from typing import List, Optional, Union

from pydantic import BaseModel, ConfigDict, Field

from ..util.config_io import dump_yaml, load_yaml
from .descriptors import CostDescriptor, DriftDescriptor

logger = logging.getLogger(__name__)


class ProblemConfig(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    name: Optional[str] = Field(None, description="Free-form instance label")
    d: int = Field(..., ge=1, description="State dimension")
    alpha: List[float] = Field(..., description="Reflection budgets, one per coordinate")
    drift: DriftDescriptor
    sigma: List[List[float]] = Field(..., description="Diffusion matrix, d x d")
    beta: float = Field(..., description="Discount rate")
    running_cost: CostDescriptor
    boundary_cost: Optional[List[float]] = Field(None, description="Linear boundary cost c; omitted means zero")
    lipschitz_bound: float = Field(1.0, description="Declared drift bound K")

    @classmethod
    def from_yaml(cls, path: Union[str, Path]) -> "ProblemConfig":
        data = load_yaml(path)
        config = cls.model_validate(data)
        logger.info(f"[MODEL] Loaded problem config '{config.name or Path(path).stem}' (d={config.d})")
        return config

    def to_yaml(self, path: Union[str, Path]) -> None:
        dump_yaml(self.to_dict(), path)

    def to_dict(self) -> dict:
        return self.model_dump(mode="json", exclude_none=True)
