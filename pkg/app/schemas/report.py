from typing import List, Optional, Tuple

from pydantic import BaseModel, Field


class EvalReport(BaseModel):
    tp: int = Field(..., ge=0)
    fp: int = Field(..., ge=0)
    tn: int = Field(..., ge=0)
    fn: int = Field(..., ge=0)
    acc: float = Field(..., ge=0.0, le=1.0)
    sen: float = Field(..., ge=0.0, le=1.0)
    spe: float = Field(..., ge=0.0, le=1.0)
    auc: Optional[float] = Field(None, ge=0.0, le=1.0)
    threshold: float = 0.5
    roc_points: List[Tuple[float, float]] = Field(default_factory=list)
    warnings: List[str] = Field(default_factory=list)

    @property
    def total(self) -> int:
        return self.tp + self.fp + self.tn + self.fn
