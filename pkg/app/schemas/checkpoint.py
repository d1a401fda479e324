from typing import List, Optional

from pydantic import BaseModel, Field

from app.schemas.config import RunConfig


class CheckpointHeader(BaseModel):
    """Config block of a QRCK checkpoint."""

    run: RunConfig
    tensor_names: List[str] = Field(default_factory=list)
    epoch: int = Field(0, ge=0)
    step: int = Field(0, ge=0)
    best_val_auc: Optional[float] = None
    best_val_loss: Optional[float] = None
    bad_epochs: int = Field(0, ge=0)
