from enum import Enum
from pathlib import Path
from typing import Any, List

from pydantic import BaseModel, ConfigDict, Field, model_validator


class HeadKind(str, Enum):
    quantum = "quantum"
    classical = "classical"


class StrictModel(BaseModel):
    model_config = ConfigDict(extra="forbid")


class NetConfig(StrictModel):
    input_side: int = Field(16, ge=2, description="Cube edge of the input volume (voxels).")
    channels: List[int] = Field(default_factory=lambda: [8, 16], min_length=1)
    blocks_per_stage: int = Field(1, ge=1)
    n_out: int = Field(4, ge=1)

    @model_validator(mode="after")
    def _check_shapes(self):
        if any(c < 1 for c in self.channels):
            raise ValueError(f"channels must be positive, got {self.channels}")
        factor = 2 ** (len(self.channels) - 1)
        if self.input_side % factor:
            raise ValueError(
                f"input_side {self.input_side} must be divisible by {factor} "
                f"for {len(self.channels)} stages"
            )
        return self


class QLayerSettings(StrictModel):
    n_qubits: int = Field(4, ge=1, le=20)
    fm_reps: int = Field(2, ge=1)
    ansatz_reps: int = Field(1, ge=1)


class QLayerConfig(QLayerSettings):
    params: List[float]

    @model_validator(mode="after")
    def _check_params(self):
        expected = self.n_qubits * (self.ansatz_reps + 1)
        if len(self.params) != expected:
            raise ValueError(
                f"expected {expected} ansatz parameters for {self.n_qubits} qubits "
                f"and {self.ansatz_reps} rep(s), got {len(self.params)}"
            )
        return self


class TrainConfig(StrictModel):
    epochs: int = Field(20, ge=1)
    batch_size: int = Field(8, ge=2, description="Train-mode batch norm needs two samples.")
    learning_rate: float = Field(1e-3, gt=0)
    beta1: float = Field(0.9, ge=0, lt=1)
    beta2: float = Field(0.999, ge=0, lt=1)
    eps_adam: float = Field(1e-8, gt=0)
    seed: int = Field(42, ge=0, lt=2**64)
    head: HeadKind = HeadKind.quantum
    patience: int = Field(5, ge=0, description="0 disables early stopping.")


class DataConfig(StrictModel):
    manifest: Path = Path("data/manifest.tsv")
    out_dir: Path = Path("runs/default")
    threshold: float = Field(0.5, ge=0, le=1)


class RunConfig(StrictModel):
    data: DataConfig = Field(default_factory=DataConfig)
    net: NetConfig = Field(default_factory=NetConfig)
    qlayer: QLayerSettings = Field(default_factory=QLayerSettings)
    train: TrainConfig = Field(default_factory=TrainConfig)

    @model_validator(mode="before")
    @classmethod
    def _default_n_out(cls, values: Any):
        # the dense output feeds the qubits unless set explicitly
        if isinstance(values, dict):
            net = values.get("net")
            qlayer = values.get("qlayer") or {}
            if isinstance(net, dict) and "n_out" not in net:
                n_qubits = (
                    qlayer.get("n_qubits")
                    if isinstance(qlayer, dict)
                    else getattr(qlayer, "n_qubits", None)
                )
                if n_qubits is not None:
                    values = {**values, "net": {**net, "n_out": n_qubits}}
            elif net is None and isinstance(qlayer, dict) and "n_qubits" in qlayer:
                values = {**values, "net": {"n_out": qlayer["n_qubits"]}}
        return values

    @model_validator(mode="after")
    def _check_head_width(self):
        if self.train.head is HeadKind.quantum and self.net.n_out != self.qlayer.n_qubits:
            raise ValueError(
                f"net.n_out ({self.net.n_out}) must equal qlayer.n_qubits "
                f"({self.qlayer.n_qubits}) for the quantum head"
            )
        return self


class QLayerProbe(StrictModel):
    """One quantum-layer evaluation point; the qubit count follows from `features`."""

    features: List[float] = Field(..., min_length=1, max_length=20)
    params: List[float]
    fm_reps: int = Field(2, ge=1)
    ansatz_reps: int = Field(1, ge=1)

    def config(self) -> QLayerConfig:
        return QLayerConfig(
            n_qubits=len(self.features),
            fm_reps=self.fm_reps,
            ansatz_reps=self.ansatz_reps,
            params=self.params,
        )
