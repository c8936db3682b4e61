"""Model and training hyperparameters."""

from typing import Literal

from pydantic import BaseModel, ConfigDict, Field, model_validator

Backbone = Literal["gcn", "gat", "prognn", "ptdnet"]


class ProGnnConfig(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)

    alpha: float = Field(default=5e-4, ge=0)  # L1 weight
    beta: float = Field(default=1.5, ge=0)  # nuclear weight
    eta: float = Field(default=0.01, gt=0)
    tau_s: int = Field(default=1, ge=0)  # S-steps per outer iteration
    tau_w: int = Field(default=1, ge=1)  # weight steps per outer iteration
    joint: bool = True  # feed the task gradient into the S update
    allow_fill_in: bool = False


class PtdNetConfig(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)

    tau_start: float = Field(default=1.0, gt=0)
    tau_end: float = Field(default=0.3, gt=0)
    hidden_dim: int = Field(default=32, ge=1)


class ModelConfig(BaseModel):
    """Backbone choice and network shape."""

    model_config = ConfigDict(extra="forbid", frozen=True)

    backbone: Backbone = "gcn"
    hidden_dim: int = Field(default=32, ge=1)
    dense_dim: int = Field(default=32, ge=1)
    gat_heads: int = Field(default=1, ge=1)
    leaky_slope: float = Field(default=0.2, ge=0)
    kappa: float = Field(default=10.0, gt=0)
    prognn: ProGnnConfig = Field(default_factory=ProGnnConfig)
    ptdnet: PtdNetConfig = Field(default_factory=PtdNetConfig)


class TrainConfig(BaseModel):
    """A2C optimisation settings."""

    model_config = ConfigDict(extra="forbid", frozen=True)

    lr: float = Field(default=0.003, gt=0)
    gamma: float = Field(default=0.97, gt=0, le=1)
    episodes: int = Field(default=16000, ge=1)
    value_coef: float = Field(default=0.5, ge=0)
    entropy_coef: float = Field(default=0.01, ge=0)
    grad_clip: float = Field(default=5.0, gt=0)
    beta1: float = Field(default=0.9, ge=0, lt=1)
    beta2: float = Field(default=0.999, ge=0, lt=1)
    eps: float = Field(default=1e-8, gt=0)
    reward_scale: float = Field(default=1.0, gt=0)
    checkpoint_every: int | None = Field(default=None, ge=1)

    @model_validator(mode="after")
    def _betas_ordered(self) -> "TrainConfig":
        if self.beta1 > self.beta2:
            raise ValueError("beta1 must not exceed beta2")
        return self
