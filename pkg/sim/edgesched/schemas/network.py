from typing import List, Optional

from pydantic import BaseModel, Field, model_validator


class NodeConfig(BaseModel):
    id: int = Field(ge=0)
    power: float
    memory: float
    available: Optional[float] = None
    tier: Optional[str] = None


class LinkConfig(BaseModel):
    u: int
    v: int
    bandwidth: float


class NetworkConfig(BaseModel):
    nodes: List[NodeConfig]
    links: List[LinkConfig] = Field(default_factory=list)


class TierConfig(BaseModel):
    name: str
    power: float = Field(gt=0)
    memory: float = Field(gt=0)
    weight: float = Field(default=1.0, gt=0)


# Device classes of the physical testbed, low to high performance.
DEFAULT_TIERS: List[TierConfig] = [
    TierConfig(name="raspberry-pi", power=10.0, memory=1.0, weight=0.3),
    TierConfig(name="jetson-nano", power=20.0, memory=4.0, weight=0.25),
    TierConfig(name="jetson-xavier-nx", power=40.0, memory=8.0, weight=0.25),
    TierConfig(name="edge-server-1", power=160.0, memory=64.0, weight=0.1),
    TierConfig(name="edge-server-2", power=320.0, memory=192.0, weight=0.1),
]


class GeneratorConfig(BaseModel):
    nodes: int = Field(ge=2)
    avg_degree: float = Field(default=3.0, gt=0)
    bw_mean: float = Field(default=1.0, gt=0)
    bw_var: float = Field(default=0.3, ge=0)
    tiers: List[TierConfig] = Field(default_factory=lambda: list(DEFAULT_TIERS))

    @model_validator(mode="after")
    def ensure_tiers(self) -> "GeneratorConfig":
        if not self.tiers:
            raise ValueError("at least one device tier is required")
        return self
