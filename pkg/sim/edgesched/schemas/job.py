import ast
import re
from typing import Dict, List, Optional

from pydantic import BaseModel, Field, field_validator

_QUANTITY = re.compile(r"^\s*([0-9]*\.?[0-9]+(?:[eE][-+]?[0-9]+)?)\s*([A-Za-z]*)\s*$")


def parse_quantity(value: object) -> object:
    """Accept plain numbers or unit-suffixed strings such as ``"2GB"``."""
    if isinstance(value, str):
        match = _QUANTITY.match(value)
        if match is None:
            raise ValueError(f"not a quantity: {value!r}")
        return float(match.group(1))
    return value


class TaskConfig(BaseModel):
    id: str
    downstream: List[str] = Field(default_factory=list)
    memory_resource: float = Field(ge=0)
    workload: float = Field(default=0.0, ge=0)
    output_size: Dict[str, float] = Field(default_factory=dict)

    @field_validator("downstream", mode="before")
    @classmethod
    def parse_downstream(cls, value: object) -> object:
        if value is None or value == "":
            return []
        if isinstance(value, str):
            parsed = ast.literal_eval(value)
            return [parsed] if isinstance(parsed, str) else list(parsed)
        return value

    @field_validator("memory_resource", "workload", mode="before")
    @classmethod
    def parse_amounts(cls, value: object) -> object:
        return parse_quantity(value)

    @field_validator("output_size")
    @classmethod
    def ensure_non_negative(cls, value: Dict[str, float]) -> Dict[str, float]:
        for target, volume in value.items():
            if volume < 0:
                raise ValueError(f"output_size for {target} must be >= 0")
        return value


class JobConfig(BaseModel):
    job: str
    total_memory_request: Optional[float] = None
    source: int = Field(ge=0)
    input_size: float = Field(ge=0)
    arrival_time: float = Field(default=0.0, ge=0)
    stream_length: Optional[int] = Field(default=None, ge=1)
    input_split: Optional[Dict[str, float]] = None
    tasks: List[TaskConfig] = Field(min_length=1)

    @field_validator("total_memory_request", "input_size", mode="before")
    @classmethod
    def parse_amounts(cls, value: object) -> object:
        return parse_quantity(value)

    @field_validator("tasks")
    @classmethod
    def ensure_unique_ids(cls, value: List[TaskConfig]) -> List[TaskConfig]:
        ids = [task.id for task in value]
        if len(ids) != len(set(ids)):
            raise ValueError("task ids must be unique")
        return value
