from typing import List

from pydantic import BaseModel


class FlowPolicy(BaseModel):
    task: str
    next_task: str
    source_node: int
    next_node: int
    bandwidth: float
    routing: List[int]


class JobPolicy(BaseModel):
    job: str
    placement: dict[str, int]
    flows: List[FlowPolicy]


class PolicyDocument(BaseModel):
    jobs: List[JobPolicy]
