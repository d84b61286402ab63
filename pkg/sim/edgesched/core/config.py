from functools import lru_cache
from typing import Literal

from pydantic import Field
from pydantic_settings import BaseSettings, SettingsConfigDict


class Settings(BaseSettings):
    model_config = SettingsConfigDict(
        env_file=(".env", "sim/.env"),
        env_file_encoding="utf-8",
        case_sensitive=False,
        extra="ignore",
        populate_by_name=True,
    )

    app_name: str = "edgesched"
    environment: Literal["development", "production", "test"] = "development"

    k_paths: int = Field(default=4, ge=1, alias="EDGESCHED_K_PATHS")
    max_path_candidates: int = Field(
        default=64, ge=1, alias="EDGESCHED_MAX_PATH_CANDIDATES"
    )
    oracle_max_nodes: int = Field(default=8, ge=2, alias="EDGESCHED_ORACLE_MAX_NODES")
    oracle_max_flows: int = Field(default=4, ge=1, alias="EDGESCHED_ORACLE_MAX_FLOWS")
    default_stream_length: int = Field(
        default=100, ge=1, alias="EDGESCHED_STREAM_LENGTH"
    )

    capacity_epsilon: float = Field(default=1e-9, alias="EDGESCHED_CAPACITY_EPS")
    min_link_residual: float = Field(default=1e-9, alias="EDGESCHED_MIN_RESIDUAL")

    lp_pivot_tolerance: float = Field(default=1e-9, alias="EDGESCHED_LP_PIVOT_TOL")
    lp_feasibility_tolerance: float = Field(
        default=1e-7, alias="EDGESCHED_LP_FEAS_TOL"
    )
    lp_max_iterations: int = Field(default=10000, alias="EDGESCHED_LP_MAX_ITER")
    lp_debug_dump: bool = Field(default=False, alias="EDGESCHED_LP_DEBUG_DUMP")

    max_wait_seconds: float | None = Field(
        default=None, alias="EDGESCHED_MAX_WAIT"
    )
    check_invariants: bool = Field(
        default=False, alias="EDGESCHED_CHECK_INVARIANTS"
    )

    sweep_workers: int = Field(default=1, ge=1, alias="EDGESCHED_SWEEP_WORKERS")
    float_precision: int = Field(default=6, ge=1, alias="EDGESCHED_FLOAT_PRECISION")
    record_runtime: bool = Field(default=False, alias="EDGESCHED_RECORD_RUNTIME")
    output_dir: str = Field(default="out", alias="EDGESCHED_OUTPUT_DIR")
    log_level: str = Field(default="WARNING", alias="EDGESCHED_LOG_LEVEL")


@lru_cache
def get_settings() -> Settings:
    return Settings()


settings = get_settings()
