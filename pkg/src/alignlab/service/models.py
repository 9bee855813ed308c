"""Pydantic request/response models for the HTTP API.

Each request model mirrors the run configuration of one command; responses
carry the uniform result rows, the flag list, and the manifest verbatim.
"""

from __future__ import annotations

from typing import Dict, List, Optional, Tuple

from pydantic import BaseModel, Field

from ..reporting import RunConfig


class SchemeModel(BaseModel):
    alphabet_size: int = 2
    score: List[List[float | str]] = Field(default=[[1, 0], [0, 1]])
    gap_price: float | str = 0


class ScoreRequest(BaseModel):
    x: str
    y: str
    scheme: Optional[SchemeModel] = None
    seed: Optional[int] = None

    def to_config(self) -> RunConfig:
        return RunConfig(
            command="score",
            x=self.x,
            y=self.y,
            scheme=self.scheme.model_dump() if self.scheme else None,
            seed=self.seed,
            n=max(1, len(self.x.split(",") if "," in self.x else self.x)),
        )


class SimulateMomentsRequest(BaseModel):
    n: int = 1000
    p: float = 0.5
    reps: int = 10_000
    seed: Optional[int] = None
    r_list: Tuple[float, ...] = (2.0,)
    s_list: Tuple[float, ...] = ()
    workers: int = 1

    def to_config(self) -> RunConfig:
        return RunConfig(
            command="simulate-moments",
            n=self.n,
            p=self.p,
            reps=self.reps,
            seed=self.seed,
            r_list=self.r_list,
            s_list=self.s_list,
            workers=self.workers,
        )


class EllProfileRequest(BaseModel):
    n: int = 100
    p: float = 0.5
    reps: int = 1_000
    seed: Optional[int] = None
    u_lo: Optional[int] = None
    u_hi: Optional[int] = None
    workers: int = 1

    def to_config(self) -> RunConfig:
        return RunConfig(
            command="ell-profile",
            n=self.n,
            p=self.p,
            reps=self.reps,
            seed=self.seed,
            u_lo=self.u_lo,
            u_hi=self.u_hi,
            workers=self.workers,
        )


class TransformRequest(BaseModel):
    n: int = 1000
    p: float = 0.05
    reps: int = 2_000
    seed: Optional[int] = None
    eps_target: float = 0.01
    workers: int = 1

    def to_config(self) -> RunConfig:
        return RunConfig(
            command="transform",
            n=self.n,
            p=self.p,
            reps=self.reps,
            seed=self.seed,
            eps_target=self.eps_target,
            workers=self.workers,
        )


class BoundsRequest(BaseModel):
    p: float = 0.5
    eps0: float = 0.2
    r_list: Tuple[float, ...] = (2.0,)
    s_list: Tuple[float, ...] = ()
    seed: Optional[int] = None

    def to_config(self) -> RunConfig:
        return RunConfig(
            command="bounds",
            p=self.p,
            eps0=self.eps0,
            r_list=self.r_list,
            s_list=self.s_list,
            seed=self.seed,
        )


class RateRequest(BaseModel):
    n: int = 200
    p: float = 0.5
    reps: int = 10_000
    seed: Optional[int] = None
    s_list: Tuple[float, ...] = ()
    t_list: Tuple[float, ...] = ()
    n_grid: Tuple[int, ...] = ()
    workers: int = 1

    def to_config(self) -> RunConfig:
        return RunConfig(
            command="rate",
            n=self.n,
            p=self.p,
            reps=self.reps,
            seed=self.seed,
            s_list=self.s_list,
            t_list=self.t_list,
            n_grid=self.n_grid,
            workers=self.workers,
        )


class VerifyAllRequest(BaseModel):
    n: int = 1000
    p: float = 0.05
    reps: int = 10_000
    seed: Optional[int] = None
    eps_target: float = 0.01
    s_list: Tuple[float, ...] = ()
    workers: int = 1

    def to_config(self) -> RunConfig:
        return RunConfig(
            command="verify-all",
            n=self.n,
            p=self.p,
            reps=self.reps,
            seed=self.seed,
            eps_target=self.eps_target,
            s_list=self.s_list,
            workers=self.workers,
        )


class ResultRowModel(BaseModel):
    name: str
    value: Optional[float]
    std_error: Optional[float] = None
    n: Optional[int] = None
    p: Optional[float] = None
    seed: Optional[int] = None
    anchor: str = "plumbing"


class RunResponse(BaseModel):
    rows: List[ResultRowModel]
    flags: List[str]
    manifest: Dict


class HealthResponse(BaseModel):
    status: str
    version: str
