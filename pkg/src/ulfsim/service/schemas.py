"""Pydantic request/response models for the tuning service.

These mirror the library parameter records field for field; deep validation
(positivity, ranges, feasibility) stays in the library dataclasses so the
service can never drift from it.
"""

import math

from pydantic import BaseModel, Field

from ..kspace import DegradationParams, KspaceParams, params_to_dict
from ..physics import ImagePhysicsParams


class ImageParamsModel(BaseModel):
    t2: float = 0.08
    te: float = 0.11
    b0_strength: float = 0.035
    b0_correlation: float | None = None
    grad_coupling: float = 50.0
    phase_scale: float = 1.0
    coil_falloff: float = 0.7


class KspaceParamsModel(BaseModel):
    target_snr: float | None = Field(default=8.0, description="null disables the noise stage")
    rho: float = 0.5
    r_accel: int = 2
    center_fraction: float = 0.25
    readout_axis: int = 0


class ParamsModel(BaseModel):
    image: ImageParamsModel = Field(default_factory=ImageParamsModel)
    kspace: KspaceParamsModel = Field(default_factory=KspaceParamsModel)

    def to_record(self, seed: int) -> DegradationParams:
        snr = self.kspace.target_snr
        return DegradationParams(
            image=ImagePhysicsParams(**self.image.model_dump()),
            kspace=KspaceParams(**{**self.kspace.model_dump(), "target_snr": math.inf if snr is None else snr}),
            seed=int(seed),
        )

    @classmethod
    def from_record(cls, params: DegradationParams) -> "ParamsModel":
        d = params_to_dict(params)
        return cls(image=ImageParamsModel(**d["image"]), kspace=KspaceParamsModel(**d["kspace"]))


class VolumeInfo(BaseModel):
    volume_id: str
    shape: list[int]
    spacing: list[float]


class DegradeRequest(BaseModel):
    volume_id: str
    params: ParamsModel = Field(default_factory=ParamsModel)
    seed: int = Field(default=0, ge=0)
    allow_out_of_range: bool = False


class DegradeResponse(BaseModel):
    result_id: str
    cache_hit: bool
    report: dict


class ReferenceRequest(BaseModel):
    volume_id: str


class CompareResponse(BaseModel):
    reference_volume_id: str
    band_deltas: dict
    l1_distance: float


class PresetCreate(BaseModel):
    name: str = Field(min_length=1, max_length=128)
    params: ParamsModel = Field(default_factory=ParamsModel)
    seed: int = Field(default=0, ge=0)
    notes: str = ""


class PresetInfo(BaseModel):
    name: str
    params: ParamsModel
    seed: int
    notes: str
    created_at: str
