"""
Pydantic models for command-line run configurations.

One class per config-file section; every field carries its default so that
``--print-config`` can show a complete, re-runnable file.
"""

from typing import Annotated, Any, Dict, List, Literal, Optional

from pydantic import BaseModel, BeforeValidator, ConfigDict, Field

from .spde import SpdeSpec


def _split_list(value: Any) -> Any:
    # "0.125, 0.0625" in INI text -> ["0.125", "0.0625"]
    if isinstance(value, str):
        return [item.strip() for item in value.split(",") if item.strip()]
    return value


FloatList = Annotated[List[float], BeforeValidator(_split_list)]
StrList = Annotated[List[str], BeforeValidator(_split_list)]


class Section(BaseModel):
    model_config = ConfigDict(extra="forbid")


class RunSection(Section):
    seed: int = 12345
    threads: int = Field(default=1, ge=1)
    output: str = "output"


class ModelSection(Section):
    """Catalog model name; every other key in the section is a builder parameter."""

    name: str = "test-equation"
    params: Dict[str, Any] = Field(default_factory=dict)


class SimulateSection(Section):
    scheme: str = "split"
    x0: float = 1.0
    t: float = Field(default=1.0, gt=0)
    dt: float = Field(default=0.01, gt=0)
    n_paths: int = Field(default=10, ge=1)
    output_mode: Literal["paths", "summary"] = "paths"


class ConvergeSection(Section):
    schemes: StrList = Field(default_factory=lambda: ["split"])
    x0: float = 1.0
    t: float = Field(default=1.0, gt=0)
    dt_list: FloatList = Field(default_factory=lambda: [2.0**-k for k in range(3, 9)])
    n_paths: int = Field(default=100_000, ge=1)
    k: int = Field(default=2, ge=1, le=2)
    fine_factor: int = Field(default=256, ge=1)
    control_variate: Literal["auto", "on", "off"] = "auto"

    @property
    def use_control_variate(self) -> Optional[bool]:
        return {"auto": None, "on": True, "off": False}[self.control_variate]


class SpdeSection(Section):
    dims: int = Field(default=1, ge=1, le=2)
    L: int = Field(default=128, ge=1)
    dx: float = Field(default=1.0, gt=0)
    sigma: float = Field(default=1.0, ge=0)
    theta: float = 0.0
    dt: float = Field(default=0.1, gt=0)
    t_max: float = Field(default=100.0, ge=0)
    u0: float = Field(default=0.1, ge=0)
    init: Literal["uniform", "point", "block"] = "uniform"
    init_width: int = Field(default=1, ge=1)
    snapshot_every: int = Field(default=10, ge=1)
    n_runs: int = Field(default=1, ge=1)
    thetas: FloatList = Field(default_factory=list)

    def to_spec(self, kind: str) -> SpdeSpec:
        return SpdeSpec(
            kind=kind,
            dims=self.dims,
            L=self.L,
            dx=self.dx,
            sigma=self.sigma,
            theta=self.theta,
            dt=self.dt,
            t_max=self.t_max,
            u0=self.u0,
            init=self.init,
            init_width=self.init_width,
        )


class ThetaSection(Section):
    dt_list: FloatList = Field(default_factory=lambda: [0.1, 0.05, 0.025])
    theta_lo: float = 0.5
    theta_hi: float = 1.2
    n_runs: int = Field(default=10, ge=1)
    tol: float = Field(default=0.01, gt=0)
    L: int = Field(default=1024, ge=1)
    dx: float = Field(default=1.0, gt=0)
    sigma: float = Field(default=1.0, ge=0)
    t_max: float = Field(default=400.0, gt=0)
    # decay: density ~ t^-exponent between t_early (t_max/4 when unset) and t_max
    # survival: survival 1/2 at t_max
    criterion: Literal["decay", "survival"] = "decay"
    t_early: Optional[float] = Field(default=None, gt=0)
    exponent: float = Field(default=0.1595, gt=0)
    u0: float = Field(default=1.0, gt=0)

    def to_spec(self) -> SpdeSpec:
        return SpdeSpec(
            kind="contact",
            dims=1,
            L=self.L,
            dx=self.dx,
            sigma=self.sigma,
            dt=min(self.dt_list),
            t_max=self.t_max,
            u0=self.u0,
        )


class SamplerSection(Section):
    d: float = 4.0
    lam: float = Field(default=3.0, ge=0)
    n: int = Field(default=100_000, ge=1)


class RunConfig(Section):
    """Complete configuration of one command invocation."""

    command: Optional[str] = None
    run: RunSection = Field(default_factory=RunSection)
    model: ModelSection = Field(default_factory=ModelSection)
    simulate: SimulateSection = Field(default_factory=SimulateSection)
    converge: ConvergeSection = Field(default_factory=ConvergeSection)
    spde: SpdeSection = Field(default_factory=SpdeSection)
    theta: ThetaSection = Field(default_factory=ThetaSection)
    sampler: SamplerSection = Field(default_factory=SamplerSection)
