"""
Schema-validated experiment configuration.
"""
import json
from pathlib import Path
from typing import Dict, List, Literal, Optional, Union

from pydantic import BaseModel, ConfigDict, Field, model_validator

from pinsim.continuum_kernels import make_test_function

commands = ("validate-walk", "kernels", "beta", "partition", "moments",
            "dickman", "gtheta", "cg", "she", "report")


class StrictModel(BaseModel):
    model_config = ConfigDict(extra="forbid")


class CatalogEntry(StrictModel):
    """A catalog key with keyword parameters."""
    name: str
    params: Dict[str, Union[float, str]] = Field(default_factory=dict)


class QuadratureConfig(StrictModel):
    abs_tol: float = 1.0e-12
    rel_tol: float = 1.0e-10


class WalkSection(StrictModel):
    n_max: int = Field(2000, ge=10)
    n_min: int = Field(1000, ge=1)


class KernelsSection(StrictModel):
    n_max: int = Field(10000, ge=10)
    stride: int = Field(1, ge=1)
    ratio_bounds: List[float] = Field(default_factory=lambda: [0.9, 1.1])


class BetaSection(StrictModel):
    N: List[int] = Field(default_factory=lambda: [1000, 10000, 100000])
    vartheta: float = 0.0


class PartitionSection(StrictModel):
    N: int = Field(200, ge=3)
    n_fields: int = Field(100, ge=2)
    brute_N: int = Field(12, ge=1, le=16)
    compare_N: int = Field(500, ge=3)
    vartheta: float = 0.0
    tolerance: float = 1.0e-10


class MomentsSection(StrictModel):
    N: List[int] = Field(default_factory=lambda: [1000, 10000, 100000])
    mc_N: int = Field(2000, ge=3)
    samples: int = Field(10000, ge=2)
    vartheta: float = 0.0
    n_sigma: float = 3.0


class DickmanSection(StrictModel):
    s_values: List[float] = Field(default_factory=lambda: [0.5, 1.0, 2.0])
    t_max: float = Field(4.0, gt=1.0)
    n_t: int = Field(401, ge=2)
    renewal_N: int = Field(100000, ge=3)
    renewal_s: float = Field(1.0, gt=0.0)
    samples: int = Field(10000, ge=2)
    ks_threshold: float = 0.05


class GThetaSection(StrictModel):
    vartheta: float = 0.0
    t_max: float = Field(4.0, gt=1.0)
    identity_points: List[List[float]] = Field(
        default_factory=lambda: [[0.8, 0.4], [0.5, 0.25]])
    asymptotic_t: List[float] = Field(default_factory=lambda: [1.0e-2, 1.0e-4, 1.0e-6])
    ubar_N: List[int] = Field(default_factory=lambda: [1000, 10000, 100000])
    rel_tol: float = 1.0e-3


class CGSection(StrictModel):
    eps: List[float] = Field(default_factory=lambda: [1.0 / 8, 1.0 / 16, 1.0 / 32])
    K: Optional[int] = None
    r_max: Optional[int] = None
    N: List[int] = Field(default_factory=lambda: [1000, 10000, 100000])
    repetitions: int = Field(5, ge=1)
    theta_N: int = Field(1024, ge=2)
    l2_N: int = Field(512, ge=2)
    samples: int = Field(1000, ge=2)
    vartheta: float = 0.0


class SHESection(StrictModel):
    delta2: List[float] = Field(default_factory=lambda: [1.0e-2, 1.0e-3, 1.0e-4])
    mc_delta2: float = Field(1.0e-3, gt=0.0, lt=1.0)
    theta: float = 0.0
    mollifier: str = "bump"
    dt: Optional[float] = None
    n_paths: int = Field(64, ge=1)
    n_noise: int = Field(64, ge=2)
    n_starts: int = Field(48, ge=8)
    n_steps: int = Field(4096, ge=16)
    max_dT: float = Field(0.25, gt=0.0)
    variance_tolerance: float = 0.25


class ReportSection(StrictModel):
    directory: Optional[str] = None


class ExperimentConfig(StrictModel):
    """
    The full configuration of one run. Nested sections default to their
    desk-scale values; unknown keys anywhere are rejected.
    """
    command: Literal[commands]
    name: Optional[str] = None
    seed: int = Field(0, ge=0)
    workers: int = Field(1, ge=1)
    output_dir: str = "pinsim_output"
    step_law: str = "binomial4"
    disorder: CatalogEntry = Field(default_factory=lambda: CatalogEntry(name="gaussian"))
    phi: CatalogEntry = Field(default_factory=lambda: CatalogEntry(name="gaussian_bump"))
    psi: CatalogEntry = Field(default_factory=lambda: CatalogEntry(name="gaussian_bump"))
    f: CatalogEntry = Field(default_factory=lambda: CatalogEntry(name="gaussian_bump"))
    quadrature: QuadratureConfig = Field(default_factory=QuadratureConfig)
    walk: WalkSection = Field(default_factory=WalkSection)
    kernels: KernelsSection = Field(default_factory=KernelsSection)
    beta: BetaSection = Field(default_factory=BetaSection)
    partition: PartitionSection = Field(default_factory=PartitionSection)
    moments: MomentsSection = Field(default_factory=MomentsSection)
    dickman: DickmanSection = Field(default_factory=DickmanSection)
    gtheta: GThetaSection = Field(default_factory=GThetaSection)
    cg: CGSection = Field(default_factory=CGSection)
    she: SHESection = Field(default_factory=SHESection)
    report: ReportSection = Field(default_factory=ReportSection)

    @model_validator(mode="after")
    def _compact_she_test_function(self):
        if self.command == "she":
            try:
                f = make_test_function(self.f.name, **self.f.params)
            except (KeyError, TypeError) as err:
                raise ValueError(f"Cannot build the test function f: {err}")
            if not f.bounded:
                raise ValueError(f"The SHE experiment needs a compactly supported f, "
                                 f"but {self.f.name!r} has unbounded support.")
        return self

    @property
    def run_name(self):
        return self.name or self.command

    def section(self):
        """The section belonging to the selected command."""
        key = "walk" if self.command == "validate-walk" else self.command
        return getattr(self, key)


def load_config(filename=None, overrides=None):
    """
    Read a JSON config file and apply *overrides*, a dict whose keys may
    be dotted paths such as ``"cg.samples"``.
    """
    data = {}
    if filename is not None:
        data = json.loads(Path(filename).read_text())
    for key, value in (overrides or {}).items():
        node = data
        parts = key.split(".")
        for p in parts[:-1]:
            node = node.setdefault(p, {})
        node[parts[-1]] = value
    return ExperimentConfig.model_validate(data)
