"""Run configuration: a YAML (or JSON) document validated with pydantic.

Relative molecule paths resolve against the config file's directory and
fall back to the bundled geometries by file stem (``h3p``, ``beh2``, ...).
"""

from __future__ import annotations

import json
from importlib import resources
from pathlib import Path
from typing import Literal, Optional

import yaml
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from .cavity import BONDI_RADII, DMSO_EPSILON
from .solver import VqeConfig

SCHEMA_VERSION = 1
METHODS = ("vqe", "pcm-vqe", "fci", "pcm-fci", "hf", "pcm-hf")


class _Strict(BaseModel):
    model_config = ConfigDict(extra="forbid")


class SolventSettings(_Strict):
    epsilon: float = Field(DMSO_EPSILON, gt=1.0)
    radii: dict[str, float] = Field(default_factory=lambda: dict(BONDI_RADII))
    scale: float = Field(1.2, gt=0.0)
    mesh_level: int = Field(2, ge=1, le=5)
    symmetrize: bool = False

    @field_validator("radii")
    @classmethod
    def _positive(cls, v):
        bad = {k: r for k, r in v.items() if r <= 0}
        if bad:
            raise ValueError(f"radii must be positive: {bad}")
        return {**BONDI_RADII, **v}


class ShotSettings(_Strict):
    n_shots: Optional[int] = Field(None, gt=0)
    depolarizing: float = Field(0.0, ge=0.0, lt=1.0)


class VqeSettings(_Strict):
    ansatz: Literal["givens", "uccsd"] = "givens"
    selection: Literal["all", "adaptive", "adapt"] = "adaptive"
    threshold: float = Field(1e-5, ge=0.0)
    max_operators: int = Field(80, gt=0)
    optimizer: Literal["gradient_descent", "rotosolve"] = "gradient_descent"
    step: float = Field(0.5, gt=0.0)
    adaptive_step: bool = True
    max_iterations: int = Field(500, gt=0)
    tolerance: float = Field(1e-8, gt=0.0)
    window: int = Field(3, gt=0)
    gradient: Literal["adjoint", "parameter_shift", "finite_difference"] = "adjoint"
    fd_step: float = Field(1e-3, gt=0.0)
    init: Literal["zeros", "random"] = "zeros"


class OracleSettings(_Strict):
    damping: float = Field(0.8, gt=0.0, le=1.0)


class RunConfig(_Strict):
    schema_version: int = SCHEMA_VERSION
    name: str = ""
    molecule: str
    basis: Literal["STO-3G", "6-31G"] = "STO-3G"
    method: Literal["vqe", "pcm-vqe", "fci", "pcm-fci", "hf", "pcm-hf"] = "pcm-vqe"
    frozen_core: int = Field(0, ge=0)
    orbitals: Literal["gas", "pcm"] = "gas"
    solvent: SolventSettings = Field(default_factory=SolventSettings)
    vqe: VqeSettings = Field(default_factory=VqeSettings)
    shots: ShotSettings = Field(default_factory=ShotSettings)
    oracle: OracleSettings = Field(default_factory=OracleSettings)
    seed: int = 0
    output_dir: str = "out"
    # directory the relative paths were written against; not part of the schema proper
    base_dir: str = Field(".", exclude=True)

    @model_validator(mode="after")
    def _check(self):
        if self.schema_version != SCHEMA_VERSION:
            raise ValueError(f"unsupported schema_version {self.schema_version} (expected {SCHEMA_VERSION})")
        return self

    @property
    def solvated(self) -> bool:
        return self.method.startswith("pcm")

    def molecule_path(self) -> Path:
        p = Path(self.molecule)
        if not p.is_absolute():
            candidate = Path(self.base_dir) / p
            if candidate.exists():
                return candidate
            bundled = bundled_molecule(p.stem)
            if bundled is not None:
                return bundled
            return candidate
        return p

    def output_path(self) -> Path:
        p = Path(self.output_dir)
        return p if p.is_absolute() else Path(self.base_dir) / p

    def vqe_config(self) -> VqeConfig:
        return VqeConfig(**self.vqe.model_dump(), shots=self.shots.n_shots,
                         depolarizing=self.shots.depolarizing, seed=self.seed)

    def resolved(self) -> dict:
        """Every setting with defaults made explicit and paths made absolute; loads back as a config."""
        out = self.model_dump(mode="json")
        out["molecule"] = str(self.molecule_path().resolve())
        out["output_dir"] = str(self.output_path().resolve())
        return out


def bundled_molecule(stem: str) -> Path | None:
    path = resources.files("solvq") / "data" / "molecules" / f"{stem}.xyz"
    return Path(str(path)) if path.is_file() else None


def bundled_config(name: str) -> Path:
    path = resources.files("solvq") / "data" / "configs" / f"{name}.yaml"
    if not path.is_file():
        raise FileNotFoundError(f"no bundled config named {name!r}")
    return Path(str(path))


def load_config(path, overrides: dict | None = None) -> RunConfig:
    """Read and validate a config file; ``overrides`` are merged at the top level."""
    path = Path(path)
    text = path.read_text()
    data = json.loads(text) if path.suffix == ".json" else yaml.safe_load(text)
    if not isinstance(data, dict):
        raise ValueError(f"{path}: expected a mapping at the top level")
    data = {**data, **(overrides or {})}
    data.setdefault("base_dir", str(path.parent))
    return RunConfig.model_validate(data)
