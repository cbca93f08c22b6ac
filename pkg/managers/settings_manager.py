import json
import os
from typing import Any, Dict, List, Optional

from dotenv import load_dotenv
from pydantic import BaseModel, ConfigDict, Field

from logger import logger

DEFAULT_SETTINGS_FILE = "config/settings.json"


class GraphSettings(BaseModel):
    model_config = ConfigDict(extra="forbid")

    enumeration_cap: int = Field(default=10_000_000, gt=0)


class SpectralSettings(BaseModel):
    model_config = ConfigDict(extra="forbid")

    power_tol: float = Field(default=1e-12, gt=0)
    power_max_iter: int = Field(default=100_000, gt=0)
    entropy_tol: float = Field(default=1e-12, gt=0)
    max_root_steps: int = Field(default=200, gt=0)
    unit_tol: float = Field(default=1e-8, gt=0)
    fd_step: float = Field(default=1e-6, gt=0)


class BlowupSettings(BaseModel):
    model_config = ConfigDict(extra="forbid")

    root_tol: float = Field(default=1e-12, gt=0)
    quad_tol: float = Field(default=1e-8, gt=0)
    gauss_nodes: int = Field(default=10, ge=2)
    max_depth: int = Field(default=30, gt=0)
    initial_horizon: float = Field(default=4.0, gt=0)
    tail_tol: float = Field(default=1e-8, gt=0)
    max_horizon: float = Field(default=200.0, gt=0)
    workers: int = Field(default=1, ge=1)


class ExplorerSettings(BaseModel):
    model_config = ConfigDict(extra="forbid")

    max_exhaustive_pairs: int = Field(default=20, ge=1)
    auto_exhaustive_pairs: int = Field(default=12, ge=1)
    tie_tol: float = Field(default=1e-12, ge=0)
    restarts: int = Field(default=20, ge=1)
    dirichlet_alpha: float = Field(default=1.0, gt=0)
    xatol: float = Field(default=1e-7, gt=0)
    fatol: float = Field(default=1e-10, gt=0)
    max_iter: int = Field(default=4000, gt=0)
    seed: int = 0xC0FFEE
    workers: int = Field(default=4, ge=1)


class BoundsSettings(BaseModel):
    model_config = ConfigDict(extra="forbid")

    seed: int = 0xC0FFEE
    log_length_range: float = Field(default=2.0, gt=0)
    slack: float = Field(default=1e-10, ge=0)
    nonloop_slack: float = Field(default=1e-12, ge=0)
    barbell_grid_points: int = Field(default=100, ge=1)
    workers: int = Field(default=4, ge=1)


class Settings(BaseModel):
    model_config = ConfigDict(extra="forbid")

    graph: GraphSettings = GraphSettings()
    spectral: SpectralSettings = SpectralSettings()
    blowup: BlowupSettings = BlowupSettings()
    explorer: ExplorerSettings = ExplorerSettings()
    bounds: BoundsSettings = BoundsSettings()


class SettingsManager:
    def __init__(self, settings_file: Optional[str] = None):
        load_dotenv()
        self.settings_file = settings_file or os.getenv(
            "SUBGRAPH_ENTROPY_SETTINGS", DEFAULT_SETTINGS_FILE
        )
        self.settings = self._load_settings()

    def _load_settings(self) -> Settings:
        """Load settings from JSON configuration file"""
        try:
            with open(self.settings_file, 'r') as f:
                return Settings.model_validate(json.load(f))
        except FileNotFoundError:
            logger.warning(
                f"Settings file {self.settings_file} not found, using default settings"
            )
            return Settings()

    def get_settings(self) -> Settings:
        return self.settings

    def as_dict(self) -> Dict[str, Any]:
        return self.settings.model_dump()

    def list_tolerances(self) -> List[str]:
        """Dotted names accepted by apply_overrides"""
        return [
            f"{section}.{name}"
            for section, values in self.as_dict().items()
            for name in values
        ]

    def apply_overrides(self, overrides: Dict[str, float]) -> Settings:
        """Apply dotted overrides such as {'spectral.entropy_tol': 1e-13}"""
        data = self.as_dict()
        for dotted, value in overrides.items():
            section, _, name = dotted.partition(".")
            if section not in data or name not in data[section]:
                raise ValueError(f"Unknown setting: {dotted}")
            data[section][name] = value
        self.settings = Settings.model_validate(data)
        return self.settings
