"""
Runtime configuration: environment defaults, the TOML run file and logging.

Precedence is built-in defaults < environment (``UDW_*``, ``.env``) < config
file < command-line flags. The last step happens in ``cli.py``.
"""

import logging
import os
try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib
from pathlib import Path
from typing import List, Literal, Optional, Tuple

from dotenv import load_dotenv
from pydantic import BaseModel, ConfigDict, Field, ValidationError

from errors import DomainError

# Load environment variables
load_dotenv()

STRONG_SUPPORT_HALF_WIDTH = float(os.getenv("UDW_STRONG_SUPPORT", "3.5"))
DEFAULT_ABS_TOL = float(os.getenv("UDW_ABS_TOL", "1e-10"))
DEFAULT_REL_TOL = float(os.getenv("UDW_REL_TOL", "1e-8"))
DEFAULT_MAX_SUBDIVISIONS = int(os.getenv("UDW_MAX_SUBDIVISIONS", "500"))
DEFAULT_WINDOW_SIGMAS = float(os.getenv("UDW_WINDOW_SIGMAS", "10.0"))
DEFAULT_WORKERS = int(os.getenv("UDW_WORKERS", "1"))
CONFIG_PATH = os.getenv("UDW_CONFIG")
LOG_LEVEL = os.getenv("UDW_LOG_LEVEL", "INFO")
LOG_FILE = os.getenv("UDW_LOG_FILE")

VERSION = "1.0.0"

logger = logging.getLogger(__name__)


def configure_logging(level: Optional[str] = None) -> None:
    handlers: List[logging.Handler] = [logging.StreamHandler()]
    if LOG_FILE:
        handlers.append(logging.FileHandler(LOG_FILE))
    logging.basicConfig(
        level=getattr(logging, (level or LOG_LEVEL).upper(), logging.INFO),
        format='%(asctime)s - %(levelname)s - %(message)s',
        handlers=handlers,
        force=True,
    )


# Config file sections. Everything is optional so a file may set a single key.

class _Section(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)


class DetectorSection(_Section):
    omega_t: Optional[float] = Field(None, ge=0, description="Gap in units of 1/T")
    coupling: Optional[float] = Field(None, ge=0, description="Dimensionless coupling λ")
    switching: Optional[Literal["gaussian", "delta"]] = None
    width: Optional[float] = Field(None, gt=0, description="Gaussian width in units of T")
    strength: Optional[float] = Field(None, gt=0, description="Dirac strength η")
    profile: Optional[str] = Field(None, description="'point' or 'ball:<sigma>'")
    alpha: Optional[Tuple[float, float]] = Field(None, description="Ground amplitude as [re, im]")
    beta: Optional[Tuple[float, float]] = Field(None, description="Excited amplitude as [re, im]")


class DetectorPair(_Section):
    a: DetectorSection = DetectorSection()
    b: DetectorSection = DetectorSection()


class GeometrySection(_Section):
    l_over_t: Optional[float] = Field(None, gt=0)
    t0_over_t: Optional[float] = None
    theta: Optional[float] = None
    placement: Optional[Literal["theta", "delay"]] = None


class SweepSection(_Section):
    preset: Optional[str] = None
    axis: Optional[str] = None
    min: Optional[float] = None
    max: Optional[float] = None
    steps: Optional[int] = Field(None, ge=2)
    observable: Optional[str] = None
    models: Optional[List[Literal["qc", "quantum"]]] = None
    theta_e: Optional[float] = None
    workers: Optional[int] = Field(None, ge=1)


class QuadratureSection(_Section):
    abs_tol: Optional[float] = Field(None, ge=0)
    rel_tol: Optional[float] = Field(None, ge=0)
    max_subdivisions: Optional[int] = Field(None, gt=0)
    integration_window_sigmas: Optional[float] = Field(None, ge=7)


class RunConfig(_Section):
    detector: DetectorPair = DetectorPair()
    geometry: GeometrySection = GeometrySection()
    sweep: SweepSection = SweepSection()
    quadrature: QuadratureSection = QuadratureSection()


def load_run_config(path: Optional[str] = None) -> RunConfig:
    """Read the TOML run file at ``path`` (or ``UDW_CONFIG``); empty config if neither is set."""
    path = path or CONFIG_PATH
    if not path:
        return RunConfig()
    try:
        with Path(path).open("rb") as fh:
            raw = tomllib.load(fh)
    except OSError as e:
        raise DomainError(f"Cannot read config file {path}: {e}") from e
    except tomllib.TOMLDecodeError as e:
        raise DomainError(f"Config file {path} is not valid TOML: {e}") from e
    try:
        cfg = RunConfig.model_validate(raw)
    except ValidationError as e:
        raise DomainError(f"Invalid config file {path}: {e}") from e
    logger.info(f"📄 Loaded run config from {path}")
    return cfg
