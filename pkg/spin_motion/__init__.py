"""Top-level package for spin_motion."""

try:
    from .version import __version__
except ImportError:
    __version__ = "0"

from .exceptions import (
    ConfigError,
    DomainError,
    IntegrationError,
    ParseError,
    SpinMotionError,
    TruncationError,
)
from .ms_dynamics import DriveConfig
from .scan_result import ScanResult
from .trap_params import YB171, YB171_MINUS, IonSpecies, TrapEnvironment
