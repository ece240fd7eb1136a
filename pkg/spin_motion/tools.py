import logging
import math
import os
from dataclasses import dataclass, field, fields
from pathlib import Path
from typing import Optional

import yaml

from .exceptions import ConfigError

logger = logging.getLogger(__name__)

param_config = None

DEFAULT_CONFIG = Path(__file__).parent / "config.yml"
LOCAL_CONFIG = Path("~/spin_motion/localconfig.yml")

TWO_PI = 2.0 * math.pi


def get_config_path():
    """
    Path of the configuration in use.

    Returns
    -------
    pathlib.Path
        The file given to :func:`set_config`, else ~/spin_motion/localconfig.yml
        when it exists, else the packaged config.yml
    """
    if param_config is not None:
        return Path(param_config)
    local = LOCAL_CONFIG.expanduser()
    if local.exists():
        return local
    return DEFAULT_CONFIG


def load_config():
    path = get_config_path()
    try:
        with open(path, "r") as file:
            config = yaml.safe_load(file)
    except (OSError, yaml.YAMLError) as exc:
        raise ConfigError(f"Cannot read configuration {path}: {exc}") from exc
    return config or {}


def set_config(config_path: Optional[str]):
    global param_config
    param_config = config_path
    logger.debug(f"Configuration set to {get_config_path()}")


def hz_to_angular(freq_hz):
    """Frequency in Hz to angular frequency in rad/s."""
    return TWO_PI * freq_hz


def angular_to_hz(omega):
    """Angular frequency in rad/s to frequency in Hz."""
    return omega / TWO_PI


def us_to_s(t_us):
    return t_us * 1e-6


def s_to_us(t_s):
    return t_s * 1e6


def read_flat_config(path):
    """
    Parse a flat ``key = value`` file.

    Blank lines and ``#`` comments are ignored; ``key: value`` is accepted as well.
    Values are typed with yaml.safe_load, so numbers, booleans and lists
    (ex : ``carrier_freqs_hz = [-1.355e6, 1.355e6]``) come out typed.

    Parameters
    ----------
    path: str
        File to read

    Returns
    -------
    dict
    """
    values = {}
    try:
        with open(path, "r", encoding="utf-8") as file:
            lines = file.read().splitlines()
    except OSError as exc:
        raise ConfigError(f"Cannot read {path}: {exc}") from exc
    for lineno, raw in enumerate(lines, start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        sep = "=" if "=" in line else ":" if ":" in line else None
        if sep is None:
            raise ConfigError(f"{path}:{lineno}: expected 'key = value', got {raw!r}")
        key, value = (part.strip() for part in line.split(sep, 1))
        if not key:
            raise ConfigError(f"{path}:{lineno}: missing key")
        try:
            values[key] = _typed(yaml.safe_load(value)) if value else None
        except yaml.YAMLError as exc:
            raise ConfigError(f"{path}:{lineno}: cannot parse value {value!r}") from exc
    return values


def _typed(value):
    # yaml 1.1 reads exponents without a dot (25e3) as strings
    if isinstance(value, str):
        try:
            return float(value)
        except ValueError:
            return value
    if isinstance(value, list):
        return [_typed(item) for item in value]
    return value


SCAN_KINDS = ("frequency", "detuning", "time")


@dataclass
class RunConfig:
    """
    Parameters of one run, in the units of the command line (Hz, us, T/m).

    Parameters
    ----------
    species: str
        Preset name ('yb171', 'yb171_minus') or path of a species file
    nu_z_hz: float
        Axial secular frequency
    gradient_t_per_m: float
        Magnetic field gradient
    wavelength_nm: float | None
        Optical wavelength of the Raman comparison; None to skip it
    rabi_hz: float
        Carrier Rabi frequency
    detuning_hz: float
        Spin-dependent-force detuning (time scans)
    duration_us: float
        Pulse length
    phase_sum: float
        Aggregate drive phase, radians
    eta_eff: float | None
        Effective Lamb-Dicke parameter; derived from species and trap when None
    nbar: float
        Mean thermal occupation
    carrier_freqs_hz: list[float]
        Resonances of frequency scans
    include_sidebands: bool
        Add sidebands to frequency scans
    debye_waller: bool
        Debye-Waller reduction of the carrier
    scan_kind: str
        'frequency', 'detuning' or 'time'
    scan_start, scan_stop: float
        Grid bounds (Hz for frequency/detuning scans, us for time scans)
    scan_points: int
        Grid points, >= 2
    shots: int
        Measurements per point, 0 for the noiseless curve
    seed: int
        Seed of the synthetic measurements
    out: str | None
        Output path
    """

    species: str = "yb171"
    nu_z_hz: float = 268e3
    gradient_t_per_m: float = 23.3
    wavelength_nm: Optional[float] = 369.5
    rabi_hz: float = 35e3
    detuning_hz: float = 0.0
    duration_us: float = 180.0
    phase_sum: float = 0.0
    eta_eff: Optional[float] = None
    nbar: float = 0.0
    carrier_freqs_hz: list = field(default_factory=lambda: [0.0])
    include_sidebands: bool = True
    debye_waller: bool = False
    scan_kind: str = "detuning"
    scan_start: float = -25e3
    scan_stop: float = 25e3
    scan_points: int = 501
    shots: int = 0
    seed: int = 0
    out: Optional[str] = None

    def __post_init__(self):
        self.validate()

    def validate(self):
        if self.scan_kind not in SCAN_KINDS:
            raise ConfigError(f"scan_kind must be one of {SCAN_KINDS}, got {self.scan_kind!r}")
        if not isinstance(self.scan_points, int) or self.scan_points < 2:
            raise ConfigError(f"scan_points must be an integer >= 2, got {self.scan_points}")
        for name in ("scan_start", "scan_stop", "nu_z_hz", "rabi_hz", "duration_us"):
            value = getattr(self, name)
            if not isinstance(value, (int, float)) or not math.isfinite(value):
                raise ConfigError(f"{name} must be a finite number, got {value!r}")
        if self.scan_start == self.scan_stop:
            raise ConfigError("scan_start and scan_stop must differ")
        if self.scan_kind == "time" and min(self.scan_start, self.scan_stop) < 0:
            raise ConfigError("time scans need non-negative bounds")
        if self.shots < 0:
            raise ConfigError(f"shots must be >= 0, got {self.shots}")
        if self.scan_kind == "frequency" and not self.carrier_freqs_hz:
            raise ConfigError("frequency scans need carrier_freqs_hz")

    def update(self, **changes):
        """Copy with the non-None entries of `changes` applied, validated again."""
        known = {f.name for f in fields(self)}
        unknown = set(changes) - known
        if unknown:
            raise ConfigError(f"Unknown run configuration keys: {sorted(unknown)}")
        values = {f.name: getattr(self, f.name) for f in fields(self)}
        values.update({k: v for k, v in changes.items() if v is not None})
        try:
            return RunConfig(**values)
        except TypeError as exc:
            raise ConfigError(str(exc)) from exc


def load_run_config(path=None, **overrides):
    """
    Run configuration: packaged ``run_defaults``, then the flat file at `path`, then `overrides`.

    Parameters
    ----------
    path: str | None
        Flat ``key = value`` file
    overrides: dict
        Command-line values; None entries are ignored

    Returns
    -------
    RunConfig
    """
    config = RunConfig().update(**load_config().get("run_defaults", {}))
    if path is not None:
        logger.info(f"Reading run configuration {path}")
        config = config.update(**read_flat_config(path))
    return config.update(**overrides)


def resolve_species(name):
    """
    IonSpecies from a preset name or a species file path.
    """
    from .trap_params import PRESET_SPECIES, load_species

    if name in PRESET_SPECIES:
        return PRESET_SPECIES[name]
    if os.path.exists(name):
        return load_species(name)
    raise ConfigError(
        f"Unknown species {name!r}: expected one of {sorted(PRESET_SPECIES)} or a file path"
    )
