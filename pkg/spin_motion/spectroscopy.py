"""
Frequency-domain response of one or two ions to a rectangular pulse.

Theory curves add the carrier and sideband transition probabilities
classically; no coherent interference between them is modelled.
"""
import logging
import math
from dataclasses import dataclass, replace

import numpy as np
from numba import njit, prange

from .exceptions import DomainError
from .fock import thermal_cutoff, thermal_weights
from .scan_result import ScanResult, check_grid

logger = logging.getLogger(__name__)

# Thermal mass discarded from the sideband sums
SPECTRUM_TAIL = 1e-9
OBSERVABLES = ("sum", "at_least_one")


@dataclass(frozen=True)
class LineshapeModel:
    """
    Parameters of a carrier + sideband spectrum.

    Parameters
    ----------
    carrier_freqs: tuple[float, ...]
        One or two distinct resonance frequencies, rad/s
    rabi: float
        Carrier Rabi frequency, rad/s
    nu_z: float
        Secular frequency separating sidebands from the carrier, rad/s
    eta_eff: float
        Effective Lamb-Dicke parameter
    nbar: float
        Mean thermal occupation
    pulse_time: float
        Pulse length, s
    include_sidebands: bool
        Add the first red and blue sidebands to the carrier
    debye_waller: bool
        Reduce the carrier Rabi frequency by exp(-eta^2 (2 nbar + 1) / 2)
    """

    carrier_freqs: tuple
    rabi: float
    nu_z: float
    eta_eff: float
    nbar: float
    pulse_time: float
    include_sidebands: bool = True
    debye_waller: bool = False

    def __post_init__(self):
        freqs = tuple(float(f) for f in np.atleast_1d(self.carrier_freqs))
        object.__setattr__(self, "carrier_freqs", freqs)
        if len(freqs) not in (1, 2):
            raise DomainError(f"Expected one or two resonances, got {len(freqs)}")
        if len(freqs) == 2 and freqs[0] == freqs[1]:
            raise DomainError("The two resonances must be distinct")
        if not all(math.isfinite(f) for f in freqs):
            raise DomainError("Resonance frequencies must be finite")
        if not (math.isfinite(self.pulse_time) and self.pulse_time > 0):
            raise DomainError(f"pulse_time must be > 0, got {self.pulse_time}")
        if not (math.isfinite(self.nbar) and self.nbar >= 0):
            raise DomainError(f"nbar must be finite and >= 0, got {self.nbar}")
        if not (math.isfinite(self.rabi) and self.rabi >= 0):
            raise DomainError(f"rabi must be finite and >= 0, got {self.rabi}")
        if not (math.isfinite(self.eta_eff) and self.eta_eff >= 0):
            raise DomainError(f"eta_eff must be finite and >= 0, got {self.eta_eff}")
        if self.include_sidebands and not (math.isfinite(self.nu_z) and self.nu_z > 0):
            raise DomainError(f"nu_z must be > 0 with sidebands, got {self.nu_z}")

    def update(self, **changes):
        """Copy with some fields replaced."""
        return replace(self, **changes)

    @property
    def carrier_rabi(self):
        """Carrier Rabi frequency, including the Debye-Waller reduction when enabled"""
        if self.debye_waller:
            return self.rabi * math.exp(-(self.eta_eff**2) * (2 * self.nbar + 1) / 2)
        return self.rabi

    def to_meta(self):
        return {
            "carrier_freqs": list(self.carrier_freqs),
            "rabi": self.rabi,
            "nu_z": self.nu_z,
            "eta_eff": self.eta_eff,
            "nbar": self.nbar,
            "pulse_time": self.pulse_time,
            "include_sidebands": self.include_sidebands,
            "debye_waller": self.debye_waller,
        }


def rabi_line(delta, rabi, t):
    """
    Two-level excitation probability after a rectangular pulse.

    Parameters
    ----------
    delta: float | array_like
        Detuning from resonance, rad/s
    rabi: float | array_like
        Rabi frequency, rad/s
    t: float
        Pulse length, s

    Returns
    -------
    float | numpy.ndarray
        Omega^2 / (Omega^2 + Delta^2) sin^2(sqrt(Omega^2 + Delta^2) t / 2)
    """
    if t < 0:
        raise DomainError(f"pulse length must be >= 0, got {t}")
    scalar = np.ndim(delta) == 0 and np.ndim(rabi) == 0
    delta = np.asarray(delta, dtype=float)
    rabi = np.asarray(rabi, dtype=float)
    generalized = np.sqrt(rabi**2 + delta**2)
    # (Omega t / 2)^2 sinc^2 stays finite at Omega = Delta = 0
    p = (rabi * t / 2.0) ** 2 * np.sinc(generalized * t / (2.0 * np.pi)) ** 2
    return p.item() if scalar else p


@njit(parallel=True)
def thermal_rabi_average(detunings, rabis, weights, t):
    """
    Weighted average over Fock levels of the Rabi response at each detuning.

    Parameters
    ----------
    detunings: numpy.ndarray
        Detunings, rad/s
    rabis: numpy.ndarray
        Rabi frequency of each Fock level, rad/s
    weights: numpy.ndarray
        Occupation probability of each Fock level
    t: float
        Pulse length, s

    Returns
    -------
    numpy.ndarray
    """
    out = np.zeros(detunings.shape[0])
    for i in prange(detunings.shape[0]):
        d2 = detunings[i] ** 2
        acc = 0.0
        for n in range(rabis.shape[0]):
            w2 = rabis[n] ** 2 + d2
            if w2 == 0.0:
                continue
            s = np.sin(np.sqrt(w2) * t / 2.0)
            acc += weights[n] * rabis[n] ** 2 / w2 * s * s
        out[i] = acc
    return out


@njit(parallel=True)
def rabi_table(detunings, rabis, t):
    """
    Rabi response of every Fock level at every detuning, shaped (detunings, levels).
    """
    out = np.zeros((detunings.shape[0], rabis.shape[0]))
    for i in prange(detunings.shape[0]):
        d2 = detunings[i] ** 2
        for n in range(rabis.shape[0]):
            w2 = rabis[n] ** 2 + d2
            if w2 == 0.0:
                continue
            s = np.sin(np.sqrt(w2) * t / 2.0)
            out[i, n] = rabis[n] ** 2 / w2 * s * s
    return out


def sideband_rabis(eta_rabi, levels):
    """
    Per-level Rabi frequencies of the blue (eta Omega sqrt(n+1)) and red (eta Omega sqrt(n)) sidebands.
    """
    n = np.arange(levels, dtype=float)
    return eta_rabi * np.sqrt(n + 1.0), eta_rabi * np.sqrt(n)


def sideband_components(model, freq_grid, levels=None):
    """
    Carrier, blue and red sideband responses before they are summed.

    Parameters
    ----------
    model: LineshapeModel
        Spectrum parameters
    freq_grid: array_like
        Probe frequencies, rad/s, in the frame of `model.carrier_freqs`
    levels: int | None
        Fock levels kept in the thermal sums; by default where the thermal tail drops below 1e-9

    Returns
    -------
    dict[str, numpy.ndarray]
        'carrier', 'blue' and 'red' responses, each summed over the resonances
    """
    grid = check_grid(freq_grid)
    if levels is None:
        levels = thermal_cutoff(model.nbar, SPECTRUM_TAIL)
    weights = thermal_weights(model.nbar, levels)
    blue_rabis, red_rabis = sideband_rabis(model.eta_eff * model.rabi, levels)
    components = {name: np.zeros_like(grid) for name in ("carrier", "blue", "red")}
    for f0 in model.carrier_freqs:
        delta = grid - f0
        components["carrier"] += rabi_line(delta, model.carrier_rabi, model.pulse_time)
        if model.include_sidebands:
            components["blue"] += thermal_rabi_average(
                delta - model.nu_z, blue_rabis, weights, model.pulse_time
            )
            components["red"] += thermal_rabi_average(
                delta + model.nu_z, red_rabis, weights, model.pulse_time
            )
    logger.debug(f"Thermal sums over {levels} levels for nbar={model.nbar}")
    return components


def _clip_sum(total, meta):
    clipped = bool(np.any(total > 1.0))
    if clipped:
        logger.warning(
            f"Classical sum reaches {total.max():.4f}; values above 1 are clipped"
        )
    meta["clipped"] = clipped
    return np.clip(total, 0.0, 1.0)


def sideband_spectrum(model, freq_grid, levels=None):
    """
    Classical sum of carrier and thermally averaged sideband responses.

    Parameters
    ----------
    model: LineshapeModel
        Spectrum parameters
    freq_grid: array_like
        Strictly monotone probe frequencies, rad/s
    levels: int | None
        Fock cutoff of the thermal sums, see :func:`sideband_components`

    Returns
    -------
    ScanResult
        x = probe frequency, p = excitation probability; meta['clipped'] is True
        when the sum had to be clipped to 1
    """
    grid = check_grid(freq_grid)
    components = sideband_components(model, grid, levels)
    meta = {"kind": "frequency", "model": "sideband_spectrum", **model.to_meta()}
    total = _clip_sum(components["carrier"] + components["blue"] + components["red"], meta)
    return ScanResult(grid, total, meta=meta)


def two_ion_spectrum(f1, f2, rabi, t, freq_grid, observable="sum"):
    """
    Response of two ions with distinct resonance frequencies to one probe.

    Parameters
    ----------
    f1, f2: float
        Resonance frequencies of the two ions, rad/s
    rabi: float
        Carrier Rabi frequency, rad/s
    t: float
        Pulse length, s
    freq_grid: array_like
        Strictly monotone probe frequencies, rad/s
    observable: str
        'sum' adds the two single-ion probabilities (clipped to 1),
        'at_least_one' returns 1 - (1 - P1)(1 - P2)

    Returns
    -------
    ScanResult
    """
    if f1 == f2:
        raise DomainError("The two resonances must be distinct")
    if observable not in OBSERVABLES:
        raise DomainError(f"observable must be one of {OBSERVABLES}, got {observable!r}")
    grid = check_grid(freq_grid)
    p1 = rabi_line(grid - f1, rabi, t)
    p2 = rabi_line(grid - f2, rabi, t)
    meta = {
        "kind": "frequency",
        "model": "two_ion_spectrum",
        "observable": observable,
        "f1": f1,
        "f2": f2,
        "rabi": rabi,
        "pulse_time": t,
    }
    if observable == "sum":
        p = _clip_sum(p1 + p2, meta)
    else:
        p = 1.0 - (1.0 - p1) * (1.0 - p2)
    return ScanResult(grid, p, meta=meta)


def binomial_sigma(p, shots):
    """
    Standard error of a probability averaged over `shots` projective measurements.

    sqrt(p(1-p)/shots), floored at 1/(2 shots) so that p = 0 or 1 keeps a finite weight.
    """
    p = np.clip(np.asarray(p, dtype=float), 0.0, 1.0)
    return np.maximum(np.sqrt(p * (1.0 - p) / shots), 1.0 / (2.0 * shots))


def simulate_shots(curve, shots, seed):
    """
    Synthetic measurement of a theory curve: each point is an average of `shots` projective measurements.

    Parameters
    ----------
    curve: ScanResult
        Theory probabilities
    shots: int
        Measurements per point, >= 1
    seed: int
        Seed of the numpy random generator

    Returns
    -------
    ScanResult
        p = binomial(shots, p) / shots, sigma = sqrt(p(1-p)/shots) floored at 1/(2 shots)
    """
    if shots < 1:
        raise DomainError(f"shots must be >= 1, got {shots}")
    rng = np.random.default_rng(seed)
    p_hat = rng.binomial(int(shots), curve.p) / shots
    sigma = binomial_sigma(p_hat, shots)
    return ScanResult(
        curve.x, p_hat, sigma, meta={**curve.meta, "shots": int(shots), "seed": seed}
    )
