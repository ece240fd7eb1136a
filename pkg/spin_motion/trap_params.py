"""
Ion species, trap environment and the closed-form quantities derived from them.

All frequencies are angular (rad/s), all other quantities SI.
"""
import logging
import math
from dataclasses import dataclass
from typing import Optional

from .constants import (
    AMU,
    E_CHARGE,
    EPS0,
    HBAR,
    MU_B,
    YB171_ION_MASS_AMU,
    YB_S12_P12_WAVELENGTH,
)
from .exceptions import DomainError

logger = logging.getLogger(__name__)


def _check_positive(value, name):
    if not (math.isfinite(value) and value > 0):
        raise DomainError(f"{name} must be finite and strictly positive, got {value}")


@dataclass(frozen=True)
class IonSpecies:
    """
    Mass and magnetic response of a trapped ion.

    Parameters
    ----------
    label: str
        Human readable name (ex : '171Yb+ |0>-|+1>')
    mass_amu: float
        Ion mass in atomic mass units
    zeeman_slope: float
        Linear Zeeman slope of the addressed transition, in rad s^-1 T^-1. The
        differential force of the two levels is hbar * zeeman_slope * dB/dz.
    """

    label: str
    mass_amu: float
    zeeman_slope: float

    def __post_init__(self):
        _check_positive(self.mass_amu, "mass_amu")
        if not math.isfinite(self.zeeman_slope):
            raise DomainError(f"zeeman_slope must be finite, got {self.zeeman_slope}")

    @property
    def mass(self):
        """
        Ion mass

        Returns
        -------
        float
            mass in kg
        """
        return self.mass_amu * AMU


#: 171Yb+ driven on |0> <-> |+1> (F=0 -> F=1, mF=+1), g_F = 1.
YB171 = IonSpecies("171Yb+ |0>-|+1>", YB171_ION_MASS_AMU, MU_B / HBAR)
#: 171Yb+ driven on |0> <-> |-1>, used to address two ions in the gradient.
YB171_MINUS = IonSpecies("171Yb+ |0>-|-1>", YB171_ION_MASS_AMU, -MU_B / HBAR)

PRESET_SPECIES = {"yb171": YB171, "yb171_minus": YB171_MINUS}


@dataclass(frozen=True)
class TrapEnvironment:
    """
    Axial trap potential and static magnetic field seen by the ion.

    Parameters
    ----------
    nu_z: float
        Axial secular frequency, rad/s
    gradient: float
        Axial magnetic field gradient, T/m
    bias_field: float
        Field at the trap centre, T
    """

    nu_z: float
    gradient: float = 0.0
    bias_field: float = 0.0

    def __post_init__(self):
        _check_positive(self.nu_z, "nu_z")
        if not (math.isfinite(self.gradient) and self.gradient >= 0):
            raise DomainError(f"gradient must be finite and >= 0, got {self.gradient}")
        if not math.isfinite(self.bias_field):
            raise DomainError(f"bias_field must be finite, got {self.bias_field}")

    def z0(self, species):
        """Ground-state wavepacket extent of `species` in this trap, in meters."""
        return ground_state_extent(species, self.nu_z)


@dataclass(frozen=True)
class DerivedQuantities:
    """
    Closed-form quantities of one species in one trap.

    Optional entries are None when their inputs were not requested.
    """

    z0: float
    eta_eff: float
    eta_laser: Optional[float] = None
    ion_separation: Optional[float] = None
    predicted_splitting: Optional[float] = None


def ground_state_extent(species, nu_z):
    """
    Spatial extent z0 = sqrt(hbar / (2 m nu_z)) of the motional ground state.

    Parameters
    ----------
    species: IonSpecies
        Trapped species
    nu_z: float
        Secular frequency, rad/s

    Returns
    -------
    float
        z0 in meters
    """
    _check_positive(nu_z, "nu_z")
    return math.sqrt(HBAR / (2.0 * species.mass * nu_z))


def effective_lamb_dicke(species, trap):
    """
    Gradient-induced Lamb-Dicke parameter eta_eff = z0 dF / (hbar nu_z).

    With dF = hbar |zeeman_slope| dB/dz this is equal to
    mu_B dB/dz / (sqrt(2 m hbar) nu_z^(3/2)) for a g_F = 1 transition.

    Parameters
    ----------
    species: IonSpecies
        Trapped species
    trap: TrapEnvironment
        Trap providing nu_z and the gradient

    Returns
    -------
    float
        Dimensionless effective Lamb-Dicke parameter
    """
    z0 = ground_state_extent(species, trap.nu_z)
    return abs(species.zeeman_slope) * trap.gradient * z0 / trap.nu_z


def laser_lamb_dicke(
    species, trap, wavelength=YB_S12_P12_WAVELENGTH, counterpropagating=True
):
    """
    Optical Lamb-Dicke parameter eta = k_eff z0.

    Parameters
    ----------
    species: IonSpecies
        Trapped species
    trap: TrapEnvironment
        Trap providing nu_z
    wavelength: float
        Wavelength in meters. math.inf gives a vanishing wave vector.
    counterpropagating: bool
        True for a counter-propagating Raman pair (k_eff = 2k), False for a single beam (k_eff = k)

    Returns
    -------
    float
        Dimensionless Lamb-Dicke parameter
    """
    if math.isnan(wavelength) or wavelength <= 0:
        raise DomainError(f"wavelength must be strictly positive, got {wavelength}")
    k = 2.0 * math.pi / wavelength
    k_eff = 2.0 * k if counterpropagating else k
    return k_eff * ground_state_extent(species, trap.nu_z)


def two_ion_separation(species, nu_z):
    """
    Equilibrium distance of two identical ions in a harmonic axial well.

    Balances the trap force m nu_z^2 d/2 on each ion against the Coulomb
    repulsion, d^3 = e^2 / (2 pi eps0 m nu_z^2).

    Parameters
    ----------
    species: IonSpecies
        Trapped species
    nu_z: float
        Centre-of-mass secular frequency, rad/s

    Returns
    -------
    float
        Separation in meters
    """
    _check_positive(nu_z, "nu_z")
    return (E_CHARGE**2 / (2.0 * math.pi * EPS0 * species.mass * nu_z**2)) ** (
        1.0 / 3.0
    )


def two_ion_positions(species, nu_z):
    """Equilibrium positions (z1, z2) = (-d/2, +d/2) of a two-ion crystal, in meters."""
    half = two_ion_separation(species, nu_z) / 2.0
    return -half, half


def zeeman_shift(species, trap, z=0.0):
    """
    Linear Zeeman shift of the addressed transition at axial position z.

    Parameters
    ----------
    species: IonSpecies
        Trapped species
    trap: TrapEnvironment
        Trap providing B0 and dB/dz
    z: float
        Axial position in meters

    Returns
    -------
    float
        Shift in rad/s
    """
    return species.zeeman_slope * (trap.bias_field + z * trap.gradient)


def _check_slope(species):
    if species.zeeman_slope == 0:
        raise DomainError(f"{species.label} has no Zeeman slope")


def splitting_from_gradient(species, gradient, separation):
    """
    Transition-frequency difference of two ions in a field gradient.

    Parameters
    ----------
    species: IonSpecies
        Trapped species
    gradient: float
        Field gradient, T/m
    separation: float
        Ion-ion distance, m

    Returns
    -------
    float
        Splitting in rad/s
    """
    _check_slope(species)
    _check_positive(separation, "separation")
    return abs(species.zeeman_slope) * gradient * separation


def gradient_from_splitting(species, splitting, separation):
    """
    Field gradient implied by the measured two-ion splitting.

    Inverse of :func:`splitting_from_gradient`: hbar dw / (mu_B d) for g_F = 1.

    Parameters
    ----------
    species: IonSpecies
        Trapped species
    splitting: float
        Difference of the two resonance frequencies, rad/s
    separation: float
        Ion-ion distance, m

    Returns
    -------
    float
        Gradient in T/m
    """
    _check_slope(species)
    _check_positive(separation, "separation")
    return abs(splitting) / (abs(species.zeeman_slope) * separation)


def crosstalk_bound(rabi, splitting):
    """
    Upper bound (Omega / dw)^2 of the off-resonant excitation of a spectator ion.

    For 2pi x 40 kHz and 2pi x 2.71 MHz this is 2.18e-4, quoted as
    "less than 2e-4" at one significant figure.

    Parameters
    ----------
    rabi: float
        Carrier Rabi frequency, rad/s
    splitting: float
        Frequency separation of the two ions, rad/s

    Returns
    -------
    float
        Probability bound
    """
    if splitting == 0 or not math.isfinite(splitting):
        raise DomainError(f"splitting must be finite and non-zero, got {splitting}")
    return (rabi / splitting) ** 2


def derived_quantities(species, trap, wavelength=None, counterpropagating=True):
    """
    Gather every closed-form quantity of `species` in `trap`.

    Parameters
    ----------
    species: IonSpecies
        Trapped species
    trap: TrapEnvironment
        Trap environment
    wavelength: float | None
        If given, also compute the optical Lamb-Dicke parameter at this wavelength

    Returns
    -------
    DerivedQuantities
    """
    separation = two_ion_separation(species, trap.nu_z)
    eta_laser = None
    if wavelength is not None:
        eta_laser = laser_lamb_dicke(species, trap, wavelength, counterpropagating)
    splitting = None
    if species.zeeman_slope != 0:
        splitting = splitting_from_gradient(species, trap.gradient, separation)
    return DerivedQuantities(
        z0=ground_state_extent(species, trap.nu_z),
        eta_eff=effective_lamb_dicke(species, trap),
        eta_laser=eta_laser,
        ion_separation=separation,
        predicted_splitting=splitting,
    )


def load_species(path):
    """
    Load a species preset from a flat ``key = value`` file.

    Expected keys are ``label``, ``mass_amu`` and ``zeeman_slope_rad_per_s_per_T``.

    Parameters
    ----------
    path: str
        Path of the species file

    Returns
    -------
    IonSpecies
    """
    from .tools import read_flat_config

    values = read_flat_config(path)
    missing = {"label", "mass_amu", "zeeman_slope_rad_per_s_per_T"} - set(values)
    if missing:
        raise DomainError(f"Species file {path} lacks keys {sorted(missing)}")
    logger.debug(f"Loaded species {values['label']} from {path}")
    return IonSpecies(
        label=str(values["label"]),
        mass_amu=float(values["mass_amu"]),
        zeeman_slope=float(values["zeeman_slope_rad_per_s_per_T"]),
    )
