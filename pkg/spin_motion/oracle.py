"""
Self-check suites comparing the closed forms with independent numerics.

Each suite returns a :class:`SuiteReport` holding its largest deviation; the
report of :func:`run_oracle` is what ``spin_motion oracle-check`` prints.
"""
import logging
import math
from dataclasses import asdict, dataclass

import numpy as np
from dask import compute, delayed
from scipy.optimize import brentq, minimize_scalar

from .constants import E_CHARGE, EPS0
from .exceptions import ConfigError
from .fock import fock_state, required_dim, thermal_cutoff
from .ms_dynamics import (
    DriveConfig,
    alpha_of_t,
    cat_state_fidelity,
    displacement_reach,
    evolve_numeric,
    p_up_fock,
    p_up_ground,
    p_up_thermal,
    p_up_thermal_sum,
)
from .presets import FIG5_DURATION, FIG5_ETA, FIG5_RABI, fig4_grid, fig4_model
from .spectroscopy import SPECTRUM_TAIL, sideband_components
from .trap_params import YB171, two_ion_separation

logger = logging.getLogger(__name__)

DEFAULT_PROFILE = {
    "tolerance": 1e-4,
    "dim_scale": 1.0,
    "n_drives": 50,
    "seed": 20240601,
    "n_workers": 1,
}

# |alpha| up to 0.45, enough for the branches to become distinguishable
CAT_DRIVE = DriveConfig(2 * math.pi * 35e3, 2 * math.pi * 10e3, 1e-4)
CAT_ETA = 0.13


@dataclass
class SuiteReport:
    name: str
    passed: bool
    max_deviation: float
    tolerance: float
    detail: str = ""


def _report(name, deviation, tolerance, detail=""):
    deviation = float(deviation)
    passed = deviation <= tolerance
    log = logger.info if passed else logger.warning
    log(f"{name}: max deviation {deviation:.3e} (tolerance {tolerance:.1e})")
    return SuiteReport(name, passed, deviation, tolerance, detail)


def _scaled_dim(reach, n_init, dim_scale):
    return max(2, int(required_dim(reach, n_init) * dim_scale))


def random_drives(n_drives, seed, eta_eff=FIG5_ETA):
    """
    Random drives with loop radius |alpha0| <= 0.5 and initial Fock levels 0..2.

    Returns
    -------
    list[tuple[DriveConfig, int]]
    """
    rng = np.random.default_rng(seed)
    drives = []
    for _ in range(n_drives):
        rabi = 2 * math.pi * rng.uniform(10e3, 50e3)
        alpha0 = rng.uniform(0.05, 0.5)
        detuning = rng.choice([-1.0, 1.0]) * eta_eff * rabi / (2 * alpha0)
        duration = rng.uniform(0.1, 1.5) * 2 * math.pi / abs(detuning)
        phase = rng.uniform(0, 2 * math.pi)
        drives.append((DriveConfig(rabi, detuning, duration, phase), int(rng.integers(0, 3))))
    return drives


def _numeric_deviation(drive, eta_eff, n, dim_scale):
    dim = _scaled_dim(displacement_reach(drive, eta_eff), n, dim_scale)
    final = evolve_numeric(drive, eta_eff, fock_state(n, dim))
    return abs(final.population_up - p_up_fock(drive, eta_eff, drive.duration, n))


def check_oracle_equivalence(profile):
    """Integrated P(|+1>) against the Laguerre closed form on random drives."""
    drives = random_drives(profile["n_drives"], profile["seed"])
    tasks = [
        delayed(_numeric_deviation)(drive, FIG5_ETA, n, profile["dim_scale"])
        for drive, n in drives
    ]
    if profile["n_workers"] > 1:
        deviations = compute(*tasks, scheduler="threads", num_workers=profile["n_workers"])
    else:
        deviations = compute(*tasks, scheduler="synchronous")
    return _report(
        "oracle_equivalence",
        max(deviations),
        profile["tolerance"],
        f"{len(drives)} random drives, initial n in 0..2",
    )


def check_loop_zeros(profile):
    """P(|+1>) vanishes at delta = 2 pi j / tau, j = 1..5, in closed form and numerically."""
    closed, numeric = [], []
    for j in range(1, 6):
        drive = DriveConfig(FIG5_RABI, 2 * math.pi * j / FIG5_DURATION, FIG5_DURATION)
        closed.append(p_up_ground(drive, FIG5_ETA, FIG5_DURATION))
        dim = _scaled_dim(displacement_reach(drive, FIG5_ETA), 0, profile["dim_scale"])
        numeric.append(evolve_numeric(drive, FIG5_ETA, fock_state(0, dim)).population_up)
    return _report(
        "loop_zeros",
        max(max(closed), max(numeric)),
        profile["tolerance"],
        f"closed form max {max(closed):.1e}",
    )


def check_thermal_identity(profile):
    """Closed thermal form against the Fock-weighted Laguerre sum, relative deviation."""
    worst = 0.0
    for nbar in (0.0, 1.0, 5.0):
        for alpha0 in (0.05, 0.2, 0.5):
            drive = DriveConfig(1.0, FIG5_ETA / (2 * alpha0), 1.0)
            t = math.pi / (3 * drive.detuning)
            closed = p_up_thermal(drive, FIG5_ETA, t, nbar)
            summed = p_up_thermal_sum(drive, FIG5_ETA, t, nbar)
            worst = max(worst, abs(summed - closed) / closed)
    return _report("thermal_identity", worst, 1e-6, "nbar in {0, 1, 5}")


def check_thermal_monotonicity(profile):
    drive = DriveConfig(FIG5_RABI, 2 * math.pi * 3e3, FIG5_DURATION)
    nbars = np.linspace(0, 300, 61)
    values = np.array([p_up_thermal(drive, FIG5_ETA, 20e-6, nbar) for nbar in nbars])
    steps = np.diff(values)
    return _report(
        "thermal_monotonicity",
        max(0.0, -float(steps.min())),
        0.0,
        "P(|+1>) strictly increasing in nbar" if np.all(steps > 0) else "not increasing",
    )


def check_loop_closure(profile):
    drive = DriveConfig(FIG5_RABI, 2 * math.pi * 5e3, FIG5_DURATION)
    alpha0 = FIG5_ETA * drive.rabi / (2 * drive.detuning)
    closed = abs(alpha_of_t(drive, FIG5_ETA, 2 * math.pi / drive.detuning))
    return _report("loop_closure", closed / alpha0, 1e-12)


def check_detuning_continuity(profile):
    near = DriveConfig(FIG5_RABI, 1e-6 * 2 * math.pi / FIG5_DURATION, FIG5_DURATION)
    at_zero = DriveConfig(FIG5_RABI, 0.0, FIG5_DURATION)
    deviation = abs(
        p_up_ground(near, FIG5_ETA, FIG5_DURATION) - p_up_ground(at_zero, FIG5_ETA, FIG5_DURATION)
    )
    return _report("detuning_continuity", deviation, 1e-6)


def check_cat_state(profile):
    """Fidelity with the two-branch state at 10 times and spin entropy after one closed loop."""
    period = 2 * math.pi / CAT_DRIVE.detuning
    infidelity = 0.0
    for t in np.linspace(0.0, period, 10):
        dim = _scaled_dim(displacement_reach(CAT_DRIVE, CAT_ETA, t), 0, profile["dim_scale"])
        fid, _ = cat_state_fidelity(CAT_DRIVE, CAT_ETA, t, dim)
        infidelity = max(infidelity, 1.0 - fid)
    dim = _scaled_dim(displacement_reach(CAT_DRIVE, CAT_ETA, period), 0, profile["dim_scale"])
    _, closed_entropy = cat_state_fidelity(CAT_DRIVE, CAT_ETA, period, dim)
    return _report(
        "cat_state",
        max(infidelity, closed_entropy),
        profile["tolerance"],
        f"entropy after one loop {closed_entropy:.1e} bits",
    )


def check_spectrum_convergence(profile):
    """Doubling the Fock cutoff of the thermal sums changes the spectrum by less than 1e-8."""
    model = fig4_model()
    grid = fig4_grid()
    levels = thermal_cutoff(model.nbar, SPECTRUM_TAIL)
    base = sideband_components(model, grid, levels)
    doubled = sideband_components(model, grid, 2 * levels)
    deviation = max(np.max(np.abs(base[k] - doubled[k])) for k in ("blue", "red"))
    return _report("spectrum_convergence", deviation, 1e-8, f"{levels} levels")


def separation_by_minimization(species, nu_z):
    """
    Two-ion separation from a direct minimisation of trap plus Coulomb energy.

    In units of L = (e^2 / (4 pi eps0 m nu_z^2))^(1/3) the energy is u^2/4 + 1/u.
    A golden-section search brackets the minimum and a root of the derivative
    refines it to machine precision.

    Returns
    -------
    float
        Separation in meters
    """
    scale = (E_CHARGE**2 / (4 * math.pi * EPS0 * species.mass * nu_z**2)) ** (1 / 3)
    coarse = minimize_scalar(
        lambda u: u**2 / 4 + 1 / u, bracket=(0.5, 1.0, 3.0), method="golden"
    ).x
    u = brentq(lambda u: u / 2 - 1 / u**2, 0.9 * coarse, 1.1 * coarse, xtol=1e-15)
    return u * scale


def check_separation(profile):
    worst = 0.0
    for nu_hz in (100e3, 268e3, 1e6):
        nu_z = 2 * math.pi * nu_hz
        closed = two_ion_separation(YB171, nu_z)
        worst = max(worst, abs(separation_by_minimization(YB171, nu_z) - closed) / closed)
    return _report("separation_by_minimization", worst, 1e-9)


SUITES = (
    check_oracle_equivalence,
    check_loop_zeros,
    check_thermal_identity,
    check_thermal_monotonicity,
    check_loop_closure,
    check_detuning_continuity,
    check_cat_state,
    check_spectrum_convergence,
    check_separation,
)


def resolve_profile(profiles, name="default", tolerance=None):
    """
    Oracle parameters of profile `name`, with an optional tolerance override.

    Parameters
    ----------
    profiles: dict
        ``oracle_profiles`` section of the configuration
    name: str
        Profile to use
    tolerance: float | None
        Replace the integrator comparison tolerance

    Returns
    -------
    dict
    """
    if name not in profiles and name != "default":
        raise ConfigError(f"Unknown oracle profile {name!r}, expected one of {sorted(profiles)}")
    profile = {**DEFAULT_PROFILE, **profiles.get(name, {}), "name": name}
    if tolerance is not None:
        profile["tolerance"] = float(tolerance)
    return profile


def run_oracle(profile):
    """
    Run every suite.

    Truncation and integration errors are not caught: an undersized profile
    surfaces them to the caller.

    Returns
    -------
    dict
        ``{"profile": ..., "passed": bool, "failed": [names], "suites": [...]}``
    """
    reports = [suite(profile) for suite in SUITES]
    failed = [r.name for r in reports if not r.passed]
    return {
        "profile": profile,
        "passed": not failed,
        "failed": failed,
        "suites": [asdict(r) for r in reports],
    }
