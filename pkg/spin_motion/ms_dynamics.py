"""
Molmer-Sorensen spin-dependent force on a single ion.

The analytic side follows the displaced-branch solution: the |right> spin state
is displaced along alpha(t) = alpha0 (1 - exp(-i delta t)), alpha0 = eta Omega / 2 delta,
and |left> along -alpha(t). The numeric side integrates the interaction-picture
Hamiltonian in a truncated Fock space and serves as the oracle of the analytic one.
"""
import logging
import math
from dataclasses import dataclass, replace

import numpy as np
import xarray as xr
from dask import compute, delayed
from more_itertools import chunked
from scipy import sparse

from .exceptions import DomainError, IntegrationError, TruncationError
from .fock import (
    LEAKAGE_BUDGET,
    NORM_TOLERANCE,
    MotionalDisplacement,
    SpinMotionState,
    coherent_amplitudes,
    creation,
    fidelity,
    ground_state,
    laguerre_thermal_average,
    ms_spin_basis,
    required_dim,
)
from .scan_result import ScanResult, check_grid

logger = logging.getLogger(__name__)

STEPS_PER_PERIOD = 200
MAX_HALVINGS = 6
REFINEMENT_TOLERANCE = 1e-8


@dataclass(frozen=True)
class DriveConfig:
    """
    Two-tone drive detuned by -/+ delta from the blue/red motional sidebands.

    Parameters
    ----------
    rabi: float
        Carrier Rabi frequency Omega of each tone, rad/s
    detuning: float
        Symmetric sideband detuning delta, rad/s (zero allowed)
    duration: float
        Pulse length tau, s
    phase_sum: float
        Aggregate phase of the two tones, rotating the force eigenbasis
    """

    rabi: float
    detuning: float
    duration: float
    phase_sum: float = 0.0

    def __post_init__(self):
        if not (math.isfinite(self.rabi) and self.rabi >= 0):
            raise DomainError(f"rabi must be finite and >= 0, got {self.rabi}")
        if not (math.isfinite(self.duration) and self.duration >= 0):
            raise DomainError(f"duration must be finite and >= 0, got {self.duration}")
        if not math.isfinite(self.detuning):
            raise DomainError(f"detuning must be finite, got {self.detuning}")

    def with_detuning(self, detuning):
        return replace(self, detuning=detuning)

    def with_duration(self, duration):
        return replace(self, duration=duration)


@dataclass(frozen=True)
class TrajectoryPoint:
    """Displacement alpha of the |right> branch at time t (s)."""

    t: float
    alpha: complex


def _output(values, scalar):
    return values.item() if scalar else values


def _alpha(eta_rabi, detuning, t):
    # alpha0 (1 - e^{-i x}) with x = delta t, rewritten through sinc so that
    # delta -> 0 is exact and never divides by delta.
    half = np.asarray(detuning, dtype=float) * t / 2.0
    return 1j * (eta_rabi * t / 2.0) * np.exp(-1j * half) * np.sinc(half / np.pi)


def _check_times(t):
    t = np.asarray(t, dtype=float)
    if np.any(t < 0) or not np.all(np.isfinite(t)):
        raise DomainError("times must be finite and >= 0")
    return t


def alpha_of_t(drive, eta_eff, t):
    """
    Phase-space displacement of the |right> branch.

    Parameters
    ----------
    drive: DriveConfig
        Drive parameters
    eta_eff: float
        Effective Lamb-Dicke parameter
    t: float | array_like
        Time(s) since the start of the pulse, s

    Returns
    -------
    complex | numpy.ndarray
        alpha0 (1 - exp(-i delta t)); i eta Omega t / 2 at delta = 0
    """
    scalar = np.ndim(t) == 0
    t = _check_times(t)
    return _output(_alpha(eta_eff * drive.rabi, drive.detuning, t), scalar)


def loop_radius(drive, eta_eff):
    """Radius |alpha0| = eta Omega / 2|delta| of the phase-space circle (inf at delta = 0)."""
    if drive.detuning == 0:
        return math.inf if eta_eff * drive.rabi else 0.0
    return eta_eff * drive.rabi / (2.0 * abs(drive.detuning))


def _depolarisation(abs_alpha_sq, nbar=0.0):
    return -0.5 * np.expm1(-2.0 * (2.0 * nbar + 1.0) * abs_alpha_sq)


def p_up_ground(drive, eta_eff, t):
    """
    Probability of |+1> after the force acts on |0> (x) |n=0> for a time t.

    Parameters
    ----------
    drive: DriveConfig
        Drive parameters
    eta_eff: float
        Effective Lamb-Dicke parameter
    t: float | array_like
        Pulse length(s), s

    Returns
    -------
    float | numpy.ndarray
        1/2 - 1/2 exp(-2 |alpha(t)|^2), within [0, 1/2]
    """
    scalar = np.ndim(t) == 0
    alpha = _alpha(eta_eff * drive.rabi, drive.detuning, _check_times(t))
    return _output(_depolarisation(np.abs(alpha) ** 2), scalar)


def p_up_fock(drive, eta_eff, t, n):
    """
    Probability of |+1> starting from |0> (x) |n>.

    Returns
    -------
    float
        1/2 - 1/2 exp(-2|alpha|^2) L_n(4|alpha|^2)
    """
    alpha = alpha_of_t(drive, eta_eff, t)
    return 0.5 - 0.5 * MotionalDisplacement(2 * alpha).diagonal_element(n)


def _check_nbar(nbar):
    if not (math.isfinite(nbar) and nbar >= 0):
        raise DomainError(f"nbar must be finite and >= 0, got {nbar}")


def p_up_thermal(drive, eta_eff, t, nbar):
    """
    Probability of |+1> for an ion starting in |0> and a thermal motional state.

    Parameters
    ----------
    drive: DriveConfig
        Drive parameters
    eta_eff: float
        Effective Lamb-Dicke parameter
    t: float | array_like
        Pulse length(s), s
    nbar: float
        Mean thermal occupation

    Returns
    -------
    float | numpy.ndarray
        1/2 - 1/2 exp(-2 (2 nbar + 1) |alpha(t)|^2)
    """
    _check_nbar(nbar)
    scalar = np.ndim(t) == 0
    alpha = _alpha(eta_eff * drive.rabi, drive.detuning, _check_times(t))
    return _output(_depolarisation(np.abs(alpha) ** 2, nbar), scalar)


def p_up_thermal_sum(drive, eta_eff, t, nbar, tail=1e-12):
    """
    Same observable as :func:`p_up_thermal` as an explicit sum over Fock levels.

    Only meant for moderate nbar, where it checks the closed form.
    """
    _check_nbar(nbar)
    return 0.5 - 0.5 * laguerre_thermal_average(nbar, alpha_of_t(drive, eta_eff, t), tail)


def max_branch_distance(drive, eta_eff):
    """
    Largest phase-space distance 2|alpha(t)| between the two branches during the pulse.

    Parameters
    ----------
    drive: DriveConfig
        Drive parameters
    eta_eff: float
        Effective Lamb-Dicke parameter

    Returns
    -------
    float
        4|alpha0| once half a loop is completed, 2|alpha(tau)| otherwise;
        eta Omega tau at delta = 0
    """
    eta_rabi = eta_eff * drive.rabi
    half_phase = abs(drive.detuning) * drive.duration / 2.0
    if half_phase >= math.pi / 2:
        return 2.0 * eta_rabi / abs(drive.detuning)
    return eta_rabi * drive.duration * float(np.sinc(half_phase / math.pi))


def trajectory(drive, eta_eff, n_points=201):
    """
    Displacement of the |right> branch sampled uniformly over the pulse.

    Returns
    -------
    list[TrajectoryPoint]
    """
    times = np.linspace(0.0, drive.duration, n_points)
    alphas = _alpha(eta_eff * drive.rabi, drive.detuning, times)
    return [TrajectoryPoint(float(t), complex(a)) for t, a in zip(times, alphas)]


def phase_space_insets(drive, eta_eff, detunings, n_points=101):
    """
    Phase-space paths of both spin branches for several detunings.

    Parameters
    ----------
    drive: DriveConfig
        Drive template; its detuning is replaced by each entry of `detunings`
    eta_eff: float
        Effective Lamb-Dicke parameter
    detunings: array_like
        Detunings, rad/s
    n_points: int
        Samples along each pulse

    Returns
    -------
    xarray.Dataset
        Variables alpha_re, alpha_im (|right> branch; |left> is its opposite)
        and branch_distance over dims (detuning, t)
    """
    detunings = np.asarray(detunings, dtype=float)
    times = np.linspace(0.0, drive.duration, n_points)
    alphas = _alpha(eta_eff * drive.rabi, detunings[:, np.newaxis], times[np.newaxis, :])
    ds = xr.Dataset(
        {
            "alpha_re": (("detuning", "t"), alphas.real),
            "alpha_im": (("detuning", "t"), alphas.imag),
            "branch_distance": (("detuning", "t"), 2.0 * np.abs(alphas)),
        },
        coords={"detuning": detunings, "t": times},
    )
    ds["detuning"].attrs["units"] = "rad/s"
    ds["t"].attrs["units"] = "s"
    ds.attrs = {
        "rabi": drive.rabi,
        "duration": drive.duration,
        "phase_sum": drive.phase_sum,
        "eta_eff": eta_eff,
    }
    return ds


def _scan_meta(kind, drive, eta_eff, nbar):
    return {
        "kind": kind,
        "model": "ms_thermal_depolarisation",
        "rabi": drive.rabi,
        "detuning": drive.detuning,
        "duration": drive.duration,
        "phase_sum": drive.phase_sum,
        "eta_eff": eta_eff,
        "nbar": nbar,
    }


def _thermal_chunk(eta_rabi, detunings, duration, nbar):
    alpha = _alpha(eta_rabi, detunings, duration)
    return _depolarisation(np.abs(alpha) ** 2, nbar)


def detuning_scan(drive, eta_eff, nbar, delta_grid, parallel=False, chunk_size=256):
    """
    Thermal depolarisation probability over a grid of detunings at fixed pulse length.

    Parameters
    ----------
    drive: DriveConfig
        Drive template; its duration is the fixed pulse length
    eta_eff: float
        Effective Lamb-Dicke parameter
    nbar: float
        Mean thermal occupation
    delta_grid: array_like
        Strictly monotone detunings, rad/s
    parallel: bool
        Evaluate chunks of the grid as dask tasks
    chunk_size: int
        Grid points per task

    Returns
    -------
    ScanResult
        x = detuning (rad/s), p = P(|+1>), sigma = 0; same order as the grid
    """
    _check_nbar(nbar)
    grid = check_grid(delta_grid)
    eta_rabi = eta_eff * drive.rabi
    if parallel:
        tasks = [
            delayed(_thermal_chunk)(eta_rabi, np.array(chunk), drive.duration, nbar)
            for chunk in chunked(grid, chunk_size)
        ]
        values = np.concatenate(compute(*tasks))
    else:
        values = _thermal_chunk(eta_rabi, grid, drive.duration, nbar)
    return ScanResult(grid, values, meta=_scan_meta("detuning", drive, eta_eff, nbar))


def time_scan(drive, eta_eff, nbar, times):
    """
    Thermal depolarisation probability versus pulse length at fixed detuning.

    Returns
    -------
    ScanResult
        x = pulse length (s), p = P(|+1>)
    """
    grid = check_grid(times)
    values = p_up_thermal(drive, eta_eff, _check_times(grid), nbar)
    return ScanResult(grid, values, meta=_scan_meta("time", drive, eta_eff, nbar))


def two_branch_entropy(alpha):
    """
    Spin entropy (bits) of (|right>|alpha> + |left>|-alpha>)/sqrt(2).

    The spin reduced state has eigenvalues (1 +/- exp(-2|alpha|^2)) / 2.
    """
    c = math.exp(-2.0 * abs(alpha) ** 2)
    entropy = 0.0
    for p in ((1.0 + c) / 2.0, (1.0 - c) / 2.0):
        if p > 0:
            entropy -= p * math.log2(p)
    return entropy


def _ms_coupling(dim, phase_sum):
    right, left = ms_spin_basis(phase_sum)
    spin_op = np.outer(right, right.conj()) - np.outer(left, left.conj())
    k_up = sparse.kron(spin_op, creation(dim), format="csr")
    return k_up, k_up.conj().T.tocsr()


def _rk4(psi, k_up, k_down, coupling, detuning, t_end, n_steps):
    h = t_end / n_steps

    def deriv(t, y):
        phase = np.exp(-1j * detuning * t)
        return 1j * coupling * (phase * (k_up @ y) + phase.conjugate() * (k_down @ y))

    for step in range(n_steps):
        t = step * h
        k1 = deriv(t, psi)
        k2 = deriv(t + h / 2, psi + (h / 2) * k1)
        k3 = deriv(t + h / 2, psi + (h / 2) * k2)
        k4 = deriv(t + h, psi + h * k3)
        psi = psi + (h / 6) * (k1 + 2 * k2 + 2 * k3 + k4)
    return psi


def displacement_reach(drive, eta_eff, t=None):
    """
    Displacement range the truncation must hold for a pulse of length t.

    Largest |alpha| reached during the pulse plus the final |alpha(t)|.
    """
    t = drive.duration if t is None else t
    pulse = drive.with_duration(t)
    return max_branch_distance(pulse, eta_eff) / 2.0 + abs(alpha_of_t(pulse, eta_eff, t))


def evolve_numeric(
    drive,
    eta_eff,
    initial,
    t_end=None,
    tolerance=REFINEMENT_TOLERANCE,
    max_halvings=MAX_HALVINGS,
    budget=LEAKAGE_BUDGET,
):
    """
    Integrate the interaction-picture Schrodinger equation of the two-tone drive.

    H(t) = -(hbar eta Omega / 2) S (a^dagger e^{-i delta t} + a e^{i delta t}) with
    S = |right><right| - |left><left|, so that the |right> branch follows +alpha(t).
    A fixed-step fourth-order Runge-Kutta scheme starts at a step no larger than
    1/200 of the shortest of the loop period 2pi/|delta| and the coupling period
    2pi/(eta Omega); the step is halved until two successive solutions agree to
    `tolerance` in every amplitude.

    Parameters
    ----------
    drive: DriveConfig
        Drive parameters
    eta_eff: float
        Effective Lamb-Dicke parameter
    initial: SpinMotionState
        Normalised initial state
    t_end: float | None
        Integration time, the pulse length by default
    tolerance: float
        Agreement required between successive refinements
    max_halvings: int
        Refinements attempted before giving up
    budget: float
        Leakage budget of the final state

    Returns
    -------
    SpinMotionState
    """
    t_end = drive.duration if t_end is None else float(t_end)
    if t_end < 0:
        raise DomainError(f"t_end must be >= 0, got {t_end}")
    eta_rabi = eta_eff * drive.rabi
    if eta_rabi == 0 or t_end == 0:
        return initial

    reach = displacement_reach(drive, eta_eff, t_end)
    needed = required_dim(reach, initial.highest_occupied)
    if initial.dim < needed:
        raise TruncationError(
            f"dim {initial.dim} too small for displacements up to {reach:.3g}",
            suggested_dim=needed,
        )

    periods = [2 * math.pi / eta_rabi]
    if drive.detuning != 0:
        periods.append(2 * math.pi / abs(drive.detuning))
    n_steps = max(1, math.ceil(t_end / (min(periods) / STEPS_PER_PERIOD)))

    k_up, k_down = _ms_coupling(initial.dim, drive.phase_sum)
    psi0 = np.array(initial.amplitudes)
    args = (k_up, k_down, eta_rabi / 2.0, drive.detuning, t_end)
    previous = _rk4(psi0, *args, n_steps)
    for halving in range(1, max_halvings + 1):
        n_steps *= 2
        current = _rk4(psi0, *args, n_steps)
        change = float(np.max(np.abs(current - previous)))
        logger.debug(f"Refinement {halving}: {n_steps} steps, max change {change:.3e}")
        if change <= tolerance:
            break
        previous = current
    else:
        raise IntegrationError(
            f"No convergence to {tolerance:.1e} after {max_halvings} halvings "
            f"(last change {change:.3e})"
        )

    drift = abs(float(np.linalg.norm(current)) - 1.0)
    if drift >= NORM_TOLERANCE:
        raise IntegrationError(f"Norm drift {drift:.3e} above {NORM_TOLERANCE:.0e}")
    return SpinMotionState(current, check_norm=False).check_leakage(budget, reach)


def cat_state(drive, eta_eff, t, dim):
    """
    Two-branch state (|right>|alpha(t)> + |left>|-alpha(t)>)/sqrt(2) on `dim` levels.

    Returns
    -------
    SpinMotionState
    """
    alpha = alpha_of_t(drive, eta_eff, t)
    right, left = ms_spin_basis(drive.phase_sum)
    comps = (
        np.outer(right, coherent_amplitudes(alpha, dim))
        + np.outer(left, coherent_amplitudes(-alpha, dim))
    ) / math.sqrt(2.0)
    return SpinMotionState(comps, check_norm=False)


def cat_state_fidelity(drive, eta_eff, t, dim=None):
    """
    Compare the integrated state from |0> (x) |0> with the two-branch cat state.

    Parameters
    ----------
    drive: DriveConfig
        Drive parameters
    eta_eff: float
        Effective Lamb-Dicke parameter
    t: float
        Evolution time, s
    dim: int | None
        Fock truncation, chosen by :func:`required_dim` when None

    Returns
    -------
    tuple[float, float]
        Fidelity up to a global phase, and spin entropy of the integrated state in bits
    """
    if dim is None:
        dim = required_dim(displacement_reach(drive, eta_eff, t))
    numeric = evolve_numeric(drive, eta_eff, ground_state(dim), t_end=t)
    return fidelity(cat_state(drive, eta_eff, t, dim), numeric), numeric.spin_entropy()
