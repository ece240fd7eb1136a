"""
Weighted least-squares estimation of spectrum and scan parameters.

The chi-square is minimised by a Nelder-Mead simplex in the bound box mapped
to the unit cube, restarted from deterministic Halton points.
"""
import logging
import math
import threading
from dataclasses import asdict, dataclass, field, replace
from typing import Optional

import numpy as np
from dask import compute, delayed
from scipy.optimize import minimize
from scipy.stats import qmc

from .exceptions import DomainError
from .fock import thermal_cutoff, thermal_weights
from .ms_dynamics import detuning_scan
from .spectroscopy import (
    SPECTRUM_TAIL,
    binomial_sigma,
    rabi_line,
    rabi_table,
    sideband_components,
    sideband_rabis,
    simulate_shots,
    two_ion_spectrum,
)

logger = logging.getLogger(__name__)

N_STARTS = 8
SIMPLEX_XATOL = 1e-6
SIMPLEX_STEP = 0.1


@dataclass
class FitResult:
    """
    Outcome of a multi-start fit.

    Parameters
    ----------
    params: dict[str, float]
        Best estimates, within the declared bounds
    residual: float
        Weighted sum of squared residuals at `params`
    converged: bool
        Whether the best start met the simplex size criterion
    n_eval: int
        Objective evaluations over all starts
    seed: int | None
        Seed of the synthetic data, when known
    model: str
        Name of the fitted curve
    """

    params: dict
    residual: float
    converged: bool
    n_eval: int
    seed: Optional[int] = None
    model: str = ""
    bounds: dict = field(default_factory=dict)

    def to_dict(self):
        out = asdict(self)
        out["bounds"] = {name: list(bound) for name, bound in self.bounds.items()}
        return out


class LineshapeCurve:
    """
    Carrier + sideband spectrum as a function of its free parameters.

    When n_bar is the only free parameter, the per-level sideband responses on
    the data grid are tabulated once and every evaluation reduces to a
    weighted sum over that table.

    Parameters
    ----------
    template: LineshapeModel
        Values of the parameters that are not fitted
    """

    name = "sideband"

    def __init__(self, template):
        self.template = template
        self.free_params = {"nbar", "rabi", "eta_eff", "f1"}
        if len(template.carrier_freqs) == 2:
            self.free_params.add("f2")
        self._use_table = False
        self._levels_hint = 0
        self._lock = threading.Lock()
        self._key = None
        self._table = None

    def prepare(self, bounds):
        """Select the evaluation strategy for the parameters about to be fitted."""
        self._use_table = set(bounds) <= {"nbar"} and self.template.include_sidebands
        nbar_max = bounds["nbar"][1] if "nbar" in bounds else self.template.nbar
        self._levels_hint = thermal_cutoff(nbar_max, SPECTRUM_TAIL)

    def model(self, params):
        changes = {k: v for k, v in params.items() if k in ("nbar", "rabi", "eta_eff")}
        freqs = list(self.template.carrier_freqs)
        for i, name in enumerate(("f1", "f2")):
            if name in params:
                freqs[i] = params[name]
        return self.template.update(carrier_freqs=tuple(freqs), **changes)

    def _sideband_table(self, model, x, levels):
        key = (
            model.eta_eff * model.rabi,
            model.nu_z,
            model.pulse_time,
            model.carrier_freqs,
            x.tobytes(),
        )
        with self._lock:
            if key != self._key or self._table.shape[1] < levels:
                width = max(levels, self._levels_hint)
                logger.debug(f"Building sideband table of {x.size} x {width}")
                blue, red = sideband_rabis(model.eta_eff * model.rabi, width)
                table = np.zeros((x.size, width))
                for f0 in model.carrier_freqs:
                    delta = x - f0
                    table += rabi_table(delta - model.nu_z, blue, model.pulse_time)
                    table += rabi_table(delta + model.nu_z, red, model.pulse_time)
                self._key, self._table = key, table
            return self._table

    def __call__(self, params, x):
        model = self.model(params)
        x = np.asarray(x, dtype=float)
        if not self._use_table:
            components = sideband_components(model, x)
            total = components["carrier"] + components["blue"] + components["red"]
            return np.clip(total, 0.0, 1.0)
        levels = thermal_cutoff(model.nbar, SPECTRUM_TAIL)
        table = self._sideband_table(model, x, levels)
        carrier = sum(
            rabi_line(x - f0, model.carrier_rabi, model.pulse_time)
            for f0 in model.carrier_freqs
        )
        sidebands = table[:, :levels] @ thermal_weights(model.nbar, levels)
        return np.clip(carrier + sidebands, 0.0, 1.0)


class TwoIonCurve:
    """
    Two-ion addressing spectrum with free resonances f1, f2 and Rabi frequency.

    Parameters
    ----------
    f1, f2: float
        Default resonance frequencies, rad/s
    rabi: float
        Default Rabi frequency, rad/s
    pulse_time: float
        Pulse length, s
    observable: str
        See :func:`spin_motion.spectroscopy.two_ion_spectrum`
    """

    name = "two_ion"
    free_params = {"f1", "f2", "rabi"}

    def __init__(self, f1, f2, rabi, pulse_time, observable="sum"):
        self.defaults = {"f1": f1, "f2": f2, "rabi": rabi}
        self.pulse_time = pulse_time
        self.observable = observable

    def __call__(self, params, x):
        values = {**self.defaults, **params}
        if values["f1"] == values["f2"]:
            # coincident resonances: a single line counted twice
            p = 2 * rabi_line(np.asarray(x) - values["f1"], values["rabi"], self.pulse_time)
            return np.clip(p, 0.0, 1.0)
        return two_ion_spectrum(
            values["f1"],
            values["f2"],
            values["rabi"],
            self.pulse_time,
            x,
            self.observable,
        ).p


class DetuningCurve:
    """
    Thermal depolarisation scan of the spin-dependent force versus detuning.

    Parameters
    ----------
    drive: DriveConfig
        Drive template, its duration is the fixed pulse length
    eta_eff: float
        Default effective Lamb-Dicke parameter
    nbar: float
        Default mean thermal occupation
    """

    name = "detuning"
    free_params = {"nbar", "eta_eff", "rabi"}

    def __init__(self, drive, eta_eff, nbar):
        self.drive = drive
        self.defaults = {"eta_eff": eta_eff, "nbar": nbar}

    def __call__(self, params, x):
        drive = self.drive
        if "rabi" in params:
            drive = replace(drive, rabi=params["rabi"])
        values = {**self.defaults, **params}
        return detuning_scan(drive, values["eta_eff"], values["nbar"], x).p


def chi_square_weights(sigma):
    """
    Inverse standard errors used by the chi-square.

    All-zero sigma (noiseless theory) gives unit weights; isolated zeros are
    replaced by the smallest positive sigma.
    """
    sigma = np.asarray(sigma, dtype=float)
    positive = sigma[sigma > 0]
    if positive.size == 0:
        return np.ones_like(sigma)
    return 1.0 / np.where(sigma > 0, sigma, positive.min())


def data_shots(data, shots=None):
    """Measurements per point of `data`: `shots` when given, else the count recorded in its metadata."""
    if shots is None:
        shots = data.meta.get("shots")
    if shots is not None and shots < 1:
        raise DomainError(f"shots must be >= 1, got {shots}")
    return shots


def _residual(p_model, data, shots, weights):
    if shots is not None:
        # Pearson: binomial variance of the model, not of the measured point
        weights = 1.0 / binomial_sigma(p_model, shots)
    return float(np.sum(((data.p - p_model) * weights) ** 2))


def chi_square(curve, params, data, shots=None):
    """
    Weighted sum of squared residuals of `curve` at `params` on `data`.

    Points averaged over a known number of shots are weighted by the binomial
    error of the model curve; other data by their own sigma.
    """
    shots = data_shots(data, shots)
    return _residual(curve(params, data.x), data, shots, chi_square_weights(data.sigma))


def _check_bounds(curve, bounds, data):
    if not bounds:
        raise DomainError("At least one free parameter is required")
    unknown = set(bounds) - set(curve.free_params)
    if unknown:
        raise DomainError(
            f"Cannot fit {sorted(unknown)} with the {curve.name} model "
            f"(free parameters: {sorted(curve.free_params)})"
        )
    for name, (lo, hi) in bounds.items():
        if not (math.isfinite(lo) and math.isfinite(hi) and lo < hi):
            raise DomainError(f"Degenerate bounds for {name}: ({lo}, {hi})")
    if len(data) < 2 * len(bounds):
        raise DomainError(
            f"{len(data)} data points for {len(bounds)} free parameters; "
            "at least twice as many points are needed"
        )


def initial_simplex(u0, step=SIMPLEX_STEP):
    """Simplex around `u0` in the unit cube, each edge pointing inwards."""
    u0 = np.asarray(u0, dtype=float)
    vertices = [u0]
    for i in range(u0.size):
        vertex = u0.copy()
        vertex[i] = u0[i] + step if u0[i] + step <= 1.0 else u0[i] - step
        vertices.append(vertex)
    return np.array(vertices)


def start_points(n_params, n_starts=N_STARTS):
    """Deterministic multi-start points in the unit cube (Halton sequence without its origin)."""
    sampler = qmc.Halton(d=n_params, scramble=False)
    sampler.fast_forward(1)
    return sampler.random(n_starts)


def _minimize_from(objective, u0):
    return minimize(
        objective,
        u0,
        method="Nelder-Mead",
        bounds=[(0.0, 1.0)] * len(u0),
        options={
            "xatol": SIMPLEX_XATOL,
            "fatol": np.inf,
            "initial_simplex": initial_simplex(u0),
        },
    )


def fit(curve, bounds, data, n_starts=N_STARTS, parallel=False, seed=None, shots=None):
    """
    Minimise the weighted chi-square of `curve` against `data`.

    Parameters
    ----------
    curve: LineshapeCurve | TwoIonCurve | DetuningCurve
        Model evaluated as curve(params, x)
    bounds: dict[str, tuple[float, float]]
        Free parameters and their finite bounds (lo < hi)
    data: ScanResult
        Measured or synthetic probabilities
    n_starts: int
        Number of simplex searches started from Halton points
    parallel: bool
        Run the starts as dask tasks on threads
    seed: int | None
        Seed of the data, copied to the result
    shots: int | None
        Measurements per data point; taken from ``data.meta["shots"]`` when None.
        With a shot count the residuals are weighted by the binomial error of the
        model at each evaluation, otherwise by ``data.sigma``

    Returns
    -------
    FitResult
        Best of the starts; `converged` is False when it stopped on the iteration limit
    """
    _check_bounds(curve, bounds, data)
    names = sorted(bounds)
    lo = np.array([bounds[name][0] for name in names], dtype=float)
    hi = np.array([bounds[name][1] for name in names], dtype=float)
    shots = data_shots(data, shots)
    weights = chi_square_weights(data.sigma)
    if hasattr(curve, "prepare"):
        curve.prepare(bounds)

    def to_params(u):
        values = lo + np.clip(u, 0.0, 1.0) * (hi - lo)
        return dict(zip(names, values.tolist()))

    def objective(u):
        return _residual(curve(to_params(u), data.x), data, shots, weights)

    starts = start_points(len(names), n_starts)
    if parallel:
        results = compute(
            *[delayed(_minimize_from)(objective, u0) for u0 in starts],
            scheduler="threads",
        )
    else:
        results = [_minimize_from(objective, u0) for u0 in starts]
    for i, res in enumerate(results):
        logger.debug(f"Start {i}: chi2={res.fun:.6g} after {res.nfev} evaluations")

    best = min(results, key=lambda res: res.fun)
    result = FitResult(
        params=to_params(best.x),
        residual=float(best.fun),
        converged=bool(best.success),
        n_eval=int(sum(res.nfev for res in results)),
        seed=seed,
        model=curve.name,
        bounds={name: (float(bounds[name][0]), float(bounds[name][1])) for name in names},
    )
    if not result.converged:
        logger.warning(f"Fit of {names} did not converge: {best.message}")
    return result


def _fit_seed(curve, bounds, truth, shots, seed, n_starts):
    data = simulate_shots(truth, shots, seed)
    return fit(curve, bounds, data, n_starts=n_starts, seed=seed)


def bootstrap_fit(curve, bounds, truth, shots, seeds, n_starts=N_STARTS, parallel=True):
    """
    Repeat shot synthesis and fitting over several seeds.

    Parameters
    ----------
    curve: LineshapeCurve | TwoIonCurve | DetuningCurve
        Model to fit; its tabulated responses are shared between seeds
    bounds: dict[str, tuple[float, float]]
        Free parameters and their bounds
    truth: ScanResult
        Noiseless curve the synthetic data are drawn from
    shots: int
        Measurements per point
    seeds: iterable of int
        Seeds of the synthetic data sets
    parallel: bool
        Fit the seeds as dask tasks on threads

    Returns
    -------
    list[FitResult]
        One result per seed, in seed order
    """
    seeds = list(seeds)
    if parallel:
        tasks = [
            delayed(_fit_seed)(curve, bounds, truth, shots, seed, n_starts)
            for seed in seeds
        ]
        results = list(compute(*tasks, scheduler="threads"))
    else:
        results = [_fit_seed(curve, bounds, truth, shots, seed, n_starts) for seed in seeds]
    logger.info(f"Bootstrap of {len(results)} seeds done")
    return results
