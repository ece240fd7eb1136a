"""
Parameter sets of the three reference measurements, with the theory curves and fits built on them.

Values are those of the 171Yb+ gradient-coupling measurements: two-ion
addressing (fig3), sideband spectrum (fig4) and spin-dependent force scan (fig5).
"""
import logging
import math

import numpy as np

from .exceptions import ConfigError
from .fitting import LineshapeCurve, TwoIonCurve
from .ms_dynamics import DriveConfig, detuning_scan
from .spectroscopy import LineshapeModel, sideband_spectrum, two_ion_spectrum
from .tools import TWO_PI

logger = logging.getLogger(__name__)

FIGURES = ("fig3", "fig4", "fig5")
#: measurements averaged per data point in all three scans
SHOTS = 200

# Two-ion addressing spectrum
#: Rabi frequency of the addressing pulse, 2pi x 40 kHz
FIG3_RABI = TWO_PI * 40e3
#: the addressing pulse is a resonant pi pulse
FIG3_PULSE_TIME = math.pi / FIG3_RABI
#: measured splitting of the two ion resonances, 2pi x 2.71 MHz
FIG3_SPLITTING = TWO_PI * 2.71e6
#: gradient inferred from that splitting, 23.3(6) T/m
FIG3_GRADIENT = 23.3
FIG3_SPAN = TWO_PI * 2e6
FIG3_STEP = TWO_PI * 2e3
FIG3_FREQ_WINDOW = TWO_PI * 100e3
FIG3_RABI_BOUNDS = (TWO_PI * 20e3, TWO_PI * 60e3)

# Sideband spectrum of a single ion
#: carrier Rabi frequency of the sideband spectrum, 2pi x 46 kHz
FIG4_RABI = TWO_PI * 46e3
#: axial secular frequency, 2pi x 268 kHz, the carrier-sideband spacing
FIG4_NU_Z = TWO_PI * 268e3
#: probe pulse length of the sideband spectrum
FIG4_PULSE_TIME = 40e-6
#: fitted thermal occupation, 290(50)
FIG4_NBAR = 290.0
#: effective Lamb-Dicke parameter at 23.3 T/m
FIG4_ETA = 0.013
FIG4_SPAN = TWO_PI * 400e3
FIG4_STEP = TWO_PI * 2e3
FIG4_NBAR_BOUNDS = (50.0, 800.0)

# Detuning scan of the spin-dependent force
#: thermal occupation of the detuning-scan theory line
FIG5_NBAR = 110.0
#: carrier Rabi frequency of each force tone, 2pi x 35 kHz
FIG5_RABI = TWO_PI * 35e3
#: fixed force duration of the detuning scan
FIG5_DURATION = 180e-6
FIG5_ETA = 0.013
FIG5_SPAN = TWO_PI * 25e3
FIG5_POINTS = 501
#: loops closing inside the scanned span, 2pi j / tau for j = 1..4
FIG5_LOOPS = 4


def _symmetric_grid(span, step):
    n = int(round(span / step))
    return np.arange(-n, n + 1) * step


def fig3_grid():
    """Probe frequencies relative to the midpoint of the two resonances, rad/s."""
    return _symmetric_grid(FIG3_SPAN, FIG3_STEP)


def fig3_resonances(splitting=FIG3_SPLITTING):
    return -splitting / 2.0, splitting / 2.0


def fig3_theory(observable="sum", splitting=FIG3_SPLITTING):
    f1, f2 = fig3_resonances(splitting)
    return two_ion_spectrum(
        f1, f2, FIG3_RABI, FIG3_PULSE_TIME, fig3_grid(), observable=observable
    ).with_meta(figure="fig3")


def fig3_fit_setup(splitting=FIG3_SPLITTING, observable="sum"):
    """
    Curve and bounds to fit (f1, f2, rabi) on two-ion data.

    The resonance bounds are windows of +/- 2pi x 100 kHz around each line.

    Returns
    -------
    tuple[TwoIonCurve, dict]
    """
    f1, f2 = fig3_resonances(splitting)
    curve = TwoIonCurve(f1, f2, FIG3_RABI, FIG3_PULSE_TIME, observable)
    bounds = {
        "f1": (f1 - FIG3_FREQ_WINDOW, f1 + FIG3_FREQ_WINDOW),
        "f2": (f2 - FIG3_FREQ_WINDOW, f2 + FIG3_FREQ_WINDOW),
        "rabi": FIG3_RABI_BOUNDS,
    }
    return curve, bounds


def fig4_grid():
    """Probe detunings from the carrier, rad/s."""
    return _symmetric_grid(FIG4_SPAN, FIG4_STEP)


def fig4_model(nbar=FIG4_NBAR, debye_waller=False):
    return LineshapeModel(
        carrier_freqs=(0.0,),
        rabi=FIG4_RABI,
        nu_z=FIG4_NU_Z,
        eta_eff=FIG4_ETA,
        nbar=nbar,
        pulse_time=FIG4_PULSE_TIME,
        debye_waller=debye_waller,
    )


def fig4_theory(nbar=FIG4_NBAR, debye_waller=False):
    return sideband_spectrum(fig4_model(nbar, debye_waller), fig4_grid()).with_meta(
        figure="fig4"
    )


def fig4_fit_setup(debye_waller=False):
    """
    Curve and bounds to fit n_bar with every other parameter fixed at its preset value.

    Returns
    -------
    tuple[LineshapeCurve, dict]
    """
    return LineshapeCurve(fig4_model(debye_waller=debye_waller)), {"nbar": FIG4_NBAR_BOUNDS}


def fig5_drive(detuning=0.0):
    return DriveConfig(rabi=FIG5_RABI, detuning=detuning, duration=FIG5_DURATION)


def fig5_grid():
    """
    Detunings of the spin-dependent force scan, rad/s.

    A uniform grid over +/- 2pi x 25 kHz with the loop-closing detunings
    2pi j / tau (j = +/-1..4) merged in, so that the scan passes through its zeros.
    """
    uniform = np.linspace(-FIG5_SPAN, FIG5_SPAN, FIG5_POINTS)
    return np.union1d(uniform, fig5_loop_detunings(FIG5_LOOPS))


def fig5_theory(parallel=False):
    return detuning_scan(
        fig5_drive(), FIG5_ETA, FIG5_NBAR, fig5_grid(), parallel=parallel
    ).with_meta(figure="fig5")


def fig5_loop_detunings(j_max=4):
    """Detunings 2pi j / tau, j = +/-1..j_max, at which the phase-space loops close."""
    j = np.concatenate([-np.arange(j_max, 0, -1), np.arange(1, j_max + 1)])
    return TWO_PI * j / FIG5_DURATION


def theory_curve(figure, **kwargs):
    """Theory curve of `figure` ('fig3', 'fig4' or 'fig5')."""
    builders = {"fig3": fig3_theory, "fig4": fig4_theory, "fig5": fig5_theory}
    if figure not in builders:
        raise ConfigError(f"Unknown figure {figure!r}, expected one of {FIGURES}")
    return builders[figure](**kwargs)
