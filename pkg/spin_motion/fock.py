"""
Truncated spin (x) Fock space algebra.

Spin index 0 is |0>, spin index 1 is |+1>. A state of truncation ``dim`` is
stored as a flat complex vector of length ``2 * dim`` ordered
(spin, n) -> spin * dim + n.
"""
import json
import logging
import math
from dataclasses import dataclass

import numpy as np
from scipy.linalg import expm
from scipy.special import eval_laguerre, gammaln

from .exceptions import DomainError, TruncationError

logger = logging.getLogger(__name__)

LEAKAGE_BUDGET = 1e-8
NORM_TOLERANCE = 1e-9
THERMAL_TAIL = 1e-6
MIN_DIM = 8

SPIN_DOWN = np.array([1.0, 0.0], dtype=complex)
SPIN_UP = np.array([0.0, 1.0], dtype=complex)


def _next_power_of_two(value):
    return 1 << max(0, math.ceil(math.log2(max(value, 1))))


def required_dim(alpha_max, n_init=0):
    """
    Fock truncation keeping a state displaced by up to `alpha_max` from |n_init> within the leakage budget.

    Parameters
    ----------
    alpha_max: float
        Largest displacement modulus reached by the dynamics
    n_init: int
        Highest occupied Fock level of the initial state

    Returns
    -------
    int
        Power of two N >= (sqrt(n_init + 1) + |alpha_max| + 6)^2, or a small
        fixed minimum when there is no displacement
    """
    alpha_max = abs(alpha_max)
    if alpha_max == 0:
        return max(MIN_DIM, _next_power_of_two(n_init + 2))
    bound = (math.sqrt(n_init + 1) + alpha_max + 6.0) ** 2
    return max(MIN_DIM, _next_power_of_two(math.ceil(bound)))


def tail_levels(dim):
    """Number of top Fock levels monitored for leakage."""
    return math.ceil(dim / 10)


def annihilation(dim):
    """Lowering operator a on levels 0..dim-1."""
    return np.diag(np.sqrt(np.arange(1, dim, dtype=float)), 1).astype(complex)


def creation(dim):
    """Raising operator a^dagger on levels 0..dim-1."""
    return annihilation(dim).conj().T


def number_operator(dim):
    """Number operator a^dagger a on levels 0..dim-1."""
    return np.diag(np.arange(dim, dtype=float)).astype(complex)


def displacement_operator(alpha, dim):
    """
    Displacement D(alpha) = exp(alpha a^dagger - alpha* a) restricted to `dim` levels.

    The truncated generator is anti-hermitian, so the result is unitary on the
    retained subspace; it is computed by scaling and squaring.

    Parameters
    ----------
    alpha: complex
        Phase-space displacement
    dim: int
        Fock truncation

    Returns
    -------
    numpy.ndarray
        (dim, dim) complex matrix
    """
    alpha = complex(alpha)
    if not (math.isfinite(alpha.real) and math.isfinite(alpha.imag)):
        raise DomainError(f"alpha must be finite, got {alpha}")
    a = annihilation(dim)
    return expm(alpha * a.conj().T - alpha.conjugate() * a)


def ms_spin_basis(phi_sum=0.0):
    """
    Eigenbasis of the Molmer-Sorensen force.

    Parameters
    ----------
    phi_sum: float
        Aggregate phase of the two drive tones, radians

    Returns
    -------
    tuple[numpy.ndarray, numpy.ndarray]
        |right> = (|0> + e^{i phi}|+1>)/sqrt(2) and |left> = (|0> - e^{i phi}|+1>)/sqrt(2)
    """
    phase = np.exp(1j * phi_sum)
    right = np.array([1.0, phase], dtype=complex) / math.sqrt(2.0)
    left = np.array([1.0, -phase], dtype=complex) / math.sqrt(2.0)
    return right, left


class SpinMotionState:
    """
    Pure state of the spin (|0>, |+1>) and one motional mode truncated at `dim` levels.

    Instances are immutable: operations return new states.

    Parameters
    ----------
    amplitudes: array_like
        Complex amplitudes, flat of length 2*dim or shaped (2, dim)
    check_norm: bool
        Reject amplitudes whose norm deviates from 1 by more than 1e-9
    """

    def __init__(self, amplitudes, check_norm=True):
        amps = np.array(amplitudes, dtype=complex)
        if amps.ndim == 2:
            if amps.shape[0] != 2:
                raise DomainError(f"Expected shape (2, dim), got {amps.shape}")
            amps = amps.reshape(-1)
        if amps.ndim != 1 or amps.size % 2 or amps.size == 0:
            raise DomainError(f"Expected 2*dim amplitudes, got shape {amps.shape}")
        if check_norm and abs(np.vdot(amps, amps).real - 1.0) > NORM_TOLERANCE:
            raise DomainError(f"State is not normalised (norm^2 = {np.vdot(amps, amps).real})")
        amps.setflags(write=False)
        self._amplitudes = amps

    @classmethod
    def product(cls, spin, motion):
        """Tensor product of a spin vector (length 2) and a motional vector."""
        return cls(np.outer(np.asarray(spin, dtype=complex), np.asarray(motion, dtype=complex)))

    @property
    def dim(self):
        """Fock truncation N"""
        return self._amplitudes.size // 2

    @property
    def amplitudes(self):
        """Read-only flat amplitude vector of length 2N"""
        return self._amplitudes

    @property
    def components(self):
        """Amplitudes shaped (2, N): row 0 is spin |0>, row 1 is spin |+1>"""
        return self._amplitudes.reshape(2, self.dim)

    @property
    def norm(self):
        return float(np.linalg.norm(self._amplitudes))

    @property
    def motional_populations(self):
        """Fock-level populations traced over the spin"""
        return np.sum(np.abs(self.components) ** 2, axis=0)

    @property
    def leakage_estimate(self):
        """Population in the top ceil(N/10) Fock levels"""
        return float(np.sum(self.motional_populations[-tail_levels(self.dim) :]))

    @property
    def highest_occupied(self):
        """Highest Fock level holding more than 1e-12 population"""
        occupied = np.nonzero(self.motional_populations > 1e-12)[0]
        return int(occupied[-1]) if occupied.size else 0

    @property
    def population_up(self):
        """Probability of finding the spin in |+1>"""
        return float(np.sum(np.abs(self.components[1]) ** 2))

    @property
    def mean_occupation(self):
        """Mean phonon number <n>"""
        return float(np.dot(np.arange(self.dim), self.motional_populations))

    def apply_motional(self, operator):
        """Apply a (dim, dim) motional operator to both spin components."""
        return SpinMotionState(self.components @ np.asarray(operator).T, check_norm=False)

    def expectation_motional(self, operator):
        """<psi| 1 (x) operator |psi>"""
        comps = self.components
        return complex(np.sum(np.conj(comps) * (comps @ np.asarray(operator).T)))

    def branch(self, spin):
        """Unnormalised motional vector <spin|psi> for a spin vector of length 2."""
        return np.asarray(spin, dtype=complex).conj() @ self.components

    def spin_reduced_state(self):
        """2x2 spin density matrix tr_motion |psi><psi|"""
        comps = self.components
        return comps @ comps.conj().T

    def spin_entropy(self):
        """von Neumann entropy of the spin reduced state, in bits"""
        return _entropy_bits(np.linalg.eigvalsh(self.spin_reduced_state()))

    def check_leakage(self, budget=LEAKAGE_BUDGET, alpha_max=0.0):
        """
        Raise TruncationError when the monitored leakage exceeds `budget`.

        Parameters
        ----------
        budget: float
            Allowed population in the top levels
        alpha_max: float
            Displacement used to suggest a larger truncation

        Returns
        -------
        SpinMotionState
            self, for chaining
        """
        leakage = self.leakage_estimate
        if leakage >= budget:
            suggested = max(
                2 * self.dim, required_dim(alpha_max, self.highest_occupied)
            )
            raise TruncationError(
                f"Leakage {leakage:.3e} above budget {budget:.1e} at dim {self.dim}",
                leakage=leakage,
                suggested_dim=suggested,
            )
        return self

    def to_json(self):
        """
        Snapshot of the state as JSON text.

        Returns
        -------
        str
            ``{"dim": N, "leakage": x, "amplitudes": [[spin, n, re, im], ...]}``
        """
        entries = [
            [spin, n, float(value.real), float(value.imag)]
            for (spin, n), value in np.ndenumerate(self.components)
        ]
        return json.dumps(
            {"dim": self.dim, "leakage": self.leakage_estimate, "amplitudes": entries}
        )

    @classmethod
    def from_json(cls, text):
        """Rebuild a state from :meth:`to_json` output."""
        data = json.loads(text)
        comps = np.zeros((2, int(data["dim"])), dtype=complex)
        for spin, n, re, im in data["amplitudes"]:
            comps[int(spin), int(n)] = complex(re, im)
        return cls(comps)

    def __repr__(self):
        return (
            f"SpinMotionState(dim={self.dim}, P_up={self.population_up:.6g}, "
            f"<n>={self.mean_occupation:.6g}, leakage={self.leakage_estimate:.2e})"
        )


def _entropy_bits(eigenvalues):
    p = np.clip(np.real(eigenvalues), 0.0, 1.0)
    p = p[p > 1e-300]
    return float(-np.sum(p * np.log2(p)))


def coherent_amplitudes(alpha, dim, budget=LEAKAGE_BUDGET):
    """
    Motional amplitudes c_n = exp(-|alpha|^2/2) alpha^n / sqrt(n!) on `dim` levels.

    Parameters
    ----------
    alpha: complex
        Coherent amplitude
    dim: int
        Fock truncation
    budget: float
        Largest tolerated tail, beyond n = dim-1 or in the monitored top levels

    Returns
    -------
    numpy.ndarray
        Normalised complex vector
    """
    alpha = complex(alpha)
    n = np.arange(dim)
    # log-space avoids overflow of alpha^n / sqrt(n!) for large dim
    if alpha == 0:
        log_mod = np.where(n == 0, 0.0, -np.inf)
    else:
        log_mod = n * math.log(abs(alpha)) - 0.5 * gammaln(n + 1) - abs(alpha) ** 2 / 2
    amps = np.exp(log_mod) * np.exp(1j * n * np.angle(alpha))
    kept = float(np.sum(np.abs(amps) ** 2))
    top = float(np.sum(np.abs(amps[-tail_levels(dim) :]) ** 2))
    if 1.0 - kept >= budget or top >= budget:
        raise TruncationError(
            f"Coherent state alpha={alpha} does not fit in {dim} levels",
            leakage=max(1.0 - kept, top),
            suggested_dim=required_dim(abs(alpha)),
        )
    return amps / math.sqrt(kept)


def coherent_state(alpha, dim, spin=SPIN_DOWN):
    """
    |spin> (x) |alpha> on `dim` Fock levels.

    Parameters
    ----------
    alpha: complex
        Coherent amplitude
    dim: int
        Fock truncation
    spin: array_like
        Normalised spin vector, |0> by default

    Returns
    -------
    SpinMotionState
    """
    return SpinMotionState.product(spin, coherent_amplitudes(alpha, dim))


def fock_state(n, dim, spin=SPIN_DOWN):
    """|spin> (x) |n> on `dim` Fock levels."""
    if not 0 <= n < dim:
        raise DomainError(f"Fock level {n} outside 0..{dim - 1}")
    motion = np.zeros(dim, dtype=complex)
    motion[n] = 1.0
    return SpinMotionState.product(spin, motion)


def ground_state(dim):
    """|0> (x) |n=0>"""
    return fock_state(0, dim)


def displace(state, alpha, budget=LEAKAGE_BUDGET):
    """
    Apply the motional displacement D(alpha) to both spin components.

    Parameters
    ----------
    state: SpinMotionState
        Input state
    alpha: complex
        Displacement

    Returns
    -------
    SpinMotionState
    """
    out = state.apply_motional(displacement_operator(alpha, state.dim))
    return out.check_leakage(budget, alpha_max=abs(alpha))


def spin_dependent_displace(state, alpha, phase_sum=0.0, budget=LEAKAGE_BUDGET):
    """
    Apply U = D(alpha)|right><right| + D(-alpha)|left><left|.

    Parameters
    ----------
    state: SpinMotionState
        Input state
    alpha: complex
        Displacement of the |right> branch
    phase_sum: float
        Aggregate drive phase fixing the spin basis

    Returns
    -------
    SpinMotionState
    """
    right, left = ms_spin_basis(phase_sum)
    d_plus = displacement_operator(alpha, state.dim)
    d_minus = d_plus.conj().T  # D(-alpha) = D(alpha)^dagger
    comps = np.outer(right, d_plus @ state.branch(right)) + np.outer(
        left, d_minus @ state.branch(left)
    )
    return SpinMotionState(comps, check_norm=False).check_leakage(budget, abs(alpha))


def overlap(bra, ket):
    """<bra|ket> for two states of equal truncation."""
    if bra.dim != ket.dim:
        raise DomainError(f"Truncations differ: {bra.dim} != {ket.dim}")
    return complex(np.vdot(bra.amplitudes, ket.amplitudes))


def fidelity(a, b):
    """|<a|b>|^2, insensitive to a global phase."""
    return abs(overlap(a, b)) ** 2


@dataclass(frozen=True)
class MotionalDisplacement:
    """
    Phase-space displacement D(alpha).

    Parameters
    ----------
    alpha: complex
        Displacement
    """

    alpha: complex

    def __post_init__(self):
        alpha = complex(self.alpha)
        if not (math.isfinite(alpha.real) and math.isfinite(alpha.imag)):
            raise DomainError(f"alpha must be finite, got {alpha}")
        object.__setattr__(self, "alpha", alpha)

    def operator(self, dim):
        return displacement_operator(self.alpha, dim)

    def compose(self, other):
        """
        D(self) D(other) = exp(i Im(alpha beta*)) D(alpha + beta).

        Returns
        -------
        tuple[float, MotionalDisplacement]
            Phase and combined displacement
        """
        phase = (self.alpha * other.alpha.conjugate()).imag
        return phase, MotionalDisplacement(self.alpha + other.alpha)

    def diagonal_element(self, n):
        """<n|D(alpha)|n> = exp(-|alpha|^2/2) L_n(|alpha|^2)"""
        x = abs(self.alpha) ** 2
        return math.exp(-x / 2) * eval_laguerre(n, x)


def thermal_cutoff(nbar, tail=THERMAL_TAIL):
    """
    Smallest N whose thermal tail sum_{n>=N} p_n = (nbar/(nbar+1))^N is below `tail`.

    Parameters
    ----------
    nbar: float
        Mean occupation
    tail: float
        Allowed probability mass beyond level N-1

    Returns
    -------
    int
    """
    if not (math.isfinite(nbar) and nbar >= 0):
        raise DomainError(f"nbar must be finite and >= 0, got {nbar}")
    if nbar == 0:
        return 1
    ratio = nbar / (nbar + 1.0)
    return max(1, math.ceil(math.log(tail) / math.log(ratio)))


def thermal_weights(nbar, dim):
    """
    Geometric weights p_n = nbar^n / (nbar+1)^(n+1) for n < dim, renormalised.

    Parameters
    ----------
    nbar: float
        Mean occupation
    dim: int
        Number of levels kept

    Returns
    -------
    numpy.ndarray
    """
    if nbar == 0:
        weights = np.zeros(dim)
        weights[0] = 1.0
        return weights
    n = np.arange(dim)
    weights = np.exp(n * math.log(nbar / (nbar + 1.0))) / (nbar + 1.0)
    return weights / weights.sum()


class ThermalEnsemble:
    """
    Thermal occupation distribution truncated at `dim` levels.

    Parameters
    ----------
    nbar: float
        Mean occupation
    dim: int
        Fock truncation; the discarded tail must stay below 1e-6
    """

    def __init__(self, nbar, dim):
        if not (math.isfinite(nbar) and nbar >= 0):
            raise DomainError(f"nbar must be finite and >= 0, got {nbar}")
        tail = 0.0 if nbar == 0 else (nbar / (nbar + 1.0)) ** dim
        if tail >= THERMAL_TAIL:
            raise TruncationError(
                f"Thermal tail {tail:.2e} beyond level {dim - 1} for nbar={nbar}",
                leakage=tail,
                suggested_dim=thermal_cutoff(nbar),
            )
        self.nbar = float(nbar)
        self.dim = int(dim)
        self.tail = tail
        self.weights = thermal_weights(nbar, dim)
        self.weights.setflags(write=False)

    @classmethod
    def from_tail(cls, nbar, tail=THERMAL_TAIL):
        """Ensemble truncated where the discarded tail drops below `tail`."""
        return cls(nbar, thermal_cutoff(nbar, min(tail, THERMAL_TAIL / 2)))

    def average(self, values):
        """Weighted average of per-level values (array of length dim)."""
        return float(np.dot(self.weights, np.asarray(values)[: self.dim]))


def laguerre_thermal_average(nbar, alpha, tail=1e-12):
    """
    Thermal average of <n|D(2 alpha)|n> = exp(-2|alpha|^2) L_n(4|alpha|^2).

    Its closed form is exp(-2 (2 nbar + 1) |alpha|^2); the explicit sum is the
    Fock-weighted check of that identity.

    Parameters
    ----------
    nbar: float
        Mean occupation
    alpha: complex
        Branch displacement
    tail: float
        Thermal tail discarded from the sum

    Returns
    -------
    float
    """
    ensemble = ThermalEnsemble.from_tail(nbar, tail)
    x = abs(alpha) ** 2
    n = np.arange(ensemble.dim)
    return ensemble.average(np.exp(-2 * x) * eval_laguerre(n, 4 * x))
