import logging

import numpy as np
import pandas as pd

from .exceptions import DomainError

logger = logging.getLogger(__name__)

# Probabilities computed in floating point may overshoot [0, 1] by rounding.
_PROBABILITY_SLACK = 1e-12


class ScanResult:
    """
    Ordered samples (x, p, sigma) of a frequency, detuning or time scan.

    Parameters
    ----------
    x: array_like
        Scan coordinate (rad/s or s)
    p: array_like
        Probabilities, within [0, 1]
    sigma: array_like | None
        Standard errors, >= 0. Zeros (noiseless theory) when not given.
    meta: dict | None
        Model description and provenance. Values must be JSON serialisable.
    """

    def __init__(self, x, p, sigma=None, meta=None):
        x = np.array(x, dtype=float)
        p = np.array(p, dtype=float)
        sigma = np.zeros_like(p) if sigma is None else np.array(sigma, dtype=float)
        if not (x.ndim == p.ndim == sigma.ndim == 1):
            raise DomainError("x, p and sigma must be one-dimensional")
        if not (x.size == p.size == sigma.size):
            raise DomainError(
                f"Length mismatch: x={x.size}, p={p.size}, sigma={sigma.size}"
            )
        if np.any(p < -_PROBABILITY_SLACK) or np.any(p > 1 + _PROBABILITY_SLACK):
            raise DomainError("Probabilities must lie within [0, 1]")
        if np.any(sigma < 0):
            raise DomainError("Standard errors must be non-negative")
        p = np.clip(p, 0.0, 1.0)
        for arr in (x, p, sigma):
            arr.setflags(write=False)
        self.x = x
        self.p = p
        self.sigma = sigma
        self.meta = dict(meta or {})

    def __len__(self):
        return self.x.size

    def __repr__(self):
        return f"ScanResult(n={len(self)}, meta={self.meta})"

    def with_meta(self, **meta):
        """Copy with additional metadata entries."""
        return ScanResult(self.x, self.p, self.sigma, {**self.meta, **meta})

    def to_dataframe(self):
        """
        Samples as a table

        Returns
        -------
        pandas.DataFrame
            Columns x, p, sigma
        """
        return pd.DataFrame({"x": self.x, "p": self.p, "sigma": self.sigma})

    def to_dict(self):
        return {
            "x": self.x.tolist(),
            "p": self.p.tolist(),
            "sigma": self.sigma.tolist(),
            "meta": self.meta,
        }


def check_grid(grid):
    """
    Validate a scan grid.

    Parameters
    ----------
    grid: array_like
        Scan coordinates

    Returns
    -------
    numpy.ndarray
        The grid as a float array, when non-empty, one-dimensional and strictly monotone
    """
    grid = np.asarray(grid, dtype=float)
    if grid.ndim != 1 or grid.size == 0:
        raise DomainError("Scan grid must be a non-empty 1-D sequence")
    if not np.all(np.isfinite(grid)):
        raise DomainError("Scan grid must be finite")
    steps = np.diff(grid)
    if not (np.all(steps > 0) or np.all(steps < 0)):
        raise DomainError("Scan grid must be strictly monotone")
    return grid
