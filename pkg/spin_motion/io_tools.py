"""
CSV and JSON files written and read by the command line.

CSV files are UTF-8 with a header row, floats with 17 significant digits and
'\\n' line ends, so that they re-parse to the same float values.
"""
import json
import logging
import re
from pathlib import Path

import numpy as np
import pandas as pd

from .exceptions import ParseError
from .scan_result import ScanResult
from .tools import TWO_PI

logger = logging.getLogger(__name__)

FLOAT_FORMAT = "%.17g"
SCAN_COLUMNS = ["x", "p", "sigma"]
DETUNING_COLUMNS = ["delta_rad_s", "p_f1"]
TRAJECTORY_COLUMNS = ["t_s", "re_alpha", "im_alpha"]

# Scale from library units to file units of the x column
X_UNITS = {"hz": 1.0 / TWO_PI, "rad_s": 1.0, "us": 1e6, "s": 1.0}


def _write_frame(df, path):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    df.to_csv(
        path,
        index=False,
        float_format=FLOAT_FORMAT,
        lineterminator="\n",
        encoding="utf-8",
    )
    logger.info(f"Wrote {len(df)} rows to {path}")
    return path


def scan_frame(result, x_unit="hz"):
    """Columns x, p, sigma of a scan with x converted to `x_unit`."""
    df = result.to_dataframe()
    df["x"] = df["x"] * X_UNITS[x_unit]
    return df[SCAN_COLUMNS]


def write_scan_csv(result, path, x_unit="hz"):
    """
    Write a scan as ``x,p,sigma``.

    Parameters
    ----------
    result: ScanResult
        Scan to write
    path: str
        Output file
    x_unit: str
        Unit of the x column: 'hz' (angular library frequencies divided by 2 pi),
        'rad_s', 'us' or 's'

    Returns
    -------
    pathlib.Path
    """
    return _write_frame(scan_frame(result, x_unit), path)


def write_detuning_csv(result, path):
    """Write a noiseless detuning scan as ``delta_rad_s,p_f1``."""
    df = pd.DataFrame({"delta_rad_s": result.x, "p_f1": result.p})
    return _write_frame(df, path)


def write_trajectory_csv(points, path):
    """
    Write phase-space points as ``t_s,re_alpha,im_alpha``.

    Parameters
    ----------
    points: list[TrajectoryPoint]
        Trajectory of the |right> branch
    path: str
        Output file
    """
    df = pd.DataFrame(
        {
            "t_s": [pt.t for pt in points],
            "re_alpha": [pt.alpha.real for pt in points],
            "im_alpha": [pt.alpha.imag for pt in points],
        }
    )
    return _write_frame(df, path)


def _read_frame(path, accepted):
    try:
        df = pd.read_csv(path, float_precision="round_trip", encoding="utf-8")
    except pd.errors.EmptyDataError as exc:
        raise ParseError(f"{path} is empty", line=1) from exc
    except pd.errors.ParserError as exc:
        match = re.search(r"line (\d+)", str(exc))
        line = int(match.group(1)) if match else None
        raise ParseError(f"{path}: malformed row ({exc})", line=line) from exc
    except UnicodeDecodeError as exc:
        raise ParseError(f"{path} is not UTF-8 text", line=None) from exc

    columns = list(df.columns)
    if columns not in accepted:
        raise ParseError(
            f"{path}: unexpected header {','.join(map(str, columns))}; "
            f"expected one of {[','.join(cols) for cols in accepted]}",
            line=1,
        )
    if df.empty:
        raise ParseError(f"{path} has a header but no data rows", line=2)

    for col in columns:
        values = pd.to_numeric(df[col], errors="coerce")
        bad = np.flatnonzero(values.isna().to_numpy())
        if bad.size:
            row = int(bad[0])
            # header is line 1
            raise ParseError(
                f"{path}: column {col!r} has non-numeric value {df[col].iloc[row]!r}",
                line=row + 2,
            )
        if df[col].dtype == object:
            df[col] = values
    return df


def read_scan_csv(path, x_unit="hz"):
    """
    Read ``x,p,sigma`` (x in `x_unit`) or ``delta_rad_s,p_f1`` files.

    Parameters
    ----------
    path: str
        Input file
    x_unit: str
        Unit of the x column of ``x,p,sigma`` files, see :func:`write_scan_csv`

    Returns
    -------
    ScanResult
        x in library units (rad/s or s)
    """
    df = _read_frame(path, [SCAN_COLUMNS, DETUNING_COLUMNS])
    try:
        if list(df.columns) == DETUNING_COLUMNS:
            return ScanResult(df["delta_rad_s"], df["p_f1"], meta={"source": str(path)})
        x = df["x"].to_numpy() / X_UNITS[x_unit]
        return ScanResult(x, df["p"], df["sigma"], meta={"source": str(path)})
    except ValueError as exc:
        raise ParseError(f"{path}: {exc}", line=None) from exc


def read_trajectory_csv(path):
    """
    Read ``t_s,re_alpha,im_alpha``.

    Returns
    -------
    tuple[numpy.ndarray, numpy.ndarray]
        Times (s) and complex displacements
    """
    df = _read_frame(path, [TRAJECTORY_COLUMNS])
    return df["t_s"].to_numpy(), df["re_alpha"].to_numpy() + 1j * df["im_alpha"].to_numpy()


def write_json(payload, path=None):
    """
    Dump `payload` as indented JSON, to `path` or as returned text.

    Returns
    -------
    str
    """
    text = json.dumps(payload, indent=2, sort_keys=True) + "\n"
    if path is not None:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(text, encoding="utf-8")
        logger.info(f"Wrote {path}")
    return text


def scan_payload(result, x_unit="hz"):
    """JSON-ready form of a scan, x converted to `x_unit`."""
    payload = result.to_dict()
    payload["x"] = (result.x * X_UNITS[x_unit]).tolist()
    payload["x_unit"] = x_unit
    return payload
