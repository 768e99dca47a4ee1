"""Measurement-data pipeline: power sweeps, linear fits, and noise spectra.

Spectrum-analyzer exports carry powers in dBm; every fit, subtraction, and
ratio here happens in linear milliwatt units, with dBm appearing only at
the file and report boundaries.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import DataFormatError, NegativePowerError

SWEEP_KINDS = ("sql", "fwm")
TRACE_ROLES = ("electronic", "pump", "diff", "sql")

#: Pseudo-role selecting "subtract nothing" where a background is expected.
NO_BACKGROUND = "none"

_SWEEP_HEADER = ["total_power_uw", "noise_dbm", "kind"]
_TRACE_HEADER = ["freq_hz", "noise_dbm", "role"]
_METADATA_KEYS = ("freq_hz", "rbw_hz", "vbw_hz")


def dbm_to_linear(value_dbm: float) -> float:
    """dBm to linear milliwatts."""
    return 10.0 ** (value_dbm / 10.0)


def linear_to_dbm(value_mw: float) -> float:
    """Linear milliwatts to dBm; requires a positive power."""
    if not value_mw > 0.0:
        raise NegativePowerError(f"cannot express {value_mw} mW in dBm")
    return 10.0 * math.log10(value_mw)


def correct_system_noise(signal_dbm: float, background_dbm: float = -math.inf) -> float:
    """Subtract a background from a signal, both given in dBm, in linear units.

    Returns the corrected power in mW.  A background of -inf means no
    background record exists and leaves the signal unchanged.
    """
    signal = dbm_to_linear(signal_dbm)
    if background_dbm == -math.inf:
        return signal
    corrected = signal - dbm_to_linear(background_dbm)
    if corrected <= 0.0:
        raise NegativePowerError(
            f"background {background_dbm} dBm leaves no signal from {signal_dbm} dBm"
        )
    return corrected


@dataclass(frozen=True)
class SweepRecord:
    """One spectrum-analyzer reading at a set optical power."""

    total_power_uw: float
    noise_dbm: float
    kind: str

    def __post_init__(self):
        if self.kind not in SWEEP_KINDS:
            raise DataFormatError(
                f"sweep kind must be one of {SWEEP_KINDS}, got {self.kind!r}"
            )
        if not np.isfinite(self.total_power_uw) or self.total_power_uw < 0.0:
            raise DataFormatError(
                f"total optical power must be >= 0 uW, got {self.total_power_uw}"
            )


@dataclass(frozen=True)
class PowerSweep:
    """Noise-versus-power records at one analysis frequency."""

    records: tuple[SweepRecord, ...]
    freq_hz: float | None = None
    rbw_hz: float | None = None
    vbw_hz: float | None = None

    def __post_init__(self):
        object.__setattr__(self, "records", tuple(self.records))

    def select(self, kind: str) -> tuple[np.ndarray, np.ndarray]:
        """(powers in uW, noise in dBm) for one kind, in file order."""
        if kind not in SWEEP_KINDS:
            raise DataFormatError(f"unknown sweep kind {kind!r}")
        rows = [r for r in self.records if r.kind == kind]
        powers = np.array([r.total_power_uw for r in rows])
        noise = np.array([r.noise_dbm for r in rows])
        return powers, noise

    @classmethod
    def from_csv(cls, path: str | Path) -> "PowerSweep":
        meta, rows = _read_csv(path, _SWEEP_HEADER)
        records = tuple(
            SweepRecord(_as_float(p, path), _as_float(n, path), kind)
            for p, n, kind in rows
        )
        return cls(records=records, **meta)

    def to_csv(self, path: str | Path) -> None:
        rows = [
            (repr(r.total_power_uw), repr(r.noise_dbm), r.kind) for r in self.records
        ]
        _write_csv(path, _SWEEP_HEADER, rows, self.freq_hz, self.rbw_hz, self.vbw_hz)


@dataclass(frozen=True)
class LinearFit:
    """Straight-line noise model in linear units: noise = slope * power + intercept."""

    slope: float
    intercept: float
    intercept_dbm: float | None
    residual_rms: float
    points: int


def fit_noise_vs_power(sweep: PowerSweep, kind: str) -> LinearFit:
    """Ordinary least squares of linear noise power against total optical power.

    The intercept estimates the zero-power system-noise floor.  Fitting is
    done in mW, never in dBm; a line in log units would not be a line in
    power.
    """
    powers, noise_dbm = sweep.select(kind)
    if powers.size < 2:
        raise DataFormatError(
            f"need at least 2 records of kind {kind!r}, got {powers.size}"
        )
    if np.ptp(powers) == 0.0:
        raise DataFormatError(f"all {kind!r} records share one power; fit is degenerate")
    linear = np.array([dbm_to_linear(v) for v in noise_dbm])
    design = np.column_stack([powers, np.ones_like(powers)])
    coeffs, _, _, _ = np.linalg.lstsq(design, linear, rcond=None)
    slope, intercept = float(coeffs[0]), float(coeffs[1])
    residuals = linear - design @ coeffs
    residual_rms = float(np.sqrt(np.mean(residuals**2)))
    intercept_dbm = linear_to_dbm(intercept) if intercept > 0.0 else None
    return LinearFit(
        slope=slope,
        intercept=intercept,
        intercept_dbm=intercept_dbm,
        residual_rms=residual_rms,
        points=int(powers.size),
    )


def slope_ratio_db(fwm: LinearFit, sql: LinearFit) -> float:
    """Squeezing estimate from the two slopes: 10 log10(fwm / sql).

    Using slopes cancels any power-independent noise floor, which is the
    point of sweeping the optical power instead of comparing single points.
    """
    if not fwm.slope > 0.0 or not sql.slope > 0.0:
        raise DataFormatError(
            f"slope ratio needs positive slopes, got fwm={fwm.slope}, sql={sql.slope}"
        )
    return 10.0 * math.log10(fwm.slope / sql.slope)


@dataclass(frozen=True)
class NoiseTrace:
    """One spectrum-analyzer trace: noise power versus analysis frequency."""

    role: str
    freq_hz: np.ndarray
    noise_dbm: np.ndarray
    rbw_hz: float | None = None
    vbw_hz: float | None = None

    def __post_init__(self):
        if self.role not in TRACE_ROLES:
            raise DataFormatError(
                f"trace role must be one of {TRACE_ROLES}, got {self.role!r}"
            )
        freq = np.asarray(self.freq_hz, dtype=float)
        noise = np.asarray(self.noise_dbm, dtype=float)
        if freq.ndim != 1 or freq.shape != noise.shape:
            raise DataFormatError("frequency and noise arrays must match, 1-D")
        if freq.size < 1:
            raise DataFormatError(f"trace {self.role!r} is empty")
        if freq.size > 1 and not np.all(np.diff(freq) > 0.0):
            raise DataFormatError(f"trace {self.role!r} frequencies must strictly increase")
        object.__setattr__(self, "freq_hz", freq)
        object.__setattr__(self, "noise_dbm", noise)

    def linear(self) -> np.ndarray:
        """Trace in mW."""
        return 10.0 ** (self.noise_dbm / 10.0)


def read_traces(path: str | Path) -> dict[str, NoiseTrace]:
    """Load every trace role found in one CSV file."""
    meta, rows = _read_csv(path, _TRACE_HEADER)
    by_role: dict[str, list[tuple[float, float]]] = {}
    for f, n, role in rows:
        by_role.setdefault(role, []).append((_as_float(f, path), _as_float(n, path)))
    traces = {}
    for role, pairs in by_role.items():
        freq = np.array([p[0] for p in pairs])
        noise = np.array([p[1] for p in pairs])
        traces[role] = NoiseTrace(
            role=role,
            freq_hz=freq,
            noise_dbm=noise,
            rbw_hz=meta.get("rbw_hz"),
            vbw_hz=meta.get("vbw_hz"),
        )
    return traces


def write_traces(path: str | Path, traces: dict[str, NoiseTrace] | list[NoiseTrace]) -> None:
    """Write traces to one CSV file (fixture and round-trip helper)."""
    if isinstance(traces, dict):
        traces = list(traces.values())
    rows = []
    rbw = traces[0].rbw_hz if traces else None
    vbw = traces[0].vbw_hz if traces else None
    for trace in traces:
        for f, n in zip(trace.freq_hz, trace.noise_dbm):
            rows.append((repr(float(f)), repr(float(n)), trace.role))
    _write_csv(path, _TRACE_HEADER, rows, None, rbw, vbw)


@dataclass(frozen=True)
class SpectrumPoint:
    """Squeezing at one analysis frequency; infeasible bins carry None."""

    freq_hz: float
    ratio: float | None
    squeezing_db: float | None
    feasible: bool


def _resample(trace: NoiseTrace, grid: np.ndarray, path_hint: str) -> np.ndarray:
    lo, hi = trace.freq_hz[0], trace.freq_hz[-1]
    if grid[0] < lo or grid[-1] > hi:
        raise DataFormatError(
            f"{path_hint} trace covers [{lo}, {hi}] Hz but the SQL grid needs "
            f"[{grid[0]}, {grid[-1]}] Hz; refusing to extrapolate"
        )
    return np.interp(grid, trace.freq_hz, trace.linear())


def _pick_background(
    traces: dict[str, NoiseTrace], requested: str | None, grid: np.ndarray
) -> np.ndarray:
    """Background power on the SQL grid, or zeros when none applies.

    ``None`` means the conventional default: the electronic floor when that
    trace exists, nothing otherwise.  ``"none"`` forces no subtraction even
    if an electronic trace is present; any explicit role must exist.
    """
    if requested == NO_BACKGROUND:
        return np.zeros_like(grid)
    if requested is None:
        if "electronic" in traces:
            return _resample(traces["electronic"], grid, "electronic")
        return np.zeros_like(grid)
    if requested not in TRACE_ROLES:
        raise DataFormatError(f"unknown background role {requested!r}")
    if requested not in traces:
        raise DataFormatError(f"requested background trace {requested!r} not in file")
    return _resample(traces[requested], grid, requested)


def squeezing_spectrum(
    traces: dict[str, NoiseTrace],
    diff_background: str | None = None,
    sql_background: str | None = None,
) -> tuple[SpectrumPoint, ...]:
    """Background-corrected squeezing versus frequency.

    Per frequency bin on the SQL trace's grid:

        10 log10[(lin(diff) - background) / (lin(sql) - background)]

    The intensity-difference trace (and any backgrounds) are resampled onto
    the SQL grid by linear interpolation; extrapolation is refused.  Bins
    where either corrected power is nonpositive are flagged infeasible
    rather than given a fabricated value.
    """
    if "diff" not in traces or "sql" not in traces:
        raise DataFormatError("spectrum needs both 'diff' and 'sql' traces")
    grid = traces["sql"].freq_hz
    lin_sql = traces["sql"].linear()
    lin_diff = _resample(traces["diff"], grid, "diff")
    bg_diff = _pick_background(traces, diff_background, grid)
    bg_sql = _pick_background(traces, sql_background, grid)

    points = []
    for k, freq in enumerate(grid):
        num = lin_diff[k] - bg_diff[k]
        den = lin_sql[k] - bg_sql[k]
        if num <= 0.0 or den <= 0.0:
            points.append(SpectrumPoint(float(freq), None, None, False))
            continue
        ratio = num / den
        points.append(
            SpectrumPoint(float(freq), float(ratio), 10.0 * math.log10(ratio), True)
        )
    return tuple(points)


def _as_float(token: str, path) -> float:
    try:
        return float(token)
    except ValueError:
        raise DataFormatError(f"{path}: cannot parse {token!r} as a number") from None


def _read_csv(path: str | Path, expected_header: list[str]):
    """Shared CSV reader: '#' metadata lines, fixed header, 3-column rows."""
    path = Path(path)
    meta: dict[str, float] = {}
    rows: list[tuple[str, str, str]] = []
    header_seen = False
    with path.open(newline="") as handle:
        for line_no, raw in enumerate(handle, start=1):
            line = raw.strip()
            if not line:
                continue
            if line.startswith("#"):
                body = line.lstrip("#").strip()
                if "=" in body:
                    key, _, value = body.partition("=")
                    key = key.strip()
                    if key in _METADATA_KEYS:
                        meta[key] = _as_float(value.strip(), path)
                continue
            cells = next(csv.reader([line]))
            cells = [c.strip() for c in cells]
            if not header_seen:
                if cells != expected_header:
                    raise DataFormatError(
                        f"{path}:{line_no}: header must be "
                        f"{','.join(expected_header)!r}, got {line!r}"
                    )
                header_seen = True
                continue
            if len(cells) != 3:
                raise DataFormatError(f"{path}:{line_no}: expected 3 columns, got {line!r}")
            rows.append((cells[0], cells[1], cells[2]))
    if not header_seen:
        raise DataFormatError(f"{path}: missing header line")
    return meta, rows


def _write_csv(path, header, rows, freq_hz, rbw_hz, vbw_hz):
    path = Path(path)
    with path.open("w", newline="") as handle:
        for key, value in (("freq_hz", freq_hz), ("rbw_hz", rbw_hz), ("vbw_hz", vbw_hz)):
            if value is not None:
                handle.write(f"# {key}={value!r}\n")
        writer = csv.writer(handle)
        writer.writerow(header)
        writer.writerows(rows)
