"""Recover medium parameters from measured observables and undo detection loss.

The forward model maps intrinsic (gain, transmission) to the two quantities
an experiment can calibrate without a noise measurement: the effective
probe gain G_eff and the conjugate/probe power ratio r.  This module
inverts that map, and separately unmixes the detection efficiency out of a
measured squeezing ratio.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import (
    ConvergenceError,
    InfeasibleObservablesError,
    InvalidTransmissionError,
    UnphysicalMeasurementError,
)
from .medium import DEFAULT_SEED_PHOTONS, DEFAULT_STAGES, MediumParams, forward_map

#: Largest relative mismatch of (G_eff, r) accepted as converged.
RESIDUAL_TOL = 1e-8

_MAX_NEWTON_ITERATIONS = 100
_GAIN_CAP = 500.0
_T_FLOOR = 1e-6


@dataclass(frozen=True)
class InversionResult:
    """Medium parameters reproducing a measured observable pair."""

    gain: float
    transmission: float
    residual: float
    iterations: int


def _observables(gain, transmission, stages, seed_photons):
    g = min(max(gain, 1.0), _GAIN_CAP)
    t = min(max(transmission, _T_FLOOR), 1.0)
    return forward_map(MediumParams(g, t, stages), seed_photons)


def _residual(pred, target):
    g_eff, ratio = target
    dg = abs(pred[0] - g_eff) / max(abs(g_eff), 1e-12)
    dr = abs(pred[1] - ratio) / max(abs(ratio), 1e-12)
    return max(dg, dr)


def _solve_transmission(gain, g_eff, stages, seed_photons):
    """Transmission giving the requested effective gain at fixed gain, or None.

    The effective gain is monotone increasing in transmission, so plain
    bisection on (floor, 1] is reliable.
    """
    hi = 1.0
    pred_hi = _observables(gain, hi, stages, seed_photons)[0]
    if pred_hi < g_eff * (1.0 - 1e-12):
        return None
    lo = _T_FLOOR
    pred_lo = _observables(gain, lo, stages, seed_photons)[0]
    if pred_lo > g_eff:
        return None
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if _observables(gain, mid, stages, seed_photons)[0] < g_eff:
            lo = mid
        else:
            hi = mid
        if hi - lo < 1e-14 * max(1.0, hi):
            break
    return 0.5 * (lo + hi)


def _bisect_on_gain(target, stages, seed_photons):
    """Nested-bisection fallback: match G_eff along T at each gain, bisect on ratio.

    The conjugate/probe ratio along the G_eff-matching curve grows with
    gain, so the outer solve is another bisection.  Also detects targets
    outside the reachable set.
    """
    g_eff, ratio = target

    def ratio_at(gain):
        t = _solve_transmission(gain, g_eff, stages, seed_photons)
        if t is None:
            return None, None
        return _observables(gain, t, stages, seed_photons)[1], t

    g_lo = max(1.0, g_eff)
    r_lo, t_lo = ratio_at(g_lo)
    if r_lo is None:
        raise InfeasibleObservablesError(
            f"effective gain {g_eff} is unreachable for any transmission"
        )
    if ratio <= r_lo:
        if (r_lo - ratio) / max(ratio, 1e-12) > 1e-6:
            raise InfeasibleObservablesError(
                f"ratio {ratio} below the minimum {r_lo:.6g} reachable at "
                f"effective gain {g_eff}"
            )
        return g_lo, t_lo
    g_hi = g_lo
    r_hi = r_lo
    for _ in range(60):
        g_hi = min(2.0 * max(g_hi, 1.0), _GAIN_CAP)
        r_hi, t_hi = ratio_at(g_hi)
        if r_hi is None:
            raise InfeasibleObservablesError(
                f"observable pair ({g_eff}, {ratio}) left the reachable set"
            )
        if r_hi >= ratio:
            break
        if g_hi >= _GAIN_CAP:
            raise InfeasibleObservablesError(
                f"ratio {ratio} above the maximum {r_hi:.6g} reachable below "
                f"gain {_GAIN_CAP}"
            )
    for _ in range(200):
        g_mid = 0.5 * (g_lo + g_hi)
        r_mid, _ = ratio_at(g_mid)
        if r_mid < ratio:
            g_lo = g_mid
        else:
            g_hi = g_mid
        if g_hi - g_lo < 1e-13 * max(1.0, g_hi):
            break
    gain = 0.5 * (g_lo + g_hi)
    t = _solve_transmission(gain, g_eff, stages, seed_photons)
    return gain, t


def invert_observables(
    effective_gain: float,
    conjugate_probe_ratio: float,
    stages: int = DEFAULT_STAGES,
    seed_photons: float = DEFAULT_SEED_PHOTONS,
) -> InversionResult:
    """Find (gain, transmission) reproducing measured (G_eff, r).

    A damped Newton iteration with a numerical Jacobian does the work;
    when it stalls, a nested bisection that exploits the monotonicity of
    both observables takes over.  Feasibility is screened first: with any
    amplification the conjugate must carry at least (G_eff - 1)/G_eff of
    the probe power, so e.g. gain without a conjugate beam is rejected.

    Raises
    ------
    InfeasibleObservablesError
        If no physical (gain, transmission) can reproduce the pair.
    ConvergenceError
        If the solvers cannot reach the residual tolerance.
    """
    g_eff = float(effective_gain)
    ratio = float(conjugate_probe_ratio)
    if not np.isfinite(g_eff) or g_eff <= 0:
        raise InfeasibleObservablesError(f"effective gain must be > 0, got {g_eff}")
    if not np.isfinite(ratio) or ratio < 0:
        raise InfeasibleObservablesError(f"conjugate/probe ratio must be >= 0, got {ratio}")

    target = (g_eff, ratio)

    if ratio < 1e-12:
        # no conjugate light means no amplification: pure loss
        if g_eff > 1.0 + 1e-9:
            raise InfeasibleObservablesError(
                f"effective gain {g_eff} > 1 requires a conjugate beam (ratio > 0)"
            )
        gain, transmission = 1.0, min(g_eff, 1.0)
        pred = _observables(gain, transmission, stages, seed_photons)
        return InversionResult(gain, transmission, _residual(pred, target), 0)

    if g_eff > 1.0:
        # cheapest reachability screen: at T = 1 the ratio is (G - 1)/G
        floor = (g_eff - 1.0) / g_eff
        if ratio < floor * (1.0 - 1e-7) - 1e-12:
            raise InfeasibleObservablesError(
                f"ratio {ratio} is below (G_eff - 1)/G_eff = {floor:.6g}; "
                "no transmission can suppress the conjugate that far"
            )

    # initial guess: treat the pair as if the medium were lossless, then
    # correct the transmission by the probe deficit
    gain = max(1.0 + 1e-9, 1.0 / max(1.0 - ratio, 1e-3)) if ratio < 1.0 else 1.0 + ratio
    transmission = min(1.0, max(_T_FLOOR, g_eff / gain))

    pred = _observables(gain, transmission, stages, seed_photons)
    res = _residual(pred, target)
    iterations = 0
    for iterations in range(1, _MAX_NEWTON_ITERATIONS + 1):
        if res < RESIDUAL_TOL:
            break
        h_g = 1e-6 * max(1.0, gain)
        h_t = 1e-6
        if gain + h_g > _GAIN_CAP:
            h_g = -h_g
        if transmission + h_t > 1.0:
            h_t = -h_t
        f0 = np.array(pred)
        fg = np.array(_observables(gain + h_g, transmission, stages, seed_photons))
        ft = np.array(_observables(gain, transmission + h_t, stages, seed_photons))
        jac = np.column_stack(((fg - f0) / h_g, (ft - f0) / h_t))
        rhs = np.array(target) - f0
        try:
            step = np.linalg.solve(jac, rhs)
        except np.linalg.LinAlgError:
            break
        scale = 1.0
        improved = False
        for _ in range(25):
            g_new = min(max(gain + scale * step[0], 1.0), _GAIN_CAP)
            t_new = min(max(transmission + scale * step[1], _T_FLOOR), 1.0)
            pred_new = _observables(g_new, t_new, stages, seed_photons)
            res_new = _residual(pred_new, target)
            if res_new < res:
                gain, transmission, pred, res = g_new, t_new, pred_new, res_new
                improved = True
                break
            scale *= 0.5
        if not improved:
            break

    if res >= RESIDUAL_TOL:
        gain, transmission = _bisect_on_gain(target, stages, seed_photons)
        pred = _observables(gain, transmission, stages, seed_photons)
        res = _residual(pred, target)
        if res >= RESIDUAL_TOL:
            raise ConvergenceError(
                f"inversion stalled at relative residual {res:.3e} for "
                f"(G_eff, r) = ({g_eff}, {ratio})"
            )
    return InversionResult(
        gain=float(gain),
        transmission=float(transmission),
        residual=float(res),
        iterations=iterations,
    )


@dataclass(frozen=True)
class DetectionCorrection:
    """Measured squeezing and the source-plane value behind the detectors."""

    measured: float
    measured_db: float
    source: float
    source_db: float
    efficiency: float


def correct_for_detection(measured: float, efficiency: float) -> DetectionCorrection:
    """Remove balanced detection loss from a measured squeezing ratio.

    Detection of efficiency eta mixes vacuum into both beams, so the
    measured ratio is S_meas = eta * S_source + (1 - eta).  Inverting is
    exact; it fails only when the measurement sits at or below the vacuum
    floor 1 - eta, which no physical source can produce.

    Raises
    ------
    UnphysicalMeasurementError
        If ``measured`` <= 1 - efficiency.
    """
    if not np.isfinite(efficiency) or not 0.0 < efficiency <= 1.0:
        raise InvalidTransmissionError(
            f"detection efficiency must lie in (0, 1], got {efficiency}"
        )
    if not np.isfinite(measured) or measured <= 0.0:
        raise UnphysicalMeasurementError(
            f"measured squeezing ratio must be > 0, got {measured}"
        )
    floor = 1.0 - efficiency
    if measured <= floor:
        raise UnphysicalMeasurementError(
            f"measured ratio {measured} is at or below the vacuum floor "
            f"{floor:.6g} set by efficiency {efficiency}"
        )
    source = (measured - floor) / efficiency
    return DetectionCorrection(
        measured=float(measured),
        measured_db=10.0 * math.log10(measured),
        source=float(source),
        source_db=10.0 * math.log10(source),
        efficiency=float(efficiency),
    )
