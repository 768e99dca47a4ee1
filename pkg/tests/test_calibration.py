"""Tests for observable inversion and detection-efficiency correction."""

import numpy as np
import numpy.testing as npt
import pytest

from twinbeam.calibration import (
    RESIDUAL_TOL,
    correct_for_detection,
    invert_observables,
)
from twinbeam.errors import (
    InfeasibleObservablesError,
    InvalidTransmissionError,
    UnphysicalMeasurementError,
)
from twinbeam.medium import DetectionParams, MediumParams, forward_map, simulate_twin_beams


@pytest.mark.parametrize(
    "gain, transmission",
    [(9.0, 0.9), (2.0, 0.7), (15.0, 0.95), (1.5, 0.99), (20.0, 0.6)],
)
def test_inversion_round_trip(gain, transmission):
    geff, ratio = forward_map(MediumParams(gain, transmission))
    result = invert_observables(geff, ratio)
    npt.assert_allclose(result.gain, gain, rtol=1e-6)
    npt.assert_allclose(result.transmission, transmission, rtol=1e-6)
    assert result.residual < RESIDUAL_TOL
    assert result.iterations >= 1


def test_inversion_lossless_boundary():
    geff, ratio = forward_map(MediumParams(9.0, 1.0))
    result = invert_observables(geff, ratio)
    npt.assert_allclose(result.gain, 9.0, rtol=1e-6)
    npt.assert_allclose(result.transmission, 1.0, rtol=1e-6)


def test_inversion_pure_loss():
    result = invert_observables(0.7, 0.0)
    npt.assert_allclose(result.gain, 1.0, rtol=1e-9)
    npt.assert_allclose(result.transmission, 0.7, rtol=1e-9)


def test_inversion_identity():
    result = invert_observables(1.0, 0.0)
    npt.assert_allclose(result.gain, 1.0, rtol=1e-9)
    npt.assert_allclose(result.transmission, 1.0, rtol=1e-9)


def test_inversion_rejects_gain_without_conjugate():
    with pytest.raises(InfeasibleObservablesError):
        invert_observables(9.0, 0.0)


def test_inversion_rejects_ratio_below_lossless_floor():
    # at fixed G_eff the smallest reachable ratio is (G_eff - 1)/G_eff (T = 1)
    with pytest.raises(InfeasibleObservablesError):
        invert_observables(9.0, 0.5)


def test_inversion_validates_inputs():
    with pytest.raises(InfeasibleObservablesError):
        invert_observables(-1.0, 0.5)
    with pytest.raises(InfeasibleObservablesError):
        invert_observables(9.0, -0.2)


def test_detection_correction_inverts_mixing_law():
    p = MediumParams(9.0, 0.9)
    measured = simulate_twin_beams(p, DetectionParams(0.9)).squeezing
    source = simulate_twin_beams(p).squeezing
    corr = correct_for_detection(measured, 0.9)
    npt.assert_allclose(corr.source, source, rtol=1e-6)
    npt.assert_allclose(corr.measured_db, 10 * np.log10(measured), rtol=1e-12)
    npt.assert_allclose(corr.source_db, 10 * np.log10(source), rtol=1e-6)


def test_detection_correction_known_point():
    corr = correct_for_detection(10 ** (-0.80), 0.90)
    assert corr.source <= 10 ** (-1.10)
    assert corr.source_db < -11.0


def test_detection_correction_handles_excess_noise():
    corr = correct_for_detection(1.2, 0.9)
    npt.assert_allclose(corr.source, (1.2 - 0.1) / 0.9, rtol=1e-12)
    assert corr.source_db > 0.0


def test_detection_correction_rejects_vacuum_floor():
    floor = 1.0 - 0.9
    with pytest.raises(UnphysicalMeasurementError):
        correct_for_detection(floor, 0.9)
    with pytest.raises(UnphysicalMeasurementError):
        correct_for_detection(0.05, 0.9)
    # just above the floor still inverts
    corr = correct_for_detection(floor + 1e-6, 0.9)
    assert corr.source > 0.0


def test_detection_correction_rejects_nonpositive_measured():
    with pytest.raises(UnphysicalMeasurementError):
        correct_for_detection(0.0, 0.9)
    with pytest.raises(UnphysicalMeasurementError):
        correct_for_detection(-0.5, 0.9)


def test_detection_correction_validates_efficiency():
    with pytest.raises(InvalidTransmissionError):
        correct_for_detection(0.5, 0.0)
    with pytest.raises(InvalidTransmissionError):
        correct_for_detection(0.5, 1.2)


def test_perfect_detection_is_identity():
    corr = correct_for_detection(0.25, 1.0)
    npt.assert_allclose(corr.source, 0.25, rtol=1e-15)
    npt.assert_allclose(corr.source_db, corr.measured_db, rtol=1e-15)
