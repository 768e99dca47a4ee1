"""Tests for the interleaved gain/loss cascade and its derived observables."""

import numpy as np
import numpy.testing as npt
import pytest

from twinbeam.errors import (
    InvalidGainError,
    InvalidTransmissionError,
    NoInteriorOptimumError,
)
from twinbeam.gaussian import (
    GaussianState,
    apply,
    attenuator,
    photon_statistics,
    two_mode_squeezer,
)
from twinbeam.medium import (
    DetectionParams,
    MediumParams,
    SurfaceSpec,
    build_medium,
    find_optimum_gain,
    find_optimum_transmission,
    forward_map,
    reduced_photon_stats,
    simulate_twin_beams,
    squeezing_surface,
)


def test_params_validation():
    with pytest.raises(InvalidGainError):
        MediumParams(gain=0.5, transmission=0.9)
    with pytest.raises(InvalidTransmissionError):
        MediumParams(gain=2.0, transmission=0.0)
    with pytest.raises(InvalidTransmissionError):
        MediumParams(gain=2.0, transmission=1.2)
    with pytest.raises(ValueError):
        MediumParams(gain=2.0, transmission=0.9, stages=0)
    with pytest.raises(InvalidTransmissionError):
        DetectionParams(efficiency=0.0)
    with pytest.raises(InvalidTransmissionError):
        DetectionParams(efficiency=1.1)


@pytest.mark.parametrize("gain, transmission", [(9.0, 0.9), (25.0, 0.99)])
def test_elementary_parameters_round_trip(gain, transmission):
    p = MediumParams(gain=gain, transmission=transmission, stages=200)
    g = p.elementary_gain
    t = p.elementary_transmission
    back_gain = np.cosh(p.stages * np.arccosh(np.sqrt(g))) ** 2
    back_transmission = t**p.stages
    npt.assert_allclose(back_gain, gain, rtol=1e-12)
    npt.assert_allclose(back_transmission, transmission, rtol=1e-12)


def test_elementary_round_trip_near_unit_gain():
    # g sits close to 1, so g - 1 keeps only ~11 digits; 1e-12 is not
    # representable here and the supported precision is ~2e-16/(g - 1)
    p = MediumParams(gain=1.5, transmission=0.6, stages=200)
    back_gain = np.cosh(p.stages * np.arccosh(np.sqrt(p.elementary_gain))) ** 2
    npt.assert_allclose(back_gain, 1.5, rtol=1e-10)
    npt.assert_allclose(p.elementary_transmission**p.stages, 0.6, rtol=1e-12)


def test_lossless_cascade_equals_single_squeezer():
    p = MediumParams(gain=9.0, transmission=1.0, stages=200)
    chain = build_medium(p)
    single = two_mode_squeezer(9.0)
    i, j = chain.modes.index("a"), chain.modes.index("b")
    block = np.ix_([i, j], [i, j])
    npt.assert_allclose(chain.a[block], single.a, atol=1e-9)
    npt.assert_allclose(chain.b[block], single.b, atol=1e-9)


def test_gainless_cascade_is_pure_loss():
    p = MediumParams(gain=1.0, transmission=0.8, stages=200)
    chain = build_medium(p)
    state = GaussianState.coherent({"a": 10.0 + 0.0j}, modes=chain.modes)
    stats = photon_statistics(apply(chain, state))
    npt.assert_allclose(stats.mean_a, 0.8 * 100.0, rtol=1e-12)
    npt.assert_allclose(stats.mean_b, 0.0, atol=1e-9)


@pytest.mark.parametrize("stages", [1, 5, 10])
@pytest.mark.parametrize("loss_first", [False, True])
def test_reduced_propagation_matches_explicit_cascade(stages, loss_first):
    """The closed-form per-stage updates must equal the full ancilla chain."""
    p = MediumParams(gain=3.0, transmission=0.75, stages=stages)
    chain = build_medium(p, loss_first=loss_first)
    seed = 1e4
    state = GaussianState.coherent(
        {"a": complex(np.sqrt(seed))}, modes=chain.modes
    )
    out = apply(chain, state)
    att_a = attenuator(0.9, target="a", ancilla="da", modes=out.modes)
    out = apply(att_a, out.with_vacuum_modes("da"))
    att_b = attenuator(0.9, target="b", ancilla="db", modes=out.modes)
    out = apply(att_b, out.with_vacuum_modes("db"))
    explicit = photon_statistics(out)

    reduced = reduced_photon_stats(
        p, DetectionParams(0.9), seed_photons=seed, loss_first=loss_first
    )
    npt.assert_allclose(reduced.mean_a, explicit.mean_a, rtol=1e-10)
    npt.assert_allclose(reduced.mean_b, explicit.mean_b, rtol=1e-10)
    npt.assert_allclose(reduced.var_diff, explicit.var_diff, rtol=1e-10)


def test_unit_gain_is_shot_noise_limited():
    obs = simulate_twin_beams(MediumParams(gain=1.0, transmission=1.0))
    npt.assert_allclose(obs.squeezing, 1.0, rtol=1e-12)
    npt.assert_allclose(obs.squeezing_db, 0.0, atol=1e-11)


@pytest.mark.parametrize("gain", [2.0, 5.0])
def test_lossless_undetected_matches_ideal_law(gain):
    obs = simulate_twin_beams(MediumParams(gain=gain, transmission=1.0))
    npt.assert_allclose(obs.squeezing, 1.0 / (2.0 * gain - 1.0), rtol=1e-6)


def test_detector_mixing_law_is_exact():
    """Balanced loss eta on both beams maps S to eta*S + (1 - eta)."""
    p = MediumParams(gain=4.0, transmission=0.85)
    s_ideal = simulate_twin_beams(p).squeezing
    for eta in (0.5, 0.9, 0.99):
        s_detected = simulate_twin_beams(p, DetectionParams(eta)).squeezing
        npt.assert_allclose(s_detected, eta * s_ideal + (1.0 - eta), rtol=1e-6)


def test_squeezing_never_improves_with_worse_detection():
    p = MediumParams(gain=9.0, transmission=0.9)
    values = [
        simulate_twin_beams(p, DetectionParams(eta)).squeezing_db
        for eta in (0.6, 0.8, 0.9, 1.0)
    ]
    assert values == sorted(values, reverse=True)


def test_squeezing_is_seed_invariant_in_bright_regime():
    p = MediumParams(gain=9.0, transmission=0.9)
    det = DetectionParams(0.9)
    values = [
        simulate_twin_beams(p, det, seed_photons=n).squeezing
        for n in (1e6, 1e8, 1e10)
    ]
    spread = (max(values) - min(values)) / min(values)
    assert spread < 1e-6


def test_simulate_requires_bright_seed():
    with pytest.raises(ValueError):
        simulate_twin_beams(MediumParams(gain=2.0, transmission=0.9), seed_photons=0.0)


def test_stage_count_convergence_at_operating_point():
    det = DetectionParams(0.9)
    s200 = simulate_twin_beams(MediumParams(9.0, 0.9, stages=200), det).squeezing_db
    s400 = simulate_twin_beams(MediumParams(9.0, 0.9, stages=400), det).squeezing_db
    assert abs(s200 - s400) < 0.01


@pytest.mark.parametrize("gain, transmission", [(9.0, 0.9), (12.0, 0.9), (6.0, 0.95)])
def test_stage_ordering_insensitive_at_operating_points(gain, transmission):
    det = DetectionParams(0.9)
    p = MediumParams(gain, transmission, stages=200)
    gain_first = simulate_twin_beams(p, det, loss_first=False).squeezing_db
    loss_first = simulate_twin_beams(p, det, loss_first=True).squeezing_db
    assert abs(gain_first - loss_first) < 0.01


def test_forward_map_lossless_limits():
    geff, ratio = forward_map(MediumParams(gain=9.0, transmission=1.0))
    npt.assert_allclose(geff, 9.0, rtol=1e-6)
    npt.assert_allclose(ratio, 8.0 / 9.0, rtol=1e-6)


def test_forward_map_pure_loss():
    geff, ratio = forward_map(MediumParams(gain=1.0, transmission=0.7))
    npt.assert_allclose(geff, 0.7, rtol=1e-12)
    npt.assert_allclose(ratio, 0.0, atol=1e-12)


def test_forward_map_excludes_detection():
    # the map reports cell-boundary quantities, so there is no eta argument
    geff, ratio = forward_map(MediumParams(gain=5.0, transmission=0.9))
    assert geff > 1.0 and 0.0 < ratio < 1.0


def test_surface_grid_layout_and_minimum():
    spec = SurfaceSpec(t_min=0.85, t_max=0.95, t_steps=5, g_min=9.0, g_max=15.0, g_steps=4)
    grid = squeezing_surface(spec, DetectionParams(0.9))
    assert grid.squeezing_db.shape == (5, 4)
    assert np.all(np.isfinite(grid.squeezing_db))
    t_opt, g_opt, s_min = grid.minimum()
    i = np.argmin(grid.squeezing_db)
    ti, gi = np.unravel_index(i, grid.squeezing_db.shape)
    npt.assert_allclose(t_opt, grid.transmissions[ti])
    npt.assert_allclose(g_opt, grid.gains[gi])
    npt.assert_allclose(s_min, grid.squeezing_db[ti, gi])
    # spot-check one node against the simulator
    direct = simulate_twin_beams(
        MediumParams(grid.gains[0], grid.transmissions[0]), DetectionParams(0.9)
    ).squeezing_db
    npt.assert_allclose(grid.squeezing_db[0, 0], direct, rtol=1e-12)


def test_surface_spec_validation():
    with pytest.raises(ValueError):
        SurfaceSpec(t_min=0.9, t_max=0.8, t_steps=3, g_min=1.0, g_max=2.0, g_steps=3)
    with pytest.raises(ValueError):
        SurfaceSpec(t_min=0.8, t_max=0.9, t_steps=1, g_min=1.0, g_max=2.0, g_steps=3)


def test_lossless_column_is_monotone_toward_detection_floor():
    det = DetectionParams(0.9)
    values = [
        simulate_twin_beams(MediumParams(g, 1.0), det).squeezing_db
        for g in (2.0, 4.0, 8.0, 16.0, 32.0)
    ]
    assert values == sorted(values, reverse=True)
    floor_db = 10.0 * np.log10(1.0 - 0.9)
    assert all(v > floor_db for v in values)


def test_surface_shows_excess_noise_at_strong_loss():
    spec = SurfaceSpec(t_min=0.05, t_max=0.3, t_steps=4, g_min=10.0, g_max=20.0, g_steps=3)
    grid = squeezing_surface(spec, DetectionParams(0.9))
    assert grid.squeezing_db.max() > 0.0


@pytest.mark.parametrize("transmission", [0.7, 0.8, 0.9])
def test_optimum_gain_is_interior_local_minimum(transmission):
    det = DetectionParams(0.9)
    result = find_optimum_gain(transmission, det)
    assert result.interior
    assert 1.0 < result.location < 50.0
    s_opt = result.squeezing_db
    for delta in (-0.5, 0.5):
        p = MediumParams(result.location + delta, transmission)
        assert simulate_twin_beams(p, det).squeezing_db >= s_opt - 1e-9


def test_optimum_gain_rejects_lossless_medium():
    with pytest.raises(NoInteriorOptimumError):
        find_optimum_gain(1.0, DetectionParams(0.9))


def test_optimum_transmission_interior_at_high_gain():
    det = DetectionParams(0.9)
    result = find_optimum_transmission(12.0, det)
    assert result.interior
    assert result.location < 1.0 - 1e-3
    s_at_unity = simulate_twin_beams(MediumParams(12.0, 1.0), det).squeezing_db
    assert result.squeezing_db <= s_at_unity


def test_optimum_transmission_degenerate_at_marginal_gain():
    """Near unit gain the noise ratio keeps creeping down as T falls, so the
    scan hits its lower bound and reports that instead of inventing a minimum.
    """
    det = DetectionParams(1.0)
    s_unity = simulate_twin_beams(MediumParams(1.0001, 1.0), det).squeezing
    s_below = simulate_twin_beams(MediumParams(1.0001, 0.99), det).squeezing
    assert s_below < s_unity
    with pytest.raises(NoInteriorOptimumError):
        find_optimum_transmission(1.0001, det)


def test_optimum_transmission_rejects_unit_gain():
    with pytest.raises(NoInteriorOptimumError):
        find_optimum_transmission(1.0, DetectionParams(0.9))
