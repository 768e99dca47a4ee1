"""Tests for the truncated Fock-space oracle: exact states, channels, chains."""

import numpy as np
import numpy.testing as npt
import pytest

from twinbeam.errors import InvalidTransmissionError, TruncationError
from twinbeam.fock import (
    FockDensity,
    FockState,
    oracle_chain,
    oracle_loss,
    oracle_observables,
    oracle_squeeze,
)
from twinbeam.medium import DetectionParams, MediumParams, reduced_photon_stats


def test_vacuum_state_basics():
    state = FockState.vacuum(8)
    npt.assert_allclose(state.norm(), 1.0, rtol=1e-15)
    pmf = state.joint_pmf()
    assert pmf[0, 0] == pytest.approx(1.0)
    assert state.leakage() == 0.0


def test_coherent_probe_is_poissonian():
    n_bar = 3.0
    state = FockState.coherent_probe(n_bar, n_max=40)
    stats = oracle_observables(state)
    npt.assert_allclose(stats.mean_a, n_bar, rtol=1e-10)
    npt.assert_allclose(stats.var_a, n_bar, rtol=1e-10)
    npt.assert_allclose(stats.mean_b, 0.0, atol=1e-15)
    assert state.leakage() < 1e-12


def test_thermal_probe_moments():
    n_bar = 1.5
    rho = FockDensity.thermal_probe(n_bar, n_max=48)
    npt.assert_allclose(rho.trace(), 1.0, rtol=1e-10)
    stats = oracle_observables(rho)
    # geometric tail beyond the cutoff costs ~1e-8 on the second moment
    npt.assert_allclose(stats.mean_a, n_bar, rtol=1e-8)
    npt.assert_allclose(stats.var_a, n_bar * (n_bar + 1.0), rtol=1e-7)


@pytest.mark.parametrize("gain", [1.2, 2.0, 3.0])
def test_squeezed_vacuum_amplitudes(gain):
    """Amplifying vacuum gives the two-mode squeezed ladder (-tanh r)^n / cosh r."""
    # cutoff 40 puts the truncation boundary far enough from the low levels
    out = oracle_squeeze(gain, FockState.vacuum(40))
    r = np.arccosh(np.sqrt(gain))
    for n in range(6):
        expected = (-np.tanh(r)) ** n / np.cosh(r)
        npt.assert_allclose(out.amplitudes[n, n].real, expected, rtol=1e-12)
        npt.assert_allclose(out.amplitudes[n, n].imag, 0.0, atol=1e-14)
    off_diag = out.amplitudes.copy()
    np.fill_diagonal(off_diag, 0.0)
    npt.assert_allclose(np.abs(off_diag).max(), 0.0, atol=1e-13)


def test_squeeze_preserves_norm_and_trace():
    state = FockState.coherent_probe(1.0, n_max=32)
    out = oracle_squeeze(1.8, state)
    npt.assert_allclose(out.norm(), 1.0, rtol=1e-12)

    rho = FockDensity.thermal_probe(0.5, n_max=32)
    out_rho = oracle_squeeze(1.8, rho)
    npt.assert_allclose(out_rho.trace(), 1.0, rtol=1e-12)


def test_squeeze_at_unit_gain_is_identity():
    state = FockState.coherent_probe(2.0, n_max=24)
    out = oracle_squeeze(1.0, state)
    npt.assert_allclose(out.amplitudes, state.amplitudes, atol=1e-15)


def test_squeeze_commutes_with_purification():
    state = FockState.coherent_probe(0.8, n_max=24)
    via_pure = FockDensity.from_pure(oracle_squeeze(1.6, state))
    via_density = oracle_squeeze(1.6, FockDensity.from_pure(state))
    npt.assert_allclose(via_density.rho, via_pure.rho, atol=1e-13)


def test_seeded_amplifier_difference_variance_equals_seed():
    seed = 2.0
    out = oracle_squeeze(2.0, FockState.coherent_probe(seed, n_max=64))
    stats = oracle_observables(out)
    npt.assert_allclose(stats.mean_a, 2.0 * seed + 1.0, rtol=1e-9)
    npt.assert_allclose(stats.mean_b, 1.0 * (seed + 1.0), rtol=1e-9)
    npt.assert_allclose(stats.var_diff, seed, rtol=1e-8)


def test_loss_validates_transmission():
    state = FockState.vacuum(8)
    with pytest.raises(InvalidTransmissionError):
        oracle_loss(1.5, state)
    with pytest.raises(InvalidTransmissionError):
        oracle_loss(-0.2, state)


def test_loss_at_unit_transmission_is_identity():
    state = oracle_squeeze(1.5, FockState.coherent_probe(1.0, n_max=28))
    rho = oracle_loss(1.0, state)
    npt.assert_allclose(rho.rho, FockDensity.from_pure(state).rho, atol=1e-14)


def test_loss_at_zero_transmission_empties_target():
    state = oracle_squeeze(1.5, FockState.coherent_probe(1.0, n_max=28))
    rho = oracle_loss(0.0, state, target="a")
    stats = oracle_observables(rho)
    npt.assert_allclose(stats.mean_a, 0.0, atol=1e-12)
    # conjugate is untouched by probe loss
    ref = oracle_observables(state)
    npt.assert_allclose(stats.mean_b, ref.mean_b, rtol=1e-10)


@pytest.mark.parametrize("target", ["a", "b"])
@pytest.mark.parametrize("transmission", [0.3, 0.7, 0.95])
def test_loss_channel_matches_beamsplitter_route(target, transmission):
    """Kraus channel and explicit beam splitter plus trace agree to rounding."""
    state = oracle_squeeze(1.7, FockState.coherent_probe(1.5, n_max=26))
    via_channel = oracle_loss(transmission, state, target=target, method="channel")
    via_bs = oracle_loss(transmission, state, target=target, method="beamsplitter")
    npt.assert_allclose(via_bs.rho, via_channel.rho, atol=1e-13)
    npt.assert_allclose(via_channel.trace(), 1.0, rtol=1e-12)


def test_loss_scales_means_linearly():
    state = oracle_squeeze(1.6, FockState.coherent_probe(2.0, n_max=32))
    before = oracle_observables(state)
    after = oracle_observables(oracle_loss(0.6, state, target="a"))
    npt.assert_allclose(after.mean_a, 0.6 * before.mean_a, rtol=1e-10)
    npt.assert_allclose(after.mean_b, before.mean_b, rtol=1e-10)


@pytest.mark.parametrize(
    "gain, transmission, stages, seed, eta",
    [
        (1.5, 0.8, 3, 2.0, 1.0),
        (1.5, 1.0, 1, 0.0, 1.0),
        (2.0, 0.9, 2, 1.0, 0.9),
        (1.2, 0.7, 3, 0.0, 0.8),
    ],
)
def test_chain_matches_gaussian_engine(gain, transmission, stages, seed, eta):
    run = oracle_chain(
        gain, transmission, stages, seed_photons=seed, eta=eta, n_max=40
    )
    assert run.leakage < 1e-10
    params = MediumParams(gain=gain, transmission=transmission, stages=stages)
    ref = reduced_photon_stats(
        params, DetectionParams(eta), seed_photons=seed
    )
    npt.assert_allclose(run.stats.mean_a, ref.mean_a, rtol=1e-9, atol=1e-12)
    npt.assert_allclose(run.stats.mean_b, ref.mean_b, rtol=1e-9, atol=1e-12)
    npt.assert_allclose(run.stats.var_diff, ref.var_diff, rtol=1e-9, atol=1e-12)


def test_chain_grows_cutoff_until_certified():
    run = oracle_chain(2.0, 1.0, 1, seed_photons=1.0, n_max=12)
    assert run.leakage < 1e-10
    assert run.n_max > 12


def test_chain_raises_when_cap_blocks_certification():
    with pytest.raises(TruncationError):
        oracle_chain(2.0, 1.0, 2, seed_photons=4.0, n_max=12, n_max_cap=12)


def test_observables_normalize_by_trace():
    state = FockState.coherent_probe(1.0, n_max=24)
    scaled = FockState(0.5 * state.amplitudes)
    stats = oracle_observables(scaled)
    npt.assert_allclose(stats.mean_a, 1.0, rtol=1e-10)


def test_leakage_drops_with_cutoff():
    small = FockState.coherent_probe(4.0, n_max=10)
    large = FockState.coherent_probe(4.0, n_max=30)
    assert small.leakage() > large.leakage()
    assert large.leakage() < 1e-12
