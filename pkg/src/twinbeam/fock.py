"""Brute-force truncated Fock-space simulation of two-mode gain and loss.

Ground-truth engine for validating the Gaussian machinery at small photon
number.  States are stored as explicit amplitude tensors (density operators
once loss has acted), every operation is a finite matrix, and observables
come from direct summation over the occupation basis, so nothing here
shares code or assumptions with the covariance-matrix path.

Cost grows as n_max^4 in memory and roughly n_max^5 in time once the state
is mixed; this is strictly a small-instance tool.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
import scipy.linalg
import scipy.sparse
from scipy.special import gammaln

from .errors import (
    InvalidGainError,
    InvalidTransmissionError,
    ModeMismatchError,
    TruncationError,
)
from .gaussian import CONJUGATE, PROBE, PhotonStats

#: Default certified bound on probability stranded in the top Fock shells.
DEFAULT_LEAK_TOL = 1e-10


def _top_shell_weight(pmf: np.ndarray) -> float:
    """Probability in the highest-occupation shell of either mode."""
    return float(pmf[-1, :].sum() + pmf[:, -1].sum() - pmf[-1, -1])


@dataclass(frozen=True)
class FockState:
    """Pure two-mode state; ``amplitudes[n_probe, n_conjugate]`` on a square cutoff."""

    amplitudes: np.ndarray

    def __post_init__(self):
        amp = np.asarray(self.amplitudes, dtype=complex)
        if amp.ndim != 2 or amp.shape[0] != amp.shape[1]:
            raise ModeMismatchError(f"amplitude tensor must be square, got {amp.shape}")
        object.__setattr__(self, "amplitudes", amp)

    @property
    def n_max(self) -> int:
        return self.amplitudes.shape[0] - 1

    @classmethod
    def vacuum(cls, n_max: int) -> "FockState":
        amp = np.zeros((n_max + 1, n_max + 1), dtype=complex)
        amp[0, 0] = 1.0
        return cls(amp)

    @classmethod
    def coherent_probe(cls, seed_photons: float, n_max: int) -> "FockState":
        """Coherent probe of mean photon number ``seed_photons``, vacuum conjugate."""
        if seed_photons < 0:
            raise ValueError(f"seed photon number must be >= 0, got {seed_photons}")
        amp = np.zeros((n_max + 1, n_max + 1), dtype=complex)
        if seed_photons == 0.0:
            amp[0, 0] = 1.0
        else:
            n = np.arange(n_max + 1)
            log_c = -0.5 * seed_photons + 0.5 * n * math.log(seed_photons) - 0.5 * gammaln(n + 1.0)
            amp[:, 0] = np.exp(log_c)
        return cls(amp)

    def norm(self) -> float:
        return float(np.sqrt((np.abs(self.amplitudes) ** 2).sum()))

    def joint_pmf(self) -> np.ndarray:
        return np.abs(self.amplitudes) ** 2

    def leakage(self) -> float:
        return _top_shell_weight(self.joint_pmf())


@dataclass(frozen=True)
class FockDensity:
    """Mixed two-mode state; ``rho[na, nb, ma, mb]`` = <na nb|rho|ma mb>."""

    rho: np.ndarray

    def __post_init__(self):
        rho = np.asarray(self.rho, dtype=complex)
        if rho.ndim != 4 or len(set(rho.shape)) != 1:
            raise ModeMismatchError(f"density tensor must be DxDxDxD, got {rho.shape}")
        object.__setattr__(self, "rho", rho)

    @property
    def n_max(self) -> int:
        return self.rho.shape[0] - 1

    @classmethod
    def from_pure(cls, state: FockState) -> "FockDensity":
        amp = state.amplitudes
        return cls(np.einsum("ab,cd->abcd", amp, amp.conj()))

    @classmethod
    def thermal_probe(cls, mean_photons: float, n_max: int) -> "FockDensity":
        """Thermal probe of mean ``mean_photons``, vacuum conjugate (test fixture)."""
        if mean_photons < 0:
            raise ValueError(f"thermal mean must be >= 0, got {mean_photons}")
        d = n_max + 1
        n = np.arange(d)
        if mean_photons == 0.0:
            probs = np.zeros(d)
            probs[0] = 1.0
        else:
            ratio = mean_photons / (mean_photons + 1.0)
            probs = ratio**n / (mean_photons + 1.0)
        rho = np.zeros((d, d, d, d), dtype=complex)
        rho[n, 0, n, 0] = probs
        return cls(rho)

    def trace(self) -> float:
        return float(np.einsum("abab->", self.rho).real)

    def joint_pmf(self) -> np.ndarray:
        return np.einsum("abab->ab", self.rho).real

    def leakage(self) -> float:
        return _top_shell_weight(self.joint_pmf())


@lru_cache(maxsize=32)
def _squeeze_unitary(r: float, dim: int) -> scipy.sparse.csr_matrix:
    """exp(r (ab - a_dag b_dag)) on the flattened two-mode basis (na * dim + nb).

    The generator conserves na - nb, so the unitary is block diagonal over
    that difference; each block is the exponential of a small real
    antisymmetric tridiagonal matrix, hence real orthogonal.  Sparse storage
    keeps the full operator at ~dim^3 nonzeros.
    """
    rows, cols, vals = [], [], []
    for delta in range(-dim + 1, dim):
        size = dim - abs(delta)
        if delta >= 0:
            na = delta + np.arange(size)
            nb = np.arange(size)
        else:
            nb = -delta + np.arange(size)
            na = np.arange(size)
        # raising amplitude from block index k to k + 1
        amp = np.sqrt((na[:-1] + 1.0) * (nb[:-1] + 1.0))
        k_mat = np.zeros((size, size))
        k_mat += np.diag(r * amp, k=1)
        k_mat -= np.diag(r * amp, k=-1)
        u_block = scipy.linalg.expm(k_mat)
        flat = na * dim + nb
        rows.append(np.repeat(flat, size))
        cols.append(np.tile(flat, size))
        vals.append(u_block.ravel())
    rows = np.concatenate(rows)
    cols = np.concatenate(cols)
    vals = np.concatenate(vals)
    u = scipy.sparse.coo_matrix((vals, (rows, cols)), shape=(dim * dim, dim * dim))
    return u.tocsr()


def oracle_squeeze(gain: float, state: FockState | FockDensity):
    """Two-mode squeeze of intensity gain G applied in the truncated basis.

    Same sign convention as the Gaussian engine: a -> sqrt(G) a - sqrt(G-1) b_dag.
    Pure states stay pure; density operators are conjugated by the unitary.
    """
    if not np.isfinite(gain) or gain < 1.0:
        raise InvalidGainError(f"gain must be >= 1, got {gain}")
    if gain == 1.0:
        return state
    r = math.acosh(math.sqrt(gain))
    dim = state.n_max + 1
    u = _squeeze_unitary(r, dim)
    if isinstance(state, FockState):
        vec = state.amplitudes.reshape(-1)
        return FockState((u @ vec).reshape(dim, dim))
    flat = state.rho.reshape(dim * dim, dim * dim)
    half = u @ flat
    # U is real orthogonal, so rho' = U rho U^T = (U (U rho)^T)^T
    full = (u @ half.T).T
    return FockDensity(full.reshape(dim, dim, dim, dim))


def _loss_coefficients(transmission: float, dim: int) -> np.ndarray:
    """c[m, k] = sqrt(C(m + k, k) T^m (1 - T)^k); Kraus E_k maps |m + k> -> c[m, k] |m>."""
    c = np.zeros((dim, dim))
    if transmission == 0.0:
        c[0, :] = 1.0
        return c
    log_t = math.log(transmission)
    log_r = math.log1p(-transmission) if transmission < 1.0 else -math.inf
    for k in range(dim):
        if k > 0 and transmission == 1.0:
            break
        m = np.arange(dim - k)
        log_binom = gammaln(m + k + 1.0) - gammaln(m + 1.0) - gammaln(k + 1.0)
        c[: dim - k, k] = np.exp(0.5 * (log_binom + m * log_t + k * log_r))
    return c


def _beamsplitter_unitary(transmission: float, dim: int) -> scipy.sparse.csr_matrix:
    """exp(theta (a_dag c - a c_dag)) with cos(theta) = sqrt(T) on (n_a * dim + n_c)."""
    theta = math.atan2(math.sqrt(1.0 - transmission), math.sqrt(transmission))
    rows, cols, vals = [], [], []
    for total in range(2 * dim - 1):
        n_t = np.arange(max(0, total - dim + 1), min(total, dim - 1) + 1)
        n_c = total - n_t
        size = n_t.size
        # a_dag c moves (n_t, n_c) -> (n_t + 1, n_c - 1), block index k -> k + 1
        amp = np.sqrt((n_t[:-1] + 1.0) * n_c[:-1])
        k_mat = np.zeros((size, size))
        k_mat += np.diag(-theta * amp, k=1)
        k_mat -= np.diag(-theta * amp, k=-1)
        u_block = scipy.linalg.expm(k_mat)
        flat = n_t * dim + n_c
        rows.append(np.repeat(flat, size))
        cols.append(np.tile(flat, size))
        vals.append(u_block.ravel())
    u = scipy.sparse.coo_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
        shape=(dim * dim, dim * dim),
    )
    return u.tocsr()


@lru_cache(maxsize=32)
def _loss_superoperator(transmission: float, dim: int) -> scipy.sparse.csr_matrix:
    """Loss channel as one sparse matrix on the (ket, bra) index pair of one mode.

    Summing the Kraus sandwich over k gives
    L[(m, m'), (n, n')] = sum_k c[m, k] c[m', k] delta(n, m + k) delta(n', m' + k),
    applied as L @ rho with rho reshaped so the lossy mode's two indices
    are the leading flattened pair.
    """
    c = _loss_coefficients(transmission, dim)
    rows, cols, vals = [], [], []
    for k in range(dim):
        w = c[: dim - k, k]
        if not w.any():
            continue
        m = np.arange(dim - k)
        rows.append((m[:, None] * dim + m[None, :]).ravel())
        cols.append(((m[:, None] + k) * dim + (m[None, :] + k)).ravel())
        vals.append((w[:, None] * w[None, :]).ravel())
    op = scipy.sparse.coo_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
        shape=(dim * dim, dim * dim),
    )
    return op.tocsr()


def _loss_via_channel(rho: np.ndarray, transmission: float, ax_ket: int, ax_bra: int):
    dim = rho.shape[0]
    op = _loss_superoperator(transmission, dim)
    # bring the lossy mode's ket/bra axes to the front, act, restore
    order = (ax_ket, ax_bra) + tuple(ax for ax in range(4) if ax not in (ax_ket, ax_bra))
    moved = np.ascontiguousarray(rho.transpose(order)).reshape(dim * dim, dim * dim)
    moved = (op @ moved).reshape(dim, dim, dim, dim)
    inverse = np.argsort(order)
    return np.ascontiguousarray(moved.transpose(inverse))


def _loss_via_beamsplitter(state: FockState, transmission: float, target: str):
    """Attach a vacuum ancilla, rotate, and trace it out.  Pure input only."""
    dim = state.n_max + 1
    amp = state.amplitudes
    if target == CONJUGATE:
        amp = amp.T
    psi = np.zeros((dim, dim, dim), dtype=complex)
    psi[:, 0, :] = amp  # axes (target, ancilla, spectator)
    u = _beamsplitter_unitary(transmission, dim)
    psi = (u @ psi.reshape(dim * dim, dim)).reshape(dim, dim, dim)
    # rho[t, s, t', s'] = sum_c psi[t, c, s] conj(psi[t', c, s'])
    rho = np.einsum("tcs,ucv->tsuv", psi, psi.conj())
    if target == CONJUGATE:
        rho = rho.transpose(1, 0, 3, 2)
    return FockDensity(rho)


def oracle_loss(
    transmission: float,
    state: FockState | FockDensity,
    target: str = PROBE,
    method: str = "channel",
) -> FockDensity:
    """Photon loss on one mode of a truncated state.

    ``method='channel'`` applies the Kraus operators of the loss channel
    directly; ``method='beamsplitter'`` couples the target to an explicit
    vacuum ancilla with exp(theta (a_dag c - a c_dag)) and traces it out.
    Both routes are exact on the truncated space and must agree, which is
    checked in the test suite.
    """
    if not np.isfinite(transmission) or not 0.0 <= transmission <= 1.0:
        raise InvalidTransmissionError(
            f"transmission must lie in [0, 1], got {transmission}"
        )
    if target not in (PROBE, CONJUGATE):
        raise ModeMismatchError(f"target must be {PROBE!r} or {CONJUGATE!r}, got {target!r}")
    if method == "beamsplitter":
        if not isinstance(state, FockState):
            raise ModeMismatchError("beamsplitter route needs a pure input state")
        return _loss_via_beamsplitter(state, transmission, target)
    if method != "channel":
        raise ValueError(f"unknown loss method {method!r}")
    if isinstance(state, FockState):
        state = FockDensity.from_pure(state)
    if transmission == 1.0:
        return state
    ax_ket, ax_bra = (0, 2) if target == PROBE else (1, 3)
    return FockDensity(_loss_via_channel(state.rho, transmission, ax_ket, ax_bra))


def oracle_observables(state: FockState | FockDensity) -> PhotonStats:
    """Exact photon statistics by direct summation over the occupation basis."""
    pmf = state.joint_pmf()
    total = pmf.sum()
    if total <= 0.0:
        raise ValueError("state has vanishing norm")
    pmf = pmf / total
    dim = pmf.shape[0]
    n = np.arange(dim, dtype=float)
    p_a = pmf.sum(axis=1)
    p_b = pmf.sum(axis=0)
    mean_a = float(n @ p_a)
    mean_b = float(n @ p_b)
    var_a = float(n**2 @ p_a) - mean_a**2
    var_b = float(n**2 @ p_b) - mean_b**2
    mean_ab = float(n @ pmf @ n)
    cov_ab = mean_ab - mean_a * mean_b
    return PhotonStats(
        mean_a=mean_a,
        mean_b=mean_b,
        var_a=var_a,
        var_b=var_b,
        cov_ab=cov_ab,
        var_diff=var_a + var_b - 2.0 * cov_ab,
    )


@dataclass(frozen=True)
class OracleRun:
    """Outcome of a certified oracle chain: statistics plus truncation evidence."""

    stats: PhotonStats
    n_max: int
    leakage: float


#: Refuse density-operator cutoffs whose working set would exceed this.
_DENSITY_BYTES_BUDGET = 3 * 2**30


def _estimate_n_max(gain: float, transmission: float, seed_photons: float, eta: float) -> int:
    # crude upper estimate of the largest per-mode mean along the chain,
    # then enough shells that a geometric-ish tail can pass 1e-10
    peak = gain * (seed_photons + 1.0) + 2.0
    guess = int(math.ceil(peak + 10.0 * math.sqrt(peak) + 20.0))
    return min(256, max(8, guess))


def _grow_cutoff(cutoff: int, cap: int, mixed: bool) -> int:
    """Next cutoff to try after a failed certification.

    Pure chains are cheap, so double.  Mixed chains scale as cutoff^4 in
    memory; grow gently and stop before the density tensors would blow
    the memory budget rather than thrash.
    """
    if not mixed:
        return min(cap, 2 * cutoff)
    grown = min(cap, 4 * (int(cutoff * 1.25) // 4 + 1))
    if 3 * 16 * (grown + 1) ** 4 > _DENSITY_BYTES_BUDGET:
        raise TruncationError(
            f"cannot certify truncation below n_max={cutoff} within the "
            "density-operator memory budget"
        )
    return grown


def oracle_chain(
    gain: float,
    transmission: float,
    stages: int,
    seed_photons: float = 0.0,
    eta: float = 1.0,
    leak_tol: float = DEFAULT_LEAK_TOL,
    n_max: int | None = None,
    n_max_cap: int = 256,
) -> OracleRun:
    """Run the interleaved gain/loss cascade in the truncated Fock basis.

    Splits the total gain and transmission into ``stages`` equal elementary
    steps exactly as the medium model defines them, applies each step with
    the brute-force operators above, and certifies the truncation by the
    worst top-shell weight seen anywhere along the chain.  The cutoff is
    doubled and the chain re-run until the leak bound holds.

    Raises
    ------
    TruncationError
        If certification fails even at ``n_max_cap``.
    """
    if stages < 1:
        raise ValueError(f"stages must be >= 1, got {stages}")
    if not 0.0 < eta <= 1.0:
        raise InvalidTransmissionError(f"eta must lie in (0, 1], got {eta}")
    if not np.isfinite(gain) or gain < 1.0:
        raise InvalidGainError(f"gain must be >= 1, got {gain}")
    if not np.isfinite(transmission) or not 0.0 < transmission <= 1.0:
        raise InvalidTransmissionError(
            f"transmission must lie in (0, 1], got {transmission}"
        )
    g_elem = math.cosh(math.acosh(math.sqrt(gain)) / stages) ** 2
    t_elem = transmission ** (1.0 / stages)

    cutoff = n_max if n_max is not None else _estimate_n_max(gain, transmission, seed_photons, eta)
    while True:
        state: FockState | FockDensity = FockState.coherent_probe(seed_photons, cutoff)
        worst = state.leakage()
        for _ in range(stages):
            state = oracle_squeeze(g_elem, state)
            worst = max(worst, state.leakage())
            if t_elem < 1.0:
                state = oracle_loss(t_elem, state, target=PROBE)
                worst = max(worst, state.leakage())
            if worst > leak_tol:
                break
        if worst <= leak_tol and eta < 1.0:
            state = oracle_loss(eta, state, target=PROBE)
            state = oracle_loss(eta, state, target=CONJUGATE)
            worst = max(worst, state.leakage())
        if worst <= leak_tol:
            return OracleRun(stats=oracle_observables(state), n_max=cutoff, leakage=worst)
        if cutoff >= n_max_cap:
            raise TruncationError(
                f"top-shell leakage {worst:.3e} above {leak_tol:.1e} at n_max={cutoff}"
            )
        cutoff = _grow_cutoff(cutoff, n_max_cap, mixed=t_elem < 1.0 or eta < 1.0)
