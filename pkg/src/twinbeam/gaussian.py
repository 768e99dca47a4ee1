"""Exact Gaussian-state engine for multimode amplification and loss.

Mode transforms are stored in annihilation/creation coefficient form,

    a_out[i] = sum_j (A[i, j] a[j] + B[i, j] a_dag[j]),

and applied to states in the quadrature representation x = a + a_dag,
p = -i (a - a_dag), where [x, p] = 2i and the vacuum covariance matrix
is the identity.  Photon-number moments of Gaussian states follow from
the moment (Wick) theorem and are evaluated in closed form, so intensity
correlations carry no sampling error.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import (
    InvalidGainError,
    InvalidTransmissionError,
    ModeCollisionError,
    ModeMismatchError,
)

PROBE = "a"
CONJUGATE = "b"

#: Absolute tolerance for covariance symmetry checks.
SYMMETRY_TOL = 1e-12


def _frozen_array(values, dtype) -> np.ndarray:
    out = np.array(values, dtype=dtype)
    out.flags.writeable = False
    return out


@dataclass(frozen=True)
class ModeSet:
    """Ordered, unique mode labels; probe and conjugate are always the first two.

    Ancilla modes (for loss channels) are appended after the physical pair,
    so reduced probe/conjugate observables never depend on how many ancillas
    a transform happened to consume.
    """

    labels: tuple[str, ...] = (PROBE, CONJUGATE)

    def __post_init__(self):
        labels = tuple(self.labels)
        object.__setattr__(self, "labels", labels)
        if len(set(labels)) != len(labels):
            raise ModeCollisionError(f"duplicate mode labels in {labels!r}")
        if len(labels) < 2 or labels[0] != PROBE or labels[1] != CONJUGATE:
            raise ModeMismatchError(
                f"mode sets must start with ({PROBE!r}, {CONJUGATE!r}); got {labels!r}"
            )

    def __len__(self) -> int:
        return len(self.labels)

    def __iter__(self):
        return iter(self.labels)

    def __contains__(self, label) -> bool:
        return label in self.labels

    def index(self, label: str) -> int:
        try:
            return self.labels.index(label)
        except ValueError:
            raise ModeMismatchError(f"mode {label!r} not in {self.labels!r}") from None

    def extended(self, *new_labels: str) -> "ModeSet":
        """Return a new set with ``new_labels`` appended; labels must be fresh."""
        for label in new_labels:
            if label in self.labels:
                raise ModeCollisionError(f"mode label {label!r} already in use")
        return ModeSet(self.labels + tuple(new_labels))


@dataclass(frozen=True)
class BogoliubovTransform:
    """Linear mode transform a_out[i] = sum_j A[i, j] a[j] + B[i, j] a_dag[j].

    Canonical commutation relations require A A^dag - B B^dag = I and
    A B^T symmetric; every constructor in this module satisfies both
    identically, and :meth:`defect` measures how well a composed or
    hand-built transform does.
    """

    modes: ModeSet
    a: np.ndarray
    b: np.ndarray

    def __post_init__(self):
        n = len(self.modes)
        a = _frozen_array(self.a, complex)
        b = _frozen_array(self.b, complex)
        if a.shape != (n, n) or b.shape != (n, n):
            raise ModeMismatchError(
                f"coefficient blocks must be {n}x{n} for {n} modes; "
                f"got {a.shape} and {b.shape}"
            )
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "b", b)

    def defect(self) -> float:
        """Largest violation of the canonical commutation conditions."""
        n = len(self.modes)
        comm = self.a @ self.a.conj().T - self.b @ self.b.conj().T - np.eye(n)
        sym = self.a @ self.b.T
        sym = sym - sym.T
        return max(np.abs(comm).max(), np.abs(sym).max())

    def symplectic(self) -> np.ndarray:
        """Real symplectic matrix acting on (x_1, p_1, x_2, p_2, ...).

        Derived by expanding x' and p' of each output mode in the input
        quadratures; the 2x2 block coupling mode j into mode i is

            [[Re(A + B), Im(B - A)],
             [Im(A + B), Re(A - B)]]   evaluated at (i, j).
        """
        n = len(self.modes)
        s = np.empty((2 * n, 2 * n))
        ar, ai = self.a.real, self.a.imag
        br, bi = self.b.real, self.b.imag
        s[0::2, 0::2] = ar + br
        s[0::2, 1::2] = bi - ai
        s[1::2, 0::2] = ai + bi
        s[1::2, 1::2] = ar - br
        return s


def identity_transform(modes: ModeSet | None = None) -> BogoliubovTransform:
    """The do-nothing transform on ``modes``."""
    modes = modes if modes is not None else ModeSet()
    n = len(modes)
    return BogoliubovTransform(modes, np.eye(n, dtype=complex), np.zeros((n, n), complex))


def two_mode_squeezer(gain: float, modes: ModeSet | None = None) -> BogoliubovTransform:
    """Nondegenerate parametric amplifier coupling probe and conjugate.

    Acts as a -> sqrt(G) a - sqrt(G - 1) b_dag and the mirror relation on
    the conjugate, so the intensity of a bright probe grows by G while the
    conjugate picks up G - 1 times the input intensity (plus one noise
    photon's worth of spontaneous emission).

    Parameters
    ----------
    gain : float
        Intensity gain G >= 1.  G = 1 is the identity.
    modes : ModeSet, optional
        Pair to act on; defaults to the probe/conjugate pair.
    """
    if not np.isfinite(gain) or gain < 1.0:
        raise InvalidGainError(f"gain must be >= 1, got {gain}")
    modes = modes if modes is not None else ModeSet()
    if len(modes) != 2:
        raise ModeMismatchError("two_mode_squeezer acts on exactly two modes")
    u = np.sqrt(gain)
    v = np.sqrt(gain - 1.0)
    a = np.array([[u, 0.0], [0.0, u]], dtype=complex)
    b = np.array([[0.0, -v], [-v, 0.0]], dtype=complex)
    return BogoliubovTransform(modes, a, b)


def attenuator(
    transmission: float,
    target: str = PROBE,
    ancilla: str = "c1",
    modes: ModeSet | None = None,
) -> BogoliubovTransform:
    """Beam-splitter loss on one mode, written out with its vacuum ancilla.

    The returned transform lives on ``modes`` extended by ``ancilla``:
    target -> sqrt(T) target + sqrt(1 - T) ancilla.  Keeping the ancilla
    explicit keeps the transform canonical; reduced observables simply
    never look at it.

    Raises
    ------
    InvalidTransmissionError
        If ``transmission`` is outside [0, 1].
    ModeCollisionError
        If ``ancilla`` is already a label in ``modes``.
    """
    if not np.isfinite(transmission) or not 0.0 <= transmission <= 1.0:
        raise InvalidTransmissionError(
            f"transmission must lie in [0, 1], got {transmission}"
        )
    modes = modes if modes is not None else ModeSet()
    extended = modes.extended(ancilla)
    i = extended.index(target)
    k = len(extended) - 1
    root_t = np.sqrt(transmission)
    root_r = np.sqrt(1.0 - transmission)
    a = np.eye(len(extended), dtype=complex)
    a[i, i] = root_t
    a[i, k] = root_r
    a[k, i] = -root_r
    a[k, k] = root_t
    b = np.zeros((len(extended), len(extended)), dtype=complex)
    return BogoliubovTransform(extended, a, b)


def embed(transform: BogoliubovTransform, modes: ModeSet) -> BogoliubovTransform:
    """Lift ``transform`` onto the larger mode set ``modes``, identity elsewhere."""
    idx = [modes.index(label) for label in transform.modes]
    n = len(modes)
    a = np.eye(n, dtype=complex)
    b = np.zeros((n, n), dtype=complex)
    a[np.ix_(idx, idx)] = transform.a
    b[np.ix_(idx, idx)] = transform.b
    return BogoliubovTransform(modes, a, b)


def compose(first: BogoliubovTransform, second: BogoliubovTransform) -> BogoliubovTransform:
    """Transform equivalent to applying ``first`` and then ``second``.

    Substituting the first transform into the second gives

        A = A2 A1 + B2 conj(B1),   B = A2 B1 + B2 conj(A1).

    Both operands must share one mode set; embed the smaller one first.
    """
    if second.modes != first.modes:
        raise ModeMismatchError(
            f"cannot compose transforms on {first.modes.labels!r} "
            f"and {second.modes.labels!r}"
        )
    a = second.a @ first.a + second.b @ first.b.conj()
    b = second.a @ first.b + second.b @ first.a.conj()
    return BogoliubovTransform(first.modes, a, b)


@dataclass(frozen=True)
class GaussianState:
    """Gaussian state as quadrature means and covariance, vacuum = identity.

    ``mean`` interleaves (x_1, p_1, x_2, p_2, ...); a coherent state with
    amplitude alpha has <x> = 2 Re(alpha) and <p> = 2 Im(alpha), so its mean
    photon number is |alpha|^2.
    """

    modes: ModeSet
    mean: np.ndarray
    cov: np.ndarray

    def __post_init__(self):
        n = len(self.modes)
        mean = np.asarray(self.mean, dtype=float)
        cov = np.asarray(self.cov, dtype=float)
        if mean.shape != (2 * n,):
            raise ModeMismatchError(
                f"mean must have length {2 * n} for {n} modes, got {mean.shape}"
            )
        if cov.shape != (2 * n, 2 * n):
            raise ModeMismatchError(
                f"covariance must be {2 * n}x{2 * n} for {n} modes, got {cov.shape}"
            )
        scale = max(1.0, np.abs(cov).max())
        if np.abs(cov - cov.T).max() > SYMMETRY_TOL * scale:
            raise ValueError("covariance matrix is not symmetric")
        cov = 0.5 * (cov + cov.T)
        object.__setattr__(self, "mean", _frozen_array(mean, float))
        object.__setattr__(self, "cov", _frozen_array(cov, float))

    @classmethod
    def vacuum(cls, modes: ModeSet | None = None) -> "GaussianState":
        modes = modes if modes is not None else ModeSet()
        n = len(modes)
        return cls(modes, np.zeros(2 * n), np.eye(2 * n))

    @classmethod
    def coherent(
        cls, displacements: dict[str, complex], modes: ModeSet | None = None
    ) -> "GaussianState":
        """Coherent state with the given complex amplitudes, vacuum elsewhere."""
        modes = modes if modes is not None else ModeSet()
        n = len(modes)
        mean = np.zeros(2 * n)
        for label, alpha in displacements.items():
            i = modes.index(label)
            mean[2 * i] = 2.0 * np.real(alpha)
            mean[2 * i + 1] = 2.0 * np.imag(alpha)
        return cls(modes, mean, np.eye(2 * n))

    def with_vacuum_modes(self, *labels: str) -> "GaussianState":
        """Append fresh modes in the vacuum state."""
        modes = self.modes.extended(*labels)
        n = len(modes)
        mean = np.zeros(2 * n)
        mean[: self.mean.size] = self.mean
        cov = np.eye(2 * n)
        cov[: self.mean.size, : self.mean.size] = self.cov
        return GaussianState(modes, mean, cov)

    def symplectic_eigenvalues(self) -> np.ndarray:
        """Williamson eigenvalues of the covariance; >= 1 for physical states."""
        n = len(self.modes)
        omega = np.zeros((2 * n, 2 * n))
        for i in range(n):
            omega[2 * i, 2 * i + 1] = 1.0
            omega[2 * i + 1, 2 * i] = -1.0
        eigs = np.linalg.eigvals(1j * (omega @ self.cov))
        nus = np.sort(np.abs(eigs.real))
        # eigenvalues come in +/- nu pairs; keep one of each
        return nus[::2].copy()


def apply(transform: BogoliubovTransform, state: GaussianState) -> GaussianState:
    """Propagate a Gaussian state through a transform on the same mode set."""
    if transform.modes != state.modes:
        raise ModeMismatchError(
            f"transform on {transform.modes.labels!r} cannot act on state "
            f"over {state.modes.labels!r}"
        )
    s = transform.symplectic()
    mean = s @ state.mean
    cov = s @ state.cov @ s.T
    cov = 0.5 * (cov + cov.T)
    return GaussianState(state.modes, mean, cov)


@dataclass(frozen=True)
class PhotonStats:
    """Photon-number moments of the probe/conjugate pair.

    ``var_diff`` is Var(N_a - N_b) = var_a + var_b - 2 cov_ab, the quantity
    a balanced intensity-difference measurement sees.
    """

    mean_a: float
    mean_b: float
    var_a: float
    var_b: float
    cov_ab: float
    var_diff: float


def _mode_moments(mean, cov, i):
    """Complex displacement alpha, thermal part n, and anomalous moment m of mode i."""
    x, p = 2 * i, 2 * i + 1
    alpha = 0.5 * (mean[x] + 1j * mean[p])
    n_th = 0.25 * (cov[x, x] + cov[p, p] - 2.0)
    m_an = 0.25 * (cov[x, x] - cov[p, p] + 2j * cov[x, p])
    return alpha, n_th, m_an


def photon_statistics(
    state: GaussianState, pair: tuple[str, str] = (PROBE, CONJUGATE)
) -> PhotonStats:
    """Exact photon-number mean/variance/covariance for two modes of a state.

    Uses the Gaussian moment theorem on the normally ordered moments
    N_ij = <da_i^dag da_j> and M_ij = <da_i da_j> of the fluctuation
    operators da = a - alpha:

        <n_i>       = |alpha_i|^2 + N_ii
        Var(n_i)    = |alpha_i|^2 (1 + 2 N_ii) + 2 Re(conj(alpha_i)^2 M_ii)
                      + N_ii (N_ii + 1) + |M_ii|^2
        Cov(n_i,n_j)= 2 Re(conj(a_i) conj(a_j) M_ij) + 2 Re(a_i conj(a_j) N_ij)
                      + |M_ij|^2 + |N_ij|^2   (i != j)

    Modes outside ``pair`` (loss ancillas) are ignored, which is the same
    as tracing them out.
    """
    mean, cov = state.mean, state.cov
    i = state.modes.index(pair[0])
    j = state.modes.index(pair[1])
    alpha_i, n_i, m_i = _mode_moments(mean, cov, i)
    alpha_j, n_j, m_j = _mode_moments(mean, cov, j)

    mean_i = abs(alpha_i) ** 2 + n_i
    mean_j = abs(alpha_j) ** 2 + n_j
    var_i = (
        abs(alpha_i) ** 2 * (1.0 + 2.0 * n_i)
        + 2.0 * (np.conj(alpha_i) ** 2 * m_i).real
        + n_i * (n_i + 1.0)
        + abs(m_i) ** 2
    )
    var_j = (
        abs(alpha_j) ** 2 * (1.0 + 2.0 * n_j)
        + 2.0 * (np.conj(alpha_j) ** 2 * m_j).real
        + n_j * (n_j + 1.0)
        + abs(m_j) ** 2
    )

    xi, pi_, xj, pj = 2 * i, 2 * i + 1, 2 * j, 2 * j + 1
    m_ij = 0.25 * (cov[xi, xj] - cov[pi_, pj] + 1j * (cov[xi, pj] + cov[pi_, xj]))
    n_ij = 0.25 * (cov[xi, xj] + cov[pi_, pj] + 1j * (cov[xi, pj] - cov[pi_, xj]))
    cov_ij = (
        2.0 * (np.conj(alpha_i) * np.conj(alpha_j) * m_ij).real
        + 2.0 * (alpha_i * np.conj(alpha_j) * n_ij).real
        + abs(m_ij) ** 2
        + abs(n_ij) ** 2
    )

    var_diff = var_i + var_j - 2.0 * cov_ij
    return PhotonStats(
        mean_a=max(0.0, float(mean_i)),
        mean_b=max(0.0, float(mean_j)),
        var_a=float(var_i),
        var_b=float(var_j),
        cov_ab=float(cov_ij),
        var_diff=float(var_diff),
    )
