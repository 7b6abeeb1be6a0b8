"""Numerical kernels shared by the whole simulator.

Hermitian eigenvalue helpers, Toeplitz Cholesky factorization for exact
Clarke-correlated sample generation, numerical rank, the zeroth-order Bessel
function, and the two unit-energy constellations (QPSK, 16QAM) with their
fixed Gray labelings.
"""

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg
import scipy.special

from .errors import LengthMismatch, NotHermitian, NotPSD

# Relative singular/eigenvalue threshold used for every rank decision.
RANK_TOL = 1e-9

# Relative diagonal jitter applied once when a PSD factorization fails.
CHOL_JITTER = 1e-12


def bessel_j0(x):
    """Zeroth-order Bessel function of the first kind.

    Accepts a scalar or an array; returns the same shape.  Absolute error is
    far below 1e-10 over the |x| <= 100 range used by the fading model.
    """
    out = scipy.special.j0(x)
    if np.isscalar(x) or np.ndim(x) == 0:
        return float(out)
    return out


def hermitian_eigenvalues(m, tol=1e-10):
    """Eigenvalues of a Hermitian matrix, sorted descending.

    Raises NotHermitian when ||M - M^H|| exceeds ``tol`` relative to ||M||.
    """
    m = np.asarray(m, dtype=complex)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise NotHermitian(f"expected a square matrix, got shape {m.shape}")
    scale = np.linalg.norm(m)
    asym = np.linalg.norm(m - m.conj().T)
    if asym > tol * max(scale, 1e-300):
        raise NotHermitian(
            f"matrix is not Hermitian: asymmetry {asym:.3e} vs norm {scale:.3e}"
        )
    w = np.linalg.eigvalsh(m)
    return np.real(w)[::-1].copy()


def numerical_rank(m, rel_tol=RANK_TOL):
    """Number of singular values above ``rel_tol`` times the largest one.

    The zero matrix has rank 0.  ``rel_tol`` must lie in (0, 1).
    """
    if not 0.0 < rel_tol < 1.0:
        raise ValueError(f"rel_tol must be in (0, 1), got {rel_tol}")
    m = np.atleast_2d(np.asarray(m))
    s = np.linalg.svd(m, compute_uv=False)
    if s.size == 0 or s[0] == 0.0:
        return 0
    return int(np.count_nonzero(s > rel_tol * s[0]))


def cholesky_psd(m):
    """Lower Cholesky factor of a PSD matrix, with one jitter retry.

    On factorization failure a diagonal jitter of CHOL_JITTER * trace/n is
    added once; a second failure raises NotPSD.  Used for near-singular
    correlation matrices (e.g. the Clarke Toeplitz matrix at low Doppler).
    """
    m = np.asarray(m)
    n = m.shape[0]
    try:
        return np.linalg.cholesky(m)
    except np.linalg.LinAlgError:
        pass
    jitter = CHOL_JITTER * np.real(np.trace(m)) / n
    try:
        return np.linalg.cholesky(m + jitter * np.eye(n))
    except np.linalg.LinAlgError:
        raise NotPSD(
            f"matrix is not positive semidefinite (jitter {jitter:.3e} did not help)"
        ) from None


def toeplitz_cholesky(first_row):
    """Lower Cholesky factor of the symmetric Toeplitz matrix ``T``.

    ``first_row`` is the first row [t_0, t_1, ...] of T.  Satisfies
    ||L L^T - T|| <= 1e-8 ||T|| after at most one diagonal jitter.
    """
    first_row = np.asarray(first_row, dtype=float)
    if first_row.ndim != 1 or first_row.size == 0:
        raise ValueError("first_row must be a non-empty 1-D sequence")
    t = scipy.linalg.toeplitz(first_row)
    return cholesky_psd(t)


@dataclass(frozen=True)
class Constellation:
    """Unit-average-energy signal set with a fixed bit labeling.

    ``labeling`` maps each bit pattern (as an MSB-first integer) to an index
    into ``points``.  Both shipped constellations use the identity labeling,
    so pattern p transmits points[p].
    """

    name: str
    points: np.ndarray
    bits_per_symbol: int
    labeling: dict = field(repr=False)

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=complex)
        object.__setattr__(self, "points", pts)
        size = 2 ** self.bits_per_symbol
        if pts.shape != (size,):
            raise ValueError(f"{self.name}: expected {size} points, got {pts.shape}")
        energy = np.mean(np.abs(pts) ** 2)
        if abs(energy - 1.0) > 1e-12:
            raise ValueError(f"{self.name}: mean energy {energy!r} != 1")
        if sorted(self.labeling.keys()) != list(range(size)):
            raise ValueError(f"{self.name}: labeling keys must cover 0..{size - 1}")
        if sorted(self.labeling.values()) != list(range(size)):
            raise ValueError(f"{self.name}: labeling must be a bijection")

    @property
    def size(self):
        return self.points.shape[0]

    def pattern_to_point(self, pattern):
        return self.points[self.labeling[pattern]]


def _make_qpsk():
    # Gray map {00, 01, 11, 10} -> angles {45, 135, -135, -45} degrees.
    # With the identity labeling the point list is ordered by bit pattern.
    angles = {0b00: 45.0, 0b01: 135.0, 0b11: -135.0, 0b10: -45.0}
    points = np.zeros(4, dtype=complex)
    for pattern, deg in angles.items():
        points[pattern] = np.exp(1j * np.deg2rad(deg))
    return Constellation("QPSK", points, 2, {p: p for p in range(4)})


def _make_qam16():
    # Per-axis Gray levels: bit pair 00,01,11,10 -> -3,-1,+1,+3 before the
    # 1/sqrt(10) unit-energy scaling.  First two pattern bits select the real
    # axis, last two the imaginary axis.
    gray_level = {0b00: -3.0, 0b01: -1.0, 0b11: 1.0, 0b10: 3.0}
    points = np.zeros(16, dtype=complex)
    for pattern in range(16):
        i_level = gray_level[pattern >> 2]
        q_level = gray_level[pattern & 0b11]
        points[pattern] = (i_level + 1j * q_level) / np.sqrt(10.0)
    return Constellation("16QAM", points, 4, {p: p for p in range(16)})


QPSK = _make_qpsk()
QAM16 = _make_qam16()

CONSTELLATIONS = {"QPSK": QPSK, "16QAM": QAM16}


def bits_to_patterns(bits, bits_per_symbol):
    """Group a flat bit sequence into MSB-first integer patterns."""
    bits = np.asarray(bits, dtype=int)
    if bits.ndim != 1:
        raise LengthMismatch("bits must be a flat sequence")
    if np.any((bits != 0) & (bits != 1)):
        raise ValueError("bits must contain only 0 and 1")
    if bits.size % bits_per_symbol:
        raise LengthMismatch(
            f"bit count {bits.size} is not divisible by {bits_per_symbol}"
        )
    groups = bits.reshape(-1, bits_per_symbol)
    weights = 2 ** np.arange(bits_per_symbol - 1, -1, -1)
    return groups @ weights


def patterns_to_bits(patterns, bits_per_symbol):
    """Inverse of :func:`bits_to_patterns` (MSB first)."""
    patterns = np.asarray(patterns, dtype=int)
    shifts = np.arange(bits_per_symbol - 1, -1, -1)
    return ((patterns[:, None] >> shifts) & 1).reshape(-1)


def map_bits(bits, c: Constellation):
    """Map a bit sequence to constellation points per the fixed labeling."""
    patterns = bits_to_patterns(bits, c.bits_per_symbol)
    idx = np.array([c.labeling[int(p)] for p in patterns], dtype=int)
    return c.points[idx]
