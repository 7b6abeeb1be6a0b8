"""Pilot-symbol-assisted channel estimation.

Pilot blocks of lt consecutive uses carry an orthogonal (scaled DFT) pilot
matrix P with P P^H = I.  One block sits flush at each frame edge and the
rest are spaced uniformly between, which keeps the interpolation error flat
over the frame.  Raw per-block estimates are FIR Wiener interpolated to
every frame position, with coefficients designed for a nominal Doppler and
SNR (the classic mismatched-filter PSAD arrangement).
"""

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from .errors import InvalidCount, ShapeMismatch, SingularCovariance
from .mathcore import CHOL_JITTER, bessel_j0
from .channel import ReceivedFrame

DESIGN_FDT = 0.01
DESIGN_SNR_DB = 30.0
DEFAULT_TAPS = 20


@dataclass(frozen=True)
class PilotMap:
    """Pilot placement for one frame.

    ``pilot_matrix`` column t is the lt-vector transmitted at use t of each
    block (same matrix in every block); rows are antennas.
    """

    nf: int
    lt: int
    block_starts: np.ndarray
    pilot_matrix: np.ndarray = field(repr=False)
    pilot_positions: np.ndarray = field(repr=False)
    data_positions: np.ndarray = field(repr=False)

    @property
    def n_blocks(self):
        return self.block_starts.shape[0]

    @property
    def n_pilot(self):
        return self.pilot_positions.shape[0]

    @property
    def block_centers(self):
        return self.block_starts + (self.lt - 1) / 2.0


def _orthogonal_pilot_matrix(lt):
    # scaled DFT: P P^H = I, every column has total energy 1 across antennas
    j, k = np.meshgrid(np.arange(lt), np.arange(lt), indexing="ij")
    return np.exp(-2j * np.pi * j * k / lt) / np.sqrt(lt)


def build_pilot_map(nf, lt, n_pilot):
    """Edge-flush plus uniform interior pilot blocks of lt uses each."""
    if n_pilot <= 0 or n_pilot % lt:
        raise InvalidCount(
            f"n_pilot={n_pilot} must be a positive multiple of lt={lt}"
        )
    if n_pilot >= nf:
        raise InvalidCount(f"n_pilot={n_pilot} must be < nf={nf}")
    n_blocks = n_pilot // lt
    if n_blocks < 2:
        raise InvalidCount("need at least two pilot blocks (one per frame edge)")
    frac = np.arange(n_blocks) / (n_blocks - 1)
    starts = np.rint(frac * (nf - lt)).astype(int)
    if np.any(np.diff(starts) < lt):
        raise InvalidCount(
            f"{n_blocks} pilot blocks of {lt} uses do not fit in nf={nf}"
        )
    pilot_positions = (starts[:, None] + np.arange(lt)).reshape(-1)
    mask = np.ones(nf, dtype=bool)
    mask[pilot_positions] = False
    return PilotMap(
        nf=nf,
        lt=lt,
        block_starts=starts,
        pilot_matrix=_orthogonal_pilot_matrix(lt),
        pilot_positions=pilot_positions,
        data_positions=np.nonzero(mask)[0],
    )


@dataclass(frozen=True)
class WienerInterpolator:
    """Per-position FIR MMSE coefficients over the nearest pilot blocks.

    ``weights[k]`` applies to raw block estimates ``block_idx[k]`` to
    estimate the channel at frame position k; ``mmse[k]`` is the analytic
    residual 1 - p^T R^-1 p of that design.
    """

    taps: int
    fdT_design: float
    snr_design_db: float
    block_idx: np.ndarray = field(repr=False)
    weights: np.ndarray = field(repr=False)
    mmse: np.ndarray = field(repr=False)

    @property
    def nf(self):
        return self.weights.shape[0]


def _solve_design(r, p):
    try:
        cf = scipy.linalg.cho_factor(r, lower=True)
        return scipy.linalg.cho_solve(cf, p)
    except scipy.linalg.LinAlgError:
        pass
    jitter = CHOL_JITTER * np.trace(r) / r.shape[0]
    try:
        cf = scipy.linalg.cho_factor(r + jitter * np.eye(r.shape[0]), lower=True)
        return scipy.linalg.cho_solve(cf, p)
    except scipy.linalg.LinAlgError:
        raise SingularCovariance(
            "pilot covariance solve failed after jitter"
        ) from None


def design_wiener(
    pmap: PilotMap,
    fdT_design=DESIGN_FDT,
    snr_design_db=DESIGN_SNR_DB,
    taps=DEFAULT_TAPS,
):
    """MMSE interpolation coefficients w = R^-1 p for every frame position.

    R is the covariance of the raw estimates at the ``taps`` nearest pilot
    blocks: Clarke autocorrelation J0(2 pi fdT delta) between block centers
    plus a noise diagonal 10^(-snr/10) (the raw-estimate error at the design
    SNR).  p is the cross-covariance to the target position.  snr may be
    numpy.inf for a noise-free design.
    """
    taps = int(taps)
    if taps < 1:
        raise InvalidCount("taps must be >= 1")
    if taps > pmap.n_blocks:
        raise InvalidCount(
            f"taps={taps} exceeds the {pmap.n_blocks} available pilot blocks"
        )
    centers = pmap.block_centers
    noise_var = 0.0 if np.isinf(snr_design_db) else 10.0 ** (-snr_design_db / 10.0)
    block_idx = np.zeros((pmap.nf, taps), dtype=int)
    weights = np.zeros((pmap.nf, taps))
    mmse = np.zeros(pmap.nf)
    factor_cache = {}
    for k in range(pmap.nf):
        order = np.argsort(np.abs(centers - k), kind="stable")
        sel = np.sort(order[:taps])
        key = sel.tobytes()
        if key not in factor_cache:
            dc = centers[sel]
            r = bessel_j0(2.0 * np.pi * fdT_design * (dc[:, None] - dc[None, :]))
            r = np.atleast_2d(r) + noise_var * np.eye(taps)
            factor_cache[key] = r
        r = factor_cache[key]
        p = np.atleast_1d(
            bessel_j0(2.0 * np.pi * fdT_design * (centers[sel] - k))
        )
        w = _solve_design(r, p)
        block_idx[k] = sel
        weights[k] = w
        mmse[k] = 1.0 - float(p @ w)
    return WienerInterpolator(
        taps=taps,
        fdT_design=fdT_design,
        snr_design_db=snr_design_db,
        block_idx=block_idx,
        weights=weights,
        mmse=mmse,
    )


def raw_block_estimates(y: ReceivedFrame, pmap: PilotMap):
    """Per-block estimates H_hat = Y_b P^H / sqrt(Es), shape (n_blocks, lr, lt)."""
    yv = y.y
    if yv.shape[0] != pmap.nf:
        raise ShapeMismatch(
            f"frame length {yv.shape[0]} does not match pilot map nf={pmap.nf}"
        )
    p = pmap.pilot_matrix
    c = float(np.real((p @ p.conj().T)[0, 0]))
    blocks = yv[pmap.block_starts[:, None] + np.arange(pmap.lt)]
    # blocks: (n_blocks, lt uses, lr) -> Y_b is (lr, lt uses)
    yb = blocks.transpose(0, 2, 1)
    return yb @ p.conj().T / (c * np.sqrt(y.es))


def estimate_channel(y: ReceivedFrame, pmap: PilotMap, w: WienerInterpolator):
    """PSAD channel estimate at every frame position, shape (nf, lr, lt).

    Each transmit-receive path is interpolated independently (spatially
    separable processing), so the result for one receive antenna equals the
    joint result restricted to it.
    """
    if w.nf != pmap.nf:
        raise ShapeMismatch("interpolator was designed for a different map")
    raw = raw_block_estimates(y, pmap)
    gathered = raw[w.block_idx]  # (nf, taps, lr, lt)
    return np.einsum("ka,kaij->kij", w.weights, gathered)
