"""Coherent ML word demodulation.

All decoders minimize the same word metric

    sum_k || Y(k) - sqrt(Es) H(k) x(k) ||^2

over their codeword set: exhaustive search for block codebooks, a
full-frame Viterbi pass for trellis codes, depth-first sphere decoding for
linear-dispersion codes, and the orthogonal fast combiner for Alamouti
blocks.  Every decoder reports the decoded bits, the achieved metric, and a
visited-node count as its search-effort measure.
"""

from dataclasses import dataclass, field

import numpy as np

from .errors import ModelMismatch, NonStaticBlock, ShapeMismatch
from .mathcore import Constellation, patterns_to_bits
from .stcodes import (
    BlockCodebook,
    LinearDispersionCode,
    TrellisCode,
    encode_alamouti,
)


@dataclass(frozen=True)
class DecodeResult:
    bits: np.ndarray
    metric: float
    visited: int
    degenerate: bool = False

    def __post_init__(self):
        object.__setattr__(self, "bits", np.asarray(self.bits, dtype=int))


def _as_y(y):
    yv = np.asarray(getattr(y, "y", y), dtype=complex)
    if yv.ndim != 2:
        raise ShapeMismatch("received frame must be a (n_uses, lr) array")
    return yv


def _check_h(yv, h):
    h = np.asarray(h, dtype=complex)
    if h.ndim != 3 or h.shape[0] != yv.shape[0] or h.shape[1] != yv.shape[1]:
        raise ShapeMismatch(
            f"fading shape {h.shape} does not match frame {yv.shape}"
        )
    return h


def eq3_metric(yv, h, x, es):
    """The word metric of Eq.-(3) form for one candidate codeword."""
    yv = _as_y(yv)
    h = _check_h(yv, h)
    pred = np.sqrt(es) * np.einsum("kij,jk->ki", h, np.asarray(x, dtype=complex))
    return float(np.sum(np.abs(yv - pred) ** 2))


def ml_exhaustive(y, h, cb: BlockCodebook, es):
    """Brute-force ML over a block codebook; ties go to the lowest index."""
    yv = _as_y(y)
    h = _check_h(yv, h)
    if yv.shape[0] != cb.n_uses:
        raise ShapeMismatch(
            f"frame has {yv.shape[0]} uses, codebook words have {cb.n_uses}"
        )
    pred = np.sqrt(es) * np.einsum("kij,njk->nki", h, cb.codewords)
    metrics = np.sum(np.abs(yv[None] - pred) ** 2, axis=(1, 2))
    idx = int(np.argmin(metrics))
    bits = patterns_to_bits(np.array([idx]), cb.bits_per_codeword)
    return DecodeResult(bits=bits, metric=float(metrics[idx]), visited=cb.size)


def ml_exhaustive_blocks(y, h, cb: BlockCodebook, es):
    """Vectorized per-block ML over a frame of consecutive codewords.

    The frame must hold a whole number of codebook words.  Equivalent to
    calling :func:`ml_exhaustive` on each block and concatenating.
    """
    yv = _as_y(y)
    h = _check_h(yv, h)
    u = cb.n_uses
    if yv.shape[0] % u:
        raise ShapeMismatch(
            f"frame length {yv.shape[0]} is not a multiple of {u}"
        )
    nb = yv.shape[0] // u
    lr = yv.shape[1]
    yb = yv.reshape(nb, u, lr)
    hb = h.reshape(nb, u, lr, h.shape[2])
    pred = np.sqrt(es) * np.einsum("bkij,njk->bnki", hb, cb.codewords)
    metrics = np.sum(np.abs(yb[:, None] - pred) ** 2, axis=(2, 3))
    idx = np.argmin(metrics, axis=1)
    bits = patterns_to_bits(idx, cb.bits_per_codeword)
    metric = float(metrics[np.arange(nb), idx].sum())
    return DecodeResult(bits=bits, metric=metric, visited=nb * cb.size)


def viterbi_decode(y, h, code: TrellisCode, es):
    """Exact ML over all state-0-terminated trellis paths.

    Branch ties prefer the smaller (state, input) pair, so results are
    deterministic and reproducible against the exhaustive oracle.
    """
    yv = _as_y(y)
    h = _check_h(yv, h)
    nf = yv.shape[0]
    n_term = code.n_term_steps
    data_steps = nf - n_term
    if data_steps < 0:
        raise ShapeMismatch(
            f"frame of {nf} uses is shorter than the {n_term}-step tail"
        )
    s_count, u_count = code.n_states, code.n_inputs
    cand = code.constellation.points[code.out_idx] / np.sqrt(code.lt)
    pred = np.sqrt(es) * np.einsum("kij,suj->ksui", h, cand)
    bm = np.sum(np.abs(yv[:, None, None, :] - pred) ** 2, axis=3)

    # incoming transitions per state, each row sorted by (state, input) so
    # argmin's first-hit rule implements the documented tie-break
    flat_next = code.next_state.reshape(-1)
    order = np.arange(s_count * u_count)
    incoming = [order[flat_next == ns] for ns in range(s_count)]
    max_deg = max((len(v) for v in incoming), default=0)
    gather = np.zeros((s_count, max_deg), dtype=int)
    dead = np.zeros((s_count, max_deg), dtype=bool)
    for ns, src in enumerate(incoming):
        gather[ns, : len(src)] = src
        dead[ns, len(src) :] = True

    costs = np.full(s_count, np.inf)
    costs[0] = 0.0
    back = np.zeros((data_steps, s_count), dtype=int)
    for k in range(data_steps):
        cand_costs = (costs[:, None] + bm[k]).reshape(-1)[gather]
        cand_costs[dead] = np.inf
        pick = np.argmin(cand_costs, axis=1)
        back[k] = gather[np.arange(s_count), pick]
        costs = cand_costs[np.arange(s_count), pick]

    # deterministic termination tail per surviving end-of-data state
    total = costs.copy()
    for s in range(s_count):
        if not np.isfinite(total[s]):
            continue
        cur = s
        for t in range(n_term):
            u = int(code.term_inputs[s, t])
            total[s] += bm[data_steps + t, cur, u]
            cur = int(code.next_state[cur, u])

    best = int(np.argmin(total))
    patterns = np.zeros(data_steps, dtype=int)
    state = best
    for k in range(data_steps - 1, -1, -1):
        src = back[k, state]
        patterns[k] = src % u_count
        state = src // u_count
    bits = patterns_to_bits(patterns, code.bits_per_step)
    visited = data_steps * s_count * u_count + s_count * n_term
    metric = float(total[best])
    return DecodeResult(bits=bits, metric=metric, visited=visited)


def _axis_levels(c: Constellation):
    """Real-axis levels of a product (square QAM style) constellation.

    Returns (levels, pattern_table) where pattern_table[(i_re, i_im)] is the
    bit pattern of the point at those level indices.  Raises ModelMismatch
    when the constellation is not a full product of one real level set.
    """
    reals = np.unique(np.round(c.points.real, 12))
    imags = np.unique(np.round(c.points.imag, 12))
    if reals.size != imags.size or not np.allclose(reals, imags, atol=1e-12):
        raise ModelMismatch("constellation axes differ; no lattice form")
    if reals.size**2 != c.size:
        raise ModelMismatch("constellation is not a per-axis product set")
    table = {}
    for pattern in range(c.size):
        pt = c.pattern_to_point(pattern)
        i_re = int(np.argmin(np.abs(reals - pt.real)))
        i_im = int(np.argmin(np.abs(reals - pt.imag)))
        table[(i_re, i_im)] = pattern
    if len(table) != c.size:
        raise ModelMismatch("constellation is not a per-axis product set")
    return reals, table


def _dispersion_system(yv, h, code: LinearDispersionCode, es):
    """Real-valued lattice system (y_r, G_r) of a dispersion codeword."""
    basis = code.basis
    g = np.sqrt(es) * np.einsum("kij,mjk->kim", h, basis)
    g = g.reshape(-1, code.n_syms)
    yc = yv.reshape(-1)
    gr = np.block([[g.real, -g.imag], [g.imag, g.real]])
    yr = np.concatenate([yc.real, yc.imag])
    return yr, gr


def _sphere_search(yr, gr, levels, d):
    """Depth-first closest-first enumeration; returns (v, cost, visited)."""
    q, r = np.linalg.qr(gr)
    signs = np.sign(np.diag(r))
    signs[signs == 0] = 1.0
    r = signs[:, None] * r
    z = signs * (q.T @ yr)
    rows = [r[i] for i in range(d)]
    rdiag = [float(r[i, i]) for i in range(d)]
    if min(abs(v) for v in rdiag) < 1e-12 * max(abs(v) for v in rdiag + [1.0]):
        return None  # degenerate channel; caller falls back to brute force
    lv = [float(v) for v in levels]
    best_cost = np.inf
    best_v = None
    visited = 0
    v = np.zeros(d)
    # stack entries: (dim, candidate list position, accumulated cost above)
    # expanded iteratively to keep the child ordering closest-first
    def children(i, partial_v):
        resid = z[i] - float(rows[i][i + 1 :] @ partial_v[i + 1 :])
        center = resid / rdiag[i]
        return sorted(lv, key=lambda s: abs(s - center)), resid

    stack = []
    order0, resid0 = children(d - 1, v)
    stack.append((d - 1, order0, 0, 0.0, resid0))
    while stack:
        i, order, pos, above, resid = stack.pop()
        if pos >= len(order):
            continue
        stack.append((i, order, pos + 1, above, resid))
        s = order[pos]
        visited += 1
        cost = above + (resid - rdiag[i] * s) ** 2
        if not cost < best_cost:
            # children are sorted by distance, so siblings only get worse
            stack.pop()
            continue
        v[i] = s
        if i == 0:
            best_cost = cost
            best_v = v.copy()
            continue
        order_c, resid_c = children(i - 1, v)
        stack.append((i - 1, order_c, 0, cost, resid_c))
    return best_v, best_cost, visited


def sphere_decode(y, h, code: LinearDispersionCode, es):
    """Exact ML for a linear-dispersion codeword via sphere decoding.

    The codeword is vectorized into y_eff = G s + n, expanded to a real
    lattice and searched depth-first in closest-first child order with the
    Babai point as the initial radius.  Requires lr >= lt so the lattice has
    full column rank; degenerate channels fall back to an exhaustive scan of
    the product set (ties to the lowest codeword index).
    """
    if not isinstance(code, LinearDispersionCode):
        raise ModelMismatch(
            f"{type(code).__name__} has no linear-dispersion form"
        )
    yv = _as_y(y)
    h = _check_h(yv, h)
    if yv.shape[0] != code.n_uses:
        raise ShapeMismatch(
            f"frame has {yv.shape[0]} uses, dispersion code spans {code.n_uses}"
        )
    c = code.constellation
    levels, table = _axis_levels(c)
    yr, gr = _dispersion_system(yv, h, code, es)
    m = code.n_syms
    d = 2 * m
    if gr.shape[0] < d:
        raise ModelMismatch(
            f"underdetermined lattice: {gr.shape[0]} real observations for"
            f" {d} real unknowns (need lr * n_uses >= n_syms)"
        )
    degenerate = False
    out = _sphere_search(yr, gr, levels, d)
    if out is not None:
        v, _, visited = out
    else:
        degenerate = True
        v, visited = _brute_force_lattice(yr, gr, levels, m, table, c)
    re_idx = [int(np.argmin(np.abs(levels - v[i]))) for i in range(m)]
    im_idx = [int(np.argmin(np.abs(levels - v[m + i]))) for i in range(m)]
    patterns = np.array([table[(re_idx[i], im_idx[i])] for i in range(m)])
    bits = patterns_to_bits(patterns, c.bits_per_symbol)
    symbols = levels[re_idx] + 1j * levels[im_idx]
    metric = eq3_metric(yv, h, code.encode(symbols), es)
    return DecodeResult(bits=bits, metric=metric, visited=visited, degenerate=degenerate)


def _brute_force_lattice(yr, gr, levels, m, table, c):
    """Exhaustive scan of the real product lattice, lowest index on ties."""
    grids = np.meshgrid(*([levels] * (2 * m)), indexing="ij")
    cand = np.stack([g.reshape(-1) for g in grids], axis=1)
    costs = np.sum((yr[None, :] - cand @ gr.T) ** 2, axis=1)
    best = costs.min()
    tied = np.nonzero(costs == best)[0]
    # map each tied candidate to its codeword index, pick the smallest
    def word_index(v):
        idx = 0
        for i in range(m):
            i_re = int(np.argmin(np.abs(levels - v[i])))
            i_im = int(np.argmin(np.abs(levels - v[m + i])))
            idx = idx * c.size + table[(i_re, i_im)]
        return idx

    pick = min(tied, key=lambda n: word_index(cand[n]))
    return cand[pick], cand.shape[0]


def alamouti_combine(y, h, es, c: Constellation, allow_nonstatic=False):
    """Orthogonal combining plus per-symbol slicing for Alamouti frames.

    Works block by block over pairs of uses.  For each block with channel
    columns h1, h2 the statistics z1 = h1^H y1 + y2^H h2 and
    z2 = h2^H y1 - h1^T conj(y2) decouple the two symbols with combining
    gain g = ||h1||^2 + ||h2||^2, so slicing z against sqrt(Es/2) g times
    each point is exact ML.  The channel must be constant within each block
    unless ``allow_nonstatic`` accepts the combiner as an approximation.
    A zero-gain block is flagged degenerate and decides pattern 0.
    """
    yv = _as_y(y)
    h = _check_h(yv, h)
    nf, lr = yv.shape
    if h.shape[2] != 2:
        raise ShapeMismatch("alamouti combining requires lt = 2")
    if nf % 2:
        raise ShapeMismatch("frame length must be even (2-use blocks)")
    nb = nf // 2
    yb = yv.reshape(nb, 2, lr)
    hb = h.reshape(nb, 2, lr, 2)
    drift = np.linalg.norm(hb[:, 1] - hb[:, 0], axis=(1, 2))
    scale_h = np.linalg.norm(hb[:, 0], axis=(1, 2))
    if not allow_nonstatic and np.any(drift > 1e-9 * np.maximum(scale_h, 1e-300)):
        raise NonStaticBlock(
            "channel varies within an Alamouti block;"
            " pass allow_nonstatic=True to combine anyway"
        )
    h1 = hb[:, 0, :, 0]
    h2 = hb[:, 0, :, 1]
    y1 = yb[:, 0]
    y2 = yb[:, 1]
    z1 = np.sum(np.conj(h1) * y1, axis=1) + np.sum(np.conj(y2) * h2, axis=1)
    z2 = np.sum(np.conj(h2) * y1, axis=1) - np.sum(h1 * np.conj(y2), axis=1)
    gain = np.sum(np.abs(h1) ** 2 + np.abs(h2) ** 2, axis=1)
    amp = np.sqrt(es / 2.0) * gain
    pts = c.points
    d1 = np.abs(z1[:, None] - amp[:, None] * pts[None, :]) ** 2
    d2 = np.abs(z2[:, None] - amp[:, None] * pts[None, :]) ** 2
    idx1 = np.argmin(d1, axis=1)
    idx2 = np.argmin(d2, axis=1)
    inv_label = {v: k for k, v in c.labeling.items()}
    pat = np.empty((nb, 2), dtype=int)
    pat[:, 0] = [inv_label[int(i)] for i in idx1]
    pat[:, 1] = [inv_label[int(i)] for i in idx2]
    bits = patterns_to_bits(pat.reshape(-1), c.bits_per_symbol)
    x_hat = np.zeros((2, nf), dtype=complex)
    blocks = [
        encode_alamouti(pts[int(i1)], pts[int(i2)]) for i1, i2 in zip(idx1, idx2)
    ]
    for b, blk in enumerate(blocks):
        x_hat[:, 2 * b : 2 * b + 2] = blk
    metric = eq3_metric(yv, h, x_hat, es)
    degenerate = bool(np.any(gain <= 0.0))
    return DecodeResult(
        bits=bits, metric=metric, visited=nb * 2 * c.size, degenerate=degenerate
    )
