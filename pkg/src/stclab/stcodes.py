"""Space-time encoders.

Codewords are lt x n_uses complex arrays: row = transmit antenna, column =
channel use.  Every encoder normalizes so the total transmit energy summed
over antennas averages 1 per channel use across a uniform codebook, which
keeps code comparisons at fixed total radiated power.

Block codes: Alamouti (orthogonal, 2 antennas), the golden code (full rate,
full diversity, 2 antennas) and plain spatial multiplexing.  Trellis codes
are loaded from a small line-oriented definition format; see
:func:`load_trellis`.
"""

from dataclasses import dataclass, field

import numpy as np

from .errors import LengthMismatch, ParseError, ValidationError
from .mathcore import CONSTELLATIONS, Constellation, bits_to_patterns

# Golden-number constants of the [2x2] full-rate construction.
GOLDEN_THETA = (1.0 + np.sqrt(5.0)) / 2.0
GOLDEN_THETA_BAR = 1.0 - GOLDEN_THETA
GOLDEN_ALPHA = 1.0 + 1j - 1j * GOLDEN_THETA
GOLDEN_ALPHA_BAR = 1.0 + 1j - 1j * GOLDEN_THETA_BAR
# 1/sqrt(5) from the lattice generator, a further 1/sqrt(2) so the two
# antennas radiate unit total energy per use instead of unit energy each.
GOLDEN_SCALE = 1.0 / np.sqrt(10.0)


def encode_alamouti(s1, s2):
    """Alamouti codeword [[s1, -s2*], [s2, s1*]] / sqrt(2)."""
    return np.array(
        [[s1, -np.conj(s2)], [s2, np.conj(s1)]], dtype=complex
    ) / np.sqrt(2.0)


def encode_golden(s):
    """Golden codeword for four symbols s = (s1, s2, s3, s4)."""
    s1, s2, s3, s4 = (complex(v) for v in s)
    th, tb = GOLDEN_THETA, GOLDEN_THETA_BAR
    a, ab = GOLDEN_ALPHA, GOLDEN_ALPHA_BAR
    x = np.array(
        [
            [a * (s1 + s2 * th), a * (s3 + s4 * th)],
            [1j * ab * (s3 + s4 * tb), ab * (s1 + s2 * tb)],
        ],
        dtype=complex,
    )
    return GOLDEN_SCALE * x


def encode_spatial_multiplex(symbols, lt):
    """Fill symbols column-wise, lt per channel use, scaled 1/sqrt(lt)."""
    symbols = np.asarray(symbols, dtype=complex)
    if symbols.ndim != 1 or symbols.size % lt:
        raise LengthMismatch(
            f"symbol count {symbols.size} is not divisible by lt={lt}"
        )
    return symbols.reshape(-1, lt).T / np.sqrt(lt)


@dataclass(frozen=True)
class BlockCodebook:
    """All codewords of a block code, indexed by the word's bit pattern.

    ``codewords[n]`` is the lt x n_uses matrix transmitted for the
    bits-as-MSB-first-integer n.
    """

    name: str
    codewords: np.ndarray
    bits_per_codeword: int

    def __post_init__(self):
        cw = np.ascontiguousarray(np.asarray(self.codewords, dtype=complex))
        object.__setattr__(self, "codewords", cw)
        if cw.ndim != 3:
            raise ValidationError("codewords must be a (size, lt, n_uses) array")
        if cw.shape[0] != 2 ** self.bits_per_codeword:
            raise ValidationError(
                f"codebook size {cw.shape[0]} != 2^{self.bits_per_codeword}"
            )
        # + 0 normalizes -0.0 so byte-level uniqueness matches value equality
        rounded = np.round(cw.reshape(cw.shape[0], -1), 12) + (0.0 + 0.0j)
        view = np.ascontiguousarray(rounded).view(np.uint8).reshape(cw.shape[0], -1)
        if np.unique(view, axis=0).shape[0] != cw.shape[0]:
            raise ValidationError("codebook contains duplicate codewords")

    @property
    def size(self):
        return self.codewords.shape[0]

    @property
    def lt(self):
        return self.codewords.shape[1]

    @property
    def n_uses(self):
        return self.codewords.shape[2]


def _enumerate_symbol_tuples(c: Constellation, n_syms):
    """All pattern tuples in codeword-index order (first symbol is MSB)."""
    size = c.size
    n = size**n_syms
    patterns = np.zeros((n, n_syms), dtype=int)
    for m in range(n_syms):
        period = size ** (n_syms - 1 - m)
        patterns[:, m] = (np.arange(n) // period) % size
    return patterns


def alamouti_codebook(c: Constellation = None):
    c = c if c is not None else CONSTELLATIONS["QPSK"]
    patterns = _enumerate_symbol_tuples(c, 2)
    words = np.stack(
        [
            encode_alamouti(c.pattern_to_point(int(p1)), c.pattern_to_point(int(p2)))
            for p1, p2 in patterns
        ]
    )
    return BlockCodebook("alamouti", words, 2 * c.bits_per_symbol)


def golden_codebook(c: Constellation = None):
    c = c if c is not None else CONSTELLATIONS["QPSK"]
    patterns = _enumerate_symbol_tuples(c, 4)
    words = np.stack(
        [
            encode_golden([c.pattern_to_point(int(p)) for p in row])
            for row in patterns
        ]
    )
    return BlockCodebook("golden", words, 4 * c.bits_per_symbol)


def spatial_multiplex_codebook(c: Constellation = None, lt=2, n_uses=1):
    c = c if c is not None else CONSTELLATIONS["QPSK"]
    n_syms = lt * n_uses
    patterns = _enumerate_symbol_tuples(c, n_syms)
    words = np.stack(
        [
            encode_spatial_multiplex(
                np.array([c.pattern_to_point(int(p)) for p in row]), lt
            )
            for row in patterns
        ]
    )
    return BlockCodebook("spatial_multiplex", words, n_syms * c.bits_per_symbol)


@dataclass(frozen=True)
class LinearDispersionCode:
    """Codeword as a linear map X = sum_m s_m A_m over complex symbols.

    ``basis`` has shape (n_syms, lt, n_uses).  Symbol order matches the
    codebook bit order: symbol 0 carries the most significant bits.
    """

    name: str
    basis: np.ndarray
    constellation: Constellation

    def __post_init__(self):
        b = np.asarray(self.basis, dtype=complex)
        object.__setattr__(self, "basis", b)
        if b.ndim != 3:
            raise ValidationError("basis must be (n_syms, lt, n_uses)")

    @property
    def n_syms(self):
        return self.basis.shape[0]

    @property
    def lt(self):
        return self.basis.shape[1]

    @property
    def n_uses(self):
        return self.basis.shape[2]

    @property
    def bits_per_codeword(self):
        return self.n_syms * self.constellation.bits_per_symbol

    def encode(self, symbols):
        symbols = np.asarray(symbols, dtype=complex)
        if symbols.shape != (self.n_syms,):
            raise LengthMismatch(f"expected {self.n_syms} symbols")
        return np.einsum("m,mjk->jk", symbols, self.basis)


def golden_dispersion(c: Constellation = None):
    c = c if c is not None else CONSTELLATIONS["QPSK"]
    th, tb = GOLDEN_THETA, GOLDEN_THETA_BAR
    a, ab = GOLDEN_ALPHA, GOLDEN_ALPHA_BAR
    basis = GOLDEN_SCALE * np.array(
        [
            [[a, 0], [0, ab]],
            [[a * th, 0], [0, ab * tb]],
            [[0, a], [1j * ab, 0]],
            [[0, a * th], [1j * ab * tb, 0]],
        ],
        dtype=complex,
    )
    return LinearDispersionCode("golden", basis, c)


def spatial_multiplex_dispersion(c: Constellation = None, lt=2, n_uses=1):
    c = c if c is not None else CONSTELLATIONS["QPSK"]
    n_syms = lt * n_uses
    basis = np.zeros((n_syms, lt, n_uses), dtype=complex)
    for k in range(n_uses):
        for a in range(lt):
            basis[k * lt + a, a, k] = 1.0 / np.sqrt(lt)
    return LinearDispersionCode("spatial_multiplex", basis, c)


@dataclass(frozen=True)
class TrellisCode:
    """Trellis space-time code.

    ``next_state[s, u]`` and ``out_idx[s, u, :]`` give the successor state
    and the per-antenna constellation point indices for input pattern u in
    state s.  ``term_inputs[s]`` is the fixed input sequence (length
    ``n_term_steps``) that drives state s back to state 0; every frame is
    terminated with it, so all frames of equal data length have equal length.
    """

    name: str
    n_states: int
    bits_per_step: int
    lt: int
    constellation: Constellation
    next_state: np.ndarray = field(repr=False)
    out_idx: np.ndarray = field(repr=False)
    term_inputs: np.ndarray = field(repr=False)

    @property
    def n_inputs(self):
        return 2 ** self.bits_per_step

    @property
    def n_term_steps(self):
        return self.term_inputs.shape[1]


def _termination_table(next_state, max_steps=None):
    """Per-state input sequences of minimal uniform length ending in state 0.

    Finds the smallest T such that every state has a length-T path to state
    0, then picks the lexicographically smallest input sequence per state.
    """
    n_states, n_inputs = next_state.shape
    if n_states == 1:
        return np.zeros((1, 0), dtype=int)
    if max_steps is None:
        max_steps = max(2 * n_states, 8)
    # reach[t][s] is True when state s has an exact-t-step path to state 0
    reach = [np.zeros(n_states, dtype=bool)]
    reach[0][0] = True
    t = 0
    while not reach[t].all():
        t += 1
        if t > max_steps:
            raise ValidationError(
                "trellis cannot be driven to state 0 with a uniform-length tail"
            )
        nxt = np.zeros(n_states, dtype=bool)
        for s in range(n_states):
            nxt[s] = reach[t - 1][next_state[s]].any()
        reach.append(nxt)
    n_term = t
    term = np.zeros((n_states, n_term), dtype=int)
    for s in range(n_states):
        cur = s
        for step in range(n_term):
            remaining = n_term - step - 1
            for u in range(n_inputs):
                if reach[remaining][next_state[cur, u]]:
                    term[s, step] = u
                    cur = next_state[cur, u]
                    break
        if cur != 0:
            raise ValidationError("termination table construction failed")
    return term


def load_trellis(text, name="trellis"):
    """Parse a code-definition document into a TrellisCode.

    Format: a header line ``trellis <n_states> <bits_per_step> <lt>
    <constellation>`` followed by exactly n_states * 2^bits_per_step lines
    ``<state> <input-bits> <next_state> <idx_ant1> ... <idx_ant_lt>``.
    ``#`` starts a comment.  Raises ParseError (with line number) on
    malformed text and ValidationError on semantic violations.
    """
    header = None
    transitions = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        tokens = line.split()
        if header is None:
            if tokens[0] != "trellis" or len(tokens) != 5:
                raise ParseError(
                    "expected header 'trellis <n_states> <bits_per_step>"
                    " <lt> <constellation>'",
                    line=lineno,
                )
            try:
                n_states, bits_per_step, lt = (int(v) for v in tokens[1:4])
            except ValueError:
                raise ParseError("non-integer header field", line=lineno) from None
            if n_states < 1 or bits_per_step < 1 or lt < 1:
                raise ParseError("header counts must be positive", line=lineno)
            cname = tokens[4]
            if cname not in CONSTELLATIONS:
                raise ParseError(
                    f"unknown constellation {cname!r}", line=lineno
                )
            header = (n_states, bits_per_step, lt, CONSTELLATIONS[cname])
            continue
        n_states, bits_per_step, lt, constellation = header
        if len(tokens) != 3 + lt:
            raise ParseError(
                f"expected {3 + lt} fields, got {len(tokens)}", line=lineno
            )
        if len(tokens[1]) != bits_per_step or set(tokens[1]) - {"0", "1"}:
            raise ParseError(
                f"input pattern must be {bits_per_step} binary digits",
                line=lineno,
            )
        try:
            state = int(tokens[0])
            pattern = int(tokens[1], 2)
            nxt = int(tokens[2])
            idx = [int(v) for v in tokens[3:]]
        except ValueError:
            raise ParseError("non-integer transition field", line=lineno) from None
        transitions.append((lineno, state, pattern, nxt, idx))

    if header is None:
        raise ParseError("empty document: missing header line", line=1)
    n_states, bits_per_step, lt, constellation = header
    n_inputs = 2**bits_per_step
    if len(transitions) != n_states * n_inputs:
        raise ValidationError(
            f"expected {n_states * n_inputs} transition lines,"
            f" got {len(transitions)}"
        )
    next_state = np.full((n_states, n_inputs), -1, dtype=int)
    out_idx = np.zeros((n_states, n_inputs, lt), dtype=int)
    for lineno, state, pattern, nxt, idx in transitions:
        if not 0 <= state < n_states:
            raise ValidationError(f"line {lineno}: state {state} out of range")
        if not 0 <= nxt < n_states:
            raise ValidationError(f"line {lineno}: next state {nxt} out of range")
        if any(not 0 <= v < constellation.size for v in idx):
            raise ValidationError(
                f"line {lineno}: point index out of range for"
                f" {constellation.name}"
            )
        if next_state[state, pattern] != -1:
            raise ValidationError(
                f"line {lineno}: duplicate transition for state {state},"
                f" input {pattern:0{bits_per_step}b}"
            )
        next_state[state, pattern] = nxt
        out_idx[state, pattern] = idx
    if (next_state < 0).any():
        missing = np.argwhere(next_state < 0)[0]
        raise ValidationError(
            f"missing transition for state {missing[0]},"
            f" input {missing[1]:0{bits_per_step}b}"
        )
    term = _termination_table(next_state)
    return TrellisCode(
        name=name,
        n_states=n_states,
        bits_per_step=bits_per_step,
        lt=lt,
        constellation=constellation,
        next_state=next_state,
        out_idx=out_idx,
        term_inputs=term,
    )


def encode_trellis(bits, code: TrellisCode):
    """Encode a bit sequence, append the termination tail, scale 1/sqrt(lt).

    Output is lt x (data steps + termination steps); the encoder starts and
    ends in state 0.
    """
    patterns = bits_to_patterns(bits, code.bits_per_step)
    state = 0
    cols = np.zeros((len(patterns) + code.n_term_steps, code.lt), dtype=int)
    for k, u in enumerate(patterns):
        cols[k] = code.out_idx[state, u]
        state = code.next_state[state, u]
    for j, u in enumerate(code.term_inputs[state]):
        cols[len(patterns) + j] = code.out_idx[state, u]
        state = code.next_state[state, u]
    if state != 0:
        raise ValidationError("termination tail did not reach state 0")
    points = code.constellation.points[cols]
    return points.T / np.sqrt(code.lt)


def load_packaged_trellis(name="delay_diversity_4state_qpsk"):
    """Load one of the code-definition files shipped with the package."""
    import importlib.resources

    text = (
        importlib.resources.files("stclab")
        .joinpath(f"codes/{name}.txt")
        .read_text(encoding="utf-8")
    )
    return load_trellis(text, name=name)


def trellis_path_codebook(code: TrellisCode, n_steps):
    """Exhaustive codebook of all length-n_steps data paths (plus tails).

    Only usable for small codes and short frames; exists as the brute-force
    oracle for the Viterbi decoder.
    """
    n_words = code.n_inputs**n_steps
    bits_per_word = n_steps * code.bits_per_step
    words = np.zeros(
        (n_words, code.lt, n_steps + code.n_term_steps), dtype=complex
    )
    shifts = np.arange(n_steps - 1, -1, -1) * code.bits_per_step
    mask = code.n_inputs - 1
    from .mathcore import patterns_to_bits

    for n in range(n_words):
        patterns = (n >> shifts) & mask
        bits = patterns_to_bits(patterns, code.bits_per_step)
        words[n] = encode_trellis(bits, code)
    return BlockCodebook(f"{code.name}_paths", words, bits_per_word)
