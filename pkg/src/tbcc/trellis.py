"""Trellis construction and tail-biting encoding for feedforward convolutional codes.

State packing: the encoder register is (r_1, ..., r_nu) with r_1 the most
recently shifted-in input bit, and the state integer is
s = sum_k r_k * 2^(nu-k), i.e. the newest bit sits at the MSB.  Shifting in
input bit b therefore maps state s to (b << (nu-1)) | (s >> 1).

Generator taps are octal-specified and read MSB-as-current-input (LTE
convention: 133 octal = 1011011 binary taps the current input plus register
positions 2, 3, 5, 6).  `build_trellis` takes octal digit sequences (ints
like 133 or strings like "133"); the `Trellis` itself stores parsed masks.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

# LTE rate-1/3 constraint-length-7 code (tap masks, already parsed)
LTE_MEMORY = 6
LTE_TAPS = (0o133, 0o171, 0o165)


def parse_octal(p) -> int:
    """Parse an octal digit sequence given as int (133) or string ("133")."""
    return int(str(p), 8)


@dataclass(frozen=True)
class Trellis:
    """Immutable transition/output structure of a binary feedforward CC."""

    memory: int
    taps: tuple[int, ...]                  # tap masks, bit (memory) = current input
    num_states: int = field(init=False)
    n_out: int = field(init=False)         # output bits per input bit (V)
    next_state: np.ndarray = field(init=False)   # (2^nu, 2) -> state
    edge_out: np.ndarray = field(init=False)     # (2^(nu+1), V) uint8, edge e = 2*s' + b
    edge_out_f: np.ndarray = field(init=False)   # float64 copy for metric math

    def __post_init__(self):
        nu = self.memory
        if nu < 1:
            raise ValueError("memory must be >= 1")
        for p in self.taps:
            if p >= 1 << (nu + 1):
                raise ValueError(f"polynomial 0o{p:o} has degree > memory {nu}")
        S = 1 << nu
        V = len(self.taps)
        next_state = np.empty((S, 2), dtype=np.int64)
        edge_out = np.empty((2 * S, V), dtype=np.uint8)
        for s in range(S):
            for b in (0, 1):
                window = (b << nu) | s
                next_state[s, b] = (b << (nu - 1)) | (s >> 1)
                for v, g in enumerate(self.taps):
                    edge_out[2 * s + b, v] = bin(window & g).count("1") & 1
        object.__setattr__(self, "num_states", S)
        object.__setattr__(self, "n_out", V)
        object.__setattr__(self, "next_state", next_state)
        object.__setattr__(self, "edge_out", edge_out)
        object.__setattr__(self, "edge_out_f", edge_out.astype(np.float64))
        next_state.setflags(write=False)
        edge_out.setflags(write=False)

    @property
    def num_edges(self) -> int:
        return 2 * self.num_states

    def predecessors(self, s: int) -> list[tuple[int, int]]:
        """The two (previous state, input bit) pairs feeding state s."""
        b = s >> (self.memory - 1)
        q = s & ((self.num_states >> 1) - 1)
        return [(2 * q, b), (2 * q + 1, b)]

    def transition(self, s_prev: int, b: int) -> tuple[int, np.ndarray]:
        """Next state and the V output bits for input bit b from s_prev."""
        return int(self.next_state[s_prev, b]), self.edge_out[2 * s_prev + b]


def build_trellis(memory: int, polynomials) -> Trellis:
    """Build the trellis from octal generator specs, e.g. (133, 171, 165)."""
    return Trellis(memory=memory, taps=tuple(parse_octal(p) for p in polynomials))


def lte_trellis() -> Trellis:
    return Trellis(memory=LTE_MEMORY, taps=LTE_TAPS)


def state_of(u: np.ndarray, trellis: Trellis) -> int | np.ndarray:
    """Tail-biting start state: the last nu bits packed newest-bit-at-MSB.

    Accepts (N_u,) or a batch (M, N_u); returns int or (M,) int array.
    """
    u = np.asarray(u, dtype=np.uint8)
    nu = trellis.memory
    single = u.ndim == 1
    u2 = u[None, :] if single else u
    if u2.shape[1] < nu:
        raise ValueError("block shorter than memory")
    weights = 1 << np.arange(nu - 1, -1, -1)  # u[-1] is the newest bit -> MSB
    states = u2[:, -nu:][:, ::-1].astype(np.int64) @ weights
    return int(states[0]) if single else states


def tb_encode(u: np.ndarray, trellis: Trellis) -> np.ndarray:
    """Tail-biting encode: register preloaded from the last nu bits of u.

    Accepts (N_u,) or (M, N_u); output has N_u * V bits per word.
    """
    u = np.asarray(u, dtype=np.uint8)
    single = u.ndim == 1
    u2 = u[None, :] if single else u
    if u2.shape[1] < trellis.memory:
        raise ValueError("block shorter than memory")
    states = np.atleast_1d(np.asarray(state_of(u2, trellis)))
    V = trellis.n_out
    nxt = trellis.next_state
    out = np.empty((u2.shape[0], u2.shape[1] * V), dtype=np.uint8)
    for j in range(u2.shape[1]):
        b = u2[:, j].astype(np.int64)
        edges = 2 * states + b
        out[:, j * V:(j + 1) * V] = trellis.edge_out[edges]
        states = nxt[states, b]
    return out[0] if single else out
