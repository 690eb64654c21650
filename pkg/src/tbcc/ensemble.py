"""Gated ensemble of weighted circular Viterbi experts.

Expert i (0-based) owns the contiguous termination-state interval
[spe*i, spe*(i+1)) with spe = num_states / num_experts.  The gate runs one
plain circular sweep with uniform start metrics, traces back from the
midpoint state of every expert's interval, and checks each candidate's CRC
syndrome: a zero syndrome short-circuits decoding, otherwise the word is
routed to every expert attaining the minimal syndrome value.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .channel import awgn_llr, modulate, noise_variance, random_message_bits
from .crc import CrcSpec, crc_encode, crc_syndrome_batch
from .trellis import Trellis, state_of, tb_encode
from .viterbi import forward_kernel, middle_replication, traceback_batch, uniform_init
from .wcva import TrainConfig, WeightSet, train_expert, wcva_forward_batch

MANIFEST_NAME = "manifest.json"
ENSEMBLE_FORMAT_VERSION = 1


@dataclass(frozen=True)
class EnsembleConfig:
    num_experts: int = 8
    replications: int = 3
    llr_clip: float = 20.0

    def __post_init__(self):
        if self.replications % 2 == 0:
            raise ValueError("replication count must be odd")

    def states_per_expert(self, trellis: Trellis) -> int:
        if trellis.num_states % self.num_experts:
            raise ValueError(
                f"{self.num_experts} experts do not evenly divide "
                f"{trellis.num_states} states"
            )
        return trellis.num_states // self.num_experts

    def gate_states(self, trellis: Trellis) -> np.ndarray:
        """Trace-back states of the gate: interval midpoints."""
        spe = self.states_per_expert(trellis)
        return spe * np.arange(self.num_experts) + spe // 2

    def owned_states(self, expert: int, trellis: Trellis) -> slice:
        spe = self.states_per_expert(trellis)
        return slice(spe * expert, spe * (expert + 1))


def expert_of_state(states: np.ndarray | int, num_experts: int, trellis: Trellis) -> np.ndarray | int:
    """Which expert owns each termination state."""
    if trellis.num_states % num_experts:
        raise ValueError("expert count must divide the number of states")
    spe = trellis.num_states // num_experts
    return np.asarray(states) // spe if np.ndim(states) else int(states) // spe


def partition_dataset(
    llr: np.ndarray, u: np.ndarray, num_experts: int, trellis: Trellis
) -> list[tuple[np.ndarray, np.ndarray]]:
    """Split (llr, u) rows by the termination state of u; one bucket per expert."""
    states = np.asarray(state_of(u, trellis))
    owners = expert_of_state(states, num_experts, trellis)
    return [(llr[owners == k], u[owners == k]) for k in range(num_experts)]


@dataclass
class GatingDecision:
    """Outcome of the gate for one word."""

    syndromes: np.ndarray          # (num_experts,) syndrome weights
    traceback_words: np.ndarray    # (num_experts, N_u) candidate words
    emit_word: np.ndarray | None   # set when some syndrome is zero
    route_to: tuple[int, ...]      # experts attaining the minimal syndrome, else ()


def gate_batch(
    llr: np.ndarray,
    trellis: Trellis,
    cfg: EnsembleConfig,
    crc: CrcSpec,
    rng: np.random.Generator,
) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """Vectorized gate over (B, N_c) words.

    Returns (emit_mask, emitted_words, route_sets, syndromes, words):
    emitted_words rows are valid only where emit_mask; route_sets is a
    (B, num_experts) bool matrix of minimal-syndrome experts for the rest.
    The rng draws exactly one uniform per word (ties between zero-syndrome
    candidates), keeping consumption independent of the data.
    """
    llr = np.asarray(llr, dtype=np.float64)
    B = llr.shape[0]
    n_u = llr.shape[1] // trellis.n_out
    I = cfg.replications
    alpha = cfg.num_experts
    rep = np.tile(llr, (1, I))
    res = forward_kernel(rep, trellis, uniform_init(trellis), I * n_u, normalize=True)
    lo, hi = middle_replication(I, n_u)
    gate_states = cfg.gate_states(trellis)
    words = np.empty((B, alpha, n_u), dtype=np.uint8)
    for i, gs in enumerate(gate_states):
        bits, _ = traceback_batch(res.choice, np.full(B, gs), trellis)
        words[:, i] = bits[:, lo:hi]
    syn = crc_syndrome_batch(words.reshape(B * alpha, n_u), crc).reshape(B, alpha)

    zero = syn == 0
    n_zero = zero.sum(axis=1)
    emit_mask = n_zero > 0
    draws = rng.random(B)  # fixed consumption whatever the outcomes
    pick_ord = np.minimum((draws * np.maximum(n_zero, 1)).astype(np.int64), np.maximum(n_zero - 1, 0))
    csum = np.cumsum(zero, axis=1)
    pick_col = (csum > pick_ord[:, None]).argmax(axis=1)
    emitted = words[np.arange(B), pick_col]

    gmin = syn.min(axis=1)
    route_sets = (syn == gmin[:, None]) & ~emit_mask[:, None]
    return emit_mask, emitted, route_sets, syn, words


def gate(
    llr: np.ndarray,
    trellis: Trellis,
    cfg: EnsembleConfig,
    crc: CrcSpec,
    rng: np.random.Generator | None = None,
) -> GatingDecision:
    """Gate a single word; see `gate_batch`."""
    if rng is None:
        rng = np.random.default_rng(0)
    emit_mask, emitted, route_sets, syn, words = gate_batch(
        np.asarray(llr)[None, :], trellis, cfg, crc, rng
    )
    if emit_mask[0]:
        return GatingDecision(syn[0], words[0], emitted[0], ())
    return GatingDecision(syn[0], words[0], None, tuple(np.flatnonzero(route_sets[0])))


@dataclass
class Ensemble:
    trellis: Trellis
    crc: CrcSpec
    config: EnsembleConfig
    experts: list[WeightSet]
    train_config: TrainConfig | None = None
    seed: int | None = None

    def __post_init__(self):
        if len(self.experts) != self.config.num_experts:
            raise ValueError("one weight set per expert required")


def ensemble_decode_batch(
    llr: np.ndarray,
    ensemble: Ensemble,
    rng: np.random.Generator,
) -> tuple[np.ndarray, np.ndarray]:
    """Gated decode of a (B, N_c) batch; returns (words, va_runs).

    va_runs counts forward sweeps in block units: I for the gate plus I per
    invoked expert (trace-backs are not charged).
    """
    llr = np.asarray(llr, dtype=np.float64)
    B = llr.shape[0]
    trellis = ensemble.trellis
    cfg = ensemble.config
    n_u = llr.shape[1] // trellis.n_out
    I = cfg.replications
    emit_mask, emitted, route_sets, _, _ = gate_batch(llr, trellis, cfg, ensemble.crc, rng)

    out = np.empty((B, n_u), dtype=np.uint8)
    out[emit_mask] = emitted[emit_mask]
    va_runs = np.full(B, float(I))
    routed = ~emit_mask
    if routed.any():
        va_runs[routed] += I * route_sets[routed].sum(axis=1)
        best_syn = np.full(B, np.iinfo(np.int64).max)
        for k in range(cfg.num_experts):
            rows = np.flatnonzero(route_sets[:, k])
            if rows.size == 0:
                continue
            cand = wcva_decode_batch_for_expert(llr[rows], ensemble, k)
            syn = crc_syndrome_batch(cand, ensemble.crc)
            better = syn < best_syn[rows]  # strict: ties keep the lower expert index
            upd = rows[better]
            out[upd] = cand[better]
            best_syn[upd] = syn[better]
    return out, va_runs


def wcva_decode_batch_for_expert(llr: np.ndarray, ensemble: Ensemble, k: int) -> np.ndarray:
    """Expert k's decode: weighted sweep, best owned final state, middle bits."""
    trellis = ensemble.trellis
    cfg = ensemble.config
    n_u = llr.shape[1] // trellis.n_out
    res, _ = wcva_forward_batch(llr, trellis, ensemble.experts[k])
    owned = np.arange(trellis.num_states)[cfg.owned_states(k, trellis)]
    ends = owned[res.lam_last[:, owned].argmin(axis=1)]
    bits, _ = traceback_batch(res.choice, ends, trellis)
    lo, hi = middle_replication(cfg.replications, n_u)
    return bits[:, lo:hi]


def ensemble_decode(
    llr: np.ndarray,
    ensemble: Ensemble,
    rng: np.random.Generator | None = None,
) -> tuple[np.ndarray, float]:
    if rng is None:
        rng = np.random.default_rng(0)
    words, runs = ensemble_decode_batch(np.asarray(llr)[None, :], ensemble, rng)
    return words[0], float(runs[0])


# ---------------------------------------------------------------------------
# training
# ---------------------------------------------------------------------------

def _expert_batches(
    expert: int,
    trellis: Trellis,
    ens_cfg: EnsembleConfig,
    train_cfg: TrainConfig,
    crc: CrcSpec,
    n_m: int,
    rng: np.random.Generator,
):
    """Yield (llr, target_state) mini-batches restricted to one expert's states."""
    spe = ens_cfg.states_per_expert(trellis)
    lo_state, hi_state = spe * expert, spe * (expert + 1)
    snr_lo, snr_hi = train_cfg.snr_range_db
    buf_llr: list[np.ndarray] = []
    buf_st: list[np.ndarray] = []
    have = 0
    for _ in range(train_cfg.num_batches):
        while have < train_cfg.batch_size:
            m = random_message_bits(rng, ens_cfg.num_experts * train_cfg.batch_size, n_m)
            u = crc_encode(m, crc)
            states = np.asarray(state_of(u, trellis))
            keep = (states >= lo_state) & (states < hi_state)
            u, states = u[keep], states[keep]
            x = modulate(tb_encode(u, trellis))
            snr_db = rng.uniform(snr_lo, snr_hi, size=u.shape[0])
            sigma2 = 10.0 ** (-snr_db / 10.0)
            noise = rng.standard_normal(x.shape)
            llr = (2.0 / sigma2[:, None]) * (x + np.sqrt(sigma2)[:, None] * noise)
            buf_llr.append(llr)
            buf_st.append(states)
            have += u.shape[0]
        llr_all = np.concatenate(buf_llr)
        st_all = np.concatenate(buf_st)
        yield llr_all[: train_cfg.batch_size], st_all[: train_cfg.batch_size]
        buf_llr = [llr_all[train_cfg.batch_size:]]
        buf_st = [st_all[train_cfg.batch_size:]]
        have -= train_cfg.batch_size


def train_ensemble(
    trellis: Trellis,
    ens_cfg: EnsembleConfig,
    train_cfg: TrainConfig,
    crc: CrcSpec,
    n_m: int,
    seed: int,
    verbose: bool = False,
) -> Ensemble:
    """Train all experts on simulated transmissions of their state subsets."""
    n_u = n_m + crc.crc_len
    root = np.random.SeedSequence(seed)
    children = root.spawn(ens_cfg.num_experts)
    experts: list[WeightSet] = []
    for k in range(ens_cfg.num_experts):
        rng = np.random.default_rng(children[k])
        batches = _expert_batches(k, trellis, ens_cfg, train_cfg, crc, n_m, rng)
        ws, history = train_expert(batches, trellis, train_cfg, n_u)
        if verbose:
            print(
                f"expert {k}: loss {history[0]:.4f} -> {history[-1]:.4f} "
                f"({len(history)} batches)"
            )
        experts.append(ws)
    return Ensemble(trellis, crc, ens_cfg, experts, train_cfg, seed)


# ---------------------------------------------------------------------------
# on-disk format: one weight file per expert plus a manifest
# ---------------------------------------------------------------------------

def save_ensemble(ensemble: Ensemble, out_dir: str | Path) -> None:
    from .wcva import save_weights

    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    manifest = {
        "format_version": ENSEMBLE_FORMAT_VERSION,
        "memory": ensemble.trellis.memory,
        "polynomials_octal": [f"{t:o}" for t in ensemble.trellis.taps],
        "crc_poly": ensemble.crc.poly,
        "crc_len": ensemble.crc.crc_len,
        "num_experts": ensemble.config.num_experts,
        "replications": ensemble.config.replications,
        "llr_clip": ensemble.config.llr_clip,
        "block_len": ensemble.experts[0].block_len,
        "seed": ensemble.seed,
        "training": None
        if ensemble.train_config is None
        else {
            "learning_rate": ensemble.train_config.learning_rate,
            "batch_size": ensemble.train_config.batch_size,
            "num_batches": ensemble.train_config.num_batches,
            "snr_range_db": list(ensemble.train_config.snr_range_db),
            "rmsprop_decay": ensemble.train_config.rmsprop_decay,
            "rmsprop_eps": ensemble.train_config.rmsprop_eps,
        },
        "expert_files": [f"expert_{k}.json" for k in range(ensemble.config.num_experts)],
    }
    (out / MANIFEST_NAME).write_text(json.dumps(manifest, indent=2))
    for k, ws in enumerate(ensemble.experts):
        save_weights(ws, out / manifest["expert_files"][k])


def load_ensemble(in_dir: str | Path) -> Ensemble:
    from .trellis import build_trellis
    from .wcva import load_weights

    src = Path(in_dir)
    manifest = json.loads((src / MANIFEST_NAME).read_text())
    if manifest.get("format_version") != ENSEMBLE_FORMAT_VERSION:
        raise ValueError("unsupported ensemble format version")
    trellis = build_trellis(manifest["memory"], manifest["polynomials_octal"])
    crc = CrcSpec(poly=manifest["crc_poly"], crc_len=manifest["crc_len"])
    cfg = EnsembleConfig(
        num_experts=manifest["num_experts"],
        replications=manifest["replications"],
        llr_clip=manifest["llr_clip"],
    )
    experts = [load_weights(src / f) for f in manifest["expert_files"]]
    tc = None
    if manifest.get("training"):
        t = manifest["training"]
        tc = TrainConfig(
            learning_rate=t["learning_rate"],
            batch_size=t["batch_size"],
            num_batches=t["num_batches"],
            snr_range_db=tuple(t["snr_range_db"]),
            rmsprop_decay=t["rmsprop_decay"],
            rmsprop_eps=t["rmsprop_eps"],
            replications=manifest["replications"],
        )
    return Ensemble(trellis, crc, cfg, experts, tc, manifest.get("seed"))
