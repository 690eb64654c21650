"""Monte Carlo experiment driver: SNR sweeps, FER/complexity accounting, result files.

Every decoder at a given (seed, SNR, trial) sees the identical LLR word, so
FER comparisons are noise-paired.  Gate tie-break randomness draws from a
separate substream, keeping the noise stream independent of the decoder
selection.
"""

from __future__ import annotations

import csv
import json
import sys
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .channel import awgn_llr, modulate, noise_variance, random_message_bits
from .crc import LTE_CRC16_POLY, CrcSpec, crc_encode
from .ensemble import (
    Ensemble,
    EnsembleConfig,
    ensemble_decode_batch,
    wcva_decode_batch_for_expert,
)
from .crc import crc_syndrome_batch
from .lva import lcva_decode_batch, lgva_decode_batch
from .trellis import Trellis, build_trellis, state_of, tb_encode
from .viterbi import (
    cva_decode_batch,
    forward_kernel,
    middle_replication,
    mld_decode_batch,
    traceback_batch,
    uniform_init,
    va_decode_batch,
)
from .wcva import WeightSet, wcva_forward_batch

DECODER_NAMES = ("va", "cva", "lcva", "lgva", "mld", "wcvae", "gated_wcvae")


@dataclass(frozen=True)
class CodeConfig:
    """One length variant of the CRC + tail-biting CC chain."""

    message_bits: int
    memory: int = 6
    polynomials: tuple = (133, 171, 165)  # octal digit sequences
    crc_poly: int = LTE_CRC16_POLY
    crc_len: int = 16

    @property
    def n_u(self) -> int:
        return self.message_bits + self.crc_len

    @property
    def n_c(self) -> int:
        return self.n_u * len(self.polynomials)

    @property
    def label(self) -> str:
        return f"({self.n_c},{self.n_u},{self.message_bits})"

    def trellis(self) -> Trellis:
        return build_trellis(self.memory, self.polynomials)

    def crc(self) -> CrcSpec:
        return CrcSpec(poly=self.crc_poly, crc_len=self.crc_len)


@dataclass(frozen=True)
class ExperimentConfig:
    code: CodeConfig
    snr_grid_db: tuple = (-2.0, -1.0, 0.0, 1.0, 2.0)
    decoders: tuple = ("cva", "lcva", "lgva", "wcvae", "gated_wcvae")
    min_frame_errors: int = 100
    max_trials: int = 1_000_000
    batch_size: int = 2048
    seed: int = 0
    list_size: int = 8
    replications: int = 3
    llr_clip: float = 20.0
    noiseless: bool = False

    def __post_init__(self):
        if self.min_frame_errors < 1:
            raise ValueError("stop rule needs at least one frame error")
        for d in self.decoders:
            if d not in DECODER_NAMES:
                raise ValueError(f"unknown decoder {d!r}; choose from {DECODER_NAMES}")


@dataclass
class FerRecord:
    decoder: str
    snr_db: float
    trials: int
    frame_errors: int
    bit_errors: int
    fer: float
    ber: float
    mean_va_runs: float
    capped: bool = False


def _wcvae_decode_batch(llr: np.ndarray, ensemble: Ensemble) -> np.ndarray:
    """Non-gated ensemble: every expert decodes, minimal syndrome wins."""
    B = llr.shape[0]
    out = np.empty((B, ensemble.experts[0].block_len), dtype=np.uint8)
    best_syn = np.full(B, np.iinfo(np.int64).max)
    for k in range(ensemble.config.num_experts):
        cand = wcva_decode_batch_for_expert(llr, ensemble, k)
        syn = crc_syndrome_batch(cand, ensemble.crc)
        better = syn < best_syn  # strict: ties keep the lower expert index
        out[better] = cand[better]
        best_syn[better] = syn[better]
    return out


def _make_decoders(cfg: ExperimentConfig, trellis: Trellis, crc: CrcSpec,
                   ensemble: Ensemble | None, gate_rng: np.random.Generator):
    """Resolve decoder names to batch callables (llr, u, states) -> (words, va_runs)."""
    I = cfg.replications
    S = trellis.num_states
    alpha = ensemble.config.num_experts if ensemble is not None else None

    def const_runs(n: float):
        def wrap(fn):
            def call(llr, u, states):
                return fn(llr), np.full(llr.shape[0], float(n))
            return call
        return wrap

    table = {}
    table["va"] = const_runs(1)(lambda llr: va_decode_batch(llr, trellis))
    table["cva"] = const_runs(I)(lambda llr: cva_decode_batch(llr, trellis, I, cfg.llr_clip))
    table["lcva"] = const_runs(I)(
        lambda llr: lcva_decode_batch(llr, trellis, I, cfg.list_size, crc, cfg.llr_clip)
    )
    table["mld"] = const_runs(S)(lambda llr: mld_decode_batch(llr, trellis)[0])

    def lgva(llr, u, states):
        words = lgva_decode_batch(llr, trellis, states, cfg.list_size, crc, cfg.llr_clip)
        return words, np.full(llr.shape[0], 1.0)

    table["lgva"] = lgva

    if ensemble is not None:
        table["wcvae"] = const_runs(I * alpha)(lambda llr: _wcvae_decode_batch(llr, ensemble))

        def gated(llr, u, states):
            return ensemble_decode_batch(llr, ensemble, gate_rng)

        table["gated_wcvae"] = gated

    missing = [d for d in cfg.decoders if d not in table]
    if missing:
        raise ValueError(f"decoders {missing} need a trained ensemble")
    return {name: table[name] for name in cfg.decoders}


def run_experiment(
    cfg: ExperimentConfig,
    ensemble: Ensemble | None = None,
    verbose: bool = False,
) -> list[FerRecord]:
    """Sweep the SNR grid, accumulating until the stop rule per point."""
    trellis = cfg.code.trellis()
    crc = cfg.code.crc()
    n_m = cfg.code.message_bits
    n_u = cfg.code.n_u
    records: list[FerRecord] = []
    root = np.random.SeedSequence(cfg.seed)
    point_seeds = root.spawn(len(cfg.snr_grid_db))

    for snr_db, pseed in zip(cfg.snr_grid_db, point_seeds):
        noise_ss, gate_ss = pseed.spawn(2)
        noise_rng = np.random.default_rng(noise_ss)
        gate_rng = np.random.default_rng(gate_ss)
        decoders = _make_decoders(cfg, trellis, crc, ensemble, gate_rng)
        sigma2 = noise_variance(snr_db)
        errors = {d: 0 for d in decoders}
        bit_errors = {d: 0 for d in decoders}
        run_sum = {d: 0.0 for d in decoders}
        trials = 0
        while True:
            B = min(cfg.batch_size, cfg.max_trials - trials)
            if B <= 0:
                break
            m = random_message_bits(noise_rng, B, n_m)
            u = crc_encode(m, crc)
            x = modulate(tb_encode(u, trellis))
            llr = awgn_llr(x, sigma2, noise_rng, noiseless=cfg.noiseless)
            states = np.asarray(state_of(u, trellis))
            for name, fn in decoders.items():
                u_hat, runs = fn(llr, u, states)
                diff = u_hat != u
                errors[name] += int(diff.any(axis=1).sum())
                bit_errors[name] += int(diff.sum())
                run_sum[name] += float(runs.sum())
            trials += B
            if all(errors[d] >= cfg.min_frame_errors for d in decoders):
                break
        for name in decoders:
            capped = errors[name] < cfg.min_frame_errors
            if capped:
                print(
                    f"warning: {name} @ {snr_db:+.1f} dB stopped at the "
                    f"{cfg.max_trials}-trial cap with {errors[name]} errors",
                    file=sys.stderr,
                )
            records.append(
                FerRecord(
                    decoder=name,
                    snr_db=float(snr_db),
                    trials=trials,
                    frame_errors=errors[name],
                    bit_errors=bit_errors[name],
                    fer=errors[name] / trials,
                    ber=bit_errors[name] / (trials * n_u),
                    mean_va_runs=run_sum[name] / trials,
                    capped=capped,
                )
            )
        if verbose:
            done = ", ".join(f"{d}={errors[d]}" for d in decoders)
            print(f"{snr_db:+.1f} dB: {trials} trials, errors {done}", file=sys.stderr)
    return records


# ---------------------------------------------------------------------------
# result files
# ---------------------------------------------------------------------------

CSV_COLUMNS = ("decoder", "snr_db", "trials", "frame_errors", "fer", "ber", "mean_va_runs")


def write_csv(records: list[FerRecord], path: str | Path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(CSV_COLUMNS)
        for r in records:
            d = asdict(r)
            w.writerow([repr(d[c]) if isinstance(d[c], float) else d[c] for c in CSV_COLUMNS])


def write_json(records: list[FerRecord], path: str | Path) -> None:
    Path(path).write_text(json.dumps({"records": [asdict(r) for r in records]}, indent=2))


def read_json(path: str | Path) -> list[FerRecord]:
    doc = json.loads(Path(path).read_text())
    return [FerRecord(**r) for r in doc["records"]]


def emit_results(records: list[FerRecord], out_dir: str | Path, stem: str = "results") -> dict:
    """CSV + JSON side by side; returns the written paths."""
    if not records:
        raise ValueError("no records to emit")
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = {"csv": out / f"{stem}.csv", "json": out / f"{stem}.json"}
    write_csv(records, paths["csv"])
    write_json(records, paths["json"])
    return paths


# ---------------------------------------------------------------------------
# per-state specialization analysis
# ---------------------------------------------------------------------------

@dataclass
class StateRecord:
    state: int
    expert: int
    decoder: str   # "cva" (unit weights) or "wcva" (trained expert)
    trials: int
    frame_errors: int
    fer: float


def _fixed_state_decode(
    llr: np.ndarray,
    trellis: Trellis,
    I: int,
    tb_state: int,
    weights: WeightSet | None,
) -> np.ndarray:
    """Uniform-start circular sweep, trace-back from one fixed state."""
    n_u = llr.shape[1] // trellis.n_out
    if weights is None:
        rep = np.tile(llr, (1, I))
        res = forward_kernel(rep, trellis, uniform_init(trellis), I * n_u, normalize=True)
    else:
        res, _ = wcva_forward_batch(llr, trellis, weights)
    bits, _ = traceback_batch(res.choice, np.full(llr.shape[0], tb_state), trellis)
    lo, hi = middle_replication(I, n_u)
    return bits[:, lo:hi]


def per_state_analysis(
    code: CodeConfig,
    ensemble: Ensemble,
    snr_db: float,
    errors_per_state: int,
    states: list[int] | None = None,
    seed: int = 0,
    max_words_per_state: int = 2_000_000,
    batch_size: int = 4096,
    verbose: bool = False,
) -> list[StateRecord]:
    """FER of expert i vs its unit-weight counterpart, conditioned per state.

    Words are rejection-sampled on the termination state; both decoders run
    trace-back from the first state of the owning expert's interval and see
    identical noise.
    """
    trellis = code.trellis()
    crc = code.crc()
    cfg = ensemble.config
    I = cfg.replications
    spe = cfg.states_per_expert(trellis)
    if states is None:
        states = list(range(trellis.num_states))
    sigma2 = noise_variance(snr_db)
    root = np.random.SeedSequence(seed)
    seeds = root.spawn(len(states))
    records: list[StateRecord] = []
    for s, ss in zip(states, seeds):
        rng = np.random.default_rng(ss)
        k = s // spe
        tb_state = spe * k
        counts = {"cva": 0, "wcva": 0}
        trials = 0
        while (
            min(counts.values()) < errors_per_state and trials < max_words_per_state
        ):
            m = random_message_bits(rng, batch_size, code.message_bits)
            u = crc_encode(m, crc)
            keep = np.asarray(state_of(u, trellis)) == s
            u = u[keep]
            if u.shape[0] == 0:
                continue
            x = modulate(tb_encode(u, trellis))
            llr = awgn_llr(x, sigma2, rng)
            for name, w in (("cva", None), ("wcva", ensemble.experts[k])):
                u_hat = _fixed_state_decode(llr, trellis, I, tb_state, w)
                counts[name] += int((u_hat != u).any(axis=1).sum())
            trials += u.shape[0]
        for name in ("cva", "wcva"):
            records.append(
                StateRecord(s, k, name, trials, counts[name], counts[name] / max(trials, 1))
            )
        if verbose:
            print(
                f"state {s}: {trials} words, cva {counts['cva']}, wcva {counts['wcva']}",
                file=sys.stderr,
            )
    return records


STATE_CSV_COLUMNS = ("state", "expert", "decoder", "trials", "frame_errors", "fer")


def write_state_csv(records: list[StateRecord], path: str | Path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(STATE_CSV_COLUMNS)
        for r in records:
            d = asdict(r)
            w.writerow([repr(d[c]) if isinstance(d[c], float) else d[c] for c in STATE_CSV_COLUMNS])


def write_state_json(records: list[StateRecord], path: str | Path) -> None:
    Path(path).write_text(json.dumps({"records": [asdict(r) for r in records]}, indent=2))
