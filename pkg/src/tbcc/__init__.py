"""Tail-biting convolutional code toolkit.

Encode/decode chain for CRC-16 + LTE-style tail-biting convolutional codes,
circular Viterbi and list decoders, trainable per-edge weighted decoders
with a CRC-gated expert ensemble, and a Monte Carlo FER harness.
"""

from .channel import ChannelConfig, awgn_llr, llr_from_received, modulate, noise_variance, transmit
from .crc import LTE_CRC16, CrcSpec, crc_encode, crc_syndrome, crc_syndrome_batch
from .ensemble import (
    Ensemble,
    EnsembleConfig,
    GatingDecision,
    ensemble_decode,
    ensemble_decode_batch,
    gate,
    load_ensemble,
    partition_dataset,
    save_ensemble,
    train_ensemble,
)
from .harness import (
    CodeConfig,
    ExperimentConfig,
    FerRecord,
    StateRecord,
    emit_results,
    per_state_analysis,
    run_experiment,
)
from .lva import lcva_decode, lgva_decode, list_viterbi_decode
from .trellis import Trellis, build_trellis, lte_trellis, state_of, tb_encode
from .viterbi import (
    PathMetrics,
    biased_init,
    branch_metrics,
    cva_decode,
    mld_decode,
    traceback,
    uniform_init,
    va_decode,
    viterbi_forward,
)
from .wcva import (
    TrainConfig,
    WeightSet,
    backward,
    load_weights,
    save_weights,
    surrogate_loss,
    train_expert,
    wcva_forward,
)

__version__ = "0.1.0"
