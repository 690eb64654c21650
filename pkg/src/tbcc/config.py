"""YAML experiment configuration.

Layout (all sections optional, defaults below):

    code:
      message_bits: 13
      memory: 6
      polynomials: [133, 171, 165]   # octal digit sequences
    ensemble:
      num_experts: 8
      replications: 3
      llr_clip: 20.0
    training:
      learning_rate: 1.0e-3
      batch_size: 450
      num_batches: 50
      snr_range_db: [-2.0, 0.0]
      rmsprop_decay: 0.99
      rmsprop_eps: 1.0e-8
    evaluation:
      snr_grid_db: [-2, -1, 0, 1, 2]
      decoders: [cva, lcva, lgva, wcvae, gated_wcvae]
      min_frame_errors: 100
      max_trials: 1000000
      batch_size: 2048
      list_size: 8
      noiseless: false
    seed: 0
"""

from __future__ import annotations

from pathlib import Path

import yaml

from .ensemble import EnsembleConfig
from .harness import CodeConfig, ExperimentConfig
from .wcva import TrainConfig


def load_yaml(path: str | Path) -> dict:
    doc = yaml.safe_load(Path(path).read_text())
    if doc is None:
        doc = {}
    if not isinstance(doc, dict):
        raise ValueError(f"config root must be a mapping, got {type(doc).__name__}")
    return doc


def code_config(doc: dict) -> CodeConfig:
    sec = doc.get("code", {})
    if "message_bits" not in sec:
        raise ValueError("config needs code.message_bits")
    return CodeConfig(
        message_bits=int(sec["message_bits"]),
        memory=int(sec.get("memory", 6)),
        polynomials=tuple(sec.get("polynomials", (133, 171, 165))),
    )


def ensemble_config(doc: dict) -> EnsembleConfig:
    sec = doc.get("ensemble", {})
    return EnsembleConfig(
        num_experts=int(sec.get("num_experts", 8)),
        replications=int(sec.get("replications", 3)),
        llr_clip=float(sec.get("llr_clip", 20.0)),
    )


def train_config(doc: dict) -> TrainConfig:
    sec = doc.get("training", {})
    ens = doc.get("ensemble", {})
    return TrainConfig(
        learning_rate=float(sec.get("learning_rate", 1e-3)),
        batch_size=int(sec.get("batch_size", 450)),
        num_batches=int(sec.get("num_batches", 50)),
        snr_range_db=tuple(sec.get("snr_range_db", (-2.0, 0.0))),
        rmsprop_decay=float(sec.get("rmsprop_decay", 0.99)),
        rmsprop_eps=float(sec.get("rmsprop_eps", 1e-8)),
        llr_clip=float(ens.get("llr_clip", 20.0)),
        replications=int(ens.get("replications", 3)),
    )


def experiment_config(doc: dict, **overrides) -> ExperimentConfig:
    sec = doc.get("evaluation", {})
    ens = doc.get("ensemble", {})
    kwargs = dict(
        code=code_config(doc),
        snr_grid_db=tuple(float(s) for s in sec.get("snr_grid_db", (-2, -1, 0, 1, 2))),
        decoders=tuple(sec.get("decoders", ("cva", "lcva", "lgva", "wcvae", "gated_wcvae"))),
        min_frame_errors=int(sec.get("min_frame_errors", 100)),
        max_trials=int(sec.get("max_trials", 1_000_000)),
        batch_size=int(sec.get("batch_size", 2048)),
        seed=int(doc.get("seed", 0)),
        list_size=int(sec.get("list_size", 8)),
        replications=int(ens.get("replications", 3)),
        llr_clip=float(ens.get("llr_clip", 20.0)),
        noiseless=bool(sec.get("noiseless", False)),
    )
    kwargs.update({k: v for k, v in overrides.items() if v is not None})
    return ExperimentConfig(**kwargs)
