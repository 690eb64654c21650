"""Matplotlib renderers for the harness outputs (written to files, never shown)."""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt

from .harness import FerRecord, StateRecord

_MARKERS = ("o", "s", "^", "v", "D", "*", "P", "X")


def _by_decoder(records: list[FerRecord]) -> dict[str, list[FerRecord]]:
    groups: dict[str, list[FerRecord]] = {}
    for r in records:
        groups.setdefault(r.decoder, []).append(r)
    for rs in groups.values():
        rs.sort(key=lambda r: r.snr_db)
    return groups


def plot_fer(records: list[FerRecord], path: str | Path, title: str = "") -> Path:
    fig, ax = plt.subplots(figsize=(6.4, 4.8))
    for i, (name, rs) in enumerate(_by_decoder(records).items()):
        ax.semilogy(
            [r.snr_db for r in rs],
            [max(r.fer, 1e-12) for r in rs],
            marker=_MARKERS[i % len(_MARKERS)],
            label=name,
        )
    ax.set_xlabel("SNR [dB]")
    ax.set_ylabel("FER")
    if title:
        ax.set_title(title)
    ax.grid(True, which="both", alpha=0.4)
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return Path(path)


def plot_va_runs(records: list[FerRecord], path: str | Path, title: str = "") -> Path:
    fig, ax = plt.subplots(figsize=(6.4, 4.8))
    for i, (name, rs) in enumerate(_by_decoder(records).items()):
        ax.plot(
            [r.snr_db for r in rs],
            [r.mean_va_runs for r in rs],
            marker=_MARKERS[i % len(_MARKERS)],
            label=name,
        )
    ax.set_xlabel("SNR [dB]")
    ax.set_ylabel("mean VA runs per word")
    if title:
        ax.set_title(title)
    ax.grid(True, alpha=0.4)
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return Path(path)


def plot_state_fer(records: list[StateRecord], path: str | Path, title: str = "") -> Path:
    """Per-termination-state FER: unit-weight sweep vs trained expert."""
    fig, ax = plt.subplots(figsize=(7.2, 4.8))
    for name, marker, color in (("cva", "o", "tab:green"), ("wcva", "*", "tab:cyan")):
        rs = sorted((r for r in records if r.decoder == name), key=lambda r: r.state)
        ax.semilogy(
            [r.state for r in rs],
            [max(r.fer, 1e-12) for r in rs],
            marker=marker,
            linestyle="none",
            color=color,
            label=name,
        )
    ax.set_xlabel("termination state")
    ax.set_ylabel("FER")
    if title:
        ax.set_title(title)
    ax.grid(True, which="both", alpha=0.4)
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return Path(path)
