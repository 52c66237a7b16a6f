"""Synthetic packet traces standing in for full-system simulator traces."""

from __future__ import annotations

from typing import Iterable, Optional

import numpy as np

from .exceptions import ConfigError
from .fpapprox import as_words
from .photonics import LinkPath, LossParameters, build_all_loss_tables
from .simcore import Packet, PacketKind

DESTINATION_MODES = ("uniform", "round-robin", "farthest", "nearest")

# Rough share of float packets per application. Illustrative workload
# knobs, not measurements.
WORKLOAD_PROFILES = {
    "blackscholes": 0.60,
    "canneal": 0.25,
    "fft": 0.80,
    "jpeg": 0.10,
    "sobel": 0.45,
    "streamcluster": 0.55,
    "fluidanimate": 0.02,
    "x264": 0.02,
}


def profile_float_fraction(name: str) -> float:
    try:
        return WORKLOAD_PROFILES[name.lower()]
    except KeyError:
        raise ConfigError(f"unknown workload profile {name!r}; known: {sorted(WORKLOAD_PROFILES)}") from None


def generate_trace(
    topology: Iterable[LinkPath],
    count: int,
    float_fraction: float,
    seed: int = 0,
    destinations: str = "uniform",
    words_per_packet: int = 8,
    control_fraction: float = 0.0,
    params: Optional[LossParameters] = None,
) -> list[Packet]:
    """Deterministic trace of ``count`` packets over the topology's routes.

    Exactly ``round(count * float_fraction)`` packets carry float payloads
    and are flagged approximable; ``round(count * control_fraction)`` are
    single-word control packets; the rest carry integers.
    """
    if count < 0:
        raise ValueError("packet count must be non-negative")
    for name, frac in (("float_fraction", float_fraction), ("control_fraction", control_fraction)):
        if not 0.0 <= frac <= 1.0:
            raise ValueError(f"{name} must be in [0, 1], got {frac}")
    if float_fraction + control_fraction > 1.0:
        raise ValueError("float_fraction + control_fraction exceeds 1")
    if destinations not in DESTINATION_MODES:
        raise ConfigError(f"unknown destination mode {destinations!r}; expected one of {DESTINATION_MODES}")
    if words_per_packet < 1:
        raise ValueError("words_per_packet must be >= 1")

    tables = {s: t for s, t in build_all_loss_tables(topology, params or LossParameters()).items() if len(t)}
    if count and not tables:
        raise ConfigError("topology has no routes to generate traffic on")
    sources = sorted(tables)
    ordered = {s: sorted(t.entries, key=lambda d: (t[d], d)) for s, t in tables.items()}

    rng = np.random.default_rng(seed)
    n_float = round(count * float_fraction)
    n_ctl = round(count * control_fraction)
    kinds = np.array([PacketKind.FLOAT] * n_float + [PacketKind.CTL] * n_ctl + [PacketKind.INT] * (count - n_float - n_ctl))
    kinds = kinds[rng.permutation(count)] if count else kinds

    packets = []
    for i in range(count):
        if destinations == "uniform":
            src = sources[int(rng.integers(len(sources)))]
            dests = ordered[src]
            dst = dests[int(rng.integers(len(dests)))]
        else:
            src = sources[i % len(sources)]
            dests = ordered[src]
            if destinations == "round-robin":
                dst = dests[(i // len(sources)) % len(dests)]
            elif destinations == "farthest":
                dst = dests[-1]
            else:
                dst = dests[0]
        kind = kinds[i]
        if kind is PacketKind.FLOAT:
            values = rng.normal(0.0, 100.0, size=words_per_packet)
            payload = tuple(int(w) for w in as_words(values))
        elif kind is PacketKind.INT:
            payload = tuple(int(w) for w in rng.integers(0, 1 << 32, size=words_per_packet, dtype=np.uint64))
        else:
            payload = (int(rng.integers(0, 1 << 16)),)
        packets.append(Packet(i, src, dst, kind, kind is PacketKind.FLOAT, payload))
    return packets
