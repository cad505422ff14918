"""Error metrics between golden and observed output streams.

The headline metric is the normalized mean error distance: the mean absolute
difference of decoded output values, divided by the maximum representable
output. A literal variant that additionally divides each sample's distance
by its golden value (skipping zero-golden samples) is available behind
``variant="literal"`` for comparison studies.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import EmptyStream, InputError, LengthMismatch, UnknownNet
from .netlist import Netlist
from .sim import TimedOutcome, TraceSet, unpack_bits


@dataclass(frozen=True)
class OutputDecoding:
    """How to read primary-output nets as one unsigned integer.

    ``nets`` lists net ids LSB first; ``max_value`` is 2^width - 1.
    """

    name: str
    nets: tuple[int, ...]
    bus_names: tuple[str, ...]

    @property
    def width(self) -> int:
        return len(self.nets)

    @property
    def max_value(self) -> int:
        return (1 << self.width) - 1


def default_decoding(n: Netlist) -> OutputDecoding:
    """Concatenate the declared output buses in port order; the last-declared
    bus contributes the least significant bits."""
    if not n.output_buses:
        raise InputError(f"netlist {n.name!r} declares no outputs")
    nets: list[int] = []
    for bus in reversed(n.output_buses):
        nets.extend(bus.bits)
    names = tuple(b.name for b in n.output_buses)
    return OutputDecoding("+".join(names), tuple(nets), names)


def resolve_decoding(n: Netlist, bus_names=None) -> OutputDecoding:
    """Decoding for explicit output buses (first name = most significant),
    or the default concatenation when none are given."""
    if not bus_names:
        return default_decoding(n)
    nets: list[int] = []
    for name in reversed(list(bus_names)):
        nets.extend(n.bus(name, "output").bits)
    return OutputDecoding("+".join(bus_names), tuple(nets), tuple(bus_names))


def decode_outputs(outcome: TraceSet | TimedOutcome, decoding: OutputDecoding) -> np.ndarray:
    """Per-vector unsigned values, bits assembled LSB first."""
    if decoding.width > 62:
        raise InputError("decodings wider than 62 bits are not supported")
    count = outcome.count
    values = np.zeros(count, dtype=np.int64)
    for k, net in enumerate(decoding.nets):
        if isinstance(outcome, TraceSet):
            if not 0 <= net < outcome.netlist.num_nets:
                raise UnknownNet(net)
            words = outcome.words[net]
        else:
            if net not in outcome.po_nets:
                raise UnknownNet(net)
            words = outcome.sampled_words(net)
        values |= unpack_bits(words, count).astype(np.int64) << k
    return values


@dataclass(frozen=True)
class ErrorMetrics:
    nmed: float
    mean_error_distance: float
    error_rate: float
    max_error_distance: int
    vectors: int


def nmed(
    golden: np.ndarray,
    observed: np.ndarray,
    decoding: OutputDecoding,
    variant: str = "standard",
) -> ErrorMetrics:
    """Error metrics over two equal-length decoded value streams.

    ``standard``: mean |golden - observed| / max_value.
    ``literal``:  additionally divides each distance by its golden value,
    skipping samples with golden == 0 (kept for comparison; the per-sample
    division makes the score scale-free but undefined at zero).
    """
    golden = np.asarray(golden, dtype=np.int64)
    observed = np.asarray(observed, dtype=np.int64)
    if golden.size == 0:
        raise EmptyStream()
    if golden.shape != observed.shape:
        raise LengthMismatch(golden.size, observed.size)
    if variant not in ("standard", "literal"):
        raise InputError(f"unknown nmed variant {variant!r}")

    dist = np.abs(golden - observed)
    mean_dist = float(dist.mean())
    max_value = decoding.max_value
    if variant == "standard":
        score = mean_dist / max_value
    else:
        nz = golden != 0
        score = float((dist[nz] / golden[nz]).sum()) / golden.size / max_value
    return ErrorMetrics(
        nmed=score,
        mean_error_distance=mean_dist,
        error_rate=float((golden != observed).mean()),
        max_error_distance=int(dist.max()),
        vectors=int(golden.size),
    )
