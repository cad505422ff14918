"""Per-gate delay models and static timing analysis.

The delay model is deliberately plain: one pin-independent propagation delay
per gate type, at a fresh and at an end-of-life (aged) corner. Arrival times
come from a single topological pass; the critical path is the arrival-time
argmax chain. Process variation is modelled by redrawing each instance delay
from a normal distribution around its nominal value.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from .cells import LOGIC_KINDS, ZERO_DELAY_KINDS, GateKind
from .errors import InputError, InvalidFactor, MissingCellDelay, UnknownInstance
from .netlist import NO_DRIVER, Netlist

DEFAULT_AGING_FACTOR = 1.1215  # mean end-of-life degradation used throughout


class Corner(Enum):
    FRESH = "fresh"
    AGED = "aged"
    CUSTOM = "custom"


@dataclass(frozen=True)
class CellTimingModel:
    """Propagation delay per gate type, fresh and aged, in nanoseconds.

    INPUT/OUTPUT/CONST kinds are implicitly zero-delay. For every logic kind
    present, ``0 < fresh <= aged`` must hold.
    """

    delays: dict[GateKind, tuple[float, float]]

    def __post_init__(self):
        for kind, (fresh, aged) in self.delays.items():
            if kind in ZERO_DELAY_KINDS:
                continue
            if not fresh > 0:
                raise InputError(f"{kind.value}: fresh delay must be > 0, got {fresh}")
            if aged < fresh:
                raise InputError(f"{kind.value}: aged delay {aged} below fresh {fresh}")

    def delay(self, kind: GateKind, corner: Corner) -> float:
        if kind in ZERO_DELAY_KINDS:
            return 0.0
        if kind not in self.delays:
            raise MissingCellDelay(kind.value)
        fresh, aged = self.delays[kind]
        return aged if corner is Corner.AGED else fresh


#: Synthetic fresh delays, loosely NAND-normalized. The aged corner is
#: derived from these with an aging factor unless a timing file supplies it.
DEFAULT_FRESH_DELAYS: dict[GateKind, float] = {
    GateKind.INV: 0.5,
    GateKind.BUF: 0.6,
    GateKind.NAND2: 1.0,
    GateKind.NOR2: 1.0,
    GateKind.AND2: 1.5,
    GateKind.OR2: 1.5,
    GateKind.NAND3: 1.4,
    GateKind.NOR3: 1.4,
    GateKind.AND3: 1.9,
    GateKind.OR3: 1.9,
    GateKind.XOR2: 2.5,
    GateKind.XNOR2: 2.5,
    GateKind.MUX2: 2.2,
}


def default_timing_model(factor: float = DEFAULT_AGING_FACTOR) -> CellTimingModel:
    """The built-in model: synthetic fresh delays, aged = fresh * factor."""
    if factor < 1:
        raise InvalidFactor(factor)
    return CellTimingModel({k: (d, d * factor) for k, d in DEFAULT_FRESH_DELAYS.items()})


def derive_aged_model(fresh: CellTimingModel, factor) -> CellTimingModel:
    """Rebuild the aged corner as fresh * factor.

    ``factor`` is a single number or a per-kind dict; per-kind entries fall
    back to 1.0 (no aging) for kinds not listed.
    """
    if isinstance(factor, dict):
        factors = {k: factor.get(k, 1.0) for k in fresh.delays}
    else:
        factors = {k: float(factor) for k in fresh.delays}
    for k, f in factors.items():
        if f < 1:
            raise InvalidFactor(f)
    return CellTimingModel({k: (d[0], d[0] * factors[k]) for k, d in fresh.delays.items()})


def load_timing_model(path: str, factor: float = DEFAULT_AGING_FACTOR) -> CellTimingModel:
    """Read a timing file: one ``KIND fresh_delay [aged_delay]`` line per gate
    type, ``#`` comments. A missing aged column derives as fresh * factor."""
    if factor < 1:
        raise InvalidFactor(factor)
    delays: dict[GateKind, tuple[float, float]] = {}
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            parts = line.split()
            if len(parts) not in (2, 3):
                raise InputError(f"{path}:{lineno}: expected 'KIND fresh [aged]'")
            try:
                kind = GateKind(parts[0])
            except ValueError:
                raise InputError(f"{path}:{lineno}: unknown gate type {parts[0]!r}") from None
            fresh = float(parts[1])
            aged = float(parts[2]) if len(parts) == 3 else fresh * factor
            delays[kind] = (fresh, aged)
    return CellTimingModel(delays)


def save_timing_model(model: CellTimingModel, path: str) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("# gate fresh_ns aged_ns\n")
        for kind in sorted(model.delays, key=lambda k: k.value):
            fresh, aged = model.delays[kind]
            fh.write(f"{kind.value} {fresh:.6g} {aged:.6g}\n")


# --- static timing analysis -------------------------------------------------

@dataclass
class AnnotatedDag:
    """A netlist with per-instance delays and the resulting arrival times."""

    base: Netlist
    corner: Corner
    delay: np.ndarray          # per instance id, ns
    arrival: np.ndarray        # per net id, ns
    cpd: float
    critical_path: list[int]   # instance ids, source to sink

    def with_delays(self, delay: np.ndarray, corner: Corner = Corner.CUSTOM) -> "AnnotatedDag":
        arrival, cpd, path = _sta(self.base, delay)
        return AnnotatedDag(self.base, corner, delay, arrival, cpd, path)


def _sta(n: Netlist, delay: np.ndarray) -> tuple[np.ndarray, float, list[int]]:
    arrival = np.zeros(n.num_nets)
    gate_outputs = n.gate_outputs
    gate_inputs = n.gate_inputs
    for g in n.topo:
        ins = gate_inputs[g]
        at = 0.0
        for net in ins:
            a = arrival[net]
            if a > at:
                at = a
        arrival[gate_outputs[g]] = at + delay[g]

    cpd = 0.0
    end_net = -1
    for net in n.po_nets:
        if arrival[net] > cpd:
            cpd = float(arrival[net])
            end_net = net

    path: list[int] = []
    net = end_net
    while net != -1:
        g = n.driver[net]
        if g == NO_DRIVER:
            break
        path.append(g)
        ins = n.gate_inputs[g]
        if not ins:
            break
        best = ins[0]
        for cand in ins[1:]:
            if arrival[cand] > arrival[best] or (arrival[cand] == arrival[best] and cand < best):
                best = cand
        net = best
    path.reverse()
    return arrival, cpd, path


def annotate(n: Netlist, model: CellTimingModel, corner: Corner) -> AnnotatedDag:
    """Annotate every instance with its corner delay and run STA."""
    delay = np.array([model.delay(kind, corner) for kind in n.gate_kinds])
    arrival, cpd, path = _sta(n, delay)
    return AnnotatedDag(n, corner, delay, arrival, cpd, path)


def restatic(dag: AnnotatedDag, overrides: dict[int, float]) -> AnnotatedDag:
    """Recompute arrivals with some instance delays overridden."""
    delay = dag.delay.copy()
    for g, d in overrides.items():
        if not 0 <= g < dag.base.num_gates:
            raise UnknownInstance(g)
        delay[g] = d
    corner = dag.corner if not overrides else Corner.CUSTOM
    return dag.with_delays(delay, corner)


# --- process variation --------------------------------------------------

@dataclass(frozen=True)
class VariationSample:
    """One Monte-Carlo draw: every positive instance delay redrawn from
    N(delay, (sigma_ratio * delay)^2), rejecting non-positive values."""

    seed: int
    sigma_ratio: float
    delays: dict[int, float]


def sample_variation(dag: AnnotatedDag, sigma_ratio: float = 0.10, seed: int = 0) -> VariationSample:
    if sigma_ratio <= 0:
        raise InputError(f"sigma_ratio must be > 0, got {sigma_ratio}")
    rng = np.random.default_rng(np.random.SeedSequence(seed))
    nominal = dag.delay
    perturbed = nominal.copy()
    active = nominal > 0
    idx = np.flatnonzero(active)
    draws = rng.normal(nominal[idx], sigma_ratio * nominal[idx])
    bad = draws <= 0
    while bad.any():  # resample, keep the distribution shape near the mean
        draws[bad] = rng.normal(nominal[idx][bad], sigma_ratio * nominal[idx][bad])
        bad = draws <= 0
    perturbed[idx] = draws
    return VariationSample(seed, sigma_ratio, {int(g): float(perturbed[g]) for g in idx})
