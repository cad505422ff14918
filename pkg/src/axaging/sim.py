"""Functional and timed evaluation of netlists.

Functional simulation is bit-parallel: every net carries one bit per
stimulus vector, packed 64 vectors to a uint64 word, and the whole vector
set flows through the netlist in a single topological pass of word-wide
numpy operations.

Timed simulation models transport delays: a gate's output at time t equals
its function applied to the input values at t - delay. Outputs are sampled
at the clock edge; values still in flight stay at their pre-event state.
Two engines implement the same semantics:

* ``event``  - a per-vector event queue; the reference implementation.
* ``expand`` - exploits the fact that event *times* are data-independent:
  the value of a net at a query time is a pure function of PI values old/new
  of the fan-in cone, so each (net, time) pair is evaluated once for all
  vectors with packed words. Fast when the number of distinct path-delay
  sums is small (uniform per-type delays, chain-structured circuits); an
  internal budget falls back to the event engine otherwise.

Both engines produce identical sampled outputs; the ``settled`` flag is the
conservative structural bound "clock covers the longest possible arrival",
which is identical across engines (the event engine can additionally report
exact per-vector late nets as diagnostics).
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass, field

import numpy as np

from .cells import GateKind
from .errors import InputError, LayoutMismatch
from .netlist import NO_DRIVER, Netlist
from .timing import AnnotatedDag

_FULL = np.uint64(0xFFFFFFFFFFFFFFFF)


def _num_words(count: int) -> int:
    return (count + 63) // 64


def _tail_mask(count: int) -> np.uint64:
    tail = count - 64 * (_num_words(count) - 1)
    if tail == 64:
        return _FULL
    return np.uint64((1 << tail) - 1)


def pack_bits(bits: np.ndarray) -> np.ndarray:
    """0/1 array -> packed uint64 words, vector v at bit (v % 64) of word v//64."""
    raw = np.packbits(np.ascontiguousarray(bits, dtype=np.uint8), bitorder="little")
    pad = (-len(raw)) % 8
    if pad:
        raw = np.concatenate([raw, np.zeros(pad, dtype=np.uint8)])
    return raw.view("<u8")


def unpack_bits(words: np.ndarray, count: int) -> np.ndarray:
    """Packed words -> 0/1 uint8 array of length count."""
    return np.unpackbits(words.view(np.uint8), bitorder="little")[:count]


def popcount(words: np.ndarray) -> int:
    return int(np.bitwise_count(words).sum())


# --- stimuli ---------------------------------------------------------------

@dataclass(frozen=True)
class StimulusSet:
    """Input vectors for a netlist's primary-input buses.

    ``values[name]`` holds one unsigned integer per vector; ``layout`` pins
    the (name, width) sequence the vectors were generated for.
    """

    layout: tuple[tuple[str, int], ...]
    count: int
    values: dict[str, np.ndarray]
    provenance: str = "generated"
    _packed: dict = field(default_factory=dict, repr=False, compare=False)

    @property
    def width(self) -> int:
        return sum(w for _, w in self.layout)

    def packed_bits(self, name: str, bit: int) -> np.ndarray:
        """Packed trace of one input bit (cached; shared across netlists)."""
        key = (name, bit)
        words = self._packed.get(key)
        if words is None:
            words = pack_bits((self.values[name] >> np.uint64(bit)) & np.uint64(1))
            self._packed[key] = words
        return words

    def head(self, count: int) -> "StimulusSet":
        """The first ``count`` vectors (deterministic subsample)."""
        if count >= self.count:
            return self
        return StimulusSet(
            self.layout,
            count,
            {name: vals[:count] for name, vals in self.values.items()},
            self.provenance,
        )


def pi_layout(n: Netlist) -> tuple[tuple[str, int], ...]:
    return tuple((b.name, b.width) for b in n.input_buses)


def generate_stimuli(layout, count: int, seed: int = 0) -> StimulusSet:
    """Uniform random vectors: each bus value drawn from [0, 2^width - 1].

    ``layout`` is a netlist or a ((name, width), ...) tuple. Deterministic
    per seed; buses are drawn in declared order.
    """
    if count < 1:
        raise InputError(f"need at least one vector, got {count}")
    if isinstance(layout, Netlist):
        layout = pi_layout(layout)
    layout = tuple((str(name), int(width)) for name, width in layout)
    rng = np.random.default_rng(np.random.SeedSequence(seed))
    values: dict[str, np.ndarray] = {}
    for name, width in layout:
        if width > 62:
            raise InputError(f"bus {name!r}: widths above 62 bits are not supported")
        values[name] = rng.integers(0, 1 << width, size=count, dtype=np.uint64)
    return StimulusSet(layout, count, values, provenance=f"generated(seed={seed})")


def save_stimuli(s: StimulusSet, path: str) -> None:
    """One hex vector per line; first-declared bus in the most significant bits."""
    digits = max(1, (s.width + 3) // 4)
    with open(path, "w", encoding="utf-8") as fh:
        for v in range(s.count):
            word = 0
            for name, width in s.layout:
                word = (word << width) | int(s.values[name][v])
            fh.write(f"{word:0{digits}x}\n")


def load_stimuli(path: str, layout) -> StimulusSet:
    if isinstance(layout, Netlist):
        layout = pi_layout(layout)
    with open(path, "r", encoding="utf-8") as fh:
        words = [int(line.strip(), 16) for line in fh if line.strip()]
    if not words:
        raise InputError(f"{path}: no vectors")
    values = {name: np.zeros(len(words), dtype=np.uint64) for name, _ in layout}
    for v, word in enumerate(words):
        for name, width in reversed(layout):
            values[name][v] = word & ((1 << width) - 1)
            word >>= width
        if word:
            raise InputError(f"{path}: vector {v} wider than the input layout")
    return StimulusSet(tuple(layout), len(words), values, provenance=f"file({path})")


def _check_layout(n: Netlist, s: StimulusSet) -> None:
    if pi_layout(n) != s.layout:
        raise LayoutMismatch(
            f"netlist inputs {pi_layout(n)} do not match stimulus layout {s.layout}"
        )


def _pi_words(n: Netlist, s: StimulusSet) -> dict[int, np.ndarray]:
    """Packed per-net traces of the primary inputs."""
    out: dict[int, np.ndarray] = {}
    for bus in n.input_buses:
        for k, net in enumerate(bus.bits):
            out[net] = s.packed_bits(bus.name, k)
    return out


# --- functional simulation ---------------------------------------------------

@dataclass
class TraceSet:
    """Per-net packed value traces, one bit per stimulus vector."""

    netlist: Netlist
    count: int
    words: np.ndarray  # shape (num_nets, num_words), uint64

    def bits(self, net: int) -> np.ndarray:
        return unpack_bits(self.words[net], self.count)


def functional_simulate(n: Netlist, s: StimulusSet) -> TraceSet:
    """One packed topological pass; every net's trace equals per-vector
    boolean evaluation."""
    _check_layout(n, s)
    W = _num_words(s.count)
    w = np.zeros((n.num_nets, W), dtype=np.uint64)
    for net, packed in _pi_words(n, s).items():
        w[net] = packed
    _eval_packed(n, w)
    w[:, -1] &= _tail_mask(s.count)
    return TraceSet(n, s.count, w)


def _eval_packed(n: Netlist, w: np.ndarray) -> None:
    """Evaluate all gates in topological order on packed rows of ``w``."""
    K = GateKind
    kinds = n.gate_kinds
    gins = n.gate_inputs
    gouts = n.gate_outputs
    scratch = np.empty(w.shape[1], dtype=np.uint64)
    for g in n.topo:
        kind = kinds[g]
        ins = gins[g]
        o = w[gouts[g]]
        if kind is K.AND2:
            np.bitwise_and(w[ins[0]], w[ins[1]], out=o)
        elif kind is K.XOR2:
            np.bitwise_xor(w[ins[0]], w[ins[1]], out=o)
        elif kind is K.OR2:
            np.bitwise_or(w[ins[0]], w[ins[1]], out=o)
        elif kind is K.NAND2:
            np.bitwise_and(w[ins[0]], w[ins[1]], out=o)
            np.bitwise_not(o, out=o)
        elif kind is K.NOR2:
            np.bitwise_or(w[ins[0]], w[ins[1]], out=o)
            np.bitwise_not(o, out=o)
        elif kind is K.XNOR2:
            np.bitwise_xor(w[ins[0]], w[ins[1]], out=o)
            np.bitwise_not(o, out=o)
        elif kind is K.INV:
            np.bitwise_not(w[ins[0]], out=o)
        elif kind is K.BUF:
            o[:] = w[ins[0]]
        elif kind is K.CONST0:
            o[:] = 0
        elif kind is K.CONST1:
            o[:] = _FULL
        elif kind is K.AND3:
            np.bitwise_and(w[ins[0]], w[ins[1]], out=o)
            np.bitwise_and(o, w[ins[2]], out=o)
        elif kind is K.OR3:
            np.bitwise_or(w[ins[0]], w[ins[1]], out=o)
            np.bitwise_or(o, w[ins[2]], out=o)
        elif kind is K.NAND3:
            np.bitwise_and(w[ins[0]], w[ins[1]], out=o)
            np.bitwise_and(o, w[ins[2]], out=o)
            np.bitwise_not(o, out=o)
        elif kind is K.NOR3:
            np.bitwise_or(w[ins[0]], w[ins[1]], out=o)
            np.bitwise_or(o, w[ins[2]], out=o)
            np.bitwise_not(o, out=o)
        elif kind is K.MUX2:
            np.bitwise_not(w[ins[2]], out=scratch)
            np.bitwise_and(scratch, w[ins[0]], out=scratch)
            np.bitwise_and(w[ins[2]], w[ins[1]], out=o)
            np.bitwise_or(o, scratch, out=o)
        else:
            raise InputError(f"cannot simulate gate kind {kind}")


# --- timed simulation --------------------------------------------------------

@dataclass
class TimedOutcome:
    """Clock-edge samples of the primary outputs.

    ``settled`` is the structural guarantee "no event can remain in flight
    at the sample": clock_period >= the longest arrival under the active
    delays. ``late_nets`` (event engine with diagnostics) lists, per vector,
    the nets whose updates were still pending at the sample.
    """

    netlist: Netlist
    count: int
    clock_period: float
    po_nets: tuple[int, ...]
    sampled: np.ndarray  # shape (len(po_nets), num_words)
    settled: np.ndarray  # bool per vector
    late_nets: list[list[int]] | None = None

    def sampled_words(self, net: int) -> np.ndarray:
        return self.sampled[self.po_nets.index(net)]


#: fall back to the event engine once the time-expansion needs more than
#: this many (net, time) pairs; total work is pairs x words-per-vector-set.
EXPAND_MAX_ENTRIES = 250_000
#: per-chunk working set bound: entries x chunk words stays below this.
EXPAND_CHUNK_WORDS = 30_000_000


def timing_simulate(
    dag: AnnotatedDag,
    s: StimulusSet,
    clock_period: float,
    engine: str = "auto",
    diagnostics: bool = False,
) -> TimedOutcome:
    """Transport-delay simulation sampled at ``clock_period``.

    Vector v starts from the steady state of vector v-1 (vector 0 from its
    own steady state); primary inputs switch at t = 0; changes taking effect
    at exactly the sample instant are captured.
    """
    if clock_period <= 0:
        raise InputError(f"clock_period must be > 0, got {clock_period}")
    n = dag.base
    _check_layout(n, s)
    if engine not in ("auto", "event", "expand"):
        raise InputError(f"unknown engine {engine!r}")
    if engine == "expand" and diagnostics:
        raise InputError("late-net diagnostics are only available from the event engine")
    if engine in ("auto", "expand") and not diagnostics:
        result = _simulate_expand(n, dag.delay, clock_period, s)
        if result is not None:
            return result
        if engine == "expand":
            raise InputError(
                "expansion engine budget exceeded for this circuit/delay profile; "
                "use engine='event' or 'auto'"
            )
    return _simulate_event(n, dag.delay, clock_period, s, diagnostics)


def _max_arrival(n: Netlist, delay: np.ndarray) -> float:
    arrival = np.zeros(n.num_nets)
    for g in n.topo:
        at = 0.0
        for net in n.gate_inputs[g]:
            if arrival[net] > at:
                at = arrival[net]
        arrival[n.gate_outputs[g]] = at + delay[g]
    return float(arrival.max()) if n.num_nets else 0.0


# -- event engine --

def _simulate_event(
    n: Netlist,
    delay: np.ndarray,
    clock: float,
    s: StimulusSet,
    diagnostics: bool,
) -> TimedOutcome:
    count = s.count
    W = _num_words(count)
    po = n.po_nets
    sampled = np.zeros((len(po), W), dtype=np.uint64)
    settled_all = clock >= _max_arrival(n, delay)
    late: list[list[int]] | None = [] if diagnostics else None

    pi_bits = {net: unpack_bits(words, count) for net, words in _pi_words(n, s).items()}
    pi_nets = list(pi_bits)
    consumers = n.consumers
    gins = n.gate_inputs
    gouts = n.gate_outputs
    kinds = n.gate_kinds
    dl = delay.tolist()
    from .cells import EVAL

    evals = [EVAL[k] for k in kinds]
    values = [0] * n.num_nets
    projected = [0] * n.num_nets

    def steady(vec: int) -> None:
        for net in pi_nets:
            values[net] = int(pi_bits[net][vec])
        for g in n.topo:
            values[gouts[g]] = evals[g](*(values[net] for net in gins[g]))
        projected[:] = values

    sample_bits = np.zeros((len(po), count), dtype=np.uint8)
    for vec in range(count):
        if vec == 0:
            steady(0)
            if late is not None:
                late.append([])
        else:
            heap: list[tuple[float, int, int, int]] = []
            seq = 0
            changed = [net for net in pi_nets if values[net] != int(pi_bits[net][vec])]
            for net in changed:
                values[net] = int(pi_bits[net][vec])
                projected[net] = values[net]
            for g in sorted({c for net in changed for c in consumers[net]}):
                nv = evals[g](*(values[net] for net in gins[g]))
                out = gouts[g]
                if nv != projected[out]:
                    projected[out] = nv
                    heapq.heappush(heap, (dl[g], seq, out, nv))
                    seq += 1
            while heap and heap[0][0] <= clock:
                t = heap[0][0]
                batch_changed: list[int] = []
                while heap and heap[0][0] == t:
                    _, _, net, nv = heapq.heappop(heap)
                    if values[net] != nv:
                        values[net] = nv
                        batch_changed.append(net)
                for g in sorted({c for net in batch_changed for c in consumers[net]}):
                    nv = evals[g](*(values[net] for net in gins[g]))
                    out = gouts[g]
                    if nv != projected[out]:
                        projected[out] = nv
                        heapq.heappush(heap, (t + dl[g], seq, out, nv))
                        seq += 1
            if late is not None:
                late.append(sorted({net for _, _, net, _ in heap}))
            if heap:
                # sample first (below reads values), then settle for vec+1
                for i, net in enumerate(po):
                    sample_bits[i, vec] = values[net]
                steady(vec)
                continue
        for i, net in enumerate(po):
            sample_bits[i, vec] = values[net]

    for i in range(len(po)):
        sampled[i] = pack_bits(sample_bits[i])
    sampled[:, -1] &= _tail_mask(count)
    settled = np.full(count, settled_all, dtype=bool)
    return TimedOutcome(n, count, clock, po, sampled, settled, late)


# -- time-expansion engine --

def _simulate_expand(
    n: Netlist,
    delay: np.ndarray,
    clock: float,
    s: StimulusSet,
    max_entries: int = EXPAND_MAX_ENTRIES,
) -> TimedOutcome | None:
    count = s.count
    W = _num_words(count)
    po = n.po_nets
    driver = n.driver
    gins = n.gate_inputs
    gouts = n.gate_outputs

    # Backward pass: which (net, time) values are needed to sample at clock.
    # The sets are data-independent, so they are built once and evaluated
    # below for all vectors at a time.
    queries: dict[int, set[float]] = {net: set() for net in range(n.num_nets)}
    for net in po:
        queries[net].add(float(clock))
    entries = len(po)
    for g in reversed(n.topo):
        out = gouts[g]
        qs = queries[out]
        if not qs:
            continue
        d = float(delay[g])
        for m in set(gins[g]):
            if driver[m] == NO_DRIVER:
                continue  # primary input: resolved by sign at eval time
            qm = queries[m]
            before = len(qm)
            for q in qs:
                qm.add(q - d)
            entries += len(qm) - before
        if entries > max_entries:
            return None

    sorted_queries: dict[int, list[float]] = {
        net: sorted(qs) for net, qs in queries.items() if qs
    }
    reads_total = [0] * n.num_nets
    for g in range(n.num_gates):
        nq = len(queries[gouts[g]])
        for m in set(gins[g]):
            reads_total[m] += nq
    for net in po:
        reads_total[net] += 1

    # Primary input values: new from t >= 0, previous vector's value before.
    pi_new = _pi_words(n, s)
    pi_old: dict[int, np.ndarray] = {}
    one = np.uint64(1)
    s63 = np.uint64(63)
    for net, words in pi_new.items():
        old = words << one
        old[1:] |= words[:-1] >> s63
        old[0] |= words[0] & one
        pi_old[net] = old

    sampled = np.zeros((len(po), W), dtype=np.uint64)
    chunk = max(4, EXPAND_CHUNK_WORDS // max(1, entries))
    for w0 in range(0, W, chunk):
        w1 = min(w0 + chunk, W)
        _expand_chunk(
            n, delay, clock, sorted_queries, reads_total, pi_new, pi_old,
            sampled, w0, w1,
        )
    sampled[:, -1] &= _tail_mask(count)
    settled = np.full(count, clock >= _max_arrival(n, delay), dtype=bool)
    return TimedOutcome(n, count, clock, po, sampled, settled, None)


def _expand_chunk(
    n: Netlist,
    delay: np.ndarray,
    clock: float,
    queries: dict[int, list[float]],
    reads_total: list[int],
    pi_new: dict[int, np.ndarray],
    pi_old: dict[int, np.ndarray],
    sampled: np.ndarray,
    w0: int,
    w1: int,
) -> None:
    """Evaluate every queried (net, time) pair on one word-aligned slice of
    the vector set; intermediate values are freed once fully consumed."""
    from .cells import GateKind as K

    driver = n.driver
    gins = n.gate_inputs
    gouts = n.gate_outputs
    span = w1 - w0
    values: dict[int, dict[float, np.ndarray]] = {}
    reads_left = list(reads_total)
    zeros = np.zeros(span, dtype=np.uint64)
    ones = np.full(span, _FULL, dtype=np.uint64)

    def value_at(net: int, q: float) -> np.ndarray:
        if driver[net] == NO_DRIVER:
            return (pi_new[net] if q >= 0 else pi_old[net])[w0:w1]
        return values[net][q]

    for g in n.topo:
        out = gouts[g]
        qs = queries.get(out)
        if not qs:
            continue
        kind = n.gate_kinds[g]
        d = float(delay[g])
        slot = values.setdefault(out, {})
        for q in qs:
            if kind is K.CONST0:
                slot[q] = zeros
            elif kind is K.CONST1:
                slot[q] = ones
            else:
                ins = [value_at(m, q - d) for m in gins[g]]
                if kind is K.AND2:
                    v = ins[0] & ins[1]
                elif kind is K.XOR2:
                    v = ins[0] ^ ins[1]
                elif kind is K.OR2:
                    v = ins[0] | ins[1]
                elif kind is K.NAND2:
                    v = ~(ins[0] & ins[1])
                elif kind is K.NOR2:
                    v = ~(ins[0] | ins[1])
                elif kind is K.XNOR2:
                    v = ~(ins[0] ^ ins[1])
                elif kind is K.INV:
                    v = ~ins[0]
                elif kind is K.BUF:
                    v = ins[0]
                elif kind is K.AND3:
                    v = ins[0] & ins[1] & ins[2]
                elif kind is K.OR3:
                    v = ins[0] | ins[1] | ins[2]
                elif kind is K.NAND3:
                    v = ~(ins[0] & ins[1] & ins[2])
                elif kind is K.NOR3:
                    v = ~(ins[0] | ins[1] | ins[2])
                elif kind is K.MUX2:
                    v = (ins[0] & ~ins[2]) | (ins[1] & ins[2])
                else:
                    raise InputError(f"cannot simulate gate kind {kind}")
                slot[q] = v
        for m in set(gins[g]):
            if driver[m] != NO_DRIVER:
                reads_left[m] -= len(qs)
                if reads_left[m] == 0 and m in values:
                    del values[m]

    for i, net in enumerate(n.po_nets):
        sampled[i, w0:w1] = value_at(net, float(clock))
