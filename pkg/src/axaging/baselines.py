"""Reference approximation strategies for comparison runs.

GLP (gate-level pruning): repeatedly tie the live net with the smallest
significance-activity product to its majority constant until the aged
critical path meets the delay target. Significance is the sum of the output
weights (2^bit) a net can reach; activity is its toggle rate between
consecutive vectors. The exact scoring of the original pruning method is
not reproduced here; this is a comparison proxy.

APS (aging-aware precision scaling): exhaustively sweep the number of
truncated low-order bits per input bus (tied to 0), keep the feasible tuple
with the smallest error on the optimization stimuli, and report metrics on
the evaluation stimuli.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from .candidates import compute_activity
from .errors import ApsInfeasible, GlpStuck
from .metrics import ErrorMetrics, OutputDecoding, decode_outputs, nmed as compute_nmed, resolve_decoding
from .netlist import NO_DRIVER, Netlist, Replacement, RewirePlan, apply_rewiring
from .sim import StimulusSet, TraceSet, functional_simulate, popcount
from .timing import CellTimingModel, Corner, annotate


@dataclass(frozen=True)
class SapScore:
    """Per-net pruning priority: significance x activity (smaller prunes first)."""

    net: int
    significance: int
    activity: float

    @property
    def sap(self) -> float:
        return self.significance * self.activity


def output_weight_masks(n: Netlist, decoding: OutputDecoding) -> list[int]:
    """Per net, the bitmask of decoded output positions it reaches; the mask
    value itself is the significance (sum of 2^bit over reachable bits)."""
    masks = [0] * n.num_nets
    for bit, net in enumerate(decoding.nets):
        masks[net] |= 1 << bit
    for g in reversed(n.topo):
        m = masks[n.gate_outputs[g]]
        if m:
            for net in n.gate_inputs[g]:
                masks[net] |= m
    return masks


def toggle_activity(traces: TraceSet) -> np.ndarray:
    """Per-net fraction of consecutive vector pairs with differing values."""
    if traces.count < 2:
        return np.zeros(traces.netlist.num_nets)
    w = traces.words
    shifted = w >> np.uint64(1)
    if w.shape[1] > 1:
        shifted[:, :-1] |= w[:, 1:] << np.uint64(63)
    diff = w ^ shifted
    # bit v compares vectors v and v+1; the last vector has no successor
    valid = traces.count - 1
    counts = np.zeros(traces.netlist.num_nets, dtype=np.int64)
    full_words = valid // 64
    if full_words:
        counts += np.bitwise_count(diff[:, :full_words]).sum(axis=1).astype(np.int64)
    tail = valid - full_words * 64
    if tail:
        mask = np.uint64((1 << tail) - 1)
        counts += np.bitwise_count(diff[:, full_words] & mask).astype(np.int64)
    return counts / valid


def sap_scores(
    n: Netlist, traces: TraceSet, decoding: OutputDecoding
) -> list[SapScore]:
    """Scores for every prunable net (constant drivers are already pruned)."""
    masks = output_weight_masks(n, decoding)
    act = toggle_activity(traces)
    scores = []
    for net in range(n.num_nets):
        if n.const_value(net) is not None:
            continue
        scores.append(SapScore(net, masks[net], float(act[net])))
    return scores


def glp(
    baseline: Netlist,
    model: CellTimingModel,
    delay_target: float,
    opt_stimuli: StimulusSet,
    eval_stimuli: StimulusSet,
    decoding: OutputDecoding,
) -> tuple[Netlist, ErrorMetrics, list[str]]:
    """Prune minimum-SAP nets to their majority constant until the aged
    critical path meets the target. Returns the pruned netlist, metrics on
    the evaluation stimuli, and the pruned net names in order."""
    golden = decode_outputs(functional_simulate(baseline, eval_stimuli), decoding)
    current = baseline
    pruned: list[str] = []
    while True:
        aged = annotate(current, model, Corner.AGED)
        if aged.cpd <= delay_target:
            break
        traces = functional_simulate(current, opt_stimuli)
        scores = sap_scores(current, traces, resolve_decoding(current, decoding.bus_names))
        if not scores:
            raise GlpStuck()
        best = min(scores, key=lambda sc: (sc.sap, sc.net))
        ones = popcount(traces.words[best.net])
        zeros = traces.count - ones
        rep = Replacement.const0() if zeros >= ones else Replacement.const1()
        pruned.append(current.net_names[best.net])
        current = apply_rewiring(current, RewirePlan({best.net: rep}))

    observed = decode_outputs(
        functional_simulate(current, eval_stimuli), resolve_decoding(current, decoding.bus_names)
    )
    return current, compute_nmed(golden, observed, decoding), pruned


@dataclass(frozen=True)
class PrecisionConfig:
    """Truncated low-order bit count per primary-input bus."""

    truncation: dict[str, int]

    def total(self) -> int:
        return sum(self.truncation.values())


def aps(
    baseline: Netlist,
    model: CellTimingModel,
    delay_target: float,
    opt_stimuli: StimulusSet,
    eval_stimuli: StimulusSet,
    decoding: OutputDecoding,
) -> tuple[PrecisionConfig, Netlist, ErrorMetrics]:
    """Exhaustive sweep over truncation tuples; the feasible tuple with the
    lowest optimization-stimuli error wins (ties to the least truncation)."""
    buses = baseline.input_buses
    golden_opt = decode_outputs(functional_simulate(baseline, opt_stimuli), decoding)
    golden_eval = decode_outputs(functional_simulate(baseline, eval_stimuli), decoding)

    best_key = None
    best: tuple[tuple[int, ...], Netlist] | None = None
    for combo in itertools.product(*(range(b.width + 1) for b in buses)):
        plan = RewirePlan(
            {
                net: Replacement.const0()
                for bus, k in zip(buses, combo)
                for net in bus.bits[:k]
            }
        )
        truncated = apply_rewiring(baseline, plan)
        aged = annotate(truncated, model, Corner.AGED)
        if aged.cpd > delay_target:
            continue
        observed = decode_outputs(
            functional_simulate(truncated, opt_stimuli),
            resolve_decoding(truncated, decoding.bus_names),
        )
        err = compute_nmed(golden_opt, observed, decoding).nmed
        key = (err, sum(combo), combo)
        if best_key is None or key < best_key:
            best_key = key
            best = (combo, truncated)
    if best is None:
        raise ApsInfeasible()

    combo, truncated = best
    observed = decode_outputs(
        functional_simulate(truncated, eval_stimuli),
        resolve_decoding(truncated, decoding.bus_names),
    )
    metrics = compute_nmed(golden_eval, observed, decoding)
    return (
        PrecisionConfig({b.name: k for b, k in zip(buses, combo)}),
        truncated,
        metrics,
    )
