"""Per-net approximation candidates from traces and timing.

For every eligible net the best replacement is the one agreeing with it on
the largest fraction of stimulus vectors: constant 0 or 1 (scored by the
net's zero/one occupancy) or an earlier-arriving net (scored by pairwise
similarity). Scores are kept as integer match counts out of the vector
total, so ties are detected exactly; the documented 1e-12 score tolerance
is subsumed by exact count equality.

Tie order: a constant beats a wire at equal score (cutting the wire removes
the whole propagation path); among tied wires the earliest aged arrival
wins; any remainder falls to a per-net seeded draw.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field

import numpy as np

from .errors import EmptyTraces, InputError
from .netlist import Netlist, Replacement, RewirePlan
from .sim import TraceSet
from .timing import AnnotatedDag


@dataclass(frozen=True)
class WireActivity:
    """Occupancy statistics per net: counts of vectors at one, out of total.

    t0 + t1 == 1 holds exactly at the count level (zeros + ones == vectors).
    """

    vectors: int
    ones: np.ndarray  # int64 per net id

    @property
    def zeros(self) -> np.ndarray:
        return self.vectors - self.ones

    def t0(self, net: int) -> float:
        return (self.vectors - int(self.ones[net])) / self.vectors

    def t1(self, net: int) -> float:
        return int(self.ones[net]) / self.vectors


def compute_activity(traces: TraceSet) -> WireActivity:
    """Exact per-net one-counts via population count over packed words."""
    if traces.count < 1:
        raise EmptyTraces()
    ones = np.bitwise_count(traces.words).sum(axis=1).astype(np.int64)
    return WireActivity(traces.count, ones)


@dataclass
class SimilarityTable:
    """Sparse pairwise agreement: pairs[(i, j)] is the fraction of vectors
    where nets i and j carry the same value, for eligible (earlier-arriving)
    j. Integer match counts are kept alongside for exact tie detection."""

    vectors: int
    pairs: dict[tuple[int, int], float] = field(default_factory=dict)
    by_target: dict[int, list[tuple[int, int]]] = field(default_factory=dict)

    def add(self, i: int, j: int, count: int) -> None:
        self.pairs[(i, j)] = count / self.vectors
        self.by_target.setdefault(i, []).append((j, count))

    def best_for(self, i: int) -> list[tuple[int, int]]:
        """(source net, match count) entries recorded for target i, best first."""
        return sorted(self.by_target.get(i, ()), key=lambda e: (-e[1], e[0]))


def compute_similarity(
    traces: TraceSet,
    timing: AnnotatedDag,
    floor: float | None = None,
) -> SimilarityTable:
    """Pairwise similarities against strictly earlier-arriving nets.

    By default only each target's maximal entries survive (all exact ties
    are kept, enough to choose a candidate); an explicit ``floor`` instead
    records every eligible pair with similarity >= floor. The sweep walks
    nets in aged-arrival order so each target compares against a packed
    prefix in one vectorized pass.
    """
    if traces.count < 1:
        raise EmptyTraces()
    n = traces.netlist
    if timing.base is not n and timing.base.net_names != n.net_names:
        raise InputError("timing annotation does not match the traced netlist")
    arrival = timing.arrival
    count = traces.count

    order = sorted(range(n.num_nets), key=lambda net: (arrival[net], net))
    sorted_words = traces.words[order]
    sorted_arrival = arrival[order]

    table = SimilarityTable(count)
    for pos, i in enumerate(order):
        k = int(np.searchsorted(sorted_arrival, arrival[i], side="left"))
        if k == 0:
            continue
        prefix = sorted_words[:k]
        mism = np.bitwise_count(np.bitwise_xor(prefix, traces.words[i])).sum(axis=1)
        matches = count - mism.astype(np.int64)
        if floor is None:
            best = int(matches.max())
            for idx in np.flatnonzero(matches == best):
                table.add(i, order[int(idx)], best)
        else:
            keep = matches / count >= floor
            for idx in np.flatnonzero(keep):
                table.add(i, order[int(idx)], int(matches[idx]))
    return table


@dataclass(frozen=True)
class ApproximationCandidate:
    """The single best replacement for a net, with its agreement score."""

    target: int
    replacement: Replacement
    gamma: float


def eligible_nets(n: Netlist) -> list[int]:
    """Nets that may be approximated: everything except nets that are
    already constant drivers (replacing those is a no-op)."""
    return [net for net in range(n.num_nets) if n.const_value(net) is None]


def select_candidates(
    activity: WireActivity,
    similarities: SimilarityTable,
    timing: AnnotatedDag,
    seed: int = 0,
    eligible: list[int] | None = None,
) -> dict[int, ApproximationCandidate]:
    """Exactly one candidate per eligible net, scored by the maximal
    agreement count; see the module docstring for the tie order."""
    n = timing.base
    arrival = timing.arrival
    vectors = activity.vectors
    if eligible is None:
        eligible = eligible_nets(n)

    out: dict[int, ApproximationCandidate] = {}
    for i in eligible:
        ones = int(activity.ones[i])
        zeros = vectors - ones
        const_count = max(zeros, ones)
        const_rep = Replacement.const0() if zeros >= ones else Replacement.const1()

        wire_entries = similarities.best_for(i)
        best_wire_count = wire_entries[0][1] if wire_entries else -1

        if best_wire_count > const_count:
            ties = [j for j, m in wire_entries if m == best_wire_count]
            min_arr = min(arrival[j] for j in ties)
            ties = [j for j in ties if arrival[j] == min_arr]
            if len(ties) > 1:
                j = ties[random.Random(f"{seed}:{i}").randrange(len(ties))]
            else:
                j = ties[0]
            out[i] = ApproximationCandidate(i, Replacement.net(j), best_wire_count / vectors)
        else:
            out[i] = ApproximationCandidate(i, const_rep, const_count / vectors)
    return out


def candidates_plan(
    candidates: dict[int, ApproximationCandidate], targets: list[int]
) -> RewirePlan:
    """The rewire plan applying the candidates of the given target nets."""
    return RewirePlan({t: candidates[t].replacement for t in targets})


def dump_candidates(candidates: dict[int, ApproximationCandidate], n: Netlist) -> str:
    """Text table, one ``net replacement gamma`` line per candidate."""
    lines = []
    for net in sorted(candidates):
        c = candidates[net]
        if c.replacement.is_const:
            rep = str(c.replacement.const_value)
        else:
            rep = n.net_names[c.replacement.source]
        lines.append(f"{n.net_names[net]} {rep} {c.gamma:.10g}")
    return "\n".join(lines) + "\n"
