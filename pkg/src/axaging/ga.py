"""Genetic search for the minimum-error approximation meeting the delay target.

Chromosomes are bit vectors over the eligible nets in ascending net-id
order; a set bit applies that net's approximation candidate. Fitness is
1/(error + epsilon) when the rewired netlist's aged critical path meets the
fresh-baseline delay target, and 0 otherwise. Survival is mu+lambda with
elitism, tournament parent selection, uniform crossover, per-bit mutation,
and a diversity-triggered doubling of the mutation rate.

Every random decision of an offspring derives from a seed sequence keyed by
(run seed, generation, offspring slot), and fitness evaluation is a pure
function of the chromosome, so results are bit-identical for any worker
count.
"""

from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .candidates import ApproximationCandidate
from .errors import AxagingError, InputError, NoCriticalPathCandidates
from .metrics import OutputDecoding, decode_outputs, nmed as compute_nmed
from .netlist import Netlist, RewirePlan
from .sim import StimulusSet, functional_simulate
from .timing import AnnotatedDag, CellTimingModel, Corner, annotate

log = logging.getLogger(__name__)

DEFAULT_SEED = 12345


@dataclass(frozen=True)
class Chromosome:
    """One bit per eligible net (ascending net id); 1 applies the candidate."""

    bits: np.ndarray

    def __len__(self) -> int:
        return len(self.bits)

    @property
    def applied_count(self) -> int:
        return int(self.bits.sum())

    def to01(self) -> str:
        return "".join("1" if b else "0" for b in self.bits)


@dataclass(frozen=True)
class GaConfig:
    population_size: int = 64
    generations: int = 100
    crossover_probability: float = 0.9
    mutation_probability_initial: float = 0.01
    mutation_probability_max: float = 0.08
    diversity_threshold: float = 0.02
    tournament_size: int = 2
    elite_count: int = 2
    seed: int = DEFAULT_SEED
    init_base_prob: float = 0.02
    init_critical_prob: float = 0.5
    epsilon: float = 1e-12
    threads: int = 1

    def __post_init__(self):
        if not 1 <= self.elite_count < self.population_size:
            raise InputError("need 1 <= elite_count < population_size")
        if self.tournament_size < 2:
            raise InputError("tournament_size must be >= 2")
        for name in (
            "crossover_probability",
            "mutation_probability_initial",
            "mutation_probability_max",
            "diversity_threshold",
            "init_base_prob",
            "init_critical_prob",
        ):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise InputError(f"{name} must be in [0, 1], got {v}")
        if self.epsilon <= 0:
            raise InputError("epsilon must be positive")

    @staticmethod
    def for_netlist(n: Netlist, **overrides) -> "GaConfig":
        """Size-scaled defaults: population 64 x 100 generations up to 300
        gates, 128 x 200 above; per-bit mutation near 1/chromosome-length."""
        if n.num_gates > 300:
            base = {"population_size": 128, "generations": 200}
        else:
            base = {"population_size": 64, "generations": 100}
        length = max(n.num_nets, 8)
        base["mutation_probability_initial"] = min(0.05, max(1.0 / length, 0.003))
        base["mutation_probability_max"] = min(0.1, 8.0 * base["mutation_probability_initial"])
        base.update(overrides)
        return GaConfig(**base)


@dataclass
class GenerationStats:
    generation: int
    best_fitness: float
    mean_fitness: float
    diversity: float
    mutation_prob: float
    best_nmed: float
    best_aged_cpd: float


@dataclass
class GaResult:
    best: Chromosome
    best_fitness: float
    best_nmed: float
    best_aged_cpd: float
    history: list[GenerationStats]
    feasible: bool
    eligible_order: tuple[int, ...]

    def plan(self, candidates: dict[int, ApproximationCandidate]) -> RewirePlan:
        return chromosome_plan(self.best.bits, candidates, self.eligible_order)


def eligible_order(candidates: dict[int, ApproximationCandidate]) -> tuple[int, ...]:
    """The canonical chromosome bit order: eligible net ids ascending."""
    return tuple(sorted(candidates))


def chromosome_plan(
    bits: np.ndarray,
    candidates: dict[int, ApproximationCandidate],
    order: tuple[int, ...] | None = None,
) -> RewirePlan:
    order = order or eligible_order(candidates)
    if len(bits) != len(order):
        raise InputError(f"chromosome length {len(bits)} != eligible nets {len(order)}")
    return RewirePlan(
        {net: candidates[net].replacement for net, bit in zip(order, bits) if bit}
    )


def critical_path_nets(dag: AnnotatedDag) -> set[int]:
    """Nets traversed by the critical path: each path gate's output plus the
    path's start net (the latest-arriving input of the first gate)."""
    n = dag.base
    nets = {n.gate_outputs[g] for g in dag.critical_path}
    if dag.critical_path:
        first = dag.critical_path[0]
        ins = n.gate_inputs[first]
        if ins:
            nets.add(max(ins, key=lambda net: (dag.arrival[net], -net)))
    return nets


def _rng(seed: int, generation: int, slot: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(generation, slot)))


def initialize_population(
    config: GaConfig,
    candidates: dict[int, ApproximationCandidate],
    timing: AnnotatedDag,
) -> list[np.ndarray]:
    """Random chromosomes biased toward the aged critical path; every
    chromosome applies at least one critical-path candidate."""
    order = eligible_order(candidates)
    if not order:
        raise NoCriticalPathCandidates()
    crit = critical_path_nets(timing)
    crit_idx = np.array([k for k, net in enumerate(order) if net in crit], dtype=np.int64)
    if crit_idx.size == 0:
        raise NoCriticalPathCandidates()
    probs = np.full(len(order), config.init_base_prob)
    probs[crit_idx] = config.init_critical_prob

    population = []
    for c in range(config.population_size):
        rng = _rng(config.seed, 0, c)
        bits = (rng.random(len(order)) < probs).astype(np.uint8)
        if not bits[crit_idx].any():
            bits[crit_idx[rng.integers(0, crit_idx.size)]] = 1
        population.append(bits)
    return population


def calc_fitness(
    chromosome: np.ndarray,
    candidates: dict[int, ApproximationCandidate],
    baseline: Netlist,
    model: CellTimingModel,
    delay_target: float,
    opt_stimuli: StimulusSet,
    decoding: OutputDecoding,
    epsilon: float = 1e-12,
    golden: np.ndarray | None = None,
    order: tuple[int, ...] | None = None,
) -> tuple[float, float, float]:
    """(fitness, aged cpd, nmed) of one chromosome.

    Infeasible (aged cpd above target) or structurally failing chromosomes
    score 0. ``golden``/``order`` are recomputed when not supplied; the
    optimizer passes cached values.
    """
    from .netlist import apply_rewiring

    order = order or eligible_order(candidates)
    if golden is None:
        golden = decode_outputs(functional_simulate(baseline, opt_stimuli), decoding)
    try:
        rewired = apply_rewiring(baseline, chromosome_plan(chromosome, candidates, order))
        aged = annotate(rewired, model, Corner.AGED)
    except AxagingError as exc:
        log.warning("chromosome rejected: %s", exc)
        return 0.0, float("inf"), float("nan")
    if aged.cpd > delay_target:
        return 0.0, aged.cpd, float("nan")
    traces = functional_simulate(rewired, opt_stimuli)
    observed = decode_outputs(traces, _rebind(decoding, rewired))
    err = compute_nmed(golden, observed, decoding).nmed
    return 1.0 / (err + epsilon), aged.cpd, err


def _rebind(decoding: OutputDecoding, n: Netlist) -> OutputDecoding:
    """The matching decoding on another netlist (net ids change under
    rewiring; output bus declarations do not)."""
    from .metrics import resolve_decoding

    return resolve_decoding(n, decoding.bus_names)


def _rank_key(entry: tuple[np.ndarray, float, float, float]):
    bits, fitness, cpd, _ = entry
    return (-fitness, int(bits.sum()), cpd, bits.tobytes())


def _diversity(population: list[np.ndarray], sample: int = 32) -> float:
    """Mean pairwise Hamming distance / length over the top-ranked sample."""
    rows = population[: min(sample, len(population))]
    if len(rows) < 2:
        return 0.0
    x = np.stack(rows).astype(np.int16)
    total, pairs = 0, 0
    for i in range(len(rows)):
        total += int(np.abs(x[i + 1 :] - x[i]).sum())
        pairs += len(rows) - i - 1
    return total / (pairs * x.shape[1])


def evolve(
    config: GaConfig,
    candidates: dict[int, ApproximationCandidate],
    baseline: Netlist,
    model: CellTimingModel,
    opt_stimuli: StimulusSet,
    decoding: OutputDecoding,
) -> GaResult:
    """Run the optimization loop; see the module docstring for the scheme."""
    order = eligible_order(candidates)
    fresh = annotate(baseline, model, Corner.FRESH)
    aged = annotate(baseline, model, Corner.AGED)
    delay_target = fresh.cpd
    golden = decode_outputs(functional_simulate(baseline, opt_stimuli), decoding)

    cache: dict[bytes, tuple[float, float, float]] = {}

    def evaluate(bits: np.ndarray) -> tuple[float, float, float]:
        key = bits.tobytes()
        hit = cache.get(key)
        if hit is None:
            hit = calc_fitness(
                bits, candidates, baseline, model, delay_target, opt_stimuli,
                decoding, config.epsilon, golden, order,
            )
            cache[key] = hit
        return hit

    def evaluate_all(chromos: list[np.ndarray]) -> list[tuple[float, float, float]]:
        fresh_bits = [b for b in chromos if b.tobytes() not in cache]
        if config.threads > 1 and len(fresh_bits) > 1:
            with ThreadPoolExecutor(max_workers=config.threads) as pool:
                list(pool.map(evaluate, fresh_bits))
        return [evaluate(b) for b in chromos]

    chromos = initialize_population(config, candidates, aged)
    results = evaluate_all(chromos)
    population = sorted(
        [(b, *r) for b, r in zip(chromos, results)], key=_rank_key
    )[: config.population_size]

    mutation_prob = config.mutation_probability_initial
    history: list[GenerationStats] = []
    L = len(order)

    for gen in range(1, config.generations + 1):
        offspring: list[np.ndarray] = [population[k][0].copy() for k in range(config.elite_count)]
        for slot in range(config.elite_count, config.population_size):
            rng = _rng(config.seed, gen, slot)
            # population is rank-sorted, so a tournament winner is the
            # minimum drawn index
            p1 = population[int(rng.integers(0, len(population), config.tournament_size).min())][0]
            p2 = population[int(rng.integers(0, len(population), config.tournament_size).min())][0]
            if rng.random() < config.crossover_probability:
                mask = rng.random(L) < 0.5
                child = np.where(mask, p1, p2).astype(np.uint8)
            else:
                child = p1.copy()
            flips = rng.random(L) < mutation_prob
            child ^= flips.astype(np.uint8)
            offspring.append(child)

        results = evaluate_all(offspring)
        merged = population + [(b, *r) for b, r in zip(offspring, results)]
        merged.sort(key=_rank_key)
        population = merged[: config.population_size]

        diversity = _diversity([e[0] for e in population])
        if diversity < config.diversity_threshold:
            mutation_prob = min(mutation_prob * 2, config.mutation_probability_max)
        else:
            mutation_prob = config.mutation_probability_initial

        fits = [e[1] for e in population]
        best = population[0]
        history.append(
            GenerationStats(
                generation=gen,
                best_fitness=best[1],
                mean_fitness=float(np.mean(fits)),
                diversity=diversity,
                mutation_prob=mutation_prob,
                best_nmed=best[3],
                best_aged_cpd=best[2],
            )
        )

    best = population[0]
    feasible = best[1] > 0
    return GaResult(
        best=Chromosome(best[0]),
        best_fitness=best[1],
        best_nmed=best[3],
        best_aged_cpd=best[2],
        history=history,
        feasible=feasible,
        eligible_order=order,
    )
