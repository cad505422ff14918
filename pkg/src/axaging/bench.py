"""Reference circuits and end-to-end experiment drivers.

The generators build textbook structures (ripple-carry adders from
full-adder cells, schoolbook array multipliers, balanced adder trees, and a
3x3 convolution kernel) directly as netlists; tests verify them against
integer arithmetic. The experiment driver runs the whole pipeline: timing
both corners, extracting candidates, evolving an approximation, and
measuring guardband-free error against the aged baseline.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from .candidates import (
    ApproximationCandidate,
    compute_activity,
    compute_similarity,
    select_candidates,
)
from .errors import InputError
from .ga import DEFAULT_SEED, GaConfig, GaResult, evolve
from .metrics import ErrorMetrics, decode_outputs, default_decoding, nmed as compute_nmed, resolve_decoding
from .netlist import Bus, Netlist, parse_netlist, emit_netlist
from .cells import GateKind
from .sim import StimulusSet, functional_simulate, generate_stimuli, timing_simulate
from .timing import (
    AnnotatedDag,
    CellTimingModel,
    Corner,
    annotate,
    default_timing_model,
    restatic,
    sample_variation,
)


@dataclass(frozen=True)
class BenchmarkSpec:
    """A generated circuit plus its experiment stimuli sizes."""

    kind: str  # rca | mult | adder_tree | conv3x3
    width: int = 8
    inputs: int = 4  # adder_tree only
    coeff_width: int = 8  # conv3x3 only
    seed: int = DEFAULT_SEED
    opt_count: int = 100_000
    eval_count: int = 100_000

    def __post_init__(self):
        if self.kind not in ("rca", "mult", "adder_tree", "conv3x3"):
            raise InputError(f"unknown benchmark kind {self.kind!r}")
        if self.width < 2 or self.opt_count < 1 or self.eval_count < 1:
            raise InputError("widths must be >= 2 and stimulus counts >= 1")

    @property
    def name(self) -> str:
        if self.kind == "rca":
            return f"rca{self.width}"
        if self.kind == "mult":
            return f"mult{self.width}"
        if self.kind == "adder_tree":
            return f"adder_tree{self.inputs}x{self.width}"
        return f"conv3x3_{self.width}x{self.coeff_width}"


def rca(width: int, **kw) -> BenchmarkSpec:
    return BenchmarkSpec("rca", width=width, **kw)


def array_multiplier(width: int, **kw) -> BenchmarkSpec:
    return BenchmarkSpec("mult", width=width, **kw)


def adder_tree(inputs: int, width: int, **kw) -> BenchmarkSpec:
    return BenchmarkSpec("adder_tree", width=width, inputs=inputs, **kw)


def conv3x3(pixel_width: int, coeff_width: int, **kw) -> BenchmarkSpec:
    return BenchmarkSpec("conv3x3", width=pixel_width, coeff_width=coeff_width, **kw)


class _NetBuilder:
    """Accumulates gates/nets for the generators."""

    def __init__(self, name: str):
        self.name = name
        self.net_names: list[str] = []
        self.kinds: list[GateKind] = []
        self.gins: list[tuple[int, ...]] = []
        self.gouts: list[int] = []
        self.gnames: list[str] = []
        self.input_buses: list[Bus] = []
        self.output_buses: list[Bus] = []
        self._const: dict[int, int] = {}
        self._taken: set[str] = set()

    def net(self, name: str) -> int:
        base, k = name, 1
        while name in self._taken:
            k += 1
            name = f"{base}__{k}"
        self._taken.add(name)
        self.net_names.append(name)
        return len(self.net_names) - 1

    def input_bus(self, name: str, width: int) -> list[int]:
        bits = [self.net(f"{name}[{i}]") for i in range(width)]
        self.input_buses.append(Bus(name, tuple(bits), width - 1, 0))
        return bits

    def output_bus(self, name: str, bits: list[int], rename: bool = True) -> None:
        if rename:
            for i, net in enumerate(bits):
                self._taken.discard(self.net_names[net])
                self.net_names[net] = f"{name}[{i}]"
                self._taken.add(f"{name}[{i}]")
        self.output_buses.append(Bus(name, tuple(bits), len(bits) - 1, 0))

    def gate(self, kind: GateKind, ins: tuple[int, ...], name_hint: str) -> int:
        out = self.net(f"{name_hint}")
        self.kinds.append(kind)
        self.gins.append(ins)
        self.gouts.append(out)
        self.gnames.append(f"U{len(self.gnames)}")
        return out

    def const0(self) -> int:
        if 0 not in self._const:
            self._const[0] = self.gate(GateKind.CONST0, (), "zero")
        return self._const[0]

    def build(self) -> Netlist:
        return Netlist(
            self.name,
            self.kinds,
            self.gins,
            self.gouts,
            self.gnames,
            self.net_names,
            tuple(self.input_buses),
            tuple(self.output_buses),
        )

    # -- arithmetic blocks --

    def full_adder(self, a: int, b: int, cin: int, tag: str) -> tuple[int, int]:
        x1 = self.gate(GateKind.XOR2, (a, b), f"{tag}_x")
        s = self.gate(GateKind.XOR2, (x1, cin), f"{tag}_s")
        g = self.gate(GateKind.AND2, (a, b), f"{tag}_g")
        p = self.gate(GateKind.AND2, (x1, cin), f"{tag}_p")
        cout = self.gate(GateKind.OR2, (g, p), f"{tag}_c")
        return s, cout

    def ripple_add(self, a: list[int], b: list[int], tag: str, cin: int | None = None) -> list[int]:
        """Unsigned sum of two equal-length bit lists, LSB first, carry out
        appended. 5 gates per bit; the carry-in defaults to constant 0."""
        assert len(a) == len(b)
        carry = self.const0() if cin is None else cin
        out = []
        for k, (x, y) in enumerate(zip(a, b)):
            s, carry = self.full_adder(x, y, carry, f"{tag}{k}")
            out.append(s)
        out.append(carry)
        return out

    def multiply(self, a: list[int], b: list[int], tag: str) -> list[int]:
        """Schoolbook array multiplier: AND partial products accumulated
        row by row with ripple chains. Result is len(a)+len(b) bits."""
        zero = self.const0()
        acc = [self.gate(GateKind.AND2, (x, b[0]), f"{tag}r0_{i}") for i, x in enumerate(a)]
        for r in range(1, len(b)):
            row = [self.gate(GateKind.AND2, (x, b[r]), f"{tag}r{r}_{i}") for i, x in enumerate(a)]
            low, high = acc[:r], acc[r:]
            while len(high) < len(row):
                high.append(zero)
            summed = self.ripple_add(high, row, f"{tag}a{r}_")
            acc = low + summed
        return acc


def generate_benchmark(spec: BenchmarkSpec) -> Netlist:
    b = _NetBuilder(spec.name)
    if spec.kind == "rca":
        a = b.input_bus("a", spec.width)
        c = b.input_bus("b", spec.width)
        # a live carry-in keeps the whole carry chain functionally
        # exercisable; a tied-off one would make the longest path false
        cin = b.input_bus("cin", 1)[0]
        b.output_bus("sum", b.ripple_add(a, c, "fa", cin=cin))
    elif spec.kind == "mult":
        a = b.input_bus("a", spec.width)
        c = b.input_bus("b", spec.width)
        b.output_bus("prod", b.multiply(a, c, "m")[: 2 * spec.width])
    elif spec.kind == "adder_tree":
        terms = [b.input_bus(f"in{i}", spec.width) for i in range(spec.inputs)]
        b.output_bus("sum", _tree_sum(b, terms, "t"))
    else:  # conv3x3
        prods = []
        for i in range(9):
            px = b.input_bus(f"p{i}", spec.width)
            cf = b.input_bus(f"c{i}", spec.coeff_width)
            prods.append(b.multiply(px, cf, f"m{i}_"))
        b.output_bus("acc", _tree_sum(b, prods, "s"))
    return b.build()


def _tree_sum(b: _NetBuilder, terms: list[list[int]], tag: str) -> list[int]:
    """Balanced pairwise reduction with ripple adders; widths padded to match."""
    level = 0
    while len(terms) > 1:
        nxt = []
        for k in range(0, len(terms) - 1, 2):
            w = max(len(terms[k]), len(terms[k + 1]))
            nxt.append(
                b.ripple_add(_pad(b, terms[k], w), _pad(b, terms[k + 1], w), f"{tag}{level}_{k}_")
            )
        if len(terms) % 2:
            nxt.append(terms[-1])
        terms = nxt
        level += 1
    return terms[0]


def _pad(b: _NetBuilder, bits: list[int], width: int) -> list[int]:
    out = list(bits)
    while len(out) < width:
        out.append(b.const0())
    return out


# --- experiments -----------------------------------------------------------

@dataclass
class ExperimentArtifacts:
    baseline: Netlist
    approx: Netlist
    model: CellTimingModel
    fresh: AnnotatedDag
    aged_baseline: AnnotatedDag
    aged_approx: AnnotatedDag
    opt_stimuli: StimulusSet
    eval_stimuli: StimulusSet
    candidates: dict[int, ApproximationCandidate]
    ga_result: GaResult
    golden_eval: np.ndarray


@dataclass
class ExperimentRecord:
    circuit: str
    gates: int
    fresh_cpd: float
    aged_cpd_baseline: float
    aged_cpd_approx: float
    baseline_aged_nmed: float
    approx_nmed: float
    approx_timing_matches_functional: bool
    candidate_mix: dict[str, float]
    selected_mix: dict[str, float]
    feasible: bool
    runtimes: dict[str, float] = field(default_factory=dict)
    artifacts: ExperimentArtifacts | None = None


def _mix_fractions(reps) -> dict[str, float]:
    reps = list(reps)
    if not reps:
        return {"const0": 0.0, "const1": 0.0, "wire": 0.0}
    c0 = sum(1 for r in reps if r.is_const and r.const_value == 0)
    c1 = sum(1 for r in reps if r.is_const and r.const_value == 1)
    w = len(reps) - c0 - c1
    total = len(reps)
    return {"const0": c0 / total, "const1": c1 / total, "wire": w / total}


def extract_candidates(
    baseline: Netlist,
    aged: AnnotatedDag,
    opt_stimuli: StimulusSet,
    seed: int,
) -> dict[int, ApproximationCandidate]:
    traces = functional_simulate(baseline, opt_stimuli)
    activity = compute_activity(traces)
    sims = compute_similarity(traces, aged)
    return select_candidates(activity, sims, aged, seed=seed)


def run_experiment(
    spec: BenchmarkSpec,
    ga_config: GaConfig | None = None,
    model: CellTimingModel | None = None,
    baseline: Netlist | None = None,
    keep_artifacts: bool = False,
    timing_check_vectors: int = 10_000,
) -> ExperimentRecord:
    """The full pipeline on one circuit.

    Measures, on the held-out evaluation stimuli: the functional error of
    the approximate netlist, its timed error at the fresh-baseline clock
    under aged delays (must equal the functional run bit-exactly), and the
    aged baseline's timing error at the same clock. Feasibility is
    independently re-verified by reparsing the emitted netlist and re-running
    STA on it.
    """
    t0 = time.perf_counter()
    runtimes: dict[str, float] = {}
    if baseline is None:
        baseline = generate_benchmark(spec)
    if model is None:
        model = default_timing_model()
    if ga_config is None:
        ga_config = GaConfig.for_netlist(baseline, seed=spec.seed)

    decoding = default_decoding(baseline)
    fresh = annotate(baseline, model, Corner.FRESH)
    aged = annotate(baseline, model, Corner.AGED)
    opt_stimuli = generate_stimuli(baseline, spec.opt_count, seed=spec.seed)
    eval_stimuli = generate_stimuli(baseline, spec.eval_count, seed=spec.seed + 1)
    runtimes["setup"] = time.perf_counter() - t0

    t1 = time.perf_counter()
    cands = extract_candidates(baseline, aged, opt_stimuli, spec.seed)
    runtimes["candidates"] = time.perf_counter() - t1

    t2 = time.perf_counter()
    result = evolve(ga_config, cands, baseline, model, opt_stimuli, decoding)
    runtimes["ga"] = time.perf_counter() - t2

    t3 = time.perf_counter()
    from .netlist import apply_rewiring

    approx = apply_rewiring(baseline, result.plan(cands))
    aged_approx = annotate(approx, model, Corner.AGED)

    # Independent feasibility verification on the emitted netlist.
    reparsed = parse_netlist(emit_netlist(approx))
    verified_cpd = annotate(reparsed, model, Corner.AGED).cpd
    feasible = result.feasible and verified_cpd <= fresh.cpd and aged_approx.cpd <= fresh.cpd

    golden_eval = decode_outputs(functional_simulate(baseline, eval_stimuli), decoding)
    approx_decoding = resolve_decoding(approx, decoding.bus_names)
    approx_func = decode_outputs(functional_simulate(approx, eval_stimuli), approx_decoding)
    approx_metrics = compute_nmed(golden_eval, approx_func, decoding)

    check_stim = eval_stimuli.head(timing_check_vectors)
    timed = timing_simulate(aged_approx, check_stim, clock_period=fresh.cpd)
    timed_vals = decode_outputs(timed, approx_decoding)
    matches = bool(np.array_equal(timed_vals, approx_func[: check_stim.count]))

    timed_baseline = timing_simulate(aged, eval_stimuli, clock_period=fresh.cpd)
    baseline_aged_vals = decode_outputs(timed_baseline, decoding)
    baseline_metrics = compute_nmed(golden_eval, baseline_aged_vals, decoding)
    runtimes["evaluation"] = time.perf_counter() - t3
    runtimes["total"] = time.perf_counter() - t0

    applied = [
        cands[net].replacement
        for net, bit in zip(result.eligible_order, result.best.bits)
        if bit
    ]
    record = ExperimentRecord(
        circuit=spec.name,
        gates=baseline.num_gates,
        fresh_cpd=fresh.cpd,
        aged_cpd_baseline=aged.cpd,
        aged_cpd_approx=aged_approx.cpd,
        baseline_aged_nmed=baseline_metrics.nmed,
        approx_nmed=approx_metrics.nmed,
        approx_timing_matches_functional=matches,
        candidate_mix=_mix_fractions(c.replacement for c in cands.values()),
        selected_mix=_mix_fractions(applied),
        feasible=feasible,
        runtimes=runtimes,
    )
    if keep_artifacts:
        record.artifacts = ExperimentArtifacts(
            baseline, approx, model, fresh, aged, aged_approx,
            opt_stimuli, eval_stimuli, cands, result, golden_eval,
        )
    return record


# --- Monte Carlo ------------------------------------------------------------

@dataclass
class VariantSummary:
    variant: str
    minimum: float
    q1: float
    median: float
    q3: float
    maximum: float


@dataclass
class MonteCarloSummary:
    circuit: str
    samples: int
    sigma_ratio: float
    seed: int
    variants: dict[str, VariantSummary]
    nmeds: dict[str, np.ndarray]


def run_montecarlo(
    record: ExperimentRecord,
    samples: int = 1000,
    sigma_ratio: float = 0.10,
    seed: int = DEFAULT_SEED,
    mc_vectors: int = 10_000,
) -> MonteCarloSummary:
    """Process-variation study over a finished experiment.

    Per sample, every instance delay of the aged baseline and aged
    approximate netlists is redrawn from N(d, (sigma*d)^2); both run at the
    fresh-baseline clock on a deterministic subsample of the evaluation
    stimuli, and the error distribution of each variant is summarized by
    quartiles.
    """
    if samples < 1:
        raise InputError("samples must be >= 1")
    art = record.artifacts
    if art is None:
        raise InputError("record was produced without keep_artifacts=True")

    stim = art.eval_stimuli.head(mc_vectors)
    decoding = default_decoding(art.baseline)
    golden = decode_outputs(functional_simulate(art.baseline, stim), decoding)
    approx_decoding = resolve_decoding(art.approx, decoding.bus_names)
    clock = art.fresh.cpd

    dags = {"baseline": art.aged_baseline, "approx": art.aged_approx}
    decodings = {"baseline": decoding, "approx": approx_decoding}
    nmeds = {name: np.zeros(samples) for name in dags}
    for s in range(samples):
        for vi, (name, dag) in enumerate(dags.items()):
            sub_seed = int(np.random.SeedSequence(seed, spawn_key=(s, vi)).generate_state(1)[0])
            var = sample_variation(dag, sigma_ratio, sub_seed)
            varied = restatic(dag, var.delays)
            timed = timing_simulate(varied, stim, clock_period=clock)
            vals = decode_outputs(timed, decodings[name])
            nmeds[name][s] = compute_nmed(golden, vals, decoding).nmed

    variants = {}
    for name, arr in nmeds.items():
        lo, q1, med, q3, hi = np.percentile(arr, [0, 25, 50, 75, 100])
        variants[name] = VariantSummary(name, float(lo), float(q1), float(med), float(q3), float(hi))
    return MonteCarloSummary(record.circuit, samples, sigma_ratio, seed, variants, nmeds)
