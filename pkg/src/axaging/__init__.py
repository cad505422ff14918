"""Aging-aware approximation of gate-level combinational netlists.

Rewire a netlist so its worst-case-aged critical path meets the fresh
baseline's delay while the functional error introduced by the rewiring is
minimized, removing the lifetime timing guardband.
"""

from .cells import GateKind
from .netlist import (
    Bus,
    Netlist,
    Replacement,
    RewirePlan,
    apply_rewiring,
    emit_netlist,
    parse_netlist,
    topological_order,
)
from .timing import (
    AnnotatedDag,
    CellTimingModel,
    Corner,
    VariationSample,
    annotate,
    default_timing_model,
    derive_aged_model,
    load_timing_model,
    restatic,
    sample_variation,
)
from .sim import (
    StimulusSet,
    TimedOutcome,
    TraceSet,
    functional_simulate,
    generate_stimuli,
    timing_simulate,
)
from .candidates import (
    ApproximationCandidate,
    WireActivity,
    compute_activity,
    compute_similarity,
    select_candidates,
)
from .metrics import ErrorMetrics, OutputDecoding, decode_outputs, default_decoding, nmed
from .ga import Chromosome, GaConfig, GaResult, calc_fitness, evolve, initialize_population
from .baselines import PrecisionConfig, SapScore, aps, glp
from .bench import BenchmarkSpec, ExperimentRecord, generate_benchmark, run_experiment, run_montecarlo

__version__ = "0.1.0"
