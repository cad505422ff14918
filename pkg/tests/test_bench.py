import numpy as np
import pytest

from axaging.bench import (
    BenchmarkSpec,
    adder_tree,
    array_multiplier,
    conv3x3,
    generate_benchmark,
    rca,
    run_experiment,
    run_montecarlo,
)
from axaging.cells import GateKind
from axaging.errors import InputError
from axaging.metrics import decode_outputs, default_decoding
from axaging.sim import StimulusSet, functional_simulate, generate_stimuli
from axaging.timing import default_timing_model, derive_aged_model


def _values(n, count, seed):
    return generate_stimuli(n, count, seed=seed)


def _decode_all(n, stim):
    return decode_outputs(functional_simulate(n, stim), default_decoding(n))


def test_rca4_exhaustive_integer_addition():
    n = generate_benchmark(rca(4))
    a = np.repeat(np.arange(16, dtype=np.uint64), 32)
    b = np.tile(np.repeat(np.arange(16, dtype=np.uint64), 2), 16)
    cin = np.tile(np.arange(2, dtype=np.uint64), 256)
    layout = tuple((x.name, x.width) for x in n.input_buses)
    s = StimulusSet(layout, 512, {"a": a, "b": b, "cin": cin})
    assert np.array_equal(_decode_all(n, s), (a + b + cin).astype(np.int64))


def test_mult3_exhaustive_integer_product():
    n = generate_benchmark(array_multiplier(3))
    a = np.repeat(np.arange(8, dtype=np.uint64), 8)
    b = np.tile(np.arange(8, dtype=np.uint64), 8)
    layout = tuple((x.name, x.width) for x in n.input_buses)
    s = StimulusSet(layout, 64, {"a": a, "b": b})
    assert np.array_equal(_decode_all(n, s), (a * b).astype(np.int64))


def test_rca8_gate_budget():
    n = generate_benchmark(rca(8))
    logic = [k for k in n.gate_kinds if k not in (GateKind.CONST0, GateKind.CONST1)]
    assert len(logic) == 40  # 5 gates per bit
    from collections import Counter

    kinds = Counter(k.value for k in logic)
    assert kinds == {"XOR2": 16, "AND2": 16, "OR2": 8}


def test_larger_generators_randomized():
    rng = np.random.default_rng(123)
    mult = generate_benchmark(array_multiplier(8))
    s = _values(mult, 2000, 9)
    want = (s.values["a"] * s.values["b"]).astype(np.int64)
    assert np.array_equal(_decode_all(mult, s), want)

    tree = generate_benchmark(adder_tree(5, 6))
    s = _values(tree, 2000, 10)
    want = sum(s.values[f"in{i}"].astype(np.int64) for i in range(5))
    assert np.array_equal(_decode_all(tree, s), want)

    conv = generate_benchmark(conv3x3(4, 4))
    s = _values(conv, 1000, 11)
    want = sum(
        (s.values[f"p{i}"] * s.values[f"c{i}"]).astype(np.int64) for i in range(9)
    )
    assert np.array_equal(_decode_all(conv, s), want)


def test_spec_validation():
    with pytest.raises(InputError):
        BenchmarkSpec("nope")
    with pytest.raises(InputError):
        BenchmarkSpec("rca", width=1)


def test_run_experiment_no_aging_is_trivially_feasible():
    spec = rca(4, opt_count=2000, eval_count=2000)
    model = derive_aged_model(default_timing_model(), 1.0)
    from axaging.ga import GaConfig

    record = run_experiment(
        spec, ga_config=GaConfig(population_size=16, generations=60, seed=1), model=model
    )
    assert record.feasible
    assert record.approx_nmed == 0.0
    assert record.aged_cpd_approx <= record.fresh_cpd
    assert record.aged_cpd_baseline == record.fresh_cpd


def test_run_experiment_rca4_under_aging():
    spec = rca(4, opt_count=4000, eval_count=4000)
    from axaging.ga import GaConfig

    record = run_experiment(
        spec, ga_config=GaConfig(population_size=24, generations=20, seed=5),
        keep_artifacts=True, timing_check_vectors=2000,
    )
    assert record.feasible
    assert record.aged_cpd_approx <= record.fresh_cpd
    assert record.approx_timing_matches_functional
    # error dominance belongs to the larger acceptance circuits; rca4 is too
    # small for the approximation cost to undercut its rare timing errors
    assert record.baseline_aged_nmed > 0
    for mix in (record.candidate_mix, record.selected_mix):
        assert sum(mix.values()) == pytest.approx(1.0, abs=1e-12)
        assert set(mix) == {"const0", "const1", "wire"}
    assert record.artifacts is not None


@pytest.fixture(scope="module")
def small_record():
    spec = rca(4, opt_count=4000, eval_count=4000)
    from axaging.ga import GaConfig

    return run_experiment(
        spec, ga_config=GaConfig(population_size=24, generations=20, seed=5),
        keep_artifacts=True, timing_check_vectors=2000,
    )


def test_montecarlo_deterministic(small_record):
    # the approx-beats-baseline ordering is a property of the larger
    # acceptance circuits; rca4's approximation cost swamps its rare
    # timing errors, so this only pins determinism and shape
    summary = run_montecarlo(small_record, samples=40, sigma_ratio=0.10, seed=7, mc_vectors=1500)
    again = run_montecarlo(small_record, samples=40, sigma_ratio=0.10, seed=7, mc_vectors=1500)
    for name in ("baseline", "approx"):
        assert np.array_equal(summary.nmeds[name], again.nmeds[name])
        v, w = summary.variants[name], again.variants[name]
        assert (v.minimum, v.q1, v.median, v.q3, v.maximum) == (w.minimum, w.q1, w.median, w.q3, w.maximum)
        assert v.minimum <= v.q1 <= v.median <= v.q3 <= v.maximum


def test_montecarlo_tiny_sigma_collapses_to_functional_error(small_record):
    summary = run_montecarlo(small_record, samples=8, sigma_ratio=1e-9, seed=3, mc_vectors=1500)
    approx = summary.nmeds["approx"]
    assert float(approx.std()) == 0.0
    art = small_record.artifacts
    from axaging.metrics import nmed as compute_nmed, resolve_decoding

    stim = art.eval_stimuli.head(1500)
    dec = default_decoding(art.baseline)
    golden = decode_outputs(functional_simulate(art.baseline, stim), dec)
    vals = decode_outputs(
        functional_simulate(art.approx, stim), resolve_decoding(art.approx, dec.bus_names)
    )
    nominal = compute_nmed(golden, vals, dec).nmed
    assert approx[0] == pytest.approx(nominal, abs=1e-12)


def test_montecarlo_needs_artifacts():
    spec = rca(4, opt_count=1000, eval_count=1000)
    from axaging.ga import GaConfig

    record = run_experiment(spec, ga_config=GaConfig(population_size=8, generations=4, seed=1))
    with pytest.raises(InputError):
        run_montecarlo(record, samples=2)
