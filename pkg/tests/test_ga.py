import itertools

import numpy as np
import pytest

from axaging.bench import generate_benchmark, rca, extract_candidates
from axaging.candidates import compute_activity, compute_similarity, select_candidates
from axaging.errors import NoCriticalPathCandidates
from axaging.ga import (
    GaConfig,
    calc_fitness,
    chromosome_plan,
    critical_path_nets,
    eligible_order,
    evolve,
    initialize_population,
)
from axaging.metrics import decode_outputs, default_decoding
from axaging.netlist import apply_rewiring
from axaging.sim import functional_simulate, generate_stimuli, timing_simulate
from axaging.timing import Corner, annotate, default_timing_model, derive_aged_model


def _toy():
    """rca(4) restricted to three eligible nets on the carry spine."""
    n = generate_benchmark(rca(4))
    model = default_timing_model()
    aged = annotate(n, model, Corner.AGED)
    spine = critical_path_nets(aged)
    eligible = sorted(spine, key=lambda net: -aged.arrival[net])[:3]
    stim = generate_stimuli(n, 4096, seed=77)
    traces = functional_simulate(n, stim)
    cands = select_candidates(
        compute_activity(traces), compute_similarity(traces, aged), aged,
        seed=77, eligible=sorted(eligible),
    )
    dec = default_decoding(n)
    return n, model, aged, cands, stim, dec


def test_toy_fitness_matches_exhaustive_oracle():
    n, model, aged, cands, stim, dec = _toy()
    fresh_cpd = annotate(n, model, Corner.FRESH).cpd
    order = eligible_order(cands)
    golden = decode_outputs(functional_simulate(n, stim), dec)

    # independent hand evaluation of all 8 chromosomes
    expected = {}
    for combo in itertools.product((0, 1), repeat=3):
        bits = np.array(combo, dtype=np.uint8)
        plan = chromosome_plan(bits, cands, order)
        rewired = apply_rewiring(n, plan)
        cpd = annotate(rewired, model, Corner.AGED).cpd
        if cpd > fresh_cpd:
            expected[combo] = (0.0, cpd)
        else:
            vals = decode_outputs(
                functional_simulate(rewired, stim),
                default_decoding(rewired),
            )
            err = float(np.abs(golden - vals).mean()) / dec.max_value
            expected[combo] = (1.0 / (err + 1e-12), cpd)

    for combo, (want_fit, want_cpd) in expected.items():
        bits = np.array(combo, dtype=np.uint8)
        fit, cpd, _ = calc_fitness(bits, cands, n, model, fresh_cpd, stim, dec)
        assert fit == pytest.approx(want_fit, rel=1e-12)
        assert cpd == want_cpd


def test_evolve_finds_exhaustive_optimum():
    n, model, aged, cands, stim, dec = _toy()
    fresh_cpd = annotate(n, model, Corner.FRESH).cpd
    order = eligible_order(cands)

    best_fit = 0.0
    for combo in itertools.product((0, 1), repeat=3):
        fit, _, _ = calc_fitness(np.array(combo, dtype=np.uint8), cands, n, model, fresh_cpd, stim, dec)
        best_fit = max(best_fit, fit)
    assert best_fit > 0

    hits = 0
    for seed in range(10):
        cfg = GaConfig(population_size=16, generations=20, elite_count=2, seed=seed)
        res = evolve(cfg, cands, n, model, stim, dec)
        if res.best_fitness == pytest.approx(best_fit, rel=1e-9):
            hits += 1
    assert hits >= 10 * 0.95


def test_best_fitness_monotone_and_feasible_reverified():
    n, model, aged, cands, stim, dec = _toy()
    cfg = GaConfig(population_size=16, generations=15, seed=3)
    res = evolve(cfg, cands, n, model, stim, dec)
    fits = [row.best_fitness for row in res.history]
    assert all(a <= b for a, b in zip(fits, fits[1:]))
    assert len(res.history) == cfg.generations
    assert res.feasible
    # the returned chromosome re-evaluates to the same feasible point
    fresh_cpd = annotate(n, model, Corner.FRESH).cpd
    fit, cpd, err = calc_fitness(res.best.bits, cands, n, model, fresh_cpd, stim, dec)
    assert cpd <= fresh_cpd
    assert fit == pytest.approx(res.best_fitness, rel=1e-12)
    assert cpd == res.best_aged_cpd


def test_determinism_across_threads():
    n, model, aged, cands, stim, dec = _toy()
    results = []
    for threads in (1, 4):
        cfg = GaConfig(population_size=16, generations=10, seed=11, threads=threads)
        res = evolve(cfg, cands, n, model, stim, dec)
        results.append(res)
    a, b = results
    assert np.array_equal(a.best.bits, b.best.bits)
    assert a.best_fitness == b.best_fitness
    assert a.best_nmed == b.best_nmed
    assert [r.best_fitness for r in a.history] == [r.best_fitness for r in b.history]
    assert [r.diversity for r in a.history] == [r.diversity for r in b.history]


def test_same_seed_identical_result():
    n, model, aged, cands, stim, dec = _toy()
    cfg = GaConfig(population_size=16, generations=8, seed=21)
    a = evolve(cfg, cands, n, model, stim, dec)
    b = evolve(cfg, cands, n, model, stim, dec)
    assert np.array_equal(a.best.bits, b.best.bits)
    assert [r.mean_fitness for r in a.history] == [r.mean_fitness for r in b.history]


def test_initialize_population_limits_and_determinism():
    n, model, aged, cands, stim, dec = _toy()
    crit = critical_path_nets(aged)
    order = eligible_order(cands)
    crit_bits = [k for k, net in enumerate(order) if net in crit]

    cfg = GaConfig(population_size=32, seed=5, init_base_prob=0.0, init_critical_prob=1.0)
    pop = initialize_population(cfg, cands, aged)
    for bits in pop:
        assert all(bits[k] == 1 for k in crit_bits)
        assert bits.sum() == len(crit_bits)

    again = initialize_population(cfg, cands, aged)
    assert all(np.array_equal(x, y) for x, y in zip(pop, again))

    cfg2 = GaConfig(population_size=32, seed=6, init_base_prob=0.01, init_critical_prob=0.4)
    for bits in initialize_population(cfg2, cands, aged):
        assert any(bits[k] for k in crit_bits)


def test_initialize_population_binomial_mean():
    n = generate_benchmark(rca(8))
    model = default_timing_model()
    aged = annotate(n, model, Corner.AGED)
    stim = generate_stimuli(n, 20_000, seed=1)
    cands = extract_candidates(n, aged, stim, seed=1)
    order = eligible_order(cands)
    crit = critical_path_nets(aged)
    crit_count = sum(1 for net in order if net in crit)
    base_count = len(order) - crit_count

    cfg = GaConfig(population_size=64, seed=9)
    pop = initialize_population(cfg, cands, aged)
    assert all(bits.sum() >= 1 for bits in pop)
    mean = float(np.mean([bits.sum() for bits in pop]))
    mu = base_count * cfg.init_base_prob + crit_count * cfg.init_critical_prob
    var = (
        base_count * cfg.init_base_prob * (1 - cfg.init_base_prob)
        + crit_count * cfg.init_critical_prob * (1 - cfg.init_critical_prob)
    )
    assert abs(mean - mu) <= 3 * (var / cfg.population_size) ** 0.5 + 0.1


def test_no_critical_path_candidates_error():
    n, model, aged, cands, stim, dec = _toy()
    off_path = [net for net in range(n.num_nets)
                if net not in critical_path_nets(aged) and n.const_value(net) is None]
    traces = functional_simulate(n, generate_stimuli(n, 256, seed=0))
    few = select_candidates(
        compute_activity(traces), compute_similarity(traces, aged), aged,
        eligible=off_path[:3],
    )
    with pytest.raises(NoCriticalPathCandidates):
        initialize_population(GaConfig(population_size=8, seed=0), few, aged)


def test_no_aging_all_zero_chromosome_wins():
    n = generate_benchmark(rca(4))
    model = derive_aged_model(default_timing_model(), 1.0)
    aged = annotate(n, model, Corner.AGED)
    stim = generate_stimuli(n, 2048, seed=2)
    cands = extract_candidates(n, aged, stim, seed=2)
    cfg = GaConfig(population_size=16, generations=60, seed=2)
    res = evolve(cfg, cands, n, model, stim, default_decoding(n))
    assert res.feasible
    assert res.best_nmed == 0.0
    assert res.best.applied_count == 0  # ranking prefers the untouched netlist


def test_all_zero_infeasible_under_aging():
    n, model, aged, cands, stim, dec = _toy()
    fresh_cpd = annotate(n, model, Corner.FRESH).cpd
    fit, cpd, err = calc_fitness(
        np.zeros(len(cands), dtype=np.uint8), cands, n, model, fresh_cpd, stim, dec
    )
    assert fit == 0.0 and cpd > fresh_cpd


def test_final_netlist_error_is_purely_logical():
    # the optimized netlist, clocked at the target under BOTH corners,
    # reproduces its functional outputs vector for vector
    n, model, aged, cands, stim, dec = _toy()
    fresh_cpd = annotate(n, model, Corner.FRESH).cpd
    cfg = GaConfig(population_size=16, generations=15, seed=13)
    res = evolve(cfg, cands, n, model, stim, dec)
    assert res.feasible
    approx = apply_rewiring(n, res.plan(cands))
    adec = default_decoding(approx)
    func = decode_outputs(functional_simulate(approx, stim), adec)
    for corner in (Corner.FRESH, Corner.AGED):
        dag = annotate(approx, model, corner)
        timed = decode_outputs(timing_simulate(dag, stim, clock_period=fresh_cpd), adec)
        assert np.array_equal(func, timed)
