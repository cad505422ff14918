import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from axaging.bench import generate_benchmark, rca
from axaging.errors import EmptyStream, LengthMismatch, UnknownNet
from axaging.metrics import (
    OutputDecoding,
    decode_outputs,
    default_decoding,
    nmed,
    resolve_decoding,
)
from axaging.sim import StimulusSet, TraceSet, functional_simulate, pack_bits


def _decoding(width):
    return OutputDecoding("t", tuple(range(width)), ("t",))


def test_identical_streams_zero():
    g = np.arange(100, dtype=np.int64)
    m = nmed(g, g.copy(), _decoding(8))
    assert m.nmed == 0.0 and m.error_rate == 0.0 and m.max_error_distance == 0


def test_single_vector_direct_substitution():
    m = nmed(np.array([10]), np.array([8]), _decoding(4))
    assert m.nmed == pytest.approx(2 / 15, abs=0)
    assert m.mean_error_distance == 2.0
    assert m.error_rate == 1.0


def test_stuck_msb_closed_form():
    # brute force over all 256 uniform values: E|delta| = 64, nmed = 64/255
    golden = np.arange(256, dtype=np.int64)
    observed = golden & 0x7F
    m = nmed(golden, observed, _decoding(8))
    brute = float(np.abs(golden - observed).mean()) / 255
    assert m.nmed == pytest.approx(brute, abs=0)
    assert m.nmed == pytest.approx(64 / 255, abs=1e-3)


def test_translation_counting():
    # k vectors off by d each: nmed == k*d/(N*max), exactly
    N, k, d = 1000, 37, 5
    golden = np.full(N, 100, dtype=np.int64)
    observed = golden.copy()
    observed[:k] += d
    m = nmed(golden, observed, _decoding(8))
    assert m.nmed == pytest.approx(k * d / (N * 255), abs=0)
    assert m.error_rate == pytest.approx(k / N, abs=0)
    assert m.max_error_distance == d


def test_symmetry_and_bounds():
    rng = np.random.default_rng(5)
    g = rng.integers(0, 256, 500).astype(np.int64)
    o = rng.integers(0, 256, 500).astype(np.int64)
    d = _decoding(8)
    assert nmed(g, o, d).nmed == nmed(o, g, d).nmed
    assert 0.0 <= nmed(g, o, d).nmed <= 1.0


def test_literal_variant_skips_zero_golden():
    g = np.array([0, 10, 20], dtype=np.int64)
    o = np.array([5, 8, 20], dtype=np.int64)
    d = _decoding(5)
    literal = nmed(g, o, d, variant="literal")
    # only the 10->8 sample contributes: (2/10)/3/31
    assert literal.nmed == pytest.approx((2 / 10) / 3 / 31, abs=0)
    standard = nmed(g, o, d)
    assert standard.nmed == pytest.approx((5 + 2) / 3 / 31, abs=0)


def test_error_conditions():
    d = _decoding(4)
    with pytest.raises(EmptyStream):
        nmed(np.array([], dtype=np.int64), np.array([], dtype=np.int64), d)
    with pytest.raises(LengthMismatch):
        nmed(np.array([1]), np.array([1, 2]), d)


def test_decode_bit_order():
    n = generate_benchmark(rca(2))
    words = np.zeros((n.num_nets, 1), dtype=np.uint64)
    dec = default_decoding(n)
    # bits (1, 0, 1) LSB->MSB decode to 5
    for k, net in enumerate(dec.nets):
        if k in (0, 2):
            words[net] = pack_bits(np.array([1], dtype=np.uint8))
    tr = TraceSet(n, 1, words)
    assert decode_outputs(tr, dec)[0] == 5
    tr_zero = TraceSet(n, 1, np.zeros_like(words))
    assert decode_outputs(tr_zero, dec)[0] == 0


def test_decode_rca8_addition():
    n = generate_benchmark(rca(8))
    layout = tuple((b.name, b.width) for b in n.input_buses)
    s = StimulusSet(
        layout, 1,
        {"a": np.array([200], dtype=np.uint64), "b": np.array([100], dtype=np.uint64),
         "cin": np.array([0], dtype=np.uint64)},
    )
    assert decode_outputs(functional_simulate(n, s), default_decoding(n))[0] == 300


def test_decode_unknown_net():
    n = generate_benchmark(rca(2))
    bogus = OutputDecoding("x", (10_000,), ("x",))
    tr = TraceSet(n, 1, np.zeros((n.num_nets, 1), dtype=np.uint64))
    with pytest.raises(UnknownNet):
        decode_outputs(tr, bogus)


def test_default_decoding_multi_bus_order():
    # two output buses: last-declared contributes the least significant bits
    from axaging.netlist import parse_netlist

    n = parse_netlist(
        "module m (a, hi, lo);\ninput a;\noutput hi;\noutput [1:0] lo;\n"
        "BUF U1 (.A(a), .Y(hi));\nINV U2 (.A(a), .Y(lo[0]));\nBUF U3 (.A(a), .Y(lo[1]));\nendmodule"
    )
    dec = default_decoding(n)
    assert dec.width == 3
    assert dec.nets[0] == n.net_id("lo[0]")
    assert dec.nets[-1] == n.net_id("hi")
    named = resolve_decoding(n, ["hi", "lo"])
    assert named.nets == dec.nets
    only_lo = resolve_decoding(n, ["lo"])
    assert only_lo.width == 2


@settings(max_examples=40, deadline=None)
@given(
    st.lists(st.integers(0, 255), min_size=1, max_size=64),
    st.lists(st.integers(0, 255), min_size=1, max_size=64),
)
def test_nmed_properties(g, o):
    size = min(len(g), len(o))
    golden = np.array(g[:size], dtype=np.int64)
    observed = np.array(o[:size], dtype=np.int64)
    d = _decoding(8)
    m = nmed(golden, observed, d)
    assert 0.0 <= m.nmed <= 1.0
    assert (m.error_rate == 0.0) == (m.nmed == 0.0) == (m.max_error_distance == 0)
    assert m.vectors == size
