import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from seqsel.air import (DecodingMetricParams, Scenario, awgn_log_metric, estimate_air,
                        optimize_metric_variance, rate_loss, run_experiment, synthetic_closure, transmit_sequence,
                        unbiased_output_log)
from seqsel.analytic import AnalyticChannelParams, air_with_selection
from seqsel.core import ConfigurationError, ShapeError, SymbolSequence, stream
from seqsel.ssfm import LinkSpec, SsfmSpec
from seqsel.store import SequenceStore
from seqsel.txrx import WdmConfig

from conftest import complex_gaussian


def test_awgn_metric_examples():
    s2 = 0.3
    x = SymbolSequence(np.array([1 + 1j]))
    assert awgn_log_metric(x, x, s2) == pytest.approx(math.log2(1 / (math.pi * s2)))
    y = SymbolSequence(x.symbols + math.sqrt(s2))
    assert awgn_log_metric(y, x, s2) == pytest.approx(math.log2(1 / (math.pi * s2)) - math.log2(math.e))
    with pytest.raises(ValueError):
        awgn_log_metric(x, x, 0.0)
    with pytest.raises(ShapeError):
        awgn_log_metric(SymbolSequence(np.ones(2)), x, 1.0)


def test_metrics_are_additive_over_concatenation(rng):
    x1, x2 = complex_gaussian(rng, (2, 5)), complex_gaussian(rng, (2, 7))
    y1, y2 = complex_gaussian(rng, (2, 5)), complex_gaussian(rng, (2, 7))
    x, y = SymbolSequence(np.hstack([x1, x2])), SymbolSequence(np.hstack([y1, y2]))
    parts = awgn_log_metric(SymbolSequence(y1), SymbolSequence(x1), 0.2) + \
        awgn_log_metric(SymbolSequence(y2), SymbolSequence(x2), 0.2)
    assert awgn_log_metric(y, x, 0.2) == pytest.approx(parts)
    u = unbiased_output_log(SymbolSequence(y1), 1.0, 0.2) + unbiased_output_log(SymbolSequence(y2), 1.0, 0.2)
    assert unbiased_output_log(y, 1.0, 0.2) == pytest.approx(u)


def test_unbiased_output_mirrors_metric():
    y = SymbolSequence(np.array([0.5 - 0.2j]))
    zero = SymbolSequence(np.zeros(1, dtype=complex))
    assert unbiased_output_log(y, 0.7, 0.3) == pytest.approx(awgn_log_metric(y, zero, 1.0))


def test_matched_awgn_estimate(rng):
    P, s2, N = 1.0, 0.05, 10**6
    x = SymbolSequence(complex_gaussian(rng, (1, N), P))
    y = SymbolSequence(x.symbols + complex_gaussian(rng, (1, N), s2))
    est = estimate_air(x, y, DecodingMetricParams(s2, P), 1, 1, 1)
    assert est.rate_loss == 0.0
    assert est.air == pytest.approx(math.log2(1 + P / s2), abs=0.02)
    assert est.air == est.gross_air and est.n_used == N and est.eta_used == 1.0
    assert est.std_error < 0.005


def test_dual_pol_units(rng):
    P, s2, N = 1.0, 0.1, 200000
    x = SymbolSequence(complex_gaussian(rng, (2, N), P))
    y = SymbolSequence(x.symbols + complex_gaussian(rng, (2, N), s2))
    est = estimate_air(x, y, DecodingMetricParams(s2, P), 1, 1, 1)
    assert est.pol_count == 2 and est.air_per_4d == est.air
    assert est.air_per_2d == pytest.approx(est.air / 2)
    assert est.air_per_2d == pytest.approx(math.log2(1 + P / s2), abs=0.03)
    with pytest.raises(ValueError):
        estimate_air(SymbolSequence(x.symbols[:1]), SymbolSequence(y.symbols[:1]),
                     DecodingMetricParams(s2, P), 1, 1, 1).air_per_4d


def test_rate_loss_arithmetic():
    assert rate_loss(64, 1000, 1000) == 0.0
    assert rate_loss(64, 2000, 1000) - rate_loss(64, 1000, 1000) == pytest.approx(1 / 64, abs=1e-15)
    assert rate_loss(64, 2**20, 2**10) == 10 / 64
    with pytest.raises(ValueError):
        rate_loss(64, 10, 0)


def test_estimate_errors():
    x = SymbolSequence(np.ones(4))
    with pytest.raises(ValueError):
        estimate_air(x, x, DecodingMetricParams(1.0, 1.0), 4, 10, 0)
    with pytest.raises(ShapeError):
        estimate_air(x, SymbolSequence(np.ones(5)), DecodingMetricParams(1.0, 1.0), 4, 1, 1)
    with pytest.raises(ValueError):
        DecodingMetricParams(0.0, 1.0)
    with pytest.raises(ValueError):
        DecodingMetricParams(1.0, -1.0)


@settings(max_examples=40, deadline=None)
@given(st.floats(-math.pi, math.pi))
def test_estimate_is_phase_invariant(theta):
    r = np.random.default_rng(1)
    x = complex_gaussian(r, (2, 500))
    y = x + complex_gaussian(r, (2, 500), 0.1)
    m = DecodingMetricParams(0.1, 1.0)
    rot = np.exp(1j * theta)
    a = estimate_air(SymbolSequence(x), SymbolSequence(y), m, 8, 3, 1)
    b = estimate_air(SymbolSequence(x * rot), SymbolSequence(y * rot), m, 8, 3, 1)
    assert a.air == pytest.approx(b.air, abs=1e-12)


def test_gross_air_decreases_with_extra_noise(rng):
    N = 100000
    x = complex_gaussian(rng, (1, N))
    base = x + complex_gaussian(rng, (1, N), 0.01)
    extra = complex_gaussian(rng, (1, N))
    values = []
    for v in (0.0, 0.01, 0.05):
        y = SymbolSequence(base + math.sqrt(v) * extra)
        s2 = optimize_metric_variance(SymbolSequence(x), y, 1.0)
        values.append(estimate_air(SymbolSequence(x), y, DecodingMetricParams(s2, 1.0), 1, 1, 1).gross_air)
    assert values[0] > values[1] > values[2]


def test_metric_variance_consistency(rng):
    N, v = 10**6, 0.02
    x = SymbolSequence(complex_gaussian(rng, (1, N)))
    y = SymbolSequence(x.symbols + complex_gaussian(rng, (1, N), v))
    s2 = optimize_metric_variance(x, y, 1.0)
    assert s2 == pytest.approx(v, rel=0.02)


def test_metric_variance_is_a_maximizer_and_homogeneous(rng):
    x = SymbolSequence(complex_gaussian(rng, (2, 4000)))
    y = SymbolSequence(0.9 * x.symbols + complex_gaussian(rng, (2, 4000), 0.3))
    s2 = optimize_metric_variance(x, y)

    def gross(s):
        return estimate_air(x, y, DecodingMetricParams(s, float(np.mean(np.abs(x.symbols) ** 2))), 1, 1, 1).gross_air

    assert gross(s2) >= gross(0.8 * s2) and gross(s2) >= gross(1.25 * s2)
    c = 3 - 4j
    s2c = optimize_metric_variance(x.scaled(c), y.scaled(c))
    assert s2c == pytest.approx(abs(c) ** 2 * s2, rel=1e-6)


def test_metric_variance_floor():
    x = SymbolSequence(np.ones(8))
    assert optimize_metric_variance(x, x) == 1e-30
    assert optimize_metric_variance(x, x, floor=1e-12) == 1e-12


def test_synthetic_closure_small():
    p = AnalyticChannelParams(0.01, 0.001, 60, 10)
    P = 1.0
    g = 0.006
    est = synthetic_closure(P, g, p, 120000, seed=3)
    assert est.air == pytest.approx(air_with_selection(P, g, p), abs=0.03)
    assert est.n_used == 120000
    fixed = synthetic_closure(P, g, p, 120000, seed=3, optimize=False)
    assert fixed.rate_loss == est.rate_loss


def test_transmit_sequence_from_store():
    blocks = [SymbolSequence(np.full((2, 8), k + 1.0)) for k in range(4)]
    store = SequenceStore(blocks, 2.0, 1.0, 40, 4)
    lanes = transmit_sequence(store, 1, 2, 32, 8.0, stream(0))
    assert len(lanes) == 1 and lanes[0].n == 32
    # each block appears once, scaled by sqrt(8 / 2)
    vals = sorted(set(np.round(lanes[0].symbols[0].real, 12)))
    assert vals == [2.0, 4.0, 6.0, 8.0]
    sub = transmit_sequence(store, 4, 2, 64, 2.0, stream(0))
    assert len(sub) == 4 and all(s.n == 16 for s in sub)
    with pytest.raises(ConfigurationError):
        transmit_sequence(store, 1, 1, 32, 1.0, stream(0))
    with pytest.raises(ConfigurationError):
        transmit_sequence(store, 3, 2, 24, 1.0, stream(0))


def test_scenario_validation():
    with pytest.raises(ConfigurationError):
        Scenario(kind="other")
    with pytest.raises(ConfigurationError):
        Scenario(variants=("benchmark", "magic"))
    with pytest.raises(ConfigurationError):
        Scenario(wdm=WdmConfig(num_channels=3))
    with pytest.raises(ConfigurationError):
        Scenario(kind="wdm_2pol", wdm=WdmConfig(num_channels=3, subcarriers_per_channel=4))
    with pytest.raises(ConfigurationError):
        Scenario(powers_dbm=())
    with pytest.raises(ConfigurationError):
        run_experiment(Scenario(variants=("selection",), n_symbols=1024, edge=32))


LINEAR = Scenario(link=LinkSpec(gamma_nl=0.0), ssfm=SsfmSpec(step_size=100000.0, sampling_rate=100.0, noise=True),
                  n_symbols=2**14, powers_dbm=(-20.0, -15.0, -10.0), edge=32, seed=4)


def test_linear_scenario_matches_ase_capacity():
    points = run_experiment(LINEAR)
    assert [p.power_dbm for p in points] == [-20.0, -15.0, -10.0]
    for p in points:
        assert p.se == pytest.approx(p.linear_capacity, abs=0.05)
        assert p.rate_loss == 0.0 and p.eta == 1.0
        assert p.tx_power_dbm == pytest.approx(p.power_dbm, abs=0.1)


def test_run_experiment_is_deterministic_and_worker_independent():
    sc = LINEAR.replace(n_symbols=2**11, powers_dbm=(-15.0, -12.0))
    a = run_experiment(sc)
    b = run_experiment(sc, workers=2)
    assert a == b
