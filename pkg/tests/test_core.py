import numpy as np
import pytest
from hypothesis import given, strategies as st

from seqsel.core import (ConfigurationError, ShapeError, SourceConfig, SymbolSequence, Waveform, concat,
                         dbm_to_mw, energy_per_symbol, gaussian_sequence, mw_to_dbm, stream)


def test_sequence_is_frozen_copy():
    raw = np.ones(4, dtype=complex)
    x = SymbolSequence(raw)
    raw[0] = 7
    assert x.symbols.shape == (1, 4)
    assert x.symbols[0, 0] == 1
    with pytest.raises(ValueError):
        x.symbols[0, 0] = 2


@pytest.mark.parametrize("bad", [np.zeros((3, 4)), np.zeros((1, 0)), np.zeros((2, 2, 2))])
def test_sequence_shape_errors(bad):
    with pytest.raises(ShapeError):
        SymbolSequence(bad)


def test_sequence_rejects_nan():
    with pytest.raises(ValueError):
        SymbolSequence(np.array([1.0, np.nan]))


@pytest.mark.parametrize("kw", [dict(power=0.0), dict(power=-1.0), dict(n=0), dict(pol_count=3), dict(seed=-1)])
def test_source_config_validation(kw):
    args = dict(power=1.0, n=8)
    args.update(kw)
    with pytest.raises(ConfigurationError):
        SourceConfig(**args)


def test_gaussian_source_power_and_circularity():
    x = gaussian_sequence(SourceConfig(1.0, 10**6, 1, seed=1)).symbols[0]
    assert abs(np.mean(np.abs(x) ** 2) - 1.0) < 0.01
    assert abs(np.mean(x**2)) < 0.01
    assert abs(np.var(x.real) - 0.5) < 0.005


def test_source_is_deterministic_and_scales_exactly():
    a = gaussian_sequence(SourceConfig(1.0, 64, 2, seed=9))
    b = gaussian_sequence(SourceConfig(2.0, 64, 2, seed=9))
    np.testing.assert_array_equal(a.symbols * np.sqrt(2.0), b.symbols)
    assert not np.array_equal(a.symbols, gaussian_sequence(SourceConfig(1.0, 64, 2, seed=10)).symbols)


def test_streams_with_different_keys_differ():
    assert stream(1, 0).random() != stream(1, 1).random()
    assert stream(1, 0).random() == stream(1, 0).random()


def test_energy_per_symbol_counts_both_pols():
    x = SymbolSequence(np.ones((2, 5)))
    assert energy_per_symbol(x) == 2.0


def test_concat_rejects_mixed_pols():
    with pytest.raises(ShapeError):
        concat([SymbolSequence(np.ones(2)), SymbolSequence(np.ones((2, 2)))])
    with pytest.raises(ShapeError):
        concat([])


@given(st.lists(st.integers(1, 6), min_size=1, max_size=5))
def test_concat_energy_is_length_weighted(lengths):
    rng = np.random.default_rng(len(lengths))
    blocks = [SymbolSequence(rng.standard_normal((1, k)) + 0j) for k in lengths]
    joined = concat(blocks)
    assert joined.n == sum(lengths)
    expected = sum(energy_per_symbol(b) * b.n for b in blocks) / joined.n
    assert energy_per_symbol(joined) == pytest.approx(expected)


@given(st.floats(-60, 30))
def test_dbm_round_trip(p):
    assert float(mw_to_dbm(dbm_to_mw(p))) == pytest.approx(p, abs=1e-12)


def test_dbm_reference_points():
    assert float(dbm_to_mw(0.0)) == 1.0
    assert float(dbm_to_mw(-10.0)) == pytest.approx(0.1)


def test_waveform_power_and_validation():
    w = Waveform(np.full((2, 4), 2.0 + 0j), 100.0)
    assert w.pol_count == 2 and w.size == 4 and w.power() == 4.0
    with pytest.raises(ConfigurationError):
        Waveform(np.ones(4), 0.0)
