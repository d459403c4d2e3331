import math

import numpy as np
import pytest

import afc


def test_efficiency_values():
    assert afc.optimal_finesse(2.75) == pytest.approx(2.71, abs=0.005)
    assert afc.afc_efficiency(2.75, 2.71) == pytest.approx(0.233, abs=0.001)
    assert afc.afc_efficiency_with_background(2.75, 2.71, 0.085) == pytest.approx(0.214, abs=0.001)
    assert afc.efficiency_decay(125e-6, 0.202, 348e-6) == pytest.approx(0.048, abs=5e-4)


def test_bad_finesse_raises_value_error():
    with pytest.raises(ValueError):
        afc.afc_efficiency(2.0, 1.0)
    with pytest.raises(afc.ValidationError):
        afc.synthesize(10e6, 255e6, 2.0, 4e-6, 312.5e6)


def test_synthesize_matches_target_psd():
    s, m = afc.synthesize(1e6, 20e6, 2.0, 20e-6, 25e6, method="freq-domain", phase_constructor="two-scale")
    assert s.dtype == np.complex128
    assert s.shape == (500,)
    assert np.max(np.abs(s)) == pytest.approx(1.0)
    ps = np.abs(np.fft.fft(s)) ** 2
    ps /= ps.max()
    k = np.arange(500)
    target = ((k < 400) & (k % 20 < 10)).astype(float)
    assert np.max(np.abs(ps - target)) < 1e-9
    assert m["crest_factor"] == pytest.approx(afc.crest_factor(s))
    assert m["oob_energy_fraction"] < 1e-9


def test_exact_envelope_is_flat():
    s, m = afc.synthesize(1e6, 20e6, 2.0, 20e-6, 25e6, method="exact-envelope")
    assert np.allclose(np.abs(s), 1.0)
    assert m["crest_factor"] == pytest.approx(1.0, abs=1e-9)


def test_resource_cap():
    with pytest.raises(MemoryError):
        afc.synthesize(10e6, 250e6, 2.0, 4e-3, 312.5e6, max_bytes=1000)


def test_decay_fit_round_trip():
    t = np.linspace(1e-6, 125e-6, 10)
    y = 0.202 * np.exp(-4 * t / 348e-6)
    r = afc.fit_afc_decay(t.tolist(), y.tolist())
    assert r["converged"]
    assert r["params"]["t2_afc"] == pytest.approx(348e-6, rel=1e-6)


def test_lifetime_trace_fit():
    delays = (0.01 * 3000.0 ** (np.arange(40) / 39)).tolist()
    d = afc.lifetime_trace(delays)
    r = afc.fit_double_exponential(delays, d)
    assert r["params"]["t1_fast"] == pytest.approx(0.370, rel=0.05)
    assert r["params"]["t1_slow"] == pytest.approx(4.7, rel=0.05)


def test_bandwidth_knee():
    metric, knee = afc.bandwidth_limit_scan([50.0, 286.0, 287.0, 288.0, 289.0, 290.0, 360.0])
    assert metric[0] < 1e-3
    assert metric[-1] > 0
    assert knee is not None and abs(knee - 288.0) <= 1.0


def test_comb_fit_square():
    f = np.arange(1000) * 0.1 + 0.05
    od = np.where(np.fmod(f, 10.0) < 10.0 / 2.45, 2.835, 0.085)
    r = afc.fit_comb_parameters(0.05, 0.1, od.tolist(), 10.0)
    assert r["params"]["d"] == pytest.approx(2.75)
    assert r["params"]["d0"] == pytest.approx(0.085)
    assert math.isclose(r["params"]["F"], 2.45, rel_tol=0.02)
