import math

import numpy as np
import pytest

from clf_denoise.analysis import compute_metrics
from clf_denoise.events import EventStream, Label, Polarity, SensorGeometry, format_csv, parse_csv
from clf_denoise.filters import FilterParams, OracleFilter
from clf_denoise.synth import (
    Box,
    Edge,
    EmptySignal,
    MotionScene,
    NoiseModel,
    Pendulum,
    SceneOutOfBounds,
    gen_noise,
    gen_signal,
    mix_to_ratio,
    standard_mix,
)

G = SensorGeometry(64, 32)


def assert_valid(s: EventStream):
    # re-validates ordering and ranges through the constructor
    assert parse_csv(format_csv(s), s.geometry) == s


def test_zero_duration_is_empty():
    assert len(gen_signal(G, MotionScene(Box(3, 3), duration=0))) == 0


def test_edge_crossing_times():
    s = gen_signal(SensorGeometry(10, 1), MotionScene(Edge(), velocity=1000.0, duration=10_000))
    assert s.t.tolist() == list(range(0, 10_000, 1000))
    assert s.x.tolist() == list(range(10))
    assert set(s.p.tolist()) == {Polarity.ON}
    assert set(s.label.tolist()) == {Label.SIGNAL}


@pytest.mark.parametrize("direction", ["x", "y"])
def test_box_events_on_perimeter(direction):
    v, x0, y0, w, h = 700.0, 3, 5, 6, 4
    sc = MotionScene(Box(w, h), velocity=v, duration=30_000, origin=(x0, y0), direction=direction)
    s = gen_signal(G, sc)
    assert len(s) > 0
    assert_valid(s)
    tol = v * 0.5e-6 + 1e-9  # crossing times are rounded to whole microseconds
    ext, span = (w, h) if direction == "x" else (h, w)
    a0, b0 = (x0, y0) if direction == "x" else (y0, x0)
    for t, x, y, p in zip(s.t.tolist(), s.x.tolist(), s.y.tolist(), s.p.tolist()):
        along, across = (x, y) if direction == "x" else (y, x)
        lead = a0 + ext + v * t * 1e-6
        trail = a0 + v * t * 1e-6
        assert b0 <= across < b0 + span
        if p == Polarity.ON:
            assert abs(lead - along) <= tol
        else:
            assert abs(trail - (along + 1)) <= tol


def test_scene_out_of_bounds():
    with pytest.raises(SceneOutOfBounds):
        gen_signal(G, MotionScene(Box(10, 4), velocity=1000.0, duration=100_000, origin=(0, 0)))
    with pytest.raises(SceneOutOfBounds):
        gen_signal(G, MotionScene(Pendulum(30.0, 1000.0, 4, 4), duration=1000, origin=(10, 0)))


def test_pendulum_swings_both_ways():
    sc = MotionScene(Pendulum(amplitude=10.0, period=40_000.0, w=3, h=4), duration=40_000, origin=(5, 2))
    s = gen_signal(G, sc)
    assert_valid(s)
    assert 5 - 1 <= s.x.min() and s.x.max() <= 5 + 20 + 3
    # rightward half: ON leads; leftward half: ON on the left side
    first, second = s.t < 20_000, s.t >= 20_000
    assert s.x[first & (s.p == 1)].mean() > s.x[first & (s.p == 0)].mean()
    assert s.x[second & (s.p == 1)].mean() < s.x[second & (s.p == 0)].mean()


def test_signal_continuity():
    v = 500.0
    crossing = math.ceil(1e6 / v) + 1
    scenes = [MotionScene(Box(5, 6), velocity=v, duration=40_000, origin=(2, 3)),
              MotionScene(Edge(), velocity=v, duration=40_000, origin=(30, 0), direction="y")]
    s = gen_signal(G, scenes)
    d = OracleFilter(FilterParams(1, crossing, 1), G).run(s)
    moved = s.t >= crossing
    assert moved.any() and d.is_signal[moved].all()


def test_jitter_uses_seed():
    sc = MotionScene(Box(4, 4), velocity=500.0, duration=20_000, origin=(2, 2), jitter_us=300)
    a, b, c = gen_signal(G, sc, 1), gen_signal(G, sc, 1), gen_signal(G, sc, 2)
    assert a == b and not a == c
    assert a.meta["rng"] == "PCG64"


def test_noise_zero_rate():
    assert len(gen_noise(G, NoiseModel(0.0, 1), 1_000_000)) == 0
    assert len(gen_noise(G, NoiseModel(5.0, 1), 0)) == 0


def test_noise_poisson_counts():
    g = SensorGeometry(64, 64)
    counts = np.array([len(gen_noise(g, NoiseModel(1.0, seed), 1_000_000)) for seed in range(40)])
    assert np.all(np.abs(counts - 4096) <= 4 * 64)
    assert abs(counts.mean() - 4096) <= 3 * 64 / math.sqrt(len(counts))


def test_noise_count_dispersion():
    # Poisson: variance equals the mean (ratio SE ~0.08 with 300 seeds)
    g = SensorGeometry(8, 8)
    counts = np.array([len(gen_noise(g, NoiseModel(50.0, seed), 1_000_000)) for seed in range(300)])
    assert abs(counts.mean() - 3200) <= 3 * math.sqrt(3200 / len(counts))
    assert 0.75 < counts.var(ddof=1) / counts.mean() < 1.25


def test_noise_interarrival_mean():
    s = gen_noise(SensorGeometry(4, 4), NoiseModel(2000.0, 3), 2_000_000)
    pix = s.y.astype(np.int64) * 4 + s.x
    gaps = np.concatenate([np.diff(s.t[pix == k]) for k in range(16)])
    assert abs(gaps.mean() - 500.0) < 5.0


def test_noise_deterministic_and_valid():
    a = gen_noise(G, NoiseModel(30.0, 9), 100_000)
    assert a == gen_noise(G, NoiseModel(30.0, 9), 100_000)
    assert_valid(a)
    assert set(a.label.tolist()) == {Label.NOISE}
    assert set(a.p.tolist()) == {0, 1}
    # ties are ordered by pixel id
    key = a.t * (G.width * G.height) + a.y.astype(np.int64) * G.width + a.x
    assert np.all(np.diff(key) >= 0)


def test_noise_rate_validation():
    with pytest.raises(ValueError):
        NoiseModel(-1.0)


def _signal_1000():
    s = gen_signal(SensorGeometry(100, 10), MotionScene(Edge(), velocity=1000.0, duration=100_000))
    assert len(s) == 1000
    return s


def test_mix_ratio_zero_is_signal():
    s = _signal_1000()
    assert mix_to_ratio(s, NoiseModel(0.0, 1), 0.0) == s


def test_mix_ratio_one():
    m = mix_to_ratio(_signal_1000(), NoiseModel(0.0, 1), 1.0)
    assert 950 <= m.count(Label.NOISE) <= 1050
    assert m.count(Label.SIGNAL) == 1000
    assert m.meta["noise_rate_hz"] > 0
    assert_valid(m)


def test_mix_with_perfect_classifier():
    m = mix_to_ratio(_signal_1000(), NoiseModel(0.0, 2), 1.29)
    assert compute_metrics(m.label == Label.SIGNAL, m.label).accuracy == 1.0
    assert abs(m.meta["noise_ratio"] - 1.29) < 0.05 * 1.29


def test_mix_empty_signal():
    with pytest.raises(EmptySignal):
        mix_to_ratio(EventStream.empty(G), NoiseModel(0.0), 1.0)


def test_standard_mix_is_reproducible():
    a = standard_mix(1.3, seed=4)
    assert a == standard_mix(1.3, seed=4)
    assert abs(a.count(Label.NOISE) / a.count(Label.SIGNAL) - 1.3) < 0.01
