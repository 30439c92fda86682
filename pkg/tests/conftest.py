import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from clf_denoise.events import EventStream, Label, SensorGeometry

settings.register_profile("default", deadline=None, max_examples=60,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")

G64 = SensorGeometry(64, 64)


def random_stream(seed, n=10_000, geometry=G64, span_us=200_000, signal_frac=0.5, walkers=12):
    """Mixed stream: random-walk clusters (signal) plus uniform noise.

    Timestamps are drawn on a coarse grid so equal-timestamp ties occur.
    """
    rng = np.random.default_rng(seed)
    n_sig = int(n * signal_frac)
    w, h = geometry.width, geometry.height
    t_sig = np.sort(rng.integers(0, span_us, n_sig))
    who = rng.integers(0, walkers, n_sig)
    pos = rng.uniform([0, 0], [w, h], size=(walkers, 2))
    xs = np.empty(n_sig, np.int64)
    ys = np.empty(n_sig, np.int64)
    for i in range(n_sig):
        k = who[i]
        pos[k] = np.clip(pos[k] + rng.normal(0, 0.6, 2), 0, [w - 1, h - 1])
        xs[i], ys[i] = pos[k]
    n_noise = n - n_sig
    t = np.concatenate([t_sig, rng.integers(0, span_us, n_noise)]) // 7 * 7
    x = np.concatenate([xs, rng.integers(0, w, n_noise)])
    y = np.concatenate([ys, rng.integers(0, h, n_noise)])
    lab = np.concatenate([np.full(n_sig, Label.SIGNAL), np.full(n_noise, Label.NOISE)])
    order = np.argsort(t, kind="stable")
    p = rng.integers(0, 2, n)
    return EventStream(geometry, t[order], x[order], y[order], p, lab[order])


def stream_from_tuples(geometry, rows):
    """rows of (t, x, y[, p[, label]])."""
    # missing polarity defaults to ON, missing label to Unknown
    rows = [tuple(r) + (1, -1)[len(r) - 3:] for r in rows]
    if not rows:
        return EventStream.empty(geometry)
    a = np.array(rows, dtype=np.int64)
    return EventStream(geometry, a[:, 0], a[:, 1], a[:, 2], a[:, 3], a[:, 4])


@pytest.fixture(scope="session")
def streams50():
    return [random_stream(seed) for seed in range(50)]


# one line per acceptance criterion, printed at the end of the session
ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":").lstrip("C"))):
            terminalreporter.write_line(line)
