import numpy as np
import pytest

from qmanizk import montecarlo
from qmanizk.montecarlo import Estimate, estimate_acceptance


def coin(rng):
    return rng.random() < 0.3


def test_counts_do_not_depend_on_workers():
    serial = estimate_acceptance(coin, 5000, 11, chunk=700, workers=1)
    parallel = estimate_acceptance(coin, 5000, 11, chunk=700, workers=3)
    assert serial == parallel


def test_counts_follow_the_chunk_seeds():
    seeds = np.random.SeedSequence(4).spawn(3)
    expected = 0
    for n, s in zip([100, 100, 50], seeds):
        rng = np.random.default_rng(s)
        expected += sum(coin(rng) for _ in range(n))
    assert estimate_acceptance(coin, 250, 4, chunk=100, workers=1).accepts == expected


def test_estimate_statistics():
    est = Estimate(100, 30)
    assert est.rate == 0.3
    assert est.sigma == pytest.approx((0.3 * 0.7 / 100) ** 0.5)
    assert est.within(0.35, k=2) and not est.within(0.5)
    with pytest.raises(ValueError):
        estimate_acceptance(coin, 0, 1)


def test_worker_count_env(monkeypatch):
    monkeypatch.setenv(montecarlo.THREADS_ENV, "3")
    assert montecarlo.worker_count() == 3
    monkeypatch.setenv(montecarlo.THREADS_ENV, "0")
    assert montecarlo.worker_count() == 1
    monkeypatch.setenv(montecarlo.THREADS_ENV, "many")
    with pytest.raises(ValueError):
        montecarlo.worker_count()
