import numpy as np
import pytest

from diffnet.apps import (ALL_MINIMAL, MIN_CUT_ONLY, PersistentSNR, PropagationStabilityQuery,
                          TransientSNR, check_propagation_stability, noisy_measurement,
                          persistent_snr, random_finite_inputs, rank_sensors, snr_all, snr_csv,
                          transient_snr)
from diffnet.errors import TooLarge
from diffnet.metrics import PiecewiseSpectrum, band_energy
from diffnet.model import from_edges
from diffnet.simulate import InputSignal, simulate

from conftest import make_random


def test_transient_snr_is_scaled_norm(example):
    q = TransientSNR(2.0, InputSignal.impulse(), 100, sigma=0.5)
    x = simulate(example, {0: InputSignal.impulse()}, 100).node(8)
    assert transient_snr(example, 0, 8, q) == pytest.approx(np.linalg.norm(x) / 0.5)


def test_persistent_snr_flat_band(example):
    q = PersistentSNR(PiecewiseSpectrum.flat(0.1, 1.0, 2.0), sigma=2.0)
    ref = 2.0 * band_energy(example, 0, 8, 0.1, 1.0).value / 4.0
    assert persistent_snr(example, 0, 8, q) == pytest.approx(ref, rel=1e-12)


def test_snr_all_consistent(example):
    q = TransientSNR(1.0, InputSignal.step(), 50)
    vals = snr_all(example, 0, q)
    assert vals[8] == pytest.approx(transient_snr(example, 0, 8, q))


@pytest.mark.parametrize("query", [
    TransientSNR(2.0, InputSignal.impulse(), 200),
    PersistentSNR(PiecewiseSpectrum.flat(0.1, 1.0)),
])
def test_snr_cutset_bound(example, query):
    vals = snr_all(example, 0, query)
    assert vals[8] <= vals[[3, 4, 5]].max()


def test_rank_sensors_order(example):
    ranked = rank_sensors(example, 0, [8, 3, 1, 4], TransientSNR(2.0, InputSignal.impulse(), 50))
    values = [v for _, v in ranked]
    assert values == sorted(values, reverse=True)
    assert rank_sensors(example, 0, [], PersistentSNR(PiecewiseSpectrum.flat(0.1, 1.0))) == []


def test_rank_ties_by_id():
    # nodes 2 and 3 are symmetric copies
    net = from_edges(3, [(0, 1, 0.5), (0, 2, 0.5)])
    ranked = rank_sensors(net, 0, [2, 1], TransientSNR(2.0, InputSignal.impulse(), 10))
    assert [i for i, _ in ranked] == [1, 2]


@pytest.mark.parametrize("kwargs", [{"sigma": 0.0}, {"sigma": -1.0}])
def test_snr_sigma_positive(kwargs):
    with pytest.raises(ValueError):
        TransientSNR(2.0, InputSignal.impulse(), 10, **kwargs)
    with pytest.raises(ValueError):
        PersistentSNR(PiecewiseSpectrum.flat(0.1, 1.0), **kwargs)


def test_noisy_measurement_deterministic():
    x = np.zeros(5)
    a = noisy_measurement(x, 1.0, np.random.default_rng(1))
    b = noisy_measurement(x, 1.0, np.random.default_rng(1))
    np.testing.assert_array_equal(a, b)


def test_snr_csv():
    assert snr_csv([(0, "transient", 1.5)]) == "node,mode,SNR\n1,transient,1.5\n"


def _query(seed, count=10, strategy=ALL_MINIMAL):
    inputs = random_finite_inputs(np.random.default_rng(seed), count, 60)
    return PropagationStabilityQuery(2.0, 2.0, inputs, strategy, horizon=60)


def test_propagation_stability_example(example):
    rep = check_propagation_stability(example, _query(0))
    assert rep.passed and rep.cases_run > 0


@pytest.mark.parametrize("seed", range(5))
def test_propagation_stability_random(seed):
    net = make_random(seed)
    assert check_propagation_stability(net, _query(seed, count=4)).passed


def test_propagation_negation_fails(example):
    assert not check_propagation_stability(example, _query(0, 3), negate=True).passed


def test_min_cut_strategy(example):
    rep = check_propagation_stability(example, _query(0, 3, MIN_CUT_ONLY))
    assert rep.passed


def test_user_cutsets(example):
    strategy = ((0, 8, (3, 4, 5)),)
    q = PropagationStabilityQuery(2.0, 2.0, random_finite_inputs(np.random.default_rng(0), 3, 40),
                                  strategy, horizon=40, sources=(0,))
    rep = check_propagation_stability(example, q)
    assert rep.passed and rep.cases_run == 3


def test_propagation_too_large():
    n = 25
    net = from_edges(n, [(i, (i + 1) % n, 0.5) for i in range(n)])
    with pytest.raises(TooLarge):
        check_propagation_stability(net, _query(0, 1))


def test_query_rejects_bad_norms():
    with pytest.raises(ValueError):
        PropagationStabilityQuery(0.5, 2.0, ())
