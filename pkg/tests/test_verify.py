import math
import xml.etree.ElementTree as ET

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from diffnet.cutsets import validate_cutset
from diffnet.errors import NotSevered, NotStochastic
from diffnet.metrics import lp_gain
from diffnet.model import Network, StochasticityKind, classify, is_ergodic
from diffnet.simulate import InputSignal
from diffnet.verify import (ALL_THEOREMS, RandomNetConfig, SuiteParams, SuiteReport, Theorem,
                            VerificationReport, check_network, junit_xml, random_network,
                            random_suite, verify_band_decrescence, verify_distance_classes,
                            verify_freq_decrescence, verify_gain_decrescence, verify_lemma1,
                            verify_markov_decrescence, verify_multi_input,
                            verify_neighbor_inequality, verify_periodic_bounds)

CUT = {3, 4, 5}
OMEGAS = tuple(np.linspace(0, math.pi, 64))


def _runners(net):
    cert = validate_cutset(net, {0}, 8, CUT)
    return {
        "gain": lambda neg: verify_gain_decrescence(net, 0, 8, [CUT], 2.0, 20, negate=neg),
        "neighbor": lambda neg: verify_neighbor_inequality(net, 0, 20, InputSignal.impulse(),
                                                           negate=neg),
        "periodic": lambda neg: verify_periodic_bounds(net, 0, 8, CUT, InputSignal.step(), 20,
                                                       negate=neg),
        "freq": lambda neg: verify_freq_decrescence(net, 0, 8, CUT, OMEGAS, negate=neg),
        "band": lambda neg: verify_band_decrescence(net, 0, 8, CUT, [(0.1, 0.5)], negate=neg),
        "markov": lambda neg: verify_markov_decrescence(net, 0, 8, CUT, 40, negate=neg),
        "multi": lambda neg: verify_multi_input(net, (0, 1), 8, CUT, 2.0, 20, negate=neg),
        "lemma": lambda neg: verify_lemma1(net, cert, 30, InputSignal.impulse(), negate=neg),
        "distance": lambda neg: verify_distance_classes(net, 0, 1.0, 20, negate=neg),
    }


@pytest.mark.parametrize("name", ["gain", "neighbor", "periodic", "freq", "band", "markov",
                                  "multi", "lemma", "distance"])
def test_verifiers_pass_and_negation_fails(example, name):
    run = _runners(example)[name]
    assert run(False).passed
    negated = run(True)
    assert len(negated.violations) >= 1


def test_check_records_violation():
    rep = VerificationReport(Theorem.T1_GAIN, 1e-9)
    assert rep.check(1.0, 1.0 + 1e-10, network="x", case="c", node=0)
    assert not rep.check(1.0 + 1e-8, 1.0, network="x", case="c", node=2, cutset=[1])
    assert len(rep.violations) == 1
    v = rep.violations[0]
    assert v.slack == pytest.approx(-1e-8) and v.to_json()["node"] == 3
    assert rep.min_slack == pytest.approx(-1e-8)


def test_gain_check_flags_a_non_separating_set(example):
    with pytest.raises(NotSevered):
        verify_gain_decrescence(example, 0, 8, [{3}], 1.0, 10)


def test_gain_check_detects_planted_violation():
    # {2} does not separate node 3 from the source, so the bound must fail
    net = Network.from_matrix([[0, 0, 0], [0.1, 0, 0], [0.9, 0, 0]])
    rep = VerificationReport(Theorem.T1_GAIN, 1e-9)
    rep.check(lp_gain(net, 0, 2, 1.0, 5).value, lp_gain(net, 0, 1, 1.0, 5).value,
              network=net.digest, case="planted", node=2, cutset=[1])
    assert not rep.passed


def test_band_refuses_stochastic():
    net = Network.from_matrix([[0.2, 0.8, 0], [0, 0, 1.0], [1.0, 0, 0]])
    with pytest.raises(NotStochastic):
        verify_band_decrescence(net, 0, 2, {1}, [(0.1, 0.5)])


def test_periodic_rejects_aperiodic_signal(example):
    with pytest.raises(ValueError):
        verify_periodic_bounds(example, 0, 8, CUT, InputSignal.impulse(), 10)


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 10_000), st.booleans())
def test_random_network_config(seed, stochastic):
    cfg = RandomNetConfig(seed=seed, stochastic_mode=stochastic)
    net = random_network(np.random.default_rng(seed), cfg)
    assert 4 <= net.n <= 10
    kind = classify(net).kind
    if stochastic:
        assert kind is StochasticityKind.STOCHASTIC and is_ergodic(net)
    else:
        assert kind is StochasticityKind.SUBSTOCHASTIC and net.rho < 1


def test_random_suite_deterministic():
    a = random_suite(RandomNetConfig(seed=5), {Theorem.T5_MARKOV}, budget=3)
    b = random_suite(RandomNetConfig(seed=5), {Theorem.T5_MARKOV}, budget=3)
    assert a.to_json() == b.to_json()


def test_check_network_example_all(example):
    suite = check_network(example, 0, ALL_THEOREMS - {Theorem.PROPAGATION},
                          SuiteParams(k_f=20, markov_K=40, omega_points=64), second_input=1)
    assert suite.passed, suite.to_json()
    assert suite.reports[Theorem.T1_GAIN].cases_run > 0


def test_small_random_suite_clean():
    params = SuiteParams(k_f=15, markov_K=40, omega_points=32, lemma_k_f=20)
    suite = random_suite(RandomNetConfig(seed=7), budget=5, params=params)
    random_suite(RandomNetConfig(seed=8, stochastic_mode=True), budget=5, params=params,
                 suite=suite)
    assert suite.passed and suite.violations == 0


def test_junit_xml(example):
    suite = check_network(example, 0, {Theorem.T5_MARKOV}, SuiteParams(markov_K=20),
                          negate=True, suite=SuiteReport({}, negated=True))
    root = ET.fromstring(junit_xml(suite))
    assert root.tag == "testsuite" and root.get("failures") == "1"
