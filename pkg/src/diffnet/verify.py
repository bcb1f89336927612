"""Numerical checks of the cutset decrescence inequalities.

Each ``verify_*`` function evaluates one inequality family on a network and
returns a :class:`VerificationReport`.  Passing ``negate=True`` flips the
comparison so that a working check must report violations; the test-suite
uses this to rule out vacuous passes.
"""

from __future__ import annotations

import enum
import math
import xml.etree.ElementTree as ET
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Iterable, Optional, Sequence

import numpy as np

from .cutsets import enumerate_minimal_cutsets, validate_cutset
from .errors import (DiffnetError, NotSevered, NotStochastic, SelfLoopSaturated)
from .metrics import (INF, band_energies, frequency_magnitudes, impulse_responses,
                      lp_gain, lp_gain_multi)
from .model import (Network, StochasticityKind, classify, distance_classes,
                    is_ergodic, strongly_connected)
from .simulate import InputSignal, build_Q, simulate

DEFAULT_TOL = 1e-9


class Theorem(enum.Enum):
    LEMMA1 = "Lemma1"
    T1_GAIN = "T1_gain"
    T2_PERIODIC = "T2_periodic"
    T2_FREQ = "T2_freq"
    T3_FREQ_STOCHASTIC = "T3_freq_stochastic"
    T4_BAND = "T4_band"
    T5_MARKOV = "T5_markov"
    T6_MULTI = "T6_multi"
    NEIGHBOR_INEQ = "NeighborIneq"
    DISTANCE_CLASS = "DistanceClass"
    PROPAGATION = "PropagationStability"


@dataclass(frozen=True)
class Violation:
    network: str
    case: str
    node: int
    lhs: float
    rhs: float
    cutset: tuple = ()

    @property
    def slack(self) -> float:
        return self.rhs - self.lhs

    def to_json(self) -> dict:
        return {
            "network": self.network,
            "case": self.case,
            "node": self.node + 1,
            "cutset": [v + 1 for v in self.cutset],
            "lhs": self.lhs,
            "rhs": self.rhs,
            "slack": self.slack,
        }


@dataclass
class VerificationReport:
    theorem: Theorem
    tolerance_used: float
    cases_run: int = 0
    violations: list = field(default_factory=list)
    errors: list = field(default_factory=list)
    min_slack: float = INF
    notes: list = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return not self.violations and not self.errors

    def check(self, lhs, rhs, *, network: str, case: str, node: int,
              cutset: Iterable[int] = (), negate: bool = False) -> bool:
        """Record ``lhs <= rhs + tol``; returns True when no violation was logged."""
        lhs, rhs = float(lhs), float(rhs)
        self.cases_run += 1
        slack = rhs - lhs
        self.min_slack = min(self.min_slack, slack)
        failed = slack < -self.tolerance_used
        if negate:
            failed = not (lhs > rhs + self.tolerance_used)
        if failed:
            self.violations.append(Violation(network, case, node, lhs, rhs,
                                             tuple(sorted(cutset))))
        return not failed

    def merge(self, other: "VerificationReport") -> None:
        self.cases_run += other.cases_run
        self.violations.extend(other.violations)
        self.errors.extend(other.errors)
        self.min_slack = min(self.min_slack, other.min_slack)
        self.notes.extend(n for n in other.notes if n not in self.notes)
        self.tolerance_used = max(self.tolerance_used, other.tolerance_used)

    def to_json(self) -> dict:
        return {
            "theorem": self.theorem.value,
            "passed": self.passed,
            "cases_run": self.cases_run,
            "violations": [v.to_json() for v in self.violations],
            "errors": list(self.errors),
            "tolerance_used": self.tolerance_used,
            "min_slack": None if self.min_slack == INF else self.min_slack,
            "notes": list(self.notes),
        }


# --------------------------------------------------------------- helpers

@lru_cache(maxsize=8192)
def _gain(net: Network, s: int, i: int, p: float, k_f: int) -> float:
    return lp_gain(net, s, i, p, k_f).value


@lru_cache(maxsize=4096)
def _multi_gain(net: Network, inputs: tuple, i: int, p: float, k_f: int) -> float:
    return lp_gain_multi(net, inputs, i, p, k_f).value


def _severed(net: Network, sources, target: int, cutset) -> frozenset:
    cert = validate_cutset(net, sources, target, cutset)
    if not cert.severed:
        raise NotSevered(
            f"cutset {sorted(v + 1 for v in cutset)} does not separate target {target + 1}")
    return cert.cutset


def _pstr(p: float) -> str:
    return "inf" if p == INF else f"{p:g}"


# ------------------------------------------------------------- verifiers

def verify_gain_decrescence(net: Network, s: int, target: int, cutsets: Sequence, p: float,
                            k_f: int, tol: float = DEFAULT_TOL,
                            negate: bool = False) -> VerificationReport:
    """``G_p(target) <= max over the cutset of G_p(member)`` for each cutset."""
    report = VerificationReport(Theorem.T1_GAIN, tol)
    lhs = _gain(net, s, target, p, k_f)
    for cut in cutsets:
        cut = _severed(net, {s}, target, cut)
        rhs = max(_gain(net, s, c, p, k_f) for c in cut)
        report.check(lhs, rhs, network=net.digest, case=f"p={_pstr(p)},k_f={k_f}",
                     node=target, cutset=cut, negate=negate)
    return report


def verify_neighbor_inequality(net: Network, s: int, k_f: int, input: InputSignal,
                               tol: float = DEFAULT_TOL, ps: Sequence[float] = (1, 1.5, 2, 3),
                               negate: bool = False) -> VerificationReport:
    """Per-node weighted averaging bound on accumulated ``|x|^p`` along a trace.

    For every non-source node ``q`` the sum of ``|x_q(k)|^p`` over the
    horizon is at most the sum over in-neighbours ``j`` of
    ``a_qj / (1 - a_qq)`` times the same sum for ``x_j``.
    """
    report = VerificationReport(Theorem.NEIGHBOR_INEQ, tol)
    diag = np.diag(net.a)
    for q in range(net.n):
        if q != s and diag[q] >= 1.0:
            raise SelfLoopSaturated(f"node {q + 1} has a_qq = 1")
    trace = simulate(net, {s: input}, k_f)
    mags = np.abs(trace.states)
    for p in ps:
        sums = (mags ** p).sum(axis=0)
        for q in range(net.n):
            if q == s:
                continue
            nbrs = [j for j in net.predecessors[q] if j != q]
            weights = net.a[q, nbrs] / (1 - diag[q])
            rhs = float(weights @ sums[nbrs]) if nbrs else 0.0
            report.check(sums[q], rhs, network=net.digest, case=f"p={_pstr(p)}",
                         node=q, negate=negate)
    return report


def verify_periodic_bounds(net: Network, s: int, target: int, cutset, signal: InputSignal,
                           k_f: int, tol: float = DEFAULT_TOL,
                           negate: bool = False) -> VerificationReport:
    """Target state stays within the running extremes of the cutset states (and 0)."""
    if not signal.is_periodic:
        raise ValueError(f"signal kind {signal.kind!r} is not periodic")
    cut = sorted(_severed(net, {s}, target, cutset))
    report = VerificationReport(Theorem.T2_PERIODIC, tol)
    trace = simulate(net, {s: signal}, k_f)
    xc = trace.states[:, cut]
    upper = np.maximum(0.0, np.maximum.accumulate(xc, axis=0).max(axis=1))
    lower = np.minimum(0.0, np.minimum.accumulate(xc, axis=0).min(axis=1))
    xt = trace.node(target)
    for k in range(k_f + 1):
        report.check(xt[k], upper[k], network=net.digest, case=f"upper,k={k}",
                     node=target, cutset=cut, negate=negate)
        report.check(-xt[k], -lower[k], network=net.digest, case=f"lower,k={k}",
                     node=target, cutset=cut, negate=negate)
    return report


def verify_freq_decrescence(net: Network, s: int, target: int, cutset, omegas,
                            tol: float = DEFAULT_TOL,
                            negate: bool = False) -> VerificationReport:
    """``|H_target| <= max over cutset |H_c|`` at every grid frequency."""
    cut = sorted(_severed(net, {s}, target, cutset))
    stochastic = classify(net).kind is StochasticityKind.STOCHASTIC
    report = VerificationReport(
        Theorem.T3_FREQ_STOCHASTIC if stochastic else Theorem.T2_FREQ, tol)
    omegas = tuple(float(w) for w in omegas)
    mags = _magnitudes(net, s, omegas)
    for w, row in zip(omegas, mags):
        report.check(row[target], row[cut].max(), network=net.digest,
                     case=f"omega={w:.6g}", node=target, cutset=cut, negate=negate)
    return report


@lru_cache(maxsize=512)
def _magnitudes(net: Network, s: int, omegas: tuple) -> np.ndarray:
    return frequency_magnitudes(net, s, omegas)


@lru_cache(maxsize=512)
def _band(net: Network, s: int, omega1: float, omega2: float) -> np.ndarray:
    return band_energies(net, s, omega1, omega2, tol=1e-10)[0]


def verify_band_decrescence(net: Network, s: int, target: int, cutset, bands,
                            tol: float = DEFAULT_TOL, spectra=(),
                            negate: bool = False) -> VerificationReport:
    """Band energy of ``|H|^2`` at the target never exceeds the cutset maximum.

    ``spectra`` optionally adds weighted checks, one per piecewise-constant
    spectrum.
    """
    if classify(net).kind is StochasticityKind.STOCHASTIC:
        raise NotStochastic("band-energy decrescence is checked for substochastic networks only")
    cut = sorted(_severed(net, {s}, target, cutset))
    report = VerificationReport(Theorem.T4_BAND, tol)
    for o1, o2 in bands:
        if not 0 <= o1 < o2 <= math.pi:
            raise ValueError(f"invalid band [{o1}, {o2}]")
        e = _band(net, s, float(o1), float(o2))
        report.check(e[target], e[cut].max(), network=net.digest,
                     case=f"band=[{o1:g},{o2:g}]", node=target, cutset=cut, negate=negate)
    for k, spec in enumerate(spectra):
        e = sum(level * _band(net, s, float(lo), float(hi))
                for lo, hi, level in spec.pieces() if level > 0)
        report.check(e[target], e[cut].max(), network=net.digest,
                     case=f"spectrum#{k}", node=target, cutset=cut, negate=negate)
    return report


def verify_markov_decrescence(net: Network, s: int, target: int, cutset, K: int,
                              tol: float = DEFAULT_TOL,
                              negate: bool = False) -> VerificationReport:
    """``M_target(k) <= max over cutset of max_{j<=k} M_c(j)`` for ``k <= K``."""
    cut = sorted(_severed(net, {s}, target, cutset))
    report = VerificationReport(Theorem.T5_MARKOV, tol)
    m = impulse_responses(net, s, K)
    bound = np.maximum.accumulate(m[:, cut], axis=0).max(axis=1)
    for k in range(K + 1):
        report.check(m[k, target], bound[k], network=net.digest, case=f"k={k}",
                     node=target, cutset=cut, negate=negate)
    return report


def verify_multi_input(net: Network, inputs, target: int, cutset, p: float, k_f: int,
                       tol: float = DEFAULT_TOL, negate: bool = False) -> VerificationReport:
    """Joint-input gain decrescence; the cutset must separate every input."""
    inputs = tuple(sorted(inputs))
    cut = _severed(net, inputs, target, cutset)
    report = VerificationReport(Theorem.T6_MULTI, tol)
    lhs = _multi_gain(net, inputs, target, p, k_f)
    rhs = max(_multi_gain(net, inputs, c, p, k_f) for c in cut)
    report.check(lhs, rhs, network=net.digest, case=f"p={_pstr(p)},k_f={k_f}",
                 node=target, cutset=cut, negate=negate)
    return report


def verify_lemma1(net: Network, certificate, k_f: int, input: InputSignal,
                  tol: float = 1e-10, rowsum_tol: float = 1e-12,
                  negate: bool = False) -> VerificationReport:
    """Q is nonnegative, has row sums at most 1, and maps the cutset trace
    onto the target-partition trace of a simulation driven at every source."""
    if not certificate.severed:
        raise NotSevered("certificate is not severed")
    report = VerificationReport(Theorem.LEMMA1, tol)
    q = build_Q(net, certificate, k_f)
    case = f"C={sorted(v + 1 for v in certificate.cutset)},k_f={k_f}"
    node = certificate.target
    report.check(-q.matrix.min(), 0.0, network=net.digest, case=case + ",nonneg",
                 node=node, cutset=certificate.cutset, negate=negate)
    excess = VerificationReport(Theorem.LEMMA1, rowsum_tol)
    excess.check(q.row_sums.max(), 1.0, network=net.digest, case=case + ",rowsum",
                 node=node, cutset=certificate.cutset, negate=negate)
    report.merge(excess)
    report.tolerance_used = tol
    trace = simulate(net, {s: input for s in certificate.sources}, k_f)
    err = np.max(np.abs(q.matrix @ q.stack_cutset(trace) - q.stack_partition(trace)))
    report.check(err, 0.0, network=net.digest, case=case + ",stacking", node=node,
                 cutset=certificate.cutset, negate=negate)
    return report


def verify_distance_classes(net: Network, s: int, p: float, k_f: int,
                            tol: float = DEFAULT_TOL,
                            negate: bool = False) -> VerificationReport:
    """Maximum gain per hop-distance class is nonincreasing in distance."""
    report = VerificationReport(Theorem.DISTANCE_CLASS, tol)
    classes = distance_classes(net, s)
    best = [max(_gain(net, s, i, p, k_f) for i in classes[d]) for d in sorted(classes)]
    for d in range(1, len(best)):
        report.check(best[d], best[d - 1], network=net.digest,
                     case=f"p={_pstr(p)},d={d}", node=s, negate=negate)
    return report


# ------------------------------------------------------------ random suite

@dataclass(frozen=True)
class RandomNetConfig:
    n_range: tuple = (4, 10)
    density: float = 0.3
    row_sum_range: tuple = (0.6, 0.95)
    seed: int = 0
    require_strong_connectivity: bool = True
    stochastic_mode: bool = False


def random_network(rng: np.random.Generator, config: RandomNetConfig) -> Network:
    """One random network honouring ``config``.

    A random Hamiltonian cycle guarantees strong connectivity; extra edges
    appear independently with probability ``density``.  Weights are uniform
    and each row is scaled to a random sum from ``row_sum_range`` (or to 1 in
    stochastic mode, where one self-loop also guarantees aperiodicity).
    """
    lo, hi = config.n_range
    n = int(rng.integers(lo, hi + 1))
    mask = rng.random((n, n)) < config.density
    np.fill_diagonal(mask, False)
    if config.require_strong_connectivity and n > 1:
        order = rng.permutation(n)
        for k in range(n):
            j, l = order[k], order[(k + 1) % n]
            mask[l, j] = True
    if config.stochastic_mode:
        v = int(rng.integers(n))
        mask[v, v] = True
    weights = np.where(mask, rng.uniform(0.1, 1.0, (n, n)), 0.0)
    sums = weights.sum(axis=1)
    empty = sums == 0
    if np.any(empty):
        # rows without in-edges get a self-loop so every row can be scaled
        idx = np.nonzero(empty)[0]
        weights[idx, idx] = 1.0
        sums = weights.sum(axis=1)
    if config.stochastic_mode:
        targets = np.ones(n)
    else:
        targets = rng.uniform(*config.row_sum_range, n)
        if np.all(targets >= 1 - 1e-12):
            targets[int(rng.integers(n))] = 0.5 * (config.row_sum_range[0] + 1)
    a = weights * (targets / sums)[:, None]
    if config.stochastic_mode:
        a = a / a.sum(axis=1, keepdims=True)
    return Network.from_matrix(a)


@dataclass(frozen=True)
class SuiteParams:
    ps: tuple = (1.0, 1.5, 2.0, INF)
    k_f: int = 30
    lemma_k_f: int = 50
    omega_points: int = 256
    bands: tuple = ((0.0, math.pi), (0.1, 0.5), (2.0, 3.0))
    markov_K: int = 100
    periodic_signals: tuple = (
        InputSignal.periodic([1, 1, 1, -1, -1, -1]),
        InputSignal.step(),
        InputSignal.periodic([0.0, 1.0, 0.5, -0.25, 2.0]),
    )
    tol: float = DEFAULT_TOL


@dataclass
class SuiteReport:
    reports: dict
    networks: int = 0
    negated: bool = False

    @property
    def violations(self) -> int:
        return sum(len(r.violations) for r in self.reports.values())

    @property
    def passed(self) -> bool:
        return all(r.passed for r in self.reports.values())

    def to_json(self) -> dict:
        return {
            "networks": self.networks,
            "negated": self.negated,
            "passed": self.passed,
            "violations": self.violations,
            "reports": {t.value: r.to_json() for t, r in self.reports.items()},
        }


ALL_THEOREMS = frozenset(Theorem)


def _run_case(suite: SuiteReport, theorem: Theorem, tol: float, fn, *args, **kwargs) -> None:
    rep = suite.reports.setdefault(theorem, VerificationReport(theorem, tol))
    try:
        rep.merge(fn(*args, **kwargs))
    except DiffnetError as exc:
        rep.errors.append(f"{type(exc).__name__}: {exc}")


def check_network(net: Network, s: int, theorems=ALL_THEOREMS,
                  params: SuiteParams = SuiteParams(), suite: Optional[SuiteReport] = None,
                  second_input: Optional[int] = None, negate: bool = False,
                  max_cutsets: Optional[int] = None) -> SuiteReport:
    """Run the selected checks for source ``s`` against every target and
    every minimal separating cutset."""
    suite = suite if suite is not None else SuiteReport({})
    suite.networks += 1
    tol = params.tol
    theorems = frozenset(theorems)
    stochastic = classify(net).kind is StochasticityKind.STOCHASTIC
    ergodic = stochastic and is_ergodic(net)
    if stochastic:
        omegas = tuple(np.linspace(math.pi / params.omega_points, math.pi, params.omega_points))
    else:
        omegas = tuple(np.linspace(0.0, math.pi, params.omega_points))

    if Theorem.NEIGHBOR_INEQ in theorems:
        for sig in (InputSignal.impulse(), params.periodic_signals[0]):
            _run_case(suite, Theorem.NEIGHBOR_INEQ, tol, verify_neighbor_inequality,
                      net, s, params.k_f, sig, tol, negate=negate)
    if Theorem.DISTANCE_CLASS in theorems and strongly_connected(net):
        for p in params.ps:
            _run_case(suite, Theorem.DISTANCE_CLASS, tol, verify_distance_classes,
                      net, s, p, params.k_f, tol, negate=negate)

    for target in range(net.n):
        if target == s:
            continue
        cutsets = enumerate_minimal_cutsets(net, {s}, target, limit=max_cutsets)
        if not cutsets:
            continue
        if Theorem.T1_GAIN in theorems:
            for p in params.ps:
                _run_case(suite, Theorem.T1_GAIN, tol, verify_gain_decrescence,
                          net, s, target, cutsets, p, params.k_f, tol, negate=negate)
        for cut in cutsets:
            if Theorem.T2_PERIODIC in theorems and not stochastic:
                for sig in params.periodic_signals:
                    _run_case(suite, Theorem.T2_PERIODIC, tol, verify_periodic_bounds,
                              net, s, target, cut, sig, params.k_f, tol, negate=negate)
            freq_thm = Theorem.T3_FREQ_STOCHASTIC if stochastic else Theorem.T2_FREQ
            if freq_thm in theorems and (ergodic or not stochastic):
                _run_case(suite, freq_thm, tol, verify_freq_decrescence,
                          net, s, target, cut, omegas, tol, negate=negate)
            if Theorem.T4_BAND in theorems and not stochastic:
                _run_case(suite, Theorem.T4_BAND, tol, verify_band_decrescence,
                          net, s, target, cut, params.bands, tol, negate=negate)
            if Theorem.T5_MARKOV in theorems:
                _run_case(suite, Theorem.T5_MARKOV, tol, verify_markov_decrescence,
                          net, s, target, cut, params.markov_K, tol, negate=negate)
            if Theorem.LEMMA1 in theorems:
                cert = validate_cutset(net, {s}, target, cut)
                _run_case(suite, Theorem.LEMMA1, tol, verify_lemma1, net, cert,
                          params.lemma_k_f, InputSignal.impulse(), negate=negate)

    if Theorem.T6_MULTI in theorems and second_input is not None and net.n > 2:
        inputs = (s, second_input)
        for target in range(net.n):
            if target in inputs:
                continue
            for cut in enumerate_minimal_cutsets(net, set(inputs), target, limit=max_cutsets):
                for p in params.ps:
                    _run_case(suite, Theorem.T6_MULTI, tol, verify_multi_input,
                              net, inputs, target, cut, p, params.k_f, tol, negate=negate)
    for theorem in theorems:
        suite.reports.setdefault(theorem, VerificationReport(theorem, tol))
    return suite


def random_suite(config: RandomNetConfig, theorems=ALL_THEOREMS, budget: int = 50,
                 params: SuiteParams = SuiteParams(), negate: bool = False,
                 suite: Optional[SuiteReport] = None) -> SuiteReport:
    """Generate ``budget`` random networks and check each one.

    Deterministic for a given ``config.seed``.  Case errors are recorded in
    the per-theorem reports instead of being raised.
    """
    rng = np.random.default_rng(config.seed)
    suite = suite if suite is not None else SuiteReport({}, negated=negate)
    for _ in range(budget):
        net = random_network(rng, config)
        s = int(rng.integers(net.n))
        others = [v for v in range(net.n) if v != s]
        second = int(rng.choice(others)) if others else None
        check_network(net, s, theorems, params, suite, second_input=second, negate=negate)
    return suite


def junit_xml(suite: SuiteReport, name: str = "diffnet.verify") -> str:
    """JUnit-style XML with one test case per theorem."""
    root = ET.Element("testsuite", name=name, tests=str(len(suite.reports)),
                      failures=str(sum(1 for r in suite.reports.values() if r.violations)),
                      errors=str(sum(1 for r in suite.reports.values() if r.errors)))
    for theorem, rep in sorted(suite.reports.items(), key=lambda kv: kv[0].value):
        case = ET.SubElement(root, "testcase", classname=name, name=theorem.value)
        ET.SubElement(case, "system-out").text = (
            f"cases_run={rep.cases_run} min_slack={rep.min_slack!r}")
        if rep.violations:
            first = rep.violations[0]
            ET.SubElement(case, "failure", message=f"{len(rep.violations)} violations").text = (
                f"first: {first.to_json()}")
        if rep.errors:
            ET.SubElement(case, "error", message=f"{len(rep.errors)} errors").text = (
                "\n".join(rep.errors[:20]))
    return ET.tostring(root, encoding="unicode")
