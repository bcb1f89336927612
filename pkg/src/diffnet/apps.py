"""Signal-to-noise ratios at remote sensors and strict propagation stability."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Optional, Sequence, Union

import numpy as np

from .cutsets import enumerate_minimal_cutsets, min_vertex_cut
from .errors import NoCutExists, TooLarge
from .metrics import INF, PiecewiseSpectrum, weighted_band_energies, weighted_band_energy
from .model import Network
from .simulate import InputSignal, simulate
from .verify import DEFAULT_TOL, Theorem, VerificationReport

ALL_MINIMAL = "all_minimal"
MIN_CUT_ONLY = "min_cut_only"


@dataclass(frozen=True)
class TransientSNR:
    """SNR of a finite-energy response: ``||x_i||_p / sigma`` over ``horizon``."""

    p: float
    input: InputSignal
    horizon: int
    sigma: float = 1.0

    def __post_init__(self):
        if not self.sigma > 0:
            raise ValueError("sigma must be positive")
        if self.p < 1:
            raise ValueError("p must be >= 1")


@dataclass(frozen=True)
class PersistentSNR:
    """SNR of a persistent response: ``int |H_i|^2 S_UU / sigma^2``."""

    spectrum: PiecewiseSpectrum
    sigma: float = 1.0

    def __post_init__(self):
        if not self.sigma > 0:
            raise ValueError("sigma must be positive")


SNRQuery = Union[TransientSNR, PersistentSNR]


def transient_snr(net: Network, s: int, i: int, query: TransientSNR) -> float:
    trace = simulate(net, {s: query.input}, query.horizon)
    return float(np.linalg.norm(trace.node(i), query.p)) / query.sigma


def persistent_snr(net: Network, s: int, i: int, query: PersistentSNR) -> float:
    return weighted_band_energy(net, s, i, query.spectrum) / query.sigma ** 2


def snr_all(net: Network, s: int, query: SNRQuery) -> np.ndarray:
    """SNR at every node for one query."""
    if isinstance(query, TransientSNR):
        trace = simulate(net, {s: query.input}, query.horizon)
        return np.array([np.linalg.norm(trace.states[:, i], query.p)
                         for i in range(net.n)]) / query.sigma
    return weighted_band_energies(net, s, query.spectrum) / query.sigma ** 2


def rank_sensors(net: Network, s: int, candidates: Iterable[int],
                 query: SNRQuery) -> list[tuple[int, float]]:
    """Candidates by descending SNR; ties go to the lower node id."""
    candidates = sorted(set(candidates))
    if not candidates:
        return []
    values = snr_all(net, s, query)
    return sorted(((i, float(values[i])) for i in candidates), key=lambda t: (-t[1], t[0]))


def noisy_measurement(trace_values: np.ndarray, sigma: float,
                      rng: np.random.Generator) -> np.ndarray:
    """``x_i(k) + v(k)`` with white Gaussian ``v``; demo output only."""
    return trace_values + rng.normal(0.0, sigma, size=np.shape(trace_values))


def snr_csv(rows: Sequence[tuple[int, str, float]]) -> str:
    return "node,mode,SNR\n" + "".join(f"{i + 1},{mode},{v!r}\n" for i, mode, v in rows)


@dataclass(frozen=True)
class PropagationStabilityQuery:
    p: float
    t: float
    input_samples: tuple
    cutset_strategy: Union[str, tuple] = ALL_MINIMAL
    horizon: int = 100
    sources: Optional[tuple] = None

    def __post_init__(self):
        if self.p < 1 or self.t < 1:
            raise ValueError("p and t must be >= 1")
        for sig in self.input_samples:
            norm = np.linalg.norm(sig.values(self.horizon), self.p)
            if not math.isfinite(norm):
                raise ValueError("every sampled input needs a finite p-norm")


def random_finite_inputs(rng: np.random.Generator, count: int, horizon: int,
                         support: Optional[int] = None) -> tuple:
    """Gaussian inputs supported on the first ``support`` steps (default half the horizon)."""
    support = support or max(1, horizon // 2)
    return tuple(InputSignal.custom(rng.standard_normal(support).tolist())
                 for _ in range(count))


def _cutsets_for(net: Network, s: int, target: int, strategy) -> list:
    if strategy == ALL_MINIMAL:
        return enumerate_minimal_cutsets(net, {s}, target)
    if strategy == MIN_CUT_ONLY:
        try:
            return [min_vertex_cut(net, {s}, target)]
        except NoCutExists:
            return []
    # user-provided: (source, target, cutset) triples, 0-based
    return [frozenset(c) for (cs, ct, c) in strategy if cs == s and ct == target]


def check_propagation_stability(net: Network, query: PropagationStabilityQuery,
                                tol: float = DEFAULT_TOL,
                                negate: bool = False) -> VerificationReport:
    """Check the t-norm decrescence for every source, target, selected
    cutset and sampled input.

    A violation disproves stability conclusively; a clean report only
    certifies it over the sampled inputs.
    """
    if query.cutset_strategy == ALL_MINIMAL and net.n > 24:
        raise TooLarge("all-minimal cutset strategy is capped at n=24")
    report = VerificationReport(Theorem.PROPAGATION, tol)
    report.notes.append(
        f"L_{_fmt(query.p)},{_fmt(query.t)} decrescence over {len(query.input_samples)} "
        f"sampled inputs, horizon {query.horizon}; clean runs certify the sample only")
    sources = query.sources if query.sources is not None else tuple(range(net.n))
    for s in sources:
        norms = []
        for sig in query.input_samples:
            trace = simulate(net, {s: sig}, query.horizon)
            norms.append(np.linalg.norm(trace.states, query.t, axis=0))
        for target in range(net.n):
            if target == s:
                continue
            for cut in _cutsets_for(net, s, target, query.cutset_strategy):
                members = sorted(cut)
                for k, nv in enumerate(norms):
                    report.check(nv[target], nv[members].max(), network=net.digest,
                                 case=f"s={s + 1},input#{k}", node=target,
                                 cutset=members, negate=negate)
    return report


def _fmt(x: float) -> str:
    return "inf" if x == INF else f"{x:g}"
