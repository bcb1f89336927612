"""Transfer metrics between a source node and a target node.

Covers Markov parameters, finite- and infinite-horizon l_p gains (single
and multiple inputs), frequency responses and frequency-band energy.

Horizon convention: inputs ``u(0..k_f-1)``, outputs ``y(0..k_f)`` of the
zero-state response, so ``y(0) = 0`` and ``y(k) = sum_{j<k} M(k-1-j) u(j)``.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .errors import DuplicateInput, NoConvergence, SingularAtOmega, UnstableSystem
from .model import Network

INF = math.inf
UNSTABLE_MARGIN = 1e-12
GOLDEN = (math.sqrt(5) - 1) / 2


class GainMethod(enum.Enum):
    CLOSED_FORM = "ClosedForm"
    SINGULAR_VALUE = "SingularValue"
    NONNEG_POWER_ITERATION = "NonnegPowerIteration"
    RESOLVENT_LIMIT = "ResolventLimit"


@dataclass(frozen=True)
class MarkovSequence:
    source: int
    target: int
    values: np.ndarray


@dataclass(frozen=True)
class GainResult:
    value: float
    p: float
    horizon: float
    method: GainMethod
    iterations: int = 0
    residual: float = 0.0

    def to_json(self) -> dict:
        return {
            "value": self.value,
            "p": _num_json(self.p),
            "horizon": _num_json(self.horizon),
            "method": self.method.value,
            "iterations": self.iterations,
            "residual": self.residual,
        }


@dataclass(frozen=True)
class FrequencyPoint:
    omega: float
    value: complex
    residual: float = 0.0

    def to_json(self) -> dict:
        return {
            "omega": self.omega,
            "re": self.value.real,
            "im": self.value.imag,
            "abs": abs(self.value),
            "residual": self.residual,
        }


@dataclass(frozen=True)
class BandEnergy:
    omega1: float
    omega2: float
    value: float
    quad_error_estimate: float


@dataclass(frozen=True)
class PiecewiseSpectrum:
    """Nonnegative piecewise-constant function on ``[0, pi]``.

    ``breaks`` has one more entry than ``levels``; the function equals
    ``levels[k]`` on ``[breaks[k], breaks[k+1])`` and 0 outside.
    """

    breaks: tuple
    levels: tuple

    def __post_init__(self):
        if len(self.breaks) != len(self.levels) + 1:
            raise ValueError("need len(breaks) == len(levels) + 1")
        if any(b1 >= b2 for b1, b2 in zip(self.breaks, self.breaks[1:])):
            raise ValueError("breaks must be strictly increasing")
        if self.breaks[0] < 0 or self.breaks[-1] > math.pi + 1e-15:
            raise ValueError("spectrum must live on [0, pi]")
        if any(v < 0 for v in self.levels):
            raise ValueError("spectrum must be nonnegative")

    @classmethod
    def flat(cls, omega1: float, omega2: float, level: float = 1.0) -> "PiecewiseSpectrum":
        return cls((omega1, omega2), (level,))

    def pieces(self):
        return zip(self.breaks, self.breaks[1:], self.levels)

    def scaled(self, factor: float) -> "PiecewiseSpectrum":
        return PiecewiseSpectrum(self.breaks, tuple(factor * v for v in self.levels))


def _num_json(x):
    return "inf" if x == INF else x


# ---------------------------------------------------------------- Markov data

def impulse_responses(net: Network, s: int, K: int) -> np.ndarray:
    """Rows ``k = 0..K`` of ``A^k e_s`` for every node (shape ``(K+1, n)``)."""
    out = np.empty((K + 1, net.n))
    v = np.zeros(net.n)
    v[s] = 1.0
    for k in range(K + 1):
        out[k] = v
        v = net.a @ v
    return out


def markov_parameters(net: Network, s: int, i: int, K: int) -> MarkovSequence:
    if K < 0:
        raise ValueError("K must be nonnegative")
    return MarkovSequence(s, i, impulse_responses(net, s, K)[:, i].copy())


# ------------------------------------------------------- convolution operator

@dataclass(frozen=True)
class ConvolutionOperator:
    """Finite-horizon input->output map of one or more input channels.

    ``kernels[r]`` holds the Markov parameters ``M_r(0..k_f-1)`` of channel
    ``r``.  The map takes the stacked input ``[u_1(0..k_f-1), u_2(...), ...]``
    to ``y(0..k_f)``.  Single-channel operators are the lower-shifted
    Toeplitz matrix ``T[k, j] = M(k-1-j)`` for ``j < k``.
    """

    kernels: np.ndarray
    horizon: int

    @classmethod
    def from_markov(cls, markov, horizon: int) -> "ConvolutionOperator":
        seqs = [markov] if isinstance(markov, MarkovSequence) else list(markov)
        kernels = np.array([np.asarray(m.values if isinstance(m, MarkovSequence) else m,
                                       dtype=float)[:horizon] for m in seqs])
        if kernels.shape[1] < horizon:
            raise ValueError("Markov sequence shorter than horizon")
        return cls(kernels, horizon)

    @property
    def channels(self) -> int:
        return self.kernels.shape[0]

    @property
    def shape(self) -> tuple[int, int]:
        return (self.horizon + 1, self.channels * self.horizon)

    def matvec(self, u: np.ndarray) -> np.ndarray:
        kf = self.horizon
        y = np.zeros(kf + 1, dtype=np.result_type(u, float))
        for r in range(self.channels):
            y[1:] += np.convolve(self.kernels[r], u[r * kf:(r + 1) * kf])[:kf]
        return y

    def rmatvec(self, y: np.ndarray) -> np.ndarray:
        kf = self.horizon
        w = y[1:][::-1]
        return np.concatenate([np.convolve(self.kernels[r], w)[:kf][::-1]
                               for r in range(self.channels)])

    def matrix(self) -> np.ndarray:
        kf = self.horizon
        k = np.arange(kf + 1)[:, None]
        j = np.arange(kf)[None, :]
        lag = k - 1 - j
        blocks = []
        for r in range(self.channels):
            kern = self.kernels[r]
            blocks.append(np.where(lag >= 0, kern[np.clip(lag, 0, kf - 1)], 0.0))
        return np.hstack(blocks)


# ---------------------------------------------------------- operator p-norms

def _ball_argmax(z: np.ndarray, r: float) -> np.ndarray:
    """A maximiser of ``<z, x>`` over the unit l_r ball."""
    a = np.abs(z)
    if r == 1:
        x = np.zeros_like(z)
        k = int(np.argmax(a))
        x[k] = np.sign(z[k]) if z[k] != 0 else 1.0
        return x
    if r == INF:
        return np.where(z >= 0, 1.0, -1.0)
    q = r / (r - 1)
    nz = np.linalg.norm(z, q)
    if nz == 0:
        return np.full_like(z, len(z) ** (-1 / r))
    return np.sign(z) * (a / nz) ** (q - 1)


def _conjugate(p: float) -> float:
    if p == 1:
        return INF
    if p == INF:
        return 1.0
    return p / (p - 1)


def pnorm_power_iteration(op: ConvolutionOperator, p: float, tol: float = 1e-10,
                          window: int = 5, max_iter: int = 100_000) -> GainResult:
    """Operator p-norm by the classical nonlinear power method.

    Alternates ``y = T x``, ``z = T^T dual(y)``, ``x = dual(z)`` where the
    dual maps pick the norming functional of the output and input norms.
    Started from the uniform positive vector, every iterate stays
    nonnegative for an entrywise nonnegative operator, which makes the
    limit the global maximiser.  Stops once the value moved by less than
    ``tol`` (relative) over ``window`` iterations.
    """
    if p < 1:
        raise ValueError("p must be >= 1")
    m = op.shape[1]
    x = np.full(m, m ** (-1 / p) if p != INF else 1.0)
    history = []
    pstar = _conjugate(p)
    for it in range(1, max_iter + 1):
        y = op.matvec(x)
        value = float(np.linalg.norm(y, p))
        history.append(value)
        if len(history) > window:
            old = history[-1 - window]
            change = abs(value - old)
            if change <= tol * max(value, 1e-300):
                return GainResult(value, p, op.horizon, GainMethod.NONNEG_POWER_ITERATION,
                                  it, change / max(value, 1e-300))
        if value == 0.0:
            return GainResult(0.0, p, op.horizon, GainMethod.NONNEG_POWER_ITERATION, it, 0.0)
        z = op.rmatvec(_ball_argmax(y, pstar))
        x = _ball_argmax(z, p)
    change = abs(history[-1] - history[-1 - window]) / max(history[-1], 1e-300)
    raise NoConvergence(f"p-norm power iteration stalled (p={p})", change, max_iter)


def spectral_norm(op: ConvolutionOperator, tol: float = 1e-12, block: int = 8,
                  max_iter: int = 100_000) -> GainResult:
    """Largest singular value by power iteration on ``T^T T``.

    Every ``block`` power steps the iterates are orthonormalised and the
    best Ritz vector of that Krylov block restarts the iteration, which
    keeps near-degenerate leading singular values from stalling it.
    """
    m = op.shape[1]

    def gram(x):
        return op.rmatvec(op.matvec(x))

    v = np.full(m, 1 / math.sqrt(m))
    lam_old = 0.0
    it = 0
    k = min(block, m)
    while it < max_iter:
        vecs = [v]
        for _ in range(k - 1):
            w = gram(vecs[-1])
            nw = np.linalg.norm(w)
            if nw == 0.0:
                break
            vecs.append(w / nw)
        q, _ = np.linalg.qr(np.column_stack(vecs))
        gq = np.column_stack([gram(q[:, c]) for c in range(q.shape[1])])
        it += len(vecs) - 1 + q.shape[1]
        evals, evecs = np.linalg.eigh(q.T @ gq)
        lam = float(evals[-1])
        if lam <= 0.0:
            return GainResult(0.0, 2.0, op.horizon, GainMethod.SINGULAR_VALUE, it, 0.0)
        v = q @ evecs[:, -1]
        v *= np.sign(v.sum()) or 1.0
        if abs(lam - lam_old) <= tol * lam:
            resid = float(np.linalg.norm(gram(v) - lam * v)) / lam
            return GainResult(math.sqrt(lam), 2.0, op.horizon, GainMethod.SINGULAR_VALUE, it, resid)
        lam_old = lam
    raise NoConvergence("singular-value power iteration did not converge",
                        abs(lam - lam_old) / lam, it)


def operator_gain(op: ConvolutionOperator, p: float) -> GainResult:
    """Operator p-norm of a nonnegative convolution operator."""
    if p < 1:
        raise ValueError("p must be >= 1")
    if p == 1:
        # max column sum; the first column holds the whole kernel
        value = float(op.kernels.sum(axis=1).max())
        return GainResult(value, 1.0, op.horizon, GainMethod.CLOSED_FORM)
    if p == INF:
        # max row sum; the last output row sees every kernel entry
        value = float(op.kernels.sum())
        return GainResult(value, INF, op.horizon, GainMethod.CLOSED_FORM)
    if p == 2:
        return spectral_norm(op)
    return pnorm_power_iteration(op, p)


def lp_gain(net: Network, s: int, i: int, p: float, k_f: int) -> GainResult:
    """Worst-case output l_p norm at ``i`` per unit input l_p norm at ``s``."""
    if k_f < 1:
        raise ValueError("k_f must be >= 1")
    op = ConvolutionOperator.from_markov(markov_parameters(net, s, i, k_f - 1), k_f)
    return operator_gain(op, p)


def lp_gain_multi(net: Network, inputs: Sequence[int], i: int, p: float, k_f: int) -> GainResult:
    """Gain from all input channels jointly; the input norm spans every channel and time."""
    inputs = list(inputs)
    if not inputs:
        raise ValueError("inputs must be nonempty")
    if len(set(inputs)) != len(inputs):
        raise DuplicateInput(f"input nodes listed more than once: {inputs}")
    if k_f < 1:
        raise ValueError("k_f must be >= 1")
    seqs = [markov_parameters(net, s, i, k_f - 1) for s in inputs]
    return operator_gain(ConvolutionOperator.from_markov(seqs, k_f), p)


# ------------------------------------------------------- frequency domain

def _require_stable(net: Network) -> None:
    if net.rho >= 1 - UNSTABLE_MARGIN:
        raise UnstableSystem(f"spectral radius {net.rho:.15g} is not below 1")


def resolvent_column(net: Network, s: int, omega: float) -> tuple[np.ndarray, float]:
    """``(e^{j omega} I - A)^{-1} e_s`` and its max-abs residual."""
    if net.rho >= 1 - UNSTABLE_MARGIN and math.cos(omega) == 1.0:
        raise SingularAtOmega("unit eigenvalue makes the response singular at omega = 0")
    z = complex(math.cos(omega), math.sin(omega))
    m = z * np.eye(net.n) - net.a
    rhs = np.zeros(net.n, dtype=complex)
    rhs[s] = 1.0
    try:
        v = np.linalg.solve(m, rhs)
    except np.linalg.LinAlgError:
        raise SingularAtOmega(f"resolvent is singular at omega = {omega}") from None
    resid = float(np.max(np.abs(m @ v - rhs)))
    if not np.all(np.isfinite(v)) or resid > 1e-10:
        raise SingularAtOmega(f"resolvent solve inaccurate at omega = {omega} (residual {resid:.2e})")
    return v, resid


def frequency_response(net: Network, s: int, i: int, omega: float) -> FrequencyPoint:
    v, resid = resolvent_column(net, s, omega)
    return FrequencyPoint(omega, complex(v[i]), resid)


def frequency_magnitudes(net: Network, s: int, omegas) -> np.ndarray:
    """``|H_i(e^{j omega})|`` for every node ``i`` (shape ``(len(omegas), n)``)."""
    return np.array([np.abs(resolvent_column(net, s, w)[0]) for w in omegas])


def dtft(values: np.ndarray, omega: float, delay: int = 1) -> complex:
    """``sum_k values[k] e^{-j omega (k + delay)}``."""
    k = np.arange(len(values)) + delay
    return complex(np.sum(values * np.exp(-1j * omega * k)))


# ------------------------------------------------------------- quadrature

def adaptive_simpson(f: Callable, a: float, b: float, tol: float = 1e-8,
                     max_depth: int = 40, initial_panels: int = 16):
    """Adaptive composite Simpson rule for scalar or vector-valued ``f``.

    Returns ``(integral, error_estimate)``.  Panels are bisected until the
    Richardson difference of a panel is within its share of ``tol``; the
    estimate is the sum of accepted panel differences divided by 15.
    """
    if not b > a:
        raise ValueError("need a < b")
    edges = np.linspace(a, b, initial_panels + 1)
    total = 0.0
    err = 0.0
    # stack entries: (lo, hi, f_lo, f_mid, f_hi, whole, tol, depth)
    stack = []
    for lo, hi in zip(edges[:-1], edges[1:]):
        flo, fmid, fhi = f(lo), f(0.5 * (lo + hi)), f(hi)
        whole = (hi - lo) / 6 * (flo + 4 * fmid + fhi)
        stack.append((lo, hi, flo, fmid, fhi, whole, tol / initial_panels, 0))
    while stack:
        lo, hi, flo, fmid, fhi, whole, ptol, depth = stack.pop()
        mid = 0.5 * (lo + hi)
        fl, fr = f(0.5 * (lo + mid)), f(0.5 * (mid + hi))
        left = (mid - lo) / 6 * (flo + 4 * fl + fmid)
        right = (hi - mid) / 6 * (fmid + 4 * fr + fhi)
        diff = left + right - whole
        dmax = float(np.max(np.abs(diff)))
        if dmax <= 15 * ptol or depth >= max_depth:
            total = total + left + right + diff / 15
            err += dmax / 15
        else:
            stack.append((mid, hi, fmid, fr, fhi, right, ptol / 2, depth + 1))
            stack.append((lo, mid, flo, fl, fmid, left, ptol / 2, depth + 1))
    return total, err


def _check_band(net: Network, omega1: float, omega2: float) -> None:
    if not 0 <= omega1 < omega2 <= math.pi + 1e-15:
        raise ValueError("band must satisfy 0 <= omega1 < omega2 <= pi")
    if omega1 == 0 and net.rho >= 1 - UNSTABLE_MARGIN:
        raise SingularAtOmega("band touches omega = 0 on a system with a unit eigenvalue")


def band_energies(net: Network, s: int, omega1: float, omega2: float,
                  tol: float = 1e-8) -> tuple[np.ndarray, float]:
    """Band energy of ``|H_i|^2`` for every node at once."""
    _check_band(net, omega1, omega2)
    value, err = adaptive_simpson(
        lambda w: np.abs(resolvent_column(net, s, w)[0]) ** 2, omega1, omega2, tol)
    return np.asarray(value), err


def band_energy(net: Network, s: int, i: int, omega1: float, omega2: float,
                tol: float = 1e-8) -> BandEnergy:
    _check_band(net, omega1, omega2)
    value, err = adaptive_simpson(
        lambda w: abs(resolvent_column(net, s, w)[0][i]) ** 2, omega1, omega2, tol)
    return BandEnergy(omega1, omega2, float(value), float(err))


def weighted_band_energy(net: Network, s: int, i: int, spectrum: PiecewiseSpectrum,
                         tol: float = 1e-8) -> float:
    """Integral of ``|H_i|^2`` times a piecewise-constant spectrum."""
    total = 0.0
    for lo, hi, level in spectrum.pieces():
        if level == 0:
            continue
        total += level * band_energy(net, s, i, lo, min(hi, math.pi), tol).value
    return total


def weighted_band_energies(net: Network, s: int, spectrum: PiecewiseSpectrum,
                           tol: float = 1e-8) -> np.ndarray:
    total = np.zeros(net.n)
    for lo, hi, level in spectrum.pieces():
        if level == 0:
            continue
        total = total + level * band_energies(net, s, lo, min(hi, math.pi), tol)[0]
    return total


# ------------------------------------------------------- infinite horizon

def _sup_magnitude(net: Network, s: int, i: int, grid: int = 2048,
                   tol: float = 1e-9) -> tuple[float, float, int]:
    omegas = np.linspace(0.0, math.pi, grid + 1)
    mags = frequency_magnitudes(net, s, omegas)[:, i]
    k = int(np.argmax(mags))
    lo = omegas[max(k - 1, 0)]
    hi = omegas[min(k + 1, grid)]

    def g(w):
        return abs(resolvent_column(net, s, w)[0][i])

    best = float(mags[k])
    evals = 0
    c = hi - GOLDEN * (hi - lo)
    d = lo + GOLDEN * (hi - lo)
    gc, gd = g(c), g(d)
    while hi - lo > tol:
        evals += 1
        if gc >= gd:
            hi, d, gd = d, c, gc
            c = hi - GOLDEN * (hi - lo)
            gc = g(c)
        else:
            lo, c, gc = c, d, gd
            d = lo + GOLDEN * (hi - lo)
            gd = g(d)
    best = max(best, gc, gd, g(lo), g(hi))
    return best, hi - lo, evals


def lp_gain_infinite(net: Network, s: int, i: int, p: float, method: str = "auto",
                     start: int = 64, rtol: float = 1e-8,
                     max_horizon: int = 1 << 16) -> GainResult:
    """Infinite-horizon l_p gain; requires ``rho(A) < 1``.

    ``method="auto"`` uses the resolvent entry ``[(I-A)^{-1}]_{is}`` for
    every p other than 2 (a nonnegative kernel's l_p gain on the half-line
    equals its l_1 norm for all p), and the supremum of ``|H|`` over
    frequency for p = 2.  ``method="doubling"`` instead evaluates finite
    horizons ``start, 2*start, ...`` until successive gains agree to ``rtol``.
    """
    if p < 1:
        raise ValueError("p must be >= 1")
    _require_stable(net)
    if method == "doubling":
        return _doubling_gain(net, s, i, p, start, rtol, max_horizon)
    if method != "auto":
        raise ValueError(f"unknown method {method!r}")
    if p == 2:
        value, width, evals = _sup_magnitude(net, s, i)
        return GainResult(value, 2.0, INF, GainMethod.RESOLVENT_LIMIT, evals, width)
    rhs = np.zeros(net.n)
    rhs[s] = 1.0
    m = np.eye(net.n) - net.a
    x = np.linalg.solve(m, rhs)
    resid = float(np.max(np.abs(m @ x - rhs)))
    return GainResult(float(x[i]), p, INF, GainMethod.RESOLVENT_LIMIT, 1, resid)


def _doubling_gain(net, s, i, p, start, rtol, max_horizon) -> GainResult:
    kf = start
    prev = lp_gain(net, s, i, p, kf)
    iters = prev.iterations
    while kf < max_horizon:
        kf *= 2
        cur = lp_gain(net, s, i, p, kf)
        iters += cur.iterations
        change = abs(cur.value - prev.value) / max(cur.value, 1e-300)
        if change < rtol:
            return GainResult(cur.value, p, INF, cur.method, iters, change)
        prev = cur
    raise NoConvergence(f"horizon doubling reached {max_horizon} without settling",
                        change, iters)
