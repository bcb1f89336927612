"""Zero-state simulation, cutset-reduced simulation and the stacking matrix Q."""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property
from typing import Mapping, Optional, Sequence

import numpy as np

from .cutsets import SeparationCertificate
from .errors import LengthMismatch, NotSevered, Unsettled
from .model import Network, decay_rate

BANDLIMITED_LENGTH = 8192


@dataclass(frozen=True)
class InputSignal:
    """Input sequence description.

    ``kind`` is one of ``impulse``, ``step``, ``sinusoid``, ``periodic``,
    ``bandlimited`` or ``custom``.  Use the classmethod constructors.
    """

    kind: str
    amplitude: float = 1.0
    omega: float = 0.0
    phase: float = 0.0
    samples: tuple = ()
    width: float = 0.0
    center: float = 0.0
    length: int = BANDLIMITED_LENGTH

    @classmethod
    def impulse(cls, amplitude=1.0):
        return cls("impulse", amplitude)

    @classmethod
    def step(cls, amplitude=1.0):
        return cls("step", amplitude)

    @classmethod
    def sinusoid(cls, omega, phase=0.0, amplitude=1.0):
        return cls("sinusoid", amplitude, omega=omega, phase=phase)

    @classmethod
    def periodic(cls, samples, amplitude=1.0):
        if len(samples) < 1:
            raise ValueError("periodic signal needs period >= 1")
        return cls("periodic", amplitude, samples=tuple(float(x) for x in samples))

    @classmethod
    def band_limited(cls, width, center, amplitude=1.0, length=BANDLIMITED_LENGTH):
        """``u(k) = sin(W k) / (pi k) * exp(j W0 k)`` for ``0 <= k < length``."""
        return cls("bandlimited", amplitude, width=width, center=center, length=length)

    @classmethod
    def custom(cls, samples, amplitude=1.0):
        return cls("custom", amplitude, samples=tuple(samples))

    @property
    def is_periodic(self) -> bool:
        return self.kind in ("periodic", "step", "sinusoid")

    @property
    def is_complex(self) -> bool:
        return self.kind == "bandlimited" or any(isinstance(x, complex) for x in self.samples)

    def values(self, length: int) -> np.ndarray:
        k = np.arange(length)
        if self.kind == "impulse":
            u = (k == 0).astype(float)
        elif self.kind == "step":
            u = np.ones(length)
        elif self.kind == "sinusoid":
            u = np.cos(self.omega * k + self.phase)
        elif self.kind == "periodic":
            u = np.asarray(self.samples)[k % len(self.samples)]
        elif self.kind == "bandlimited":
            kk = np.where(k == 0, 1, k)
            u = np.where(k == 0, self.width / math.pi,
                         np.sin(self.width * kk) / (math.pi * kk)) * np.exp(1j * self.center * k)
            u = np.where(k < self.length, u, 0)
        elif self.kind == "custom":
            s = np.asarray(self.samples)
            u = np.zeros(length, dtype=s.dtype if s.size else float)
            m = min(length, len(s))
            u[:m] = s[:m]
        else:
            raise ValueError(f"unknown signal kind {self.kind!r}")
        return self.amplitude * u

    def to_json(self) -> dict:
        out = {"kind": self.kind, "amplitude": self.amplitude}
        if self.kind == "sinusoid":
            out.update(omega=self.omega, phase=self.phase)
        elif self.kind in ("periodic", "custom"):
            out["samples"] = [float(x) for x in self.samples]
        elif self.kind == "bandlimited":
            out.update(width=self.width, center=self.center, length=self.length)
        return out

    @classmethod
    def from_json(cls, doc: Mapping) -> "InputSignal":
        kind = doc["kind"]
        amp = float(doc.get("amplitude", 1.0))
        if kind == "impulse":
            return cls.impulse(amp)
        if kind == "step":
            return cls.step(amp)
        if kind == "sinusoid":
            return cls.sinusoid(float(doc["omega"]), float(doc.get("phase", 0.0)), amp)
        if kind == "periodic":
            return cls.periodic(doc["samples"], amp)
        if kind == "bandlimited":
            return cls.band_limited(float(doc["width"]), float(doc["center"]), amp,
                                    int(doc.get("length", BANDLIMITED_LENGTH)))
        if kind == "custom":
            return cls.custom([float(x) for x in doc["samples"]], amp)
        raise ValueError(f"unknown signal kind {kind!r}")


@dataclass(frozen=True)
class Trace:
    """States ``X(0..k_f)`` (rows) of the listed ``nodes`` (columns)."""

    states: np.ndarray
    inputs: np.ndarray
    nodes: tuple

    def node(self, i: int) -> np.ndarray:
        return self.states[:, self.nodes.index(i)]

    @property
    def horizon(self) -> int:
        return self.states.shape[0] - 1

    def to_csv(self, labels: Optional[Sequence[str]] = None) -> str:
        names = labels or [str(v + 1) for v in self.nodes]
        lines = ["k," + ",".join(f"x_{name}" for name in names)]
        for k, row in enumerate(self.states):
            lines.append(f"{k}," + ",".join(repr(complex(x) if np.iscomplexobj(row) else float(x))
                                            for x in row))
        return "\n".join(lines) + "\n"


def _recursion(a: np.ndarray, drive: np.ndarray) -> np.ndarray:
    """``x(k+1) = a x(k) + drive[k]`` from ``x(0) = 0``, accumulated in extended precision."""
    complex_ = np.iscomplexobj(drive)
    ext = np.clongdouble if complex_ else np.longdouble
    a_ext = a.astype(ext)
    steps, n = drive.shape
    out = np.zeros((steps + 1, n), dtype=ext)
    x = np.zeros(n, dtype=ext)
    d = drive.astype(ext)
    for k in range(steps):
        x = a_ext @ x + d[k]
        out[k + 1] = x
    return out.astype(complex if complex_ else float)


def simulate(net: Network, inputs: Mapping[int, InputSignal], k_f: int) -> Trace:
    """Zero-state response to inputs applied at the given nodes."""
    if k_f < 1:
        raise ValueError("k_f must be >= 1")
    nodes = sorted(inputs)
    if nodes:
        u = np.column_stack([inputs[s].values(k_f) for s in nodes])
    else:
        u = np.zeros((k_f, 0))
    drive = np.zeros((k_f, net.n), dtype=u.dtype if u.size else float)
    for col, s in enumerate(nodes):
        drive[:, s] += u[:, col]
    return Trace(_recursion(net.a, drive), u, tuple(range(net.n)))


def simulate_samples(net: Network, samples: Mapping[int, np.ndarray], k_f: int) -> Trace:
    return simulate(net, {s: InputSignal.custom(v) for s, v in samples.items()}, k_f)


def _blocks(net: Network, cert: SeparationCertificate):
    if not cert.severed:
        raise NotSevered("certificate is not severed")
    z = sorted(cert.target_partition)
    c = sorted(cert.cutset)
    return z, c, net.a[np.ix_(z, z)], net.a[np.ix_(z, c)]


def reduced_simulate(net: Network, certificate: SeparationCertificate,
                     cutset_trace: np.ndarray, k_f: int) -> Trace:
    """Target-partition trajectory driven only by cutset states ``X_c(0..k_f-1)``."""
    z, c, az, b = _blocks(net, certificate)
    xc = np.asarray(cutset_trace)
    if xc.ndim == 1:
        xc = xc[:, None]
    if xc.shape[0] < k_f or xc.shape[1] != len(c):
        raise LengthMismatch(
            f"cutset trace has shape {xc.shape}, need at least ({k_f}, {len(c)})")
    drive = xc[:k_f] @ b.T
    return Trace(_recursion(az, drive), xc[:k_f].copy(), tuple(z))


@dataclass(frozen=True)
class QMatrix:
    """Maps the stacked cutset trace ``[X_c(k_f); ...; X_c(0)]`` to the
    stacked target-partition trace ``[X_z(0); ...; X_z(k_f)]``."""

    horizon: int
    matrix: np.ndarray
    z_nodes: tuple
    c_nodes: tuple

    @cached_property
    def row_sums(self) -> np.ndarray:
        return self.matrix.sum(axis=1)

    def block(self, row: int, col: int) -> np.ndarray:
        nz, nc = len(self.z_nodes), len(self.c_nodes)
        return self.matrix[row * nz:(row + 1) * nz, col * nc:(col + 1) * nc]

    def stack_cutset(self, trace: Trace) -> np.ndarray:
        xc = np.column_stack([trace.node(v) for v in self.c_nodes])[: self.horizon + 1]
        return xc[::-1].reshape(-1)

    def stack_partition(self, trace: Trace) -> np.ndarray:
        xz = np.column_stack([trace.node(v) for v in self.z_nodes])[: self.horizon + 1]
        return xz.reshape(-1)


def build_Q(net: Network, certificate: SeparationCertificate, k_f: int) -> QMatrix:
    """Block matrix whose block (k, l) is ``A_z^(k-1-k_f+l) B`` when that
    exponent is nonnegative and zero otherwise."""
    if k_f < 1:
        raise ValueError("k_f must be >= 1")
    z, c, az, b = _blocks(net, certificate)
    nz, nc = len(z), len(c)
    powers = np.empty((k_f, nz, nc))
    cur = b.copy()
    for j in range(k_f):
        powers[j] = cur
        cur = az @ cur
    rows = np.arange(k_f + 1)[:, None]
    cols = np.arange(k_f + 1)[None, :]
    expo = rows - 1 - k_f + cols
    blocks = np.where((expo >= 0)[:, :, None, None],
                      powers[np.clip(expo, 0, k_f - 1)], 0.0)
    q = blocks.transpose(0, 2, 1, 3).reshape((k_f + 1) * nz, (k_f + 1) * nc)
    return QMatrix(k_f, q, tuple(z), tuple(c))


def settle_time(net: Network, decay_to: float = 1e-10, cap: int = 100_000) -> int:
    """Steps until the slowest transient mode has decayed by ``decay_to``."""
    r = decay_rate(net)
    if r <= 0:
        return 1
    if r >= 1:
        return cap
    return min(cap, max(1, math.ceil(math.log(decay_to) / math.log(r))))


def steady_state_sinusoid(net: Network, s: int, i: int, omega: float,
                          k_settle: Optional[int] = None) -> tuple[float, float]:
    """Amplitude and phase of the sinusoidal steady state at ``i`` under
    ``u(k) = cos(omega k)`` applied at ``s``, by least squares."""
    if k_settle is None:
        k_settle = settle_time(net)
    span = max(16, math.ceil(4 * 2 * math.pi / omega)) if omega > 0 else 16
    k_f = k_settle + span
    trace = simulate(net, {s: InputSignal.sinusoid(omega)}, k_f)
    k = np.arange(k_settle, k_f + 1)
    x = trace.node(i)[k_settle:]
    design = np.column_stack([np.cos(omega * k), np.sin(omega * k)])
    coef, *_ = np.linalg.lstsq(design, x, rcond=None)
    amplitude = float(math.hypot(coef[0], coef[1]))
    phase = float(math.atan2(-coef[1], coef[0]))
    resid = float(np.max(np.abs(design @ coef - x)))
    if resid > 1e-6 * max(amplitude, 1e-300) and resid > 1e-300:
        raise Unsettled(f"fit residual {resid:.3e} exceeds 1e-6 of amplitude {amplitude:.3e}")
    return amplitude, phase
