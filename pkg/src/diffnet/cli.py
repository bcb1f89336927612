"""Command-line front end.

Exit codes: 0 success, 1 inequality violation, 2 parse error, 3 invalid
model or configuration, 4 numerical non-convergence.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
import tempfile
from typing import Optional, Sequence

import numpy as np

from . import tables
from .apps import (ALL_MINIMAL, MIN_CUT_ONLY, PersistentSNR, PropagationStabilityQuery,
                   TransientSNR, check_propagation_stability, random_finite_inputs,
                   snr_all)
from .cutsets import enumerate_minimal_cutsets, min_vertex_cut, validate_cutset
from .errors import (DiffnetError, NoConvergence, ParseError, Unsettled)
from .metrics import INF, PiecewiseSpectrum, band_energies, frequency_response, markov_parameters
from .model import (Network, StochasticityKind, bfs_distances, classify, example_network,
                    load_network_file, spectral_radius, strongly_connected)
from .simulate import InputSignal
from .verify import (ALL_THEOREMS, RandomNetConfig, SuiteParams, SuiteReport, Theorem,
                     check_network, junit_xml, random_suite)

EXIT_OK, EXIT_VIOLATION, EXIT_PARSE, EXIT_INVALID, EXIT_NUMERIC = 0, 1, 2, 3, 4


class UsageError(Exception):
    """Bad or conflicting command-line options."""


def _parse_p(text: str) -> float:
    t = text.strip().lower()
    if t in ("inf", "infinity", "oo"):
        return INF
    p = float(t)
    if p < 1:
        raise UsageError(f"p must be >= 1, got {text}")
    return p


def _parse_ps(text: str) -> list[float]:
    return [_parse_p(t) for t in text.split(",") if t.strip()]


def _parse_horizons(text: str) -> list[float]:
    out = []
    for t in text.split(","):
        t = t.strip().lower()
        if t in ("inf", "infinity"):
            out.append(INF)
        elif t:
            k = int(t)
            if k < 1:
                raise UsageError("horizon must be >= 1")
            out.append(k)
    return out


def _parse_band(text: str) -> tuple[float, float]:
    try:
        lo, hi = (float(x) for x in text.split(":"))
    except ValueError:
        raise UsageError(f"band must look like A:B, got {text!r}") from None
    return lo, hi


def _node(net: Network, one_based: int) -> int:
    if not 1 <= one_based <= net.n:
        raise UsageError(f"node {one_based} outside 1..{net.n}")
    return one_based - 1


def _nodes(net: Network, text: str) -> list[int]:
    return [_node(net, int(t)) for t in text.split(",") if t.strip()]


def _pstr(p: float) -> str:
    return "inf" if p == INF else f"{p:g}"


def _load(args) -> Network:
    chosen = [x for x in (args.network, args.edgelist) if x] + ([1] if args.example else [])
    if len(chosen) > 1:
        raise UsageError("--network, --edgelist and --example are mutually exclusive")
    if args.example:
        return example_network()
    if args.edgelist:
        return load_network_file(args.edgelist, fmt="edgelist")
    if args.network:
        return load_network_file(args.network)
    raise UsageError("a network is required (--network, --edgelist or --example)")


def _require(args, *names):
    for name in names:
        if getattr(args, name) is None:
            raise UsageError(f"--{name} is required for this command")


def _emit(args, text: str) -> None:
    """Write to ``--output`` atomically, or to stdout."""
    if not text.endswith("\n"):
        text += "\n"
    if not args.output:
        sys.stdout.write(text)
        return
    directory = os.path.dirname(os.path.abspath(args.output))
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".diffnet-")
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(text)
        os.replace(tmp, args.output)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _dump(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True)


# ------------------------------------------------------------------ commands

def cmd_validate(args) -> int:
    net = _load(args)
    cls = classify(net)
    rho = spectral_radius(net)
    conn = "strongly connected" if strongly_connected(net) else "not strongly connected"
    rel = "rho<1" if rho < 1 - 1e-12 else "rho=1"
    if args.format == "json":
        _emit(args, _dump({"n": net.n, "class": cls.kind.value, "strongly_connected":
                           strongly_connected(net), "rho": rho,
                           "worst_row_sum": cls.worst_row_sum}))
    else:
        _emit(args, f"{cls.kind.value}, {conn}, {rel}\nn={net.n} rho={rho!r}")
    return EXIT_OK


def cmd_gains(args) -> int:
    net = _load(args)
    _require(args, "source")
    s = _node(net, args.source)
    ps = _parse_ps(args.p)
    horizons = _parse_horizons(args.horizon)
    if args.by_distance:
        if len(horizons) != 1:
            raise UsageError("--by-distance takes a single horizon")
        columns = {p: tables.max_by_distance(net, s, p, horizons[0]) for p in ps}
        if args.format == "json":
            _emit(args, _dump({"horizon": _pstr(horizons[0]), "columns": {
                _pstr(p): [col[d] for d in sorted(col)] for p, col in columns.items()}}))
        else:
            _emit(args, tables.distance_table_csv(columns))
        return EXIT_OK
    rows = [r for h in horizons for p in ps for r in tables.node_gains(net, s, p, h)]
    if args.format == "json":
        _emit(args, _dump([{"node": r.node + 1, "distance": r.distance, "p": _pstr(r.p),
                            "k_f": _pstr(r.horizon), "gain": r.gain} for r in rows]))
    else:
        _emit(args, tables.gains_csv(rows))
    if args.plot_script:
        with open(args.plot_script, "w") as fh:
            fh.write(tables.gnuplot_script(args.output or "gains.csv"))
    return EXIT_OK


def cmd_sweep(args) -> int:
    """Per-distance maxima across horizons against the reference table column."""
    net = _load(args) if (args.network or args.edgelist) else example_network()
    s = _node(net, args.source or 1)
    p = _parse_p(args.p)
    horizons = [int(h) for h in _parse_horizons(args.horizon) if h != INF]
    reference = tables.REFERENCE_MAX_GAINS[p if p in tables.REFERENCE_MAX_GAINS else 2.0]
    rows = tables.horizon_sweep(net, s, p, horizons, reference)
    best = tables.best_horizon(rows)
    if args.format == "json":
        _emit(args, _dump({"p": _pstr(p), "reference": list(reference), "rows": rows,
                           "best": best}))
    else:
        lines = ["k_f,max_abs_deviation," + ",".join(f"d{d}" for d in range(len(reference)))]
        lines += [f"{r['k_f']},{r['max_abs_deviation']:.6g},"
                  + ",".join(f"{v:.6f}" for v in r["values"]) for r in rows]
        lines.append(f"# best k_f={best['k_f']} deviation={best['max_abs_deviation']:.6g}")
        _emit(args, "\n".join(lines))
    return EXIT_OK


def _params(args) -> SuiteParams:
    return SuiteParams(tol=args.tol) if args.tol is not None else SuiteParams()


def cmd_verify(args) -> int:
    params = _params(args)
    theorems = ALL_THEOREMS - {Theorem.PROPAGATION}
    if args.random:
        suite = SuiteReport({}, negated=args.self_test)
        random_suite(RandomNetConfig(seed=args.seed), theorems, args.count, params,
                     negate=args.self_test, suite=suite)
        random_suite(RandomNetConfig(seed=args.seed, stochastic_mode=True), theorems,
                     args.stochastic_count, params, negate=args.self_test, suite=suite)
    else:
        net = _load(args)
        s = _node(net, args.source or 1)
        second = _node(net, args.second) if args.second else None
        suite = check_network(net, s, theorems, params, SuiteReport({}, negated=args.self_test),
                              second_input=second, negate=args.self_test)
    if args.junit:
        with open(args.junit, "w") as fh:
            fh.write(junit_xml(suite))
    if args.format == "json":
        _emit(args, _dump(suite.to_json()))
    else:
        lines = ["theorem,cases,violations,errors,min_slack"]
        for t, r in sorted(suite.reports.items(), key=lambda kv: kv[0].value):
            lines.append(f"{t.value},{r.cases_run},{len(r.violations)},{len(r.errors)},"
                         f"{r.min_slack if r.min_slack != INF else ''}")
        lines.append(f"# networks={suite.networks} violations={suite.violations}")
        _emit(args, "\n".join(lines))
    if any(r.errors for r in suite.reports.values()) and not suite.violations:
        return EXIT_NUMERIC
    return EXIT_OK if suite.passed else EXIT_VIOLATION


def cmd_cutsets(args) -> int:
    net = _load(args)
    _require(args, "source", "target")
    sources = set(_nodes(net, str(args.source))) | set(_nodes(net, args.inputs or ""))
    t = _node(net, args.target)
    if args.min_cut:
        cuts = [min_vertex_cut(net, sources, t)]
    else:
        cuts = enumerate_minimal_cutsets(net, sources, t)
    certs = [validate_cutset(net, sources, t, c).to_json() for c in cuts]
    if args.format == "json":
        _emit(args, _dump(certs))
    else:
        _emit(args, "cutset,Z\n" + "".join(
            f"{' '.join(map(str, c['cutset']))},{' '.join(map(str, c['Z']))}\n" for c in certs))
    return EXIT_OK


def cmd_freq(args) -> int:
    net = _load(args)
    _require(args, "source")
    s = _node(net, args.source)
    targets = [_node(net, args.target)] if args.target else list(range(net.n))
    if args.band:
        lo, hi = _parse_band(args.band)
        values, err = band_energies(net, s, lo, hi)
        rows = [{"node": i + 1, "band": [lo, hi], "energy": float(values[i])} for i in targets]
        if args.format == "json":
            _emit(args, _dump({"rows": rows, "quad_error_estimate": float(err)}))
        else:
            _emit(args, "node,omega1,omega2,energy\n" + "".join(
                f"{r['node']},{lo!r},{hi!r},{r['energy']!r}\n" for r in rows))
        return EXIT_OK
    omegas = ([args.omega] if args.omega is not None
              else list(np.linspace(0.0, math.pi, args.points)))
    rows = []
    for w in omegas:
        for i in targets:
            pt = frequency_response(net, s, i, float(w))
            rows.append({"node": i + 1, **pt.to_json()})
    if args.format == "json":
        _emit(args, _dump(rows))
    else:
        _emit(args, "node,omega,re,im,abs\n" + "".join(
            f"{r['node']},{r['omega']!r},{r['re']!r},{r['im']!r},{r['abs']!r}\n" for r in rows))
    return EXIT_OK


def cmd_markov(args) -> int:
    net = _load(args)
    _require(args, "source", "target")
    seq = markov_parameters(net, _node(net, args.source), _node(net, args.target), args.k)
    nz = np.flatnonzero(seq.values > 0)
    first = int(nz[0]) if nz.size else None
    if args.format == "json":
        _emit(args, _dump({"values": seq.values.tolist(), "first_nonzero": first}))
    else:
        _emit(args, "k,M\n" + "".join(f"{k},{float(v)!r}\n" for k, v in enumerate(seq.values))
              + f"# first nonzero at k={first}")
    return EXIT_OK


def cmd_snr(args) -> int:
    net = _load(args)
    _require(args, "source")
    s = _node(net, args.source)
    sigma = args.sigma
    if args.band:
        lo, hi = _parse_band(args.band)
        query = PersistentSNR(PiecewiseSpectrum.flat(lo, hi), sigma)
        mode = "persistent"
    else:
        query = TransientSNR(_parse_p(args.p), InputSignal.impulse(),
                             int(_parse_horizons(args.horizon)[0]), sigma)
        mode = "transient"
    values = snr_all(net, s, query)
    dist = bfs_distances(net, s)
    rows = [{"node": i + 1, "distance": dist[i], "mode": mode, "snr": float(values[i])}
            for i in range(net.n)]
    if args.format == "json":
        _emit(args, _dump(rows))
    else:
        _emit(args, "node,distance,mode,SNR\n" + "".join(
            f"{r['node']},{r['distance']},{mode},{r['snr']!r}\n" for r in rows))
    return EXIT_OK


def cmd_propstab(args) -> int:
    net = _load(args)
    rng = np.random.default_rng(args.seed)
    horizon = int(_parse_horizons(args.horizon)[0])
    query = PropagationStabilityQuery(
        _parse_p(args.p), _parse_p(args.t), random_finite_inputs(rng, args.count, horizon),
        MIN_CUT_ONLY if args.min_cut else ALL_MINIMAL, horizon,
        tuple(_nodes(net, str(args.source))) if args.source else None)
    report = check_propagation_stability(net, query, tol=args.tol or 1e-9,
                                         negate=args.self_test)
    if args.format == "json":
        _emit(args, _dump(report.to_json()))
    else:
        verdict = "PASS" if report.passed else "FAIL"
        _emit(args, f"{verdict} cases={report.cases_run} violations={len(report.violations)}"
                    f"\n# {report.notes[0]}")
    return EXIT_OK if report.passed else EXIT_VIOLATION


COMMANDS = {
    "validate": cmd_validate, "gains": cmd_gains, "sweep": cmd_sweep, "verify": cmd_verify,
    "cutsets": cmd_cutsets, "freq": cmd_freq, "markov": cmd_markov, "snr": cmd_snr,
    "propstab": cmd_propstab,
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    src = common.add_argument_group("network")
    src.add_argument("--network", help="matrix CSV, edge list or JSON file")
    src.add_argument("--edgelist", help="edge list file (j,l,weight; 1-based)")
    src.add_argument("--paper-example", "--example", dest="example", action="store_true",
                     help="use the embedded 9-node example network")
    common.add_argument("--source", type=int)
    common.add_argument("--target", type=int)
    common.add_argument("--inputs", help="extra input nodes, comma separated")
    common.add_argument("--format", choices=("csv", "json"), default="csv")
    common.add_argument("--output", help="write atomically to this path")
    common.add_argument("--tol", type=float)
    common.add_argument("--seed", type=int, default=42)

    parser = argparse.ArgumentParser(prog="diffnet", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("validate", parents=[common], help="classify a network")

    g = sub.add_parser("gains", parents=[common], help="per-node l_p gains")
    g.add_argument("--p", default="1")
    g.add_argument("--horizon", default="inf")
    g.add_argument("--by-distance", action="store_true")
    g.add_argument("--plot-script", help="also write a gnuplot script here")

    sw = sub.add_parser("sweep", parents=[common], help="horizon sweep of per-distance maxima")
    sw.add_argument("--p", default="2")
    sw.add_argument("--horizon", default=",".join(str(k) for k in range(1, 201)))

    v = sub.add_parser("verify", parents=[common], help="run the inequality checks")
    v.add_argument("--random", action="store_true")
    v.add_argument("--count", type=int, default=50)
    v.add_argument("--stochastic-count", type=int, default=20)
    v.add_argument("--second", type=int, help="second input node for the multi-input check")
    v.add_argument("--self-test", action="store_true", help="negate every inequality")
    v.add_argument("--all-theorems", action="store_true", help="accepted; all run by default")
    v.add_argument("--junit", help="write a JUnit XML report here")

    c = sub.add_parser("cutsets", parents=[common], help="minimal separating cutsets")
    c.add_argument("--min-cut", action="store_true")

    f = sub.add_parser("freq", parents=[common], help="frequency response or band energy")
    f.add_argument("--omega", type=float)
    f.add_argument("--points", type=int, default=65)
    f.add_argument("--band")

    m = sub.add_parser("markov", parents=[common], help="Markov parameters")
    m.add_argument("--k", type=int, default=10)

    sn = sub.add_parser("snr", parents=[common], help="SNR at every node")
    sn.add_argument("--p", default="2")
    sn.add_argument("--horizon", default="200")
    sn.add_argument("--band", help="flat input spectrum A:B (persistent SNR)")
    sn.add_argument("--sigma", type=float, default=1.0)

    ps = sub.add_parser("propstab", parents=[common], help="sampled propagation stability")
    ps.add_argument("--p", default="2")
    ps.add_argument("--t", default="2")
    ps.add_argument("--horizon", default="100")
    ps.add_argument("--count", type=int, default=10)
    ps.add_argument("--min-cut", action="store_true")
    ps.add_argument("--self-test", action="store_true")
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except ParseError as exc:
        print(f"parse error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except (NoConvergence, Unsettled) as exc:
        print(f"numerical failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (DiffnetError, UsageError, ValueError, IndexError) as exc:
        print(f"invalid model or configuration: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return EXIT_PARSE


if __name__ == "__main__":
    sys.exit(main())
