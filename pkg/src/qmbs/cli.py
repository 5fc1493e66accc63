"""Batch command-line front-end for the qmbs experiments.

Every experiment is a subcommand that writes a machine-readable table
(CSV with ``# key=value`` metadata comments, or JSON) and prints a short
human-readable summary.  Outputs are deterministic given the seed: the
data section of two runs with identical arguments is byte-identical
(only the wall-time metadata line differs).

Common flags: ``--out`` (file path, default stdout), ``--format``
(csv/json), ``--config`` (JSON file supplying defaults; explicit flags
win), ``--seed`` (default from the ``QMBS_SEED`` environment variable),
``--threads`` (caps BLAS worker threads without changing results).
"""

import argparse
import json
import math
import os
import sys
import time

import numpy as np
from threadpoolctl import threadpool_limits

from . import __version__
from .chain import ChainSpec
from .randmat import RngStream, sample_haar
from .slider import SliderParams, one_minus_p_universal, ie_density
from .freeprob import (AndersonSpec, build_anderson, anderson_pair_sampler,
                       necklaces, centered_joint_moment,
                       approximation_degree, ie_parameter_anderson)
from .motzkin import (catalan, dyck_paths, schmidt_spectrum_d3, d4_schmidt,
                      d4_entropy_asymptotic, supertree_parent_dist,
                      supertree_integral_matching)
from .ffspectra import (ProjectorTerm, build_motzkin_H, sector_indices,
                        ground_and_gap, degeneracy_recursion)
from .mps import imaginary_time_ground

__all__ = ["main"]

_EXIT_OK = 0
_EXIT_NUMERIC = 1
_EXIT_USAGE = 2


class _UsageError(ValueError):
    """Bad argument values detected after parsing (exit code 2)."""


def _fmt(value):
    """C-locale cell formatting: full-precision floats, plain ints/strs."""
    if isinstance(value, (bool, np.bool_)):
        return "1" if value else "0"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    return str(value)


def _emit(args, metadata, header, rows, wall_time):
    """Write the result table in the requested format to --out or stdout."""
    meta = dict(metadata)
    meta["version"] = __version__
    meta["wall_time_s"] = f"{wall_time:.3f}"
    if args.format == "json":
        doc = {"metadata": {k: _fmt(v) for k, v in meta.items()},
               "columns": list(header),
               "rows": [[_fmt(v) for v in row] for row in rows]}
        text = json.dumps(doc, indent=2) + "\n"
    else:
        lines = [f"# {k}={_fmt(v)}" for k, v in meta.items()]
        lines.append(",".join(header))
        lines.extend(",".join(_fmt(v) for v in row) for row in rows)
        text = "\n".join(lines) + "\n"
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


# ---------------------------------------------------------------------------
# subcommand implementations: each returns (metadata, header, rows)
# ---------------------------------------------------------------------------

def _run_ie_slider(args):
    if args.N % 2 == 0 or args.N < 3:
        raise _UsageError("closed form requires odd N >= 3; "
                          "use ie-density (Monte Carlo) for even N")
    v = one_minus_p_universal(args.N, args.d, args.beta)
    print(f"1-p = {v:.5f}")
    meta = {"subcommand": "ie-slider", "N": args.N, "d": args.d,
            "beta": args.beta}
    return meta, ("N", "d", "beta", "one_minus_p"), \
        [(args.N, args.d, args.beta, v)]


def _run_ie_density(args):
    spec = SliderParams(args.N, args.d, args.beta)
    r = args.r if args.r is not None else args.d * args.d
    res = ie_density(spec, args.kind, args.trials, args.bins, args.seed, r=r)
    edges = res.classical.edges
    header = ("left", "right", "classical", "iso", "quantum", "ie_mixture")
    rows = [(edges[i], edges[i + 1], res.classical.masses[i],
             res.iso.masses[i], res.quantum.masses[i], res.ie.masses[i])
            for i in range(len(edges) - 1)]
    print(f"p = {res.p:.5f} ({len(rows)} bins, {args.trials} trials)")
    meta = {"subcommand": "ie-density", "N": args.N, "d": args.d,
            "beta": args.beta, "r": r, "kind": args.kind,
            "trials": args.trials, "bins": args.bins, "seed": args.seed,
            "p": res.p}
    return meta, header, rows


def _run_anderson_dos(args):
    spec = AndersonSpec(args.N, J=args.J, sigma=args.sigma, noise=args.noise)
    rng = RngStream(args.seed)
    samples = []
    for _ in range(args.trials):
        H = build_anderson(spec, rng)
        samples.append(np.linalg.eigvalsh(H.to_dense()))
    pooled = np.concatenate(samples)
    masses, edges = np.histogram(pooled, bins=args.bins)
    masses = masses / masses.sum()
    rows = [(edges[i], edges[i + 1], masses[i]) for i in range(len(masses))]
    print(f"{pooled.size} eigenvalues in {len(rows)} bins; "
          f"mean = {pooled.mean():.4f}, var = {pooled.var():.4f}")
    meta = {"subcommand": "anderson-dos", "N": args.N, "J": args.J,
            "sigma": args.sigma, "noise": args.noise, "trials": args.trials,
            "bins": args.bins, "seed": args.seed}
    return meta, ("left", "right", "mass"), rows


def _run_anderson_degree(args):
    spec = AndersonSpec(args.N, J=args.J, sigma=args.sigma)
    rng = RngStream(args.seed)
    sampler = anderson_pair_sampler(spec, args.scheme, rng)
    rows = []
    for k in range(2, args.kmax + 1):
        for word in necklaces(k):
            est = centered_joint_moment(word, sampler, args.trials)
            floor = 20.0 / args.N
            nonzero = abs(est.estimate) > max(5.0 * est.sigma, floor)
            rows.append((word.word, k, est.estimate, est.sigma, est.raw,
                         est.raw_sigma, nonzero))
    deg_rng = RngStream(args.seed)
    degree = approximation_degree(
        anderson_pair_sampler(spec, args.scheme, deg_rng),
        args.kmax, args.trials, N_sites=args.N)
    meta = {"subcommand": "anderson-degree", "N": args.N, "J": args.J,
            "sigma": args.sigma, "scheme": args.scheme,
            "trials": args.trials, "kmax": args.kmax, "seed": args.seed,
            "approximation_degree": degree}
    if args.scheme == "II":
        meta["ie_parameter"] = ie_parameter_anderson(args.sigma, args.J)
    print(f"approximation degree (scheme {args.scheme}) = {degree}")
    header = ("word", "degree", "centered", "centered_sigma", "raw",
              "raw_sigma", "nonzero")
    return meta, header, rows


def _run_motzkin_entropy(args):
    spec = schmidt_spectrum_d3(args.n)
    rows = [(m, f"{p.numerator}/{p.denominator}", float(p))
            for m, _, p in spec.sectors]
    print(f"S = {spec.entropy_bits:.4f} bits (chi = {spec.chi})")
    meta = {"subcommand": "motzkin-entropy", "n": args.n, "chi": spec.chi,
            "S_bits": spec.entropy_bits}
    return meta, ("m", "p_exact", "p"), rows


_GAP_SECTORS = ((1, 0), (0, 1), (1, 1), (2, 0), (0, 2))


def _motzkin_gap_pair(n):
    """(lam1, lam2) of the height-constrained chain, sector-restricted."""
    H = build_motzkin_H(n)
    bal = ground_and_gap(H, sector=(0, 0))
    lam2 = bal.lam2
    for p, q in _GAP_SECTORS:
        if sector_indices(n, p, q).size < 2:
            continue
        res = ground_and_gap(H, sector=(p, q), k_eig=1)
        lam2 = min(lam2, res.lam1)
    return bal.lam1, lam2


def _run_motzkin_gap(args):
    if not 2 <= args.nmin <= args.nmax:
        raise _UsageError("need 2 <= nmin <= nmax")
    rows = []
    for n in range(args.nmin, args.nmax + 1):
        lam1, lam2 = _motzkin_gap_pair(n)
        rows.append((n, lam1, lam2))
    meta = {"subcommand": "motzkin-gap", "nmin": args.nmin,
            "nmax": args.nmax}
    if len(rows) >= 2:
        ns = np.array([r[0] for r in rows], dtype=float)
        gaps = np.array([r[2] for r in rows])
        slope = np.polyfit(np.log(ns), np.log(gaps), 1)[0]
        meta["loglog_slope"] = slope
        print(f"gap ~ n^{slope:.3f} over n = {args.nmin}..{args.nmax}")
    return meta, ("n", "lam1", "lam2"), rows


def _run_d4_entropy(args):
    spec = d4_schmidt(args.n)
    rows = [(m, mult, float(p)) for m, mult, p in spec.sectors]
    asym = d4_entropy_asymptotic(args.n)
    print(f"S = {spec.entropy_bits:.4f} bits (chi = {spec.chi}, "
          f"asymptotic {asym:.4f})")
    meta = {"subcommand": "d4-entropy", "n": args.n, "chi": spec.chi,
            "S_bits": spec.entropy_bits, "S_asymptotic_bits": asym}
    return meta, ("m", "multiplicity", "p"), rows


def _run_ff_regimes(args):
    rep = degeneracy_recursion(args.N, args.d, args.r)
    print(rep.regime)
    rows = [(n, rep.D[n]) for n in range(len(rep.D))]
    meta = {"subcommand": "ff-regimes", "d": args.d, "r": args.r,
            "N": args.N, "regime": rep.regime,
            "root_f": rep.f, "root_g": rep.g}
    return meta, ("n", "D_n"), rows


def _run_supertree_verify(args):
    if args.n < 2:
        raise _UsageError("need n >= 2")
    rows = []
    ok_all = True
    for n in range(2, args.n + 1):
        children = dyck_paths(n)
        ratio_num, ratio_den = catalan(n), catalan(n - 1)
        colsums = {}
        for b in children:
            for a, p in supertree_parent_dist(b):
                colsums[a] = colsums.get(a, 0) + p
        parents = dyck_paths(n - 1)
        exact_ok = (set(colsums) == set(parents) and
                    all(v * ratio_den == ratio_num for v in colsums.values()))
        match = supertree_integral_matching(n)
        counts = {}
        for a in match.values():
            counts[a] = counts.get(a, 0) + 1
        flow_ok = (set(match) == set(children) and
                   set(counts) <= set(parents) and
                   len(counts) == len(parents) and
                   all(1 <= c <= 4 for c in counts.values()))
        ok = exact_ok and flow_ok
        ok_all = ok_all and ok
        rows.append((n, len(children), len(parents),
                     f"{ratio_num}/{ratio_den}", max(counts.values()), ok))
    print("supertree verification: " + ("OK" if ok_all else "FAILED"))
    meta = {"subcommand": "supertree-verify", "n": args.n, "ok": ok_all}
    if not ok_all:
        raise RuntimeError("supertree column-sum or matching check failed")
    return meta, ("n", "children", "parents", "column_sum",
                  "max_preimage", "ok"), rows


def _motzkin_mps_terms(n):
    """Per-bond 9x9 blocks of the height-constrained chain, boundary
    penalties folded into the first and last bond."""
    third = np.eye(3)
    vecs = [np.kron(third[0], third[0]) - np.kron(third[1], third[2]),
            np.kron(third[0], third[1]) - np.kron(third[1], third[0]),
            np.kron(third[0], third[2]) - np.kron(third[2], third[0])]
    pi = sum(np.outer(v, v) / 2.0 for v in vecs)
    blocks = [pi.copy() for _ in range(n - 1)]
    blocks[0] = blocks[0] + np.kron(np.diag([0.0, 0.0, 1.0]), np.eye(3))
    blocks[-1] = blocks[-1] + np.kron(np.eye(3), np.diag([0.0, 1.0, 0.0]))
    return list(enumerate(blocks, start=1))


def _run_mps_gs(args):
    if args.model == "motzkin":
        if args.N < 2:
            raise _UsageError("need N >= 2")
        spec = ChainSpec(args.N, 3)
        terms = _motzkin_mps_terms(args.N)
    else:
        if not 1 <= args.r <= args.d * args.d:
            raise _UsageError("need 1 <= r <= d^2")
        spec = ChainSpec(args.N, args.d)
        rng = RngStream(args.seed)
        terms = [(j, ProjectorTerm(
            sample_haar(args.d * args.d, beta=1,
                        rng=rng.substream(j))[:args.r]).projector())
            for j in range(1, args.N)]
    schedule = np.geomspace(args.dtau_max, args.dtau_min, args.stages)
    state, trace = imaginary_time_ground(
        spec, terms, args.chi, dtau_schedule=schedule,
        max_sweeps=args.max_sweeps)
    rows = [(i, e) for i, e in enumerate(trace)]
    final = float(trace[-1])
    print(f"final energy = {final:.6e} after {len(trace)} sweeps "
          f"(chi = {args.chi})")
    meta = {"subcommand": "mps-gs", "model": args.model, "N": args.N,
            "d": spec.d, "r": args.r if args.model == "generic" else "",
            "chi": args.chi, "seed": args.seed,
            "dtau_max": args.dtau_max, "dtau_min": args.dtau_min,
            "stages": args.stages, "max_sweeps": args.max_sweeps,
            "final_energy": final,
            "bond_dims": "x".join(str(b) for b in state.bond_dims())}
    return meta, ("sweep", "energy"), rows


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------

def _env_seed():
    raw = os.environ.get("QMBS_SEED", "0")
    try:
        return int(raw)
    except ValueError:
        raise SystemExit(f"qmbs: invalid QMBS_SEED {raw!r}")


def _add_common(sub, seed=True):
    sub.add_argument("--out", default=None, help="output file (default stdout)")
    sub.add_argument("--format", choices=("csv", "json"), default="csv")
    sub.add_argument("--config", default=None,
                     help="JSON file with parameter defaults; flags win")
    sub.add_argument("--threads", type=int, default=None,
                     help="cap BLAS worker threads")
    if seed:
        sub.add_argument("--seed", type=int, default=_env_seed())


def _build_parser():
    parser = argparse.ArgumentParser(
        prog="qmbs", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    subparsers = parser.add_subparsers(dest="command", required=True)
    subs = {}

    def sub(name, func, seed=True, **kw):
        p = subparsers.add_parser(name, **kw)
        p.set_defaults(func=func)
        _add_common(p, seed=seed)
        subs[name] = p
        return p

    p = sub("ie-slider", _run_ie_slider, seed=False,
            help="closed-form mixture weight 1-p of the sliding ensemble")
    p.add_argument("--N", type=int, required=True)
    p.add_argument("--d", type=int, required=True)
    p.add_argument("--beta", type=int, choices=(1, 2), default=1)

    p = sub("ie-density", _run_ie_density,
            help="classical/iso/quantum eigenvalue histograms and mixture")
    p.add_argument("--N", type=int, required=True)
    p.add_argument("--d", type=int, required=True)
    p.add_argument("--beta", type=int, choices=(1, 2), default=1)
    p.add_argument("--r", type=int, default=None)
    p.add_argument("--kind", default="wishart")
    p.add_argument("--trials", type=int, default=2000)
    p.add_argument("--bins", type=int, default=60)

    p = sub("anderson-dos", _run_anderson_dos,
            help="density of states of the random-site ring Hamiltonian")
    p.add_argument("--N", type=int, default=500)
    p.add_argument("--J", type=float, default=1.0)
    p.add_argument("--sigma", type=float, default=1.0)
    p.add_argument("--noise", default="gaussian")
    p.add_argument("--trials", type=int, default=40)
    p.add_argument("--bins", type=int, default=80)

    p = sub("anderson-degree", _run_anderson_degree,
            help="centered necklace moments and first nonzero degree")
    p.add_argument("--N", type=int, default=300)
    p.add_argument("--J", type=float, default=1.0)
    p.add_argument("--sigma", type=float, default=1.0)
    p.add_argument("--scheme", choices=("I", "II"), default="I")
    p.add_argument("--trials", type=int, default=100)
    p.add_argument("--kmax", type=int, default=8)

    p = sub("motzkin-entropy", _run_motzkin_entropy, seed=False,
            help="exact Schmidt spectrum and entropy of the spin-1 state")
    p.add_argument("--n", type=int, required=True)

    p = sub("motzkin-gap", _run_motzkin_gap, seed=False,
            help="lowest two levels of the spin-1 chain vs length")
    p.add_argument("--nmin", type=int, default=3)
    p.add_argument("--nmax", type=int, default=8)

    p = sub("d4-entropy", _run_d4_entropy, seed=False,
            help="exact Schmidt spectrum and entropy of the two-colour state")
    p.add_argument("--n", type=int, required=True)

    p = sub("ff-regimes", _run_ff_regimes, seed=False,
            help="ground-space dimension recursion and frustration regime")
    p.add_argument("--d", type=int, required=True)
    p.add_argument("--r", type=int, required=True)
    p.add_argument("--N", type=int, required=True)

    p = sub("supertree-verify", _run_supertree_verify, seed=False,
            help="exact column sums and integral matching of the tree map")
    p.add_argument("--n", type=int, default=8)

    p = sub("mps-gs", _run_mps_gs,
            help="imaginary-time MPS ground-state search")
    p.add_argument("--model", choices=("generic", "motzkin"),
                   default="generic")
    p.add_argument("--N", type=int, default=10)
    p.add_argument("--d", type=int, default=4)
    p.add_argument("--r", type=int, default=2)
    p.add_argument("--chi", type=int, default=8)
    p.add_argument("--dtau-max", type=float, default=0.1)
    p.add_argument("--dtau-min", type=float, default=1e-3)
    p.add_argument("--stages", type=int, default=7)
    p.add_argument("--max-sweeps", type=int, default=4000)

    return parser, subs


def _apply_config(parser, subs, argv, args):
    """Reparse with JSON-config values installed as subcommand defaults."""
    with open(args.config) as fh:
        cfg = json.load(fh)
    if not isinstance(cfg, dict):
        raise SystemExit("qmbs: config must be a JSON object")
    sub = subs[args.command]
    valid = {a.dest for a in sub._actions}
    unknown = sorted(set(cfg) - valid)
    if unknown:
        raise SystemExit(f"qmbs: unknown config keys: {', '.join(unknown)}")
    sub.set_defaults(**cfg)
    return parser.parse_args(argv)


def main(argv=None):
    argv = sys.argv[1:] if argv is None else list(argv)
    parser, subs = _build_parser()
    try:
        args = parser.parse_args(argv)
        if args.config:
            args = _apply_config(parser, subs, argv, args)
    except SystemExit as exc:
        if isinstance(exc.code, str):
            print(exc.code, file=sys.stderr)
            return _EXIT_USAGE
        return _EXIT_USAGE if exc.code else _EXIT_OK

    start = time.perf_counter()
    try:
        limit = args.threads if args.threads and args.threads > 0 else None
        with threadpool_limits(limits=limit):
            meta, header, rows = args.func(args)
    except _UsageError as exc:
        print(f"qmbs: {exc}", file=sys.stderr)
        return _EXIT_USAGE
    except (ValueError, RuntimeError, OSError, np.linalg.LinAlgError) as exc:
        print(f"qmbs: {exc}", file=sys.stderr)
        return _EXIT_NUMERIC
    _emit(args, meta, header, rows, time.perf_counter() - start)
    return _EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
