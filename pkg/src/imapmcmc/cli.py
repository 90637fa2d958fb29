"""Command-line entry point: ``imapmcmc {generate,run,evaluate,bench}``.

Exit codes: 0 success, 2 usage, 3 data error, 4 numerical error.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import math
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import __version__, kernels
from .ci import Dataset, compute_suffstats
from .dag import read_dag
from .errors import DataError, DegenerateTruth, EmptyTrace, NumericalError
from .estimation import KINDS, cpdag_of, feature_posterior, roc_curve
from .imap import check_permutation
from .sampler import (BestOfM, ChainConfig, GivenPermutation, MinImapModel, RandomInit,
                      read_trace_jsonl, run_chain, run_chains)
from .scoring import BgeHyper, PriorSpec
from .synth import SemSpec, random_dag, random_weights, sample_sem

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_NUMERIC = 0, 2, 3, 4


class UsageError(Exception):
    pass


def _names(p):
    return [f"X{v + 1}" for v in range(p)]


def _write_json(path, obj):
    with open(path, "w") as fh:
        json.dump(obj, fh, indent=2)
        fh.write("\n")


def _sha256(path):
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            h.update(chunk)
    return h.hexdigest()


# -- generate -------------------------------------------------------------


def cmd_generate(args):
    if args.p < 2 or args.n < 2:
        raise UsageError("--p and --n must be at least 2")
    rng = np.random.default_rng(args.seed)
    dag = random_dag(args.p, args.max_indegree, args.edge_prob, rng)
    spec = random_weights(dag, rng)
    names = _names(args.p)
    data = sample_sem(spec, args.n, rng, names)
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    data.write_csv(out / "data.csv")
    spec.write(out / "truth.json", names)
    dag.write_edge_csv(out / "truth_edges.csv", names)
    cpdag_of(dag).write_csv(out / "truth_cpdag.csv", names)
    print(f"wrote {args.n} x {args.p} data with {dag.n_edges} true edges to {out}")
    return EXIT_OK


# -- run ------------------------------------------------------------------


def _read_perm_file(path, names):
    text = Path(path).read_text().strip()
    try:
        items = json.loads(text)
    except json.JSONDecodeError:
        items = text.replace(",", " ").split()
    index = {name: k for k, name in enumerate(names)}
    perm = []
    for x in items:
        if isinstance(x, str) and x in index:
            perm.append(index[x])
        else:
            try:
                perm.append(int(x))
            except ValueError:
                raise DataError(f"{path}: unknown node {x!r}") from None
    return check_permutation(perm, len(names))


def parse_init(spec, names):
    if spec == "random":
        return RandomInit()
    if spec.startswith("file:"):
        return GivenPermutation(_read_perm_file(spec[5:], names))
    if spec.startswith("best-of:"):
        try:
            return BestOfM(int(spec[8:]))
        except ValueError:
            raise UsageError(f"bad --init {spec!r}") from None
    raise UsageError(f"--init must be random, file:<path> or best-of:<m>, got {spec!r}")


def _manifest(args, data_path, config, hyper, prior, names, chains):
    return {
        "tool": "imapmcmc",
        "version": __version__,
        "data": str(Path(data_path).resolve()),
        "data_sha256": _sha256(data_path),
        "config": config.to_json(),
        "hyper": hyper.to_json(),
        "prior": prior.to_json(names),
        "chains": chains,
        "out_dir": str(Path(args.out_dir).resolve()),
    }


def _run_settings(args):
    """Resolve (data_path, data, config, hyper, prior, chains) from flags or a manifest."""
    if args.manifest:
        with open(args.manifest) as fh:
            man = json.load(fh)
        data = Dataset.read_csv(man["data"])
        if _sha256(man["data"]) != man.get("data_sha256", _sha256(man["data"])):
            print("warning: data file changed since the manifest was written", file=sys.stderr)
        config = ChainConfig.from_json(man["config"])
        hyper = BgeHyper(**man.get("hyper", {}))
        prior = PriorSpec.from_json(man.get("prior", {}), data.names)
        return man["data"], data, config, hyper, prior, int(man.get("chains", 1))
    if not args.data:
        raise UsageError("run needs --data or --manifest")
    if args.thin < 1:
        raise UsageError("--thin must be at least 1")
    data = Dataset.read_csv(args.data)
    prior_obj = {}
    if args.prior:
        with open(args.prior) as fh:
            prior_obj = json.load(fh)
    if args.gamma is not None:
        prior_obj = dict(prior_obj, gamma=args.gamma)
    try:
        prior = PriorSpec.from_json(prior_obj, data.names)
        config = ChainConfig(
            iters=args.iters, burn_in=args.burnin, kappa=1.0 / args.thin,
            self_loop=args.self_loop, alpha=args.alpha, seed=args.seed,
            init=parse_init(args.init, data.names), ridge=args.ridge,
        )
    except DataError:
        raise
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    if args.chains < 1:
        raise UsageError("--chains must be at least 1")
    return args.data, data, config, BgeHyper(), prior, args.chains


def cmd_run(args):
    data_path, data, config, hyper, prior, chains = _run_settings(args)
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    configs = [replace(config, seed=config.seed + k) for k in range(chains)]
    if chains == 1:
        traces = [run_chain(data, config, hyper, prior)]
    else:
        traces = run_chains(data, configs, hyper, prior)
    summaries = []
    for k, tr in enumerate(traces):
        name = "trace.jsonl" if k == 0 else f"trace-{k}.jsonl"
        tr.write_jsonl(out / name)
        s = tr.summary()
        s["trace"] = name
        summaries.append(s)
    summary = dict(summaries[0])
    summary["kernels"] = kernels.BACKEND
    if chains > 1:
        summary["chains"] = summaries
    _write_json(out / "summary.json", summary)
    _write_json(out / "manifest.json",
                _manifest(args, data_path, config, hyper, prior, data.names, chains))
    tr = traces[0]
    print(f"{len(tr.samples)} samples, acceptance {tr.acceptance_rate:.3f}" if tr.proposals
          else "0 iterations, empty trace")
    return EXIT_OK


# -- evaluate -------------------------------------------------------------


def _trace_names(trace_path):
    summ = Path(trace_path).with_name("summary.json")
    if summ.exists():
        with open(summ) as fh:
            return json.load(fh).get("names")
    return None


def _load_truth(path, names):
    if str(path).endswith(".json"):
        with open(path) as fh:
            obj = json.load(fh)
        if names is None:
            names = obj.get("names") or _names(int(obj["p"]))
        if obj["edges"] and len(obj["edges"][0]) == 3:
            return SemSpec.from_json(obj).dag, names
        return read_dag(path, names), names
    if names is None:
        raise UsageError("an edge-CSV truth needs summary.json next to the trace for node names")
    return read_dag(path, names), names


def cmd_evaluate(args):
    names = _trace_names(args.trace)
    truth, names = _load_truth(args.truth, names)
    p = len(names)
    if truth.p != p:
        raise DataError(f"truth has {truth.p} nodes but the trace has {p}")
    samples = read_trace_jsonl(args.trace, p)
    est = feature_posterior([s.dag() for s in samples], args.kind, names)
    roc = roc_curve(est, truth)
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    est.write_csv(out / "features.csv")
    roc.write_csv(out / "roc.csv")
    roc.write_metrics(out / "metrics.json")
    print(f"{args.kind} AUROC {roc.auroc:.4f} over {len(samples)} samples")
    return EXIT_OK


# -- bench ----------------------------------------------------------------


def bench_sizes(p_list, iters, seed, n=1000, alpha=0.05):
    """Mean per-iteration time for one short chain per size.

    An untimed warm-up of the same length fills the CI and score caches
    first; the timed chain continues from where it stopped, so neither the
    initial minimal I-MAP nor cache filling is counted.
    """
    rows = []
    for p in p_list:
        rng = np.random.default_rng([seed, p])
        dag = random_dag(p, 3, None, rng)
        stats = compute_suffstats(sample_sem(random_weights(dag, rng), n, rng))
        model = MinImapModel(stats, alpha)
        warm = run_chain(stats, ChainConfig(iters=iters, burn_in=iters, alpha=alpha, seed=seed),
                         model=model)
        config = ChainConfig(iters=iters, burn_in=iters, alpha=alpha, seed=seed + 1,
                             init=GivenPermutation(warm.final_perm))
        tr = run_chain(stats, config, model=model)
        rows.append((p, tr.timings["mean_iter_seconds"]))
    base = rows[0][1]
    logp = np.log([p for p, _ in rows])
    logt = np.log([t for _, t in rows])
    slope = float(np.polyfit(logp, logt, 1)[0]) if len(rows) > 1 else math.nan
    return [(p, t, t / base) for p, t in rows], slope


def cmd_bench(args):
    try:
        p_list = sorted({int(x) for x in args.p_list.split(",") if x.strip()})
    except ValueError:
        raise UsageError(f"bad --p-list {args.p_list!r}") from None
    if not p_list or min(p_list) < 2 or args.iters_per_p < 1:
        raise UsageError("--p-list needs sizes >= 2 and --iters-per-p >= 1")
    rows, slope = bench_sizes(p_list, args.iters_per_p, args.seed)
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    with open(out / "bench.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["p", "mean_iter_time", "relative_time"])
        for p, t, rel in rows:
            w.writerow([p, f"{t:.6g}", f"{rel:.6g}"])
    _write_json(out / "bench.json", {"slope": slope, "kernels": kernels.BACKEND,
                                     "iters_per_p": args.iters_per_p})
    for p, t, rel in rows:
        print(f"p={p:4d}  {t * 1e6:10.1f} us/iter  x{rel:.2f}")
    print(f"log-log slope c = {slope:.2f}")
    return EXIT_OK


# -- parser ---------------------------------------------------------------


def build_parser():
    ap = argparse.ArgumentParser(prog="imapmcmc", description=__doc__.splitlines()[0])
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)

    g = sub.add_parser("generate", help="synthetic linear Gaussian SEM data")
    g.add_argument("--p", type=int, required=True)
    g.add_argument("--n", type=int, required=True)
    g.add_argument("--max-indegree", type=int, default=None)
    g.add_argument("--edge-prob", type=float, default=None)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--out-dir", required=True)
    g.set_defaults(func=cmd_generate)

    r = sub.add_parser("run", help="run the minimal I-MAP chain")
    r.add_argument("--data")
    r.add_argument("--alpha", type=float, default=0.05)
    r.add_argument("--gamma", type=float, default=None)
    r.add_argument("--iters", type=int, default=100_000)
    r.add_argument("--burnin", type=int, default=20_000)
    r.add_argument("--thin", type=int, default=100)
    r.add_argument("--self-loop", type=float, default=0.1)
    r.add_argument("--seed", type=int, default=0)
    r.add_argument("--init", default="random", help="random | file:<path> | best-of:<m>")
    r.add_argument("--prior", help="JSON prior (gamma, order_classes, paths)")
    r.add_argument("--chains", type=int, default=1, help="independent chains, seeds seed+k")
    r.add_argument("--ridge", action="store_true", help="regularize a singular correlation")
    r.add_argument("--manifest", help="replay a previous run from its manifest.json")
    r.add_argument("--out-dir", required=True)
    r.set_defaults(func=cmd_run)

    e = sub.add_parser("evaluate", help="edge features and ROC against a known truth")
    e.add_argument("--trace", required=True)
    e.add_argument("--truth", required=True)
    e.add_argument("--kind", choices=KINDS, default="directed")
    e.add_argument("--out-dir", required=True)
    e.set_defaults(func=cmd_evaluate)

    b = sub.add_parser("bench", help="per-iteration time against p")
    b.add_argument("--p-list", default="20,40,80")
    b.add_argument("--iters-per-p", type=int, default=2000)
    b.add_argument("--seed", type=int, default=0)
    b.add_argument("--out-dir", required=True)
    b.set_defaults(func=cmd_bench)
    return ap


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except NumericalError as exc:
        print(f"numerical error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (DataError, DegenerateTruth, EmptyTrace, OSError, KeyError) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
