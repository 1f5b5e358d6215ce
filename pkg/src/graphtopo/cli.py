"""Command-line front end.

Every subcommand reads CSV signals (one row per node, one column per
sample), writes its results into ``--out`` and prints a JSON summary that
also lands in ``summary.json``.  Node indices in edge lists are 1-based.
Flags override values from ``--config``; outputs depend only on the inputs
and parameters, so repeated runs are byte-identical.
"""
import argparse
import json
import math
import os
import sys
from importlib.resources import files

import numpy as np

from . import corrnet, dynjd, gmrf, jisg, ksvarm, semdag, smoothlearn
from ._accel import set_threads
from .core import Graph, generate_sem_signals, generate_smooth_signals, generate_synthetic, \
    score_recovery
from .errors import GraphTopoError, InputFormatError
from .io import read_edges, read_matrix, write_edges, write_matrix

DEFAULT_SEED = 0

# JSON outputs and the shipped schema each one follows
OUTPUT_SCHEMAS = {
    "summary.json": "summary",
    "trace.json": "trace",
    "norms.json": "ksvarm_norms",
    "history.jsonl": "smooth_history",
}
DIAGNOSTICS_SCHEMAS = {"sem": "sem_diagnostics", "varm": "varm_diagnostics",
                       "dag": "dag_diagnostics", "jd": "jd_diagnostics"}


class UsageError(Exception):
    pass


def load_schema(name):
    """Parsed JSON schema ``name`` shipped in ``graphtopo/schemas``."""
    path = files("graphtopo").joinpath("schemas", f"{name}.schema.json")
    return json.loads(path.read_text())


def schema_for(command, filename):
    if filename == "diagnostics.json":
        return DIAGNOSTICS_SCHEMAS.get(command)
    return OUTPUT_SCHEMAS.get(filename)


# --------------------------------------------------------------------------
# helpers
# --------------------------------------------------------------------------

def _json_default(o):
    if isinstance(o, np.integer):
        return int(o)
    if isinstance(o, np.floating):
        return float(o)
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, (tuple, set)):
        return list(o)
    raise TypeError(f"cannot serialize {type(o).__name__}")


def _finite(x):
    """Non-finite floats become strings so the JSON stays standard."""
    if isinstance(x, float) and not math.isfinite(x):
        return repr(x)
    if isinstance(x, dict):
        return {k: _finite(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_finite(v) for v in x]
    return x


def dumps(obj):
    obj = json.loads(json.dumps(obj, default=_json_default))
    return json.dumps(_finite(obj), sort_keys=True, indent=2) + "\n"


def _write_json(path, obj):
    with open(path, "w") as fh:
        fh.write(dumps(obj))


def _out(args, name):
    return os.path.join(args.out, name)


def _signals(path, allow_missing=False):
    y = read_matrix(path, allow_missing=allow_missing)
    if y.shape[0] < 2:
        raise InputFormatError(f"{path}: need at least two nodes (rows)")
    return y


def _float_list(text, what):
    try:
        return [float(v) for v in text.replace(";", ",").split(",") if v.strip()]
    except ValueError:
        raise UsageError(f"malformed {what}: {text!r}") from None


def _boundaries(text):
    if os.path.exists(text):
        with open(text) as fh:
            text = fh.read()
    vals = _float_list(text.replace("\n", ","), "segment boundaries")
    if any(v != int(v) for v in vals):
        raise UsageError("segment boundaries must be integers")
    return [int(v) for v in vals]


def _slots(args):
    """Slot signal matrices from ``--inputs`` or from ``--input`` split at ``--segments``."""
    if args.inputs:
        return [_signals(p) for p in args.inputs]
    if not args.input:
        raise UsageError("give --inputs (one CSV per slot) or --input with --segments")
    y = _signals(args.input)
    if not args.segments:
        raise UsageError("--input needs --segments to define the slots")
    cuts = [0] + _boundaries(args.segments) + [y.shape[1]]
    if any(b <= a for a, b in zip(cuts[:-1], cuts[1:])):
        raise UsageError("segment boundaries must be increasing and inside the sample range")
    return [y[:, a:b] for a, b in zip(cuts[:-1], cuts[1:])]


def _edges_summary(g):
    return {"n_nodes": g.n_nodes, "n_edges": g.n_edges(), "directed": g.directed}


# --------------------------------------------------------------------------
# subcommands
# --------------------------------------------------------------------------

def cmd_corr(args):
    y = _signals(args.input)
    if args.partial:
        cov = corrnet.sample_covariance(y)
        lam = _lambda(args.lam, y)
        est = gmrf.graphical_lasso(cov, lam)
        pc = corrnet.partial_correlations(est)
        w = np.where(np.abs(pc) > args.threshold, pc, 0.0)
        np.fill_diagonal(w, 0.0)
        g = Graph(w, signed=True)
        extra = {"lambda": lam, "partial": True}
    else:
        g = corrnet.correlation_network(y, q=args.q, weights=args.weights)
        extra = {"q": args.q, "weights": args.weights, "partial": False}
    write_edges(_out(args, "edges.csv"), g)
    return {"graph": _edges_summary(g), "params": extra, "outputs": ["edges.csv"]}


def _lambda(value, y):
    if value in (None, "auto"):
        return float(gmrf.default_lambda(y.shape[0], y.shape[1]))
    try:
        lam = float(value)
    except ValueError:
        raise UsageError(f"--lambda must be a number or 'auto', got {value!r}") from None
    return lam


def cmd_glasso(args):
    y = _signals(args.input)
    cov = corrnet.sample_covariance(y)
    lam = _lambda(args.lam, y)
    if args.laplacian:
        est = gmrf.laplacian_gmrf(cov, lam, tol=args.tol, max_iter=args.max_iter)
        theta = est.theta
        w = est.weights
        info = {"loading": est.loading, "converged": est.converged, "iterations": est.iterations}
    else:
        est = gmrf.graphical_lasso(cov, lam, tol=args.tol, max_iter=args.max_iter)
        theta = est.theta
        w = -np.asarray(theta, dtype=np.float64).copy()
        np.fill_diagonal(w, 0.0)
        info = {"converged": est.converged, "iterations": est.iterations,
                "kkt_residual": est.kkt_residual}
    w = np.where(np.abs(w) > args.threshold, w, 0.0)
    g = Graph(w, signed=bool(np.any(w < 0)))
    write_matrix(_out(args, "precision.csv"), theta)
    write_edges(_out(args, "edges.csv"), g)
    return {"graph": _edges_summary(g), "params": {"lambda": lam, "laplacian": args.laplacian},
            "solver": info, "outputs": ["precision.csv", "edges.csv"]}


def cmd_smooth_learn(args):
    y = _signals(args.input)
    e = smoothlearn.distance_vector(y)
    res = smoothlearn.learn_graph(e, args.alpha, args.beta, tol=args.tol, max_iter=args.max_iter,
                                  record=args.history)
    g = res.graph
    write_edges(_out(args, "edges.csv"), g)
    outputs = ["edges.csv"]
    if args.history:
        w_star = res.w.w
        lam0 = np.zeros(e.n_nodes)
        with open(_out(args, "history.jsonl"), "w") as fh:
            for k, wk in enumerate(res.history, start=1):
                bound = float(smoothlearn.envelope_bound(k, lam0, res.dual.lam, args.beta,
                                                         e.n_nodes))
                row = {"k": k, "error": float(np.linalg.norm(wk - w_star)), "bound": bound,
                       "w": wk.tolist()}
                fh.write(json.dumps(row, sort_keys=True) + "\n")
        outputs.append("history.jsonl")
    return {"graph": _edges_summary(g), "params": {"alpha": args.alpha, "beta": args.beta},
            "solver": {"iterations": res.iterations, "converged": res.converged,
                       "primal_objective": res.primal_obj, "duality_gap": res.duality_gap},
            "outputs": outputs}


def cmd_disc_learn(args):
    classes = [_signals(p) for p in args.inputs]
    if len(classes) < 2:
        raise UsageError("disc-learn needs at least two class CSVs")
    graphs = smoothlearn.learn_class_graphs(classes, args.alpha, args.beta, gamma=args.gamma)
    outputs = []
    for c, g in enumerate(graphs, start=1):
        write_edges(_out(args, f"class{c}_edges.csv"), g)
        outputs.append(f"class{c}_edges.csv")
    summary = {"params": {"alpha": args.alpha, "beta": args.beta, "gamma": args.gamma},
               "classes": [_edges_summary(g) for g in graphs], "outputs": outputs}
    if args.classify:
        test = read_matrix(args.classify)
        labels = [smoothlearn.gft_classify(graphs, test[:, t], n_low=args.n_low) + 1
                  for t in range(test.shape[1])]
        with open(_out(args, "predictions.csv"), "w") as fh:
            fh.write("".join(f"{lab}\n" for lab in labels))
        outputs.append("predictions.csv")
        summary["predictions"] = {str(c): labels.count(c) for c in range(1, len(graphs) + 1)}
    return summary


def cmd_sem(args):
    y = _signals(args.input)
    x = _signals(args.exogenous) if args.exogenous else None
    model = semdag.sem_fit(y, x, alpha=args.alpha, ridge=args.ridge)
    g = model.graph
    write_edges(_out(args, "edges.csv"), g)
    _write_json(_out(args, "diagnostics.json"),
                {"objective_trace": list(model.objective_trace), "b": model.b})
    return {"graph": _edges_summary(g), "params": {"alpha": args.alpha, "ridge": args.ridge},
            "outputs": ["edges.csv", "diagnostics.json"]}


def cmd_dag(args):
    y = _signals(args.input)
    res = semdag.dag_fit(y, alpha=args.alpha, h_kind=args.h, w_tol=args.w_tol, s=args.s)
    g = res.graph
    write_edges(_out(args, "edges.csv"), g)
    _write_json(_out(args, "diagnostics.json"),
                {"h_trace": list(res.h_trace), "h_value": res.h_value, "is_dag": res.is_dag,
                 "rho": res.rho, "outer_iterations": res.outer_iterations})
    return {"graph": _edges_summary(g), "params": {"alpha": args.alpha, "h": args.h},
            "solver": {"h_value": res.h_value, "is_dag": res.is_dag},
            "outputs": ["edges.csv", "diagnostics.json"]}


def cmd_varm(args):
    y = _signals(args.input)
    model = semdag.varm_fit(y, order=args.lags, lam=args.lam)
    g = model.graph(rule=args.rule)
    write_edges(_out(args, "edges.csv"), g)
    _write_json(_out(args, "diagnostics.json"),
                {"objective_trace": list(model.objective_trace), "lags": model.lags})
    return {"graph": _edges_summary(g),
            "params": {"lags": args.lags, "lambda": args.lam, "rule": args.rule},
            "outputs": ["edges.csv", "diagnostics.json"]}


def cmd_ksvarm(args):
    y = _signals(args.input)
    specs = [ksvarm.KernelSpec.parse(s) for s in args.kernels.split(",") if s.strip()]
    stack = ksvarm.build_kernel_stack(y, args.lags, specs, instantaneous=not args.no_instantaneous)
    lam = args.lam
    if args.lambda_frac is not None:
        lam = args.lambda_frac * ksvarm.ksvarm_lambda_max(stack, y)
    model = ksvarm.ksvarm_fit(stack, y, lam, edge_threshold=args.edge_threshold)
    g = model.edge_graph
    write_edges(_out(args, "edges.csv"), g)
    table = [dict(r, source=r["source"] + 1, target=r["target"] + 1,
                  kernel=args.kernels.split(",")[r["kernel"]].strip())
             for r in model.norm_table()]
    _write_json(_out(args, "norms.json"), {"groups": table})
    return {"graph": _edges_summary(g), "params": {"lags": args.lags, "lambda": lam,
                                                   "kernels": args.kernels},
            "outputs": ["edges.csv", "norms.json"]}


def _sequence_outputs(args, graphs, differences, extra):
    outputs = []
    for t, g in enumerate(graphs, start=1):
        write_edges(_out(args, f"slot{t}_edges.csv"), g)
        outputs.append(f"slot{t}_edges.csv")
    return dict(extra, slots=len(graphs), temporal_differences=list(differences), outputs=outputs)


def cmd_tv_smooth(args):
    slots = _slots(args)
    dists = [smoothlearn.distance_vector(y) for y in slots]
    res = dynjd.tv_smooth_learn(dists, args.alpha, args.beta, args.eta)
    return _sequence_outputs(args, res.sequence.graphs, res.sequence.temporal_differences(),
                             {"params": {"alpha": args.alpha, "beta": args.beta, "eta": args.eta},
                              "solver": {"sweeps": res.sweeps, "converged": res.converged}})


def cmd_tv_glasso(args):
    slots = _slots(args)
    covs = [corrnet.sample_covariance(y) for y in slots]
    lam = _lambda(args.lam, slots[0])
    res = dynjd.tv_graphical_lasso(covs, lam, args.eta)
    graphs = []
    for th in res.thetas:
        w = -np.asarray(th, dtype=np.float64).copy()
        np.fill_diagonal(w, 0.0)
        graphs.append(Graph(w, signed=True))
    return _sequence_outputs(args, graphs, res.temporal_differences(),
                             {"params": {"lambda": lam, "eta": args.eta},
                              "solver": {"iterations": res.iterations,
                                         "converged": res.converged}})


def cmd_dyn_sem(args):
    if not args.inputs:
        raise UsageError("dyn-sem needs --inputs (one N x C cascade CSV per slot)")
    ys = [_signals(p) for p in args.inputs]
    if any(y.shape != ys[0].shape for y in ys):
        raise InputFormatError("all slot CSVs must have the same shape")
    x = _signals(args.exogenous)
    track = dynjd.dynamic_sem_track(np.stack(ys), x, gamma=args.gamma, alpha=args.alpha)
    seq = track.sequence
    return _sequence_outputs(args, seq.graphs, seq.temporal_differences(),
                             {"params": {"gamma": args.gamma, "alpha": args.alpha}})


def _anchors(text):
    out = []
    for part in text.split(";"):
        if not part.strip():
            continue
        fields = part.split(",")
        if len(fields) != 3:
            raise UsageError(f"anchor {part!r} must be i,j,value")
        try:
            i, j, v = int(fields[0]), int(fields[1]), float(fields[2])
        except ValueError:
            raise UsageError(f"malformed anchor {part!r}") from None
        out.append((i - 1, j - 1, v))
    return out


def cmd_jd(args):
    y = _signals(args.input)
    slices = dynjd.segment_correlations(y, _boundaries(args.segments))
    problem = dynjd.JdProblem(slices, _anchors(args.anchors or ""))
    res = dynjd.jd_fit(problem)
    write_matrix(_out(args, "h.csv"), res.h)
    write_edges(_out(args, "edges.csv"), res.w)
    _write_json(_out(args, "diagnostics.json"),
                {"residual": res.residual, "iterations": res.iterations,
                 "objective_trace": list(res.objective_trace), "diagnostics": res.diagnostics})
    return {"graph": _edges_summary(res.w), "solver": {"residual": res.residual},
            "outputs": ["h.csv", "edges.csv", "diagnostics.json"]}


def cmd_jisg(args):
    z = _signals(args.input, allow_missing=True)
    obs = jisg.PartialObservations.from_matrix(z)
    res = jisg.jisg_fit(obs, args.mu, args.l1, args.l2, sweeps=args.sweeps)
    write_matrix(_out(args, "signals.csv"), res.signals)
    write_edges(_out(args, "edges.csv"), res.w)
    _write_json(_out(args, "trace.json"), {"objective_trace": list(res.objective_trace)})
    return {"graph": _edges_summary(res.w),
            "params": {"mu": args.mu, "l1": args.l1, "l2": args.l2, "sweeps": args.sweeps},
            "solver": {"sweeps": res.sweeps, "converged": res.converged},
            "outputs": ["signals.csv", "edges.csv", "trace.json"]}


def cmd_synth(args):
    wr = tuple(_float_list(args.weight_range, "weight range")) if args.weight_range else (1.0, 1.0)
    if len(wr) != 2:
        raise UsageError("--weight-range takes two numbers")
    g = generate_synthetic(args.kind, args.n, seed=args.seed, p=args.p, weight_range=wr)
    if args.signals == "smooth" or (args.signals is None and not g.directed):
        y = generate_smooth_signals(g, args.t, delta=args.delta, seed=args.seed).data
    else:
        y = generate_sem_signals(g, args.t, noise_scale=args.noise, seed=args.seed).data
    write_edges(_out(args, "truth.csv"), g)
    write_matrix(_out(args, "signals.csv"), y)
    return {"graph": _edges_summary(g), "params": {"kind": args.kind, "n": args.n, "t": args.t,
                                                   "seed": args.seed},
            "outputs": ["truth.csv", "signals.csv"]}


def cmd_score(args):
    est = read_edges(args.estimate, n_nodes=args.n, directed=args.directed)
    tru = read_edges(args.truth, n_nodes=args.n, directed=args.directed)
    rep = score_recovery(est, tru, weight_tol=args.weight_tol)
    return {"score": {"precision": rep.precision, "recall": rep.recall, "f1": rep.f1,
                      "frobenius_error": rep.frobenius_error,
                      "true_positives": rep.true_positives, "n_estimated": rep.n_estimated,
                      "n_true": rep.n_true},
            "outputs": []}


# --------------------------------------------------------------------------
# parser
# --------------------------------------------------------------------------

def _common(p, inputs="input"):
    p.add_argument("--out", default=".", help="output directory (default: current)")
    if inputs == "input":
        p.add_argument("--input", required=True, help="signal CSV, one row per node")
    elif inputs == "slots":
        p.add_argument("--input", help="signal CSV to split at --segments")
        p.add_argument("--inputs", nargs="+", help="one signal CSV per slot")
        p.add_argument("--segments", help="segment starts, comma separated, or a file")


def _global_flags(p, default):
    # accepted before or after the subcommand; SUPPRESS keeps the subparser
    # from overwriting a value given at the top level
    p.add_argument("--config", default=default,
                   help="JSON file of parameter defaults (flags override)")
    p.add_argument("--threads", type=int, default=default,
                   help="cap on worker threads (default: $GRAPHTOPO_THREADS)")
    p.add_argument("--seed", type=int, default=default,
                   help=f"random seed (default: {DEFAULT_SEED})")


def build_parser():
    parser = argparse.ArgumentParser(prog="graphtopo",
                                     description="Network topology identification from nodal signals.")
    _global_flags(parser, argparse.SUPPRESS)
    parser.set_defaults(config=None, threads=None, seed=DEFAULT_SEED)
    shared = argparse.ArgumentParser(add_help=False)
    _global_flags(shared, argparse.SUPPRESS)
    sub = parser.add_subparsers(dest="command", metavar="COMMAND")
    sub.required = True
    _add = sub.add_parser

    def add_parser(name, **kw):
        return _add(name, parents=[shared], **kw)

    sub.add_parser = add_parser

    p = sub.add_parser("corr", help="correlation network with BH FDR control")
    _common(p)
    p.add_argument("--q", type=float, default=0.05)
    p.add_argument("--weights", choices=("binary", "rho"), default="binary")
    p.add_argument("--partial", action="store_true",
                   help="partial correlations from a graphical-lasso precision estimate")
    p.add_argument("--lambda", dest="lam", default="auto")
    p.add_argument("--threshold", type=float, default=0.0)
    p.set_defaults(func=cmd_corr)

    p = sub.add_parser("glasso", help="graphical lasso or Laplacian-constrained GMRF")
    _common(p)
    p.add_argument("--lambda", dest="lam", default="auto")
    p.add_argument("--laplacian", action="store_true")
    p.add_argument("--tol", type=float, default=1e-6)
    p.add_argument("--max-iter", type=int, default=500)
    p.add_argument("--threshold", type=float, default=0.0)
    p.set_defaults(func=cmd_glasso)

    p = sub.add_parser("smooth-learn", help="graph learning from smooth signals")
    _common(p)
    p.add_argument("--alpha", type=float, required=True)
    p.add_argument("--beta", type=float, required=True)
    p.add_argument("--tol", type=float, default=1e-8)
    p.add_argument("--max-iter", type=int, default=100000)
    p.add_argument("--history", type=int, default=0,
                   help="dump the first K primal iterates as JSON lines")
    p.set_defaults(func=cmd_smooth_learn)

    p = sub.add_parser("disc-learn", help="discriminative per-class graph learning")
    p.add_argument("--out", default=".")
    p.add_argument("--inputs", nargs="+", required=True, help="one training CSV per class")
    p.add_argument("--alpha", type=float, default=1.0)
    p.add_argument("--beta", type=float, default=1.0)
    p.add_argument("--gamma", type=float, default=0.0)
    p.add_argument("--classify", help="CSV of test signals (one per column)")
    p.add_argument("--n-low", type=int, default=None)
    p.set_defaults(func=cmd_disc_learn)

    p = sub.add_parser("sem", help="sparse linear structural equation model")
    _common(p)
    p.add_argument("--exogenous", help="CSV of exogenous inputs, same shape as --input")
    p.add_argument("--alpha", type=float, default=0.0)
    p.add_argument("--ridge", type=float, default=0.0)
    p.set_defaults(func=cmd_sem)

    p = sub.add_parser("dag", help="continuous DAG learning with an acyclicity constraint")
    _common(p)
    p.add_argument("--h", choices=("expm", "poly", "ldet"), default="expm")
    p.add_argument("--alpha", type=float, default=0.1)
    p.add_argument("--w-tol", type=float, default=0.3)
    p.add_argument("--s", type=float, default=1.0, help="log-det scale")
    p.set_defaults(func=cmd_dag)

    p = sub.add_parser("varm", help="sparse vector autoregression")
    _common(p)
    p.add_argument("--lags", type=int, default=1)
    p.add_argument("--lambda", dest="lam", type=float, default=0.0)
    p.add_argument("--rule", choices=("or", "and"), default="or")
    p.set_defaults(func=cmd_varm)

    p = sub.add_parser("ksvarm", help="kernel-based nonlinear structural VAR")
    _common(p)
    p.add_argument("--lags", type=int, default=1)
    p.add_argument("--kernels", default="linear,gaussian")
    p.add_argument("--lambda", dest="lam", type=float, default=0.0)
    p.add_argument("--lambda-frac", type=float, default=None,
                   help="penalty as a fraction of the smallest all-zero penalty")
    p.add_argument("--edge-threshold", type=float, default=0.0)
    p.add_argument("--no-instantaneous", action="store_true", help="drop lag-0 terms")
    p.set_defaults(func=cmd_ksvarm)

    p = sub.add_parser("tv-smooth", help="time-varying smooth-signal graph learning")
    _common(p, "slots")
    p.add_argument("--alpha", type=float, required=True)
    p.add_argument("--beta", type=float, required=True)
    p.add_argument("--eta", type=float, default=1.0)
    p.set_defaults(func=cmd_tv_smooth)

    p = sub.add_parser("tv-glasso", help="time-varying graphical lasso")
    _common(p, "slots")
    p.add_argument("--lambda", dest="lam", default="auto")
    p.add_argument("--eta", type=float, default=1.0)
    p.set_defaults(func=cmd_tv_glasso)

    p = sub.add_parser("dyn-sem", help="dynamic SEM tracking from cascades")
    _common(p, "none")
    p.add_argument("--inputs", nargs="+", required=True, help="one N x C cascade CSV per slot")
    p.add_argument("--exogenous", required=True, help="N x C exogenous input CSV")
    p.add_argument("--gamma", type=float, default=1.0)
    p.add_argument("--alpha", type=float, default=0.0)
    p.set_defaults(func=cmd_dyn_sem)

    p = sub.add_parser("jd", help="anchored joint diagonalization of segment correlations")
    _common(p)
    p.add_argument("--segments", required=True, help="segment starts, comma separated, or a file")
    p.add_argument("--anchors", default="", help='"i,j,value;..." with 1-based indices')
    p.set_defaults(func=cmd_jd)

    p = sub.add_parser("jisg", help="joint signal and topology inference (empty cell = missing)")
    _common(p)
    p.add_argument("--mu", type=float, required=True)
    p.add_argument("--l1", type=float, default=0.1)
    p.add_argument("--l2", type=float, default=0.1)
    p.add_argument("--sweeps", type=int, default=50)
    p.set_defaults(func=cmd_jisg)

    p = sub.add_parser("synth", help="ground-truth graph plus signals")
    p.add_argument("--out", default=".")
    p.add_argument("--kind", choices=("chain", "erdos_renyi", "random_dag"), required=True)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--t", type=int, required=True)
    p.add_argument("--p", type=float, default=0.3)
    p.add_argument("--weight-range", default=None, help="low,high")
    p.add_argument("--signals", choices=("smooth", "sem"), default=None,
                   help="default: smooth for undirected kinds, sem for random_dag")
    p.add_argument("--delta", type=float, default=1e-2)
    p.add_argument("--noise", type=float, default=1.0)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("score", help="support precision/recall/F1 of an edge list")
    p.add_argument("--out", default=".")
    p.add_argument("--estimate", required=True)
    p.add_argument("--truth", required=True)
    p.add_argument("--n", type=int, default=None)
    p.add_argument("--directed", action="store_true")
    p.add_argument("--weight-tol", type=float, default=0.0)
    p.set_defaults(func=cmd_score)
    return parser


def _load_config(path):
    try:
        with open(path) as fh:
            cfg = json.load(fh)
    except OSError as exc:
        raise UsageError(f"cannot read config {path}: {exc.strerror}") from None
    except json.JSONDecodeError as exc:
        raise UsageError(f"config {path} is not valid JSON: {exc.msg}") from None
    if not isinstance(cfg, dict):
        raise UsageError("the config file must hold a JSON object")
    return {k.replace("-", "_"): v for k, v in cfg.items()}


def _parse(argv):
    parser = build_parser()
    pre = argparse.ArgumentParser(add_help=False)
    pre.add_argument("--config")
    known, _ = pre.parse_known_args(argv)
    if known.config:
        cfg = _load_config(known.config)
        # config values become subparser defaults so explicit flags still win
        sub = next(a for a in parser._actions if isinstance(a, argparse._SubParsersAction))
        for sp in sub.choices.values():
            dests = {a.dest for a in sp._actions}
            sp.set_defaults(**{k: v for k, v in cfg.items() if k in dests})
            for a in sp._actions:
                if a.dest in cfg and a.required:
                    a.required = False
        parser.set_defaults(**{k: v for k, v in cfg.items() if k in ("threads", "seed")})
    return parser, parser.parse_args(argv)


def main(argv=None):
    argv = sys.argv[1:] if argv is None else list(argv)
    try:
        parser, args = _parse(argv)
    except UsageError as exc:
        print(f"graphtopo: error: {exc}", file=sys.stderr)
        return 2
    except SystemExit as exc:
        return int(exc.code or 0)
    threads = args.threads
    if threads is None and os.environ.get("GRAPHTOPO_THREADS"):
        try:
            threads = int(os.environ["GRAPHTOPO_THREADS"])
        except ValueError:
            print("graphtopo: error: GRAPHTOPO_THREADS must be an integer", file=sys.stderr)
            return 2
    if threads is not None and threads < 1:
        print("graphtopo: error: --threads must be positive", file=sys.stderr)
        return 2
    set_threads(threads)
    try:
        os.makedirs(args.out, exist_ok=True)
        summary = args.func(args)
    except (GraphTopoError, UsageError, np.linalg.LinAlgError) as exc:
        print(f"graphtopo: error: {exc}", file=sys.stderr)
        return 2
    except FileNotFoundError as exc:
        print(f"graphtopo: error: no such file: {exc.filename}", file=sys.stderr)
        return 2
    summary = dict(summary, command=args.command)
    text = dumps(summary)
    with open(_out(args, "summary.json"), "w") as fh:
        fh.write(text)
    sys.stdout.write(text)
    return 0


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
