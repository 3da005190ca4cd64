"""Command-line entry point.

Exit codes
----------
0  success
1  unexpected library error
2  bad command-line usage
3  empty or unparsable input
4  invalid values (unknown class, score outside [0, 1], key mismatch)
5  taxonomy contains a cycle
6  no common ancestor / too many root paths
7  network too large (fanout, treewidth, enumeration size)
8  EM objective decreased

Every option can also be given in a ``--config`` file of ``key=value``
lines (dashes or underscores).  Flags given on the command line win.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from . import __version__
from . import io as tio
from .errors import TaxAggError, ValidationError
from .estimation import em_fit, fit_supervised
from .metrics import evaluate
from .network import LEAK_RULES, build_network
from .paths import ENTROPY_MEASURES, EntropyPolicy, EntryLevelPolicy, MarginalPolicy
from .pipeline import aggregate_graphical, aggregate_heuristic_batch
from .synthetic import RNG_ALGORITHM, GenConfig, generate

log = logging.getLogger("taxagg")

# option name -> (converter, default); shared by flags and config files
OPTIONS = {
    "taxonomy": (str, None),
    "sheets": (str, None),
    "gold": (str, None),
    "params": (str, None),
    "predictions": (str, None),
    "entry_level": (str, None),
    "weights": (str, None),
    "leaks": (str, None),
    "priors": (str, None),
    "output": (str, "-"),
    "trace": (str, None),
    "out_dir": (str, None),
    "method": (str, "heuristic"),
    "policy": (str, None),
    "theta": (float, 0.3),
    "tau": (float, 0.5),
    "measure": (str, "score"),
    "kind": (str, "binormal"),
    "leak_rule": (str, "leaf-mass"),
    "fanout_cap": (int, 20),
    "treewidth_cap": (int, 20),
    "max_iters": (int, 100),
    "tol": (float, 1e-6),
    "sigma_floor": (float, 1e-3),
    "smoothing": (float, 1.0),
    "seed": (int, 0),
    "depth": (int, 3),
    "branching": (str, "3,4"),
    "dag_prob": (float, 0.0),
    "n_classifiers": (int, 10),
    "classes_per_classifier": (str, "8,12"),
    "n_instances": (int, 500),
    "mu0": (float, -1.0),
    "mu1": (float, 1.0),
    "sigma0": (float, 1.0),
    "sigma1": (float, 1.0),
    "mu_jitter": (float, 0.0),
}

HELP = {
    "taxonomy": "child<TAB>parent edge file",
    "sheets": "instance<TAB>classifier<TAB>class<TAB>score file",
    "gold": "instance<TAB>class gold labels",
    "params": "observation parameter file (initial values for em)",
    "predictions": "aggregate output (JSONL) or instance<TAB>class file",
    "entry_level": "stop the path at the first class listed in this file",
    "weights": "class<TAB>weight per-class weights for the structural priors",
    "leaks": "class<TAB>probability leak overrides",
    "priors": "class<TAB>probability prior overrides for childless classes",
    "output": "output file, '-' for stdout",
    "trace": "write the EM log-likelihood trace here",
    "out_dir": "directory for simulated files",
    "method": "heuristic or graphical",
    "policy": "entropy or marginal (default follows --method)",
    "theta": "entropy threshold of the entropy policy",
    "tau": "marginal threshold of the marginal policy",
    "measure": "entropy measure: score or normalized",
    "kind": "observation model: binormal or discrete",
    "leak_rule": "leaf-mass or inverse",
    "fanout_cap": "largest number of children before OR chains are inserted",
    "treewidth_cap": "largest clique size allowed in the junction tree",
    "max_iters": "EM iteration limit",
    "tol": "stop EM when the log-likelihood gain falls below this",
    "sigma_floor": "smallest fitted standard deviation",
    "smoothing": "pseudo-count for discrete parameters",
    "seed": "random seed",
    "depth": "taxonomy depth",
    "branching": "children per class as 'lo,hi'",
    "dag_prob": "probability of a second parent",
    "n_classifiers": "number of classifiers",
    "classes_per_classifier": "classes scored per classifier as 'lo,hi'",
    "n_instances": "number of instances",
    "mu0": "mean score when the class is absent",
    "mu1": "mean score when the class is present",
    "sigma0": "score spread when the class is absent",
    "sigma1": "score spread when the class is present",
    "mu_jitter": "per-hook uniform jitter on the means",
}


def _add(p, *names):
    for name in names:
        conv, default = OPTIONS[name]
        text = HELP[name] + ("" if default is None else f" (default {default})")
        p.add_argument("--" + name.replace("_", "-"), dest=name, type=conv, default=None,
                       help=text.replace("%", "%%"))


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="taxagg",
        description="Aggregate flat classifier scores into taxonomy label paths.",
    )
    parser.add_argument("--version", action="version", version=f"taxagg {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true", help="debug diagnostics on stderr")
    sub = parser.add_subparsers(dest="command", required=True)

    def command(name, help_):
        p = sub.add_parser(name, help=help_)
        p.add_argument("--config", default=None, help="key=value file with default options")
        return p

    p = command("validate-taxonomy", "check a taxonomy file and print a summary")
    _add(p, "taxonomy", "output")

    p = command("aggregate", "decide a label path for every instance")
    _add(p, "taxonomy", "sheets", "params", "method", "policy", "theta", "tau", "measure",
         "entry_level", "weights", "leaks", "priors", "leak_rule", "fanout_cap", "treewidth_cap", "output", "seed")

    p = command("fit", "fit observation parameters from labeled sheets")
    _add(p, "taxonomy", "sheets", "gold", "kind", "sigma_floor", "smoothing", "output", "seed")

    p = command("em", "fit observation parameters from unlabeled sheets")
    _add(p, "taxonomy", "sheets", "params", "kind", "max_iters", "tol", "sigma_floor", "smoothing",
         "weights", "leaks", "priors", "leak_rule", "fanout_cap", "treewidth_cap", "output", "trace", "seed")

    p = command("evaluate", "LCA precision / recall / F1 of predictions against gold")
    _add(p, "taxonomy", "predictions", "gold", "output")

    p = command("simulate", "write a synthetic taxonomy, sheets, gold labels and true parameters")
    _add(p, "seed", "depth", "branching", "dag_prob", "n_classifiers", "classes_per_classifier",
         "n_instances", "mu0", "mu1", "sigma0", "sigma1", "mu_jitter", "out_dir")
    return parser


def resolve(args: argparse.Namespace) -> dict:
    """Merge defaults, the config file and command-line flags (in that order)."""
    own = [k for k in vars(args) if k in OPTIONS]
    opts = {k: OPTIONS[k][1] for k in own}
    if args.config:
        for k, raw in tio.read_config(args.config).items():
            if k not in OPTIONS:
                raise ValidationError(f"{args.config}: unknown config key {k!r}")
            if k not in own:
                log.debug("config key %s ignored by %s", k, args.command)
                continue
            try:
                opts[k] = OPTIONS[k][0](raw)
            except ValueError:
                raise ValidationError(f"{args.config}: bad value for {k}: {raw!r}") from None
    for k in own:
        v = getattr(args, k)
        if v is not None:
            opts[k] = v
    return opts


def _require(opts, *names):
    for n in names:
        if not opts.get(n):
            raise _Usage(f"--{n.replace('_', '-')} is required")


class _Usage(Exception):
    pass


def _pair(text, name):
    try:
        parts = [int(x) for x in str(text).split(",")]
    except ValueError:
        raise _Usage(f"--{name} expects 'lo,hi' integers, got {text!r}") from None
    if len(parts) == 1:
        parts = parts * 2
    if len(parts) != 2:
        raise _Usage(f"--{name} expects 'lo,hi', got {text!r}")
    return tuple(parts)


# where results go does not change what they are
_OUTPUT_KEYS = ("output", "trace", "out_dir")


def _meta(command, opts) -> dict:
    settings = {k: v for k, v in opts.items() if k not in _OUTPUT_KEYS}
    return {"command": command, "seed": opts.get("seed", 0), "config_digest": tio.config_digest(settings)}


def _policy(opts):
    name = opts["policy"] or ("entropy" if opts["method"] == "heuristic" else "marginal")
    if name == "entropy":
        if opts["measure"] not in ENTROPY_MEASURES:
            raise _Usage(f"--measure must be one of {ENTROPY_MEASURES}")
        base = EntropyPolicy(opts["theta"], opts["measure"])
    elif name == "marginal":
        base = MarginalPolicy(opts["tau"])
    else:
        raise _Usage(f"--policy must be 'entropy' or 'marginal', got {name!r}")
    if opts["entry_level"]:
        return EntryLevelPolicy(base, tio.read_entry_set(opts["entry_level"]))
    return base


def _network_options(opts) -> dict:
    if opts["leak_rule"] not in LEAK_RULES:
        raise _Usage(f"--leak-rule must be one of {LEAK_RULES}")
    out = {"leak_rule": opts["leak_rule"], "fanout_cap": opts["fanout_cap"], "treewidth_cap": opts["treewidth_cap"]}
    if opts.get("weights"):
        out["weights"] = tio.read_weights(opts["weights"])
    for name in ("leaks", "priors"):
        if opts.get(name):
            out[name] = tio.read_probabilities(opts[name])
    return out


def _kinds(opts, sheets) -> dict:
    if opts["kind"] not in ("binormal", "discrete"):
        raise _Usage("--kind must be 'binormal' or 'discrete'")
    return {j: opts["kind"] for s in sheets for j in s.entries}


def cmd_validate_taxonomy(opts) -> int:
    _require(opts, "taxonomy")
    t = tio.read_taxonomy(opts["taxonomy"])
    depth = max(t.depth(c) for c in t.classes)
    print(f"classes\t{len(t.classes)}")
    print(f"edges\t{len(t.edges)}")
    print(f"roots\t{','.join(sorted(t.roots))}")
    print(f"leaves\t{len(t.leaves)}")
    print(f"max_depth\t{depth}")
    if opts["output"] and opts["output"] != "-":
        tio.write_taxonomy(t, opts["output"], _meta("validate-taxonomy", opts))
    return 0


def cmd_aggregate(opts) -> int:
    _require(opts, "taxonomy", "sheets")
    t = tio.read_taxonomy(opts["taxonomy"])
    sheets = tio.read_sheets(opts["sheets"], t)
    policy = _policy(opts)
    if opts["method"] == "heuristic":
        records = aggregate_heuristic_batch(t, sheets, policy)
    elif opts["method"] == "graphical":
        _require(opts, "params")
        net = build_network(t, tio.read_params(opts["params"]), **_network_options(opts))
        records = aggregate_graphical(net, sheets, policy)
    else:
        raise _Usage(f"--method must be 'heuristic' or 'graphical', got {opts['method']!r}")
    n_flag = sum(r.flagged for r in records)
    if n_flag:
        log.warning("%d instance(s) had no entry-level class on their path", n_flag)
    tio.write_records(records, opts["output"], _meta("aggregate", opts))
    return 0


def cmd_fit(opts) -> int:
    _require(opts, "taxonomy", "sheets", "gold")
    t = tio.read_taxonomy(opts["taxonomy"])
    sheets = tio.read_sheets(opts["sheets"], t)
    golds = tio.read_golds(opts["gold"])
    params = fit_supervised(t, sheets, golds, _kinds(opts, sheets), opts["sigma_floor"], opts["smoothing"])
    for p in params:
        if p.flagged:
            log.warning("hook %s/%s: too few examples on one side, pooled estimate used", p.classifier_id, p.node)
    tio.write_params(params, opts["output"], _meta("fit", opts))
    return 0


def cmd_em(opts) -> int:
    _require(opts, "taxonomy", "sheets")
    t = tio.read_taxonomy(opts["taxonomy"])
    sheets = tio.read_sheets(opts["sheets"], t)
    init = tio.read_params(opts["params"]) if opts["params"] else None
    res = em_fit(
        t, sheets, init,
        kinds=_kinds(opts, sheets),
        max_iters=opts["max_iters"],
        tol=opts["tol"],
        floor=opts["sigma_floor"],
        smoothing=opts["smoothing"],
        network_options=_network_options(opts),
    )
    if not res.converged:
        log.warning("EM stopped after %d iterations without converging", opts["max_iters"])
    meta = _meta("em", opts)
    meta["iterations"] = len(res.trace) - 1
    meta["converged"] = str(res.converged).lower()
    tio.write_params(res.params, opts["output"], meta)
    if opts["trace"]:
        tio.write_trace(res.trace, opts["trace"], meta)
    return 0


def cmd_evaluate(opts) -> int:
    _require(opts, "taxonomy", "predictions", "gold")
    t = tio.read_taxonomy(opts["taxonomy"])
    report = evaluate(t, tio.read_predictions(opts["predictions"]), tio.read_golds(opts["gold"]))
    tio.write_eval_report(report, opts["output"], _meta("evaluate", opts))
    p, r, f = report.mean
    print(f"mean precision {p:.6f} recall {r:.6f} f1 {f:.6f}", file=sys.stderr)
    return 0


def cmd_simulate(opts) -> int:
    _require(opts, "out_dir")
    cfg = GenConfig(
        seed=opts["seed"],
        depth=opts["depth"],
        branching=_pair(opts["branching"], "branching"),
        dag_prob=opts["dag_prob"],
        n_classifiers=opts["n_classifiers"],
        classes_per_classifier=_pair(opts["classes_per_classifier"], "classes-per-classifier"),
        n_instances=opts["n_instances"],
        mu0=opts["mu0"],
        mu1=opts["mu1"],
        sigma0=opts["sigma0"],
        sigma1=opts["sigma1"],
        mu_jitter=opts["mu_jitter"],
    )
    data = generate(cfg)
    out = Path(opts["out_dir"])
    out.mkdir(parents=True, exist_ok=True)
    meta = _meta("simulate", opts)
    meta["rng"] = RNG_ALGORITHM
    tio.write_taxonomy(data.taxonomy, out / "taxonomy.tsv", meta)
    tio.write_sheets(data.sheets, out / "sheets.tsv", meta)
    tio.write_golds(data.golds, out / "gold.tsv", meta)
    tio.write_params(data.true_params, out / "params.tsv", meta)
    return 0


COMMANDS = {
    "validate-taxonomy": cmd_validate_taxonomy,
    "aggregate": cmd_aggregate,
    "fit": cmd_fit,
    "em": cmd_em,
    "evaluate": cmd_evaluate,
    "simulate": cmd_simulate,
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        stream=sys.stderr,
        level=logging.DEBUG if args.verbose else logging.WARNING,
        format="taxagg: %(levelname)s: %(message)s",
    )
    try:
        opts = resolve(args)
        return COMMANDS[args.command](opts)
    except _Usage as exc:
        parser.error(str(exc))  # exits with status 2
    except TaxAggError as exc:
        print(f"taxagg: error: {exc}", file=sys.stderr)
        return exc.exit_code
    except OSError as exc:
        print(f"taxagg: error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
