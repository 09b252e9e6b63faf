import argparse
import json
import logging
import math
import os
import shlex
import sys

import numpy as np
import pandas as pd

from utils import __version__
from utils.baselines import BaselineMethod, score_baseline
from utils.config import echo, get_config, load_kv_file, parse_float_or_inf
from utils.errors import ConfigError, DataError, InvalidParameter, SybilEdgeError
from utils.evaluation import bucketed_auc, parse_buckets, parse_sweep_config, run_sweep
from utils.graph_model import LabelTable
from utils.performance_monitor import PerformanceMonitor
from utils.rate_estimator import ConfidencePriors, build_rate_table
from utils.scorer import ScoringConfig, Variant, score_all
from utils.synthgraphs import SynthConfig, build_scenario
from utils import tsv_io

logger = logging.getLogger("sybiledge")

# -------------------- Configuration --------------------

# Get configuration based on environment
app_config = get_config()

EDGES_FILE = "edges.tsv"
TRUE_LABELS_FILE = "true_labels.tsv"
TRAINING_LABELS_FILE = "training_labels.tsv"


# -------------------- Initialization Functions --------------------

def init_logging(level=None):
    """
    Configure the root logger once, on stderr, so TSV/JSON written to files
    or stdout never mixes with log text.
    """
    logging.basicConfig(level=(level or app_config.LOG_LEVEL).upper(),
                        format=app_config.LOG_FORMAT, stream=sys.stderr, force=True)


class UsageParser(argparse.ArgumentParser):
    """argparse exits 2 on usage errors; usage errors are exit code 1 here."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _positive_float(text):
    try:
        value = parse_float_or_inf(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number: {text!r}")
    if math.isnan(value) or value < 0:
        raise argparse.ArgumentTypeError(f"must be non-negative: {text!r}")
    return value


def _command_line(argv):
    return " ".join(["sybiledge"] + [shlex.quote(a) for a in argv])


# -------------------- Commands --------------------

def cmd_generate(args, argv):
    """Scenario config -> edges, true labels and training labels files."""
    entries = load_kv_file(args.config)
    config = SynthConfig.from_mapping(entries)
    if args.seed is not None:
        config = config.with_overrides(rng_seed=args.seed)

    scenario = build_scenario(config)
    index = tsv_io.NodeIndex(range(config.n))
    header = tsv_io.header_lines(_command_line(argv), config.rng_seed, config.to_dict(),
                                 {"dropped_stubs": scenario.dropped_stubs})

    tsv_io.write_edges(os.path.join(args.out, EDGES_FILE), scenario.graph, index, header)
    tsv_io.write_labels(os.path.join(args.out, TRUE_LABELS_FILE), scenario.true_labels, index, header)
    tsv_io.write_labels(os.path.join(args.out, TRAINING_LABELS_FILE), scenario.training_labels, index, header)
    logger.info(f"✅ Scenario written to {args.out}")
    return 0


def _priors(args, index):
    sigma, phi = args.sigma, args.phi
    if args.sigma_file:
        sigma = tsv_io.read_node_values(args.sigma_file, index, args.sigma)
    if args.phi_file:
        phi = tsv_io.read_node_values(args.phi_file, index, args.phi)
    return ConfidencePriors(sigma=sigma, phi=phi)


def cmd_train(args, argv):
    """Edges + training labels -> rate table."""
    index, graph, labels, _ = tsv_io.load_graph(args.edges, args.labels)
    priors = _priors(args, index)
    rates = build_rate_table(graph, labels, priors, priors, args.clamp_eps,
                             shards=args.threads, threads=args.threads)

    run_config = {"edges": args.edges, "labels": args.labels, "sigma": args.sigma, "phi": args.phi,
                  "sigma_file": args.sigma_file, "phi_file": args.phi_file, "clamp_eps": args.clamp_eps}
    tsv_io.write_rates(args.out, rates, index,
                       tsv_io.header_lines(_command_line(argv), None, run_config))
    logger.info(f"✅ Rates written to {args.out}")
    return 0


def cmd_score(args, argv):
    """Edges + rates -> posterior per unknown user (every user when no labels are given)."""
    rate_tokens = tsv_io.read_table(args.rates, tsv_io.RATE_COLUMNS)["target_id"].tolist()
    index, graph, labels, _ = tsv_io.load_graph(args.edges, args.labels, extra_tokens=rate_tokens)
    rates = tsv_io.read_rates(args.rates, index)
    if labels is None:
        labels = LabelTable.unknown(graph.n)

    config = ScoringConfig(prior=args.prior, variant=args.variant, clamp_eps=args.clamp_eps,
                           explain=args.explain)
    monitor = PerformanceMonitor()
    with monitor.timed("score"):
        table = score_all(graph, rates, labels, config, threads=args.threads, monitor=monitor)

    prior = args.prior if args.prior is not None else rates.prior_fake_fraction
    run_config = {"edges": args.edges, "rates": args.rates, "labels": args.labels, "prior": prior,
                  "variant": config.variant.value, "clamp_eps": args.clamp_eps}
    header = tsv_io.header_lines(_command_line(argv), None, run_config)
    tsv_io.write_scores(args.out, table, index, header)
    if args.explain:
        root, ext = os.path.splitext(args.out)
        tsv_io.write_contributions(f"{root}.contributions{ext or '.tsv'}", table.contributions, index, header)
    logger.info(f"✅ Scores written to {args.out} "
                f"({monitor.get_count('edges_visited')} edges visited)")
    return 0


def cmd_baseline(args, argv):
    """Edges + training labels -> baseline scores for the unknown users."""
    index, graph, labels, _ = tsv_io.load_graph(args.edges, args.labels)
    params = {}
    if args.iterations is not None:
        params["iterations"] = args.iterations
    if args.weight is not None:
        if args.method != BaselineMethod.SYBIL_SCAR_C.value:
            raise InvalidParameter("--weight applies to sybil_scar_c only")
        params["weight"] = args.weight
    if args.method == BaselineMethod.REJECT_RATE.value and params:
        raise InvalidParameter("reject_rate takes no parameters")

    baseline = score_baseline(graph, labels, args.method, **params)
    run_config = {"edges": args.edges, "labels": args.labels, "method": args.method, **params}
    tsv_io.write_baseline_scores(args.out, baseline, index,
                                 tsv_io.header_lines(_command_line(argv), None, run_config))
    logger.info(f"✅ Baseline scores written to {args.out}")
    return 0


def cmd_eval(args, argv):
    """Score files + truth -> side-by-side AUC per sent-request bucket."""
    buckets = parse_buckets(args.buckets)
    score_maps = [tsv_io.read_scores(path) for path in args.scores]
    names = args.names or [os.path.splitext(os.path.basename(p))[0] for p in args.scores]
    if len(names) != len(score_maps):
        raise ConfigError(f"{len(names)} names given for {len(score_maps)} score files")

    truth_raw = tsv_io.read_labels(args.truth)
    index, graph, _, _ = tsv_io.load_graph(args.edges, extra_tokens=list(truth_raw))
    common = set(truth_raw)
    for scores in score_maps:
        common &= set(scores)
    tokens = sorted(common, key=index.id_of)
    if not tokens:
        raise DataError("no node is present in every score file and the truth file")
    nodes = index.ids_of(tokens)
    truth = np.array([truth_raw[t] >= 0.5 for t in tokens])

    results = [bucketed_auc(graph, nodes, [scores[t] for t in tokens], truth, buckets)
               for scores in score_maps]
    rows = []
    for k, row in enumerate(results[0].buckets):
        rows.append({"bucket": row.label, "n_fakes": row.n_fakes, "n_reals": row.n_reals,
                     **{name: res.buckets[k].auc for name, res in zip(names, results)}})
    rows.append({"bucket": "all", "n_fakes": int(truth.sum()), "n_reals": int((~truth).sum()),
                 **{name: res.overall_auc for name, res in zip(names, results)}})
    frame = pd.DataFrame(rows)

    header = tsv_io.header_lines(_command_line(argv), None,
                                 {"scores": args.scores, "names": names, "truth": args.truth,
                                  "edges": args.edges, "buckets": args.buckets})
    os.makedirs(os.path.dirname(args.out) or ".", exist_ok=True)
    with open(args.out, "w", encoding="utf-8", newline="") as f:
        for line in header:
            f.write(line + "\n")
        frame.to_csv(f, sep="\t", index=False, lineterminator="\n", na_rep="NA")
    logger.info(f"📊 Evaluation written to {args.out}")
    return 0


def cmd_experiment(args, argv):
    """Sweep config -> report.json, report.tsv, points.tsv and runtime.json."""
    entries = load_kv_file(args.config)
    spec = parse_sweep_config(entries)
    if args.seeds:
        spec.seeds = [int(s) for s in args.seeds.split(",")]

    monitor = PerformanceMonitor()
    with monitor.timed("experiment"):
        report = run_sweep(spec, threads=args.threads, monitor=monitor)
    report.config["config_file"] = echo(entries)

    os.makedirs(args.out, exist_ok=True)
    header = tsv_io.header_lines(_command_line(argv), ",".join(map(str, spec.seeds)), report.config)
    with open(os.path.join(args.out, "report.json"), "w", encoding="utf-8", newline="") as f:
        f.write(report.to_json())
    for name, frame in (("report.tsv", report.summary_frame()), ("points.tsv", report.to_frame())):
        with open(os.path.join(args.out, name), "w", encoding="utf-8", newline="") as f:
            for line in header:
                f.write(line + "\n")
            frame.to_csv(f, sep="\t", index=False, lineterminator="\n", na_rep="NA")

    report.runtime = monitor.get_stats()
    with open(os.path.join(args.out, "runtime.json"), "w", encoding="utf-8") as f:
        json.dump(report.runtime, f, indent=2, sort_keys=True)
    logger.info(f"📊 Experiment report written to {args.out}")
    return 0


# -------------------- Parser Factory --------------------

def create_parser():
    parser = UsageParser(prog="sybiledge",
                         description="Detect new fake accounts from their friend requests.")
    parser.add_argument("--version", action="version", version=f"sybiledge {__version__}")
    parser.add_argument("--threads", type=int, default=app_config.THREADS,
                        help="maximum worker count")
    parser.add_argument("--log-level", default=None, help="DEBUG, INFO, WARNING...")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=UsageParser)

    p = sub.add_parser("generate", help="build a synthetic scenario")
    p.add_argument("--config", required=True)
    p.add_argument("--seed", type=int)
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("train", help="estimate per-target rates")
    p.add_argument("--edges", required=True)
    p.add_argument("--labels", required=True)
    p.add_argument("--sigma", type=_positive_float, default=app_config.SIGMA, help="number or 'inf'")
    p.add_argument("--phi", type=_positive_float, default=app_config.PHI, help="number or 'inf'")
    p.add_argument("--sigma-file", help="per-target sigma (node<TAB>value)")
    p.add_argument("--phi-file", help="per-target phi (node<TAB>value)")
    p.add_argument("--clamp-eps", type=float, default=app_config.CLAMP_EPS)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("score", help="posterior fake probability of new users")
    p.add_argument("--edges", required=True)
    p.add_argument("--rates", required=True)
    p.add_argument("--labels", help="training labels; only unlabeled users are scored")
    p.add_argument("--prior", type=float, help="global prior (default: training fake fraction)")
    p.add_argument("--variant", choices=[v.value for v in Variant], default=Variant.FULL.value)
    p.add_argument("--clamp-eps", type=float, default=app_config.CLAMP_EPS)
    p.add_argument("--explain", action="store_true", help="also write per-edge contributions")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_score)

    p = sub.add_parser("baseline", help="score new users with a baseline detector")
    p.add_argument("--edges", required=True)
    p.add_argument("--labels", required=True)
    p.add_argument("--method", choices=[m.value for m in BaselineMethod], required=True)
    p.add_argument("--iterations", type=int)
    p.add_argument("--weight", type=float)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_baseline)

    p = sub.add_parser("eval", help="bucketed ROC AUC of score files")
    p.add_argument("--scores", nargs="+", required=True)
    p.add_argument("--names", nargs="+")
    p.add_argument("--truth", required=True)
    p.add_argument("--edges", required=True, help="for sent-request counts")
    p.add_argument("--buckets", default=app_config.BUCKETS)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("experiment", help="run a noise / grid / prevalence sweep")
    p.add_argument("--config", required=True)
    p.add_argument("--seeds", help="comma-separated seeds overriding the config")
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=cmd_experiment)
    return parser


# -------------------- Main Entry Point --------------------

def main(argv=None):
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = create_parser()
    args = parser.parse_args(argv)
    init_logging(args.log_level)
    if args.threads < 1:
        parser.error("--threads must be at least 1")

    try:
        return args.func(args, argv)
    except SybilEdgeError as e:
        logger.error(f"❌ {e}")
        return e.exit_code


if __name__ == "__main__":
    sys.exit(main())
