"""Command-line front end.

Every subcommand accepts ``--seed``, ``--config`` and ``--out`` plus the
complexity switches ``--mu-node``, ``--edge-noise`` and ``--mode``. The same
settings can come from ``TICX_SEED``, ``TICX_MU_NODE``, ``TICX_EDGE_NOISE``
and ``TICX_MODE``; command-line flags win over the environment, which wins
over the config file.
"""
import argparse
import csv
import errno
import json
import logging
import sys
from pathlib import Path

from .complexity import complexity_row, read_complexity_csv, score_pair, write_complexity_csv
from .config import ENV_PREFIX, config_hash, load_config
from .evaluation import compare_groups, read_responses_csv
from .graph import TASKS, NodePairCandidate, read_graph
from .layout import normalize_to_view, read_layout, stress_layout, write_layout
from .pipeline import (StageError, complexity_config, compute_layouts, load_graphs, plan_config, run_pipeline,
                       safe_name)
from .plotting import build_figure, join_responses, save_svg
from .sampling import enumerate_candidates, filter_outliers, read_plan_json, sample_plan, write_plan_csv, write_plan_json
from .scene import SceneDescription, write_scene

EXIT_USAGE = 2
EXIT_FAILURE = 1


def _existing(path):
    p = Path(path)
    if not p.exists():
        raise FileNotFoundError(errno.ENOENT, "no such file or directory", str(p))
    return p


def _settings(args):
    overrides = {
        ("seed",): args.seed,
        ("complexity", "mu_node"): args.mu_node,
        ("complexity", "edge_noise"): args.edge_noise,
        ("complexity", "mode"): args.mode,
    }
    config_path = _existing(args.config) if args.config else None
    return load_config(config_path, overrides=overrides)


def cmd_layout(args, cfg):
    g = read_graph(_existing(args.graph))
    lc = cfg["layout"]
    lay = stress_layout(g, cfg["seed"], lc["max_iter"], lc["tol"], lc["n_init"], lc["cube_side"],
                        lc["node_radius"], lc["edge_radius"])
    lay = normalize_to_view(lay, lc["cube_side"], lc["barycenter_height"])
    lay.meta["config_hash"] = config_hash(cfg)
    write_layout(lay, args.out or "layout.json")


def cmd_candidates(args, cfg):
    g = read_graph(_existing(args.graph))
    lay = read_layout(_existing(args.layout))
    cands = enumerate_candidates(g, lay, args.task, Path(args.graph).stem, cfg["complexity"]["path_cap"])
    if args.filter:
        cands = filter_outliers(cands, threshold=cfg["plan"]["outlier_threshold"])
    names = list(cands[0].properties.as_dict()) if cands else []
    with open(args.out or "candidates.csv", "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["graph_id", "task", "u", "v", "answer", "path_count", *names, "seed", "config_hash"])
        chash = config_hash(cfg)
        for c in cands:
            props = c.properties.as_dict()
            w.writerow([c.graph_id, c.task, c.u, c.v, c.answer, c.path_count, *(repr(props[n]) for n in names),
                        cfg["seed"], chash])


def cmd_complexity(args, cfg):
    g = read_graph(_existing(args.graph))
    lay = read_layout(_existing(args.layout))
    cconf = complexity_config(cfg)
    gid = Path(args.graph).stem
    rows = []
    for a, b in zip(args.pairs[::2], args.pairs[1::2]):
        cand = NodePairCandidate.create(g, a, b, args.task, graph_id=gid)
        score = score_pair(lay, g, cand.u, cand.v, cand.task, cconf)
        iid = f"{gid}:{cand.task}:{cand.u}-{cand.v}"
        rows.append(complexity_row(iid, gid, cand, score, cconf, cfg["seed"], config_hash(cfg)))
    write_complexity_csv(rows, args.out or "complexity.csv")


def cmd_plan(args, cfg):
    cfg["graphs"]["paths"] = [str(_existing(p)) for p in args.graphs]
    graphs = load_graphs(cfg)
    layouts = {}
    if args.layouts:
        for gid, _ in graphs:
            layouts[gid] = read_layout(_existing(Path(args.layouts) / f"{gid}.json"))
    else:
        layouts = compute_layouts(graphs, cfg)
    plan = sample_plan(graphs, layouts, plan_config(cfg), cfg["seed"])
    plan.meta["config_hash"] = config_hash(cfg)
    out = Path(args.out or "plan.json")
    write_plan_json(plan, out)
    write_plan_csv(plan, out.with_suffix(".csv"))


def cmd_evaluate(args, cfg):
    plan = read_plan_json(_existing(args.plan))
    records = read_responses_csv(_existing(args.responses))
    correct = {iid: inst.answer for iid, inst in plan.instances.items()}
    report = {
        "seed": cfg["seed"],
        "config_hash": config_hash(cfg),
        "comparisons": compare_groups(records, correct, int(cfg["evaluation"]["R"]), cfg["seed"]),
    }
    Path(args.out or "report.json").write_text(json.dumps(report, indent=1, sort_keys=True) + "\n", encoding="utf-8")


def cmd_scene(args, cfg):
    g = read_graph(_existing(args.graph))
    lay = read_layout(_existing(args.layout))
    meta = {"seed": cfg["seed"], "config_hash": config_hash(cfg)}
    scene = SceneDescription.from_layout(g, lay, args.u, args.v, cfg["scene"], meta)
    write_scene(scene, args.out or f"scene_{safe_name(f'{args.u}-{args.v}')}.json")


def cmd_plot(args, cfg):
    rows = read_complexity_csv(_existing(args.complexity))
    records = read_responses_csv(_existing(args.responses))
    fig = build_figure(join_responses(rows, records))
    save_svg(fig, args.out or "plot.svg", f"seed={cfg['seed']} config_hash={config_hash(cfg)}")


def cmd_pipeline(args, cfg):
    if args.fixture:
        from .fixtures import fixture_config_path

        cfg = load_config(fixture_config_path(), overrides={
            ("seed",): args.seed,
            ("complexity", "mu_node"): args.mu_node,
            ("complexity", "edge_noise"): args.edge_noise,
            ("complexity", "mode"): args.mode,
        })
    manifest = run_pipeline(cfg, args.out or "run")
    print(f"wrote {len(manifest['files'])} files to {args.out or 'run'}")


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=None, help=f"run seed (env {ENV_PREFIX}SEED)")
    common.add_argument("--config", default=None, help="TOML or JSON config file")
    common.add_argument("--out", default=None, help="output file or directory")
    common.add_argument("--mu-node", choices=("diameter", "zero"), default=None,
                        help=f"noise measure of a node (env {ENV_PREFIX}MU_NODE)")
    common.add_argument("--edge-noise", choices=("full", "clipped"), default=None,
                        help=f"count full or clipped edge length (env {ENV_PREFIX}EDGE_NOISE)")
    common.add_argument("--mode", choices=("absolute", "relative"), default=None,
                        help=f"shortest-path signal units (env {ENV_PREFIX}MODE)")
    common.add_argument("-v", "--verbose", action="store_true")

    parser = argparse.ArgumentParser(prog="taskcomplexity", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("layout", parents=[common], help="stress layout of one graph")
    p.add_argument("graph")
    p.set_defaults(func=cmd_layout)

    p = sub.add_parser("candidates", parents=[common], help="enumerate node-pair candidates")
    p.add_argument("graph")
    p.add_argument("layout")
    p.add_argument("--task", choices=TASKS, required=True)
    p.add_argument("--filter", action="store_true", help="drop |z| >= threshold outliers")
    p.set_defaults(func=cmd_candidates)

    p = sub.add_parser("complexity", parents=[common], help="score node pairs")
    p.add_argument("graph")
    p.add_argument("layout")
    p.add_argument("--task", choices=TASKS, required=True)
    p.add_argument("pairs", type=int, nargs="+", help="node ids u1 v1 [u2 v2 ...]")
    p.set_defaults(func=cmd_complexity)

    p = sub.add_parser("plan", parents=[common], help="sample a session plan")
    p.add_argument("graphs", nargs="+", help="graph files or directories")
    p.add_argument("--layouts", default=None, help="directory of <graph_id>.json layouts")
    p.set_defaults(func=cmd_plan)

    p = sub.add_parser("evaluate", parents=[common], help="compare group types on recorded responses")
    p.add_argument("plan")
    p.add_argument("responses")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("scene", parents=[common], help="export a scene description")
    p.add_argument("graph")
    p.add_argument("layout")
    p.add_argument("u", type=int)
    p.add_argument("v", type=int)
    p.set_defaults(func=cmd_scene)

    p = sub.add_parser("plot", parents=[common], help="plot responses against complexity")
    p.add_argument("complexity")
    p.add_argument("responses")
    p.set_defaults(func=cmd_plot)

    p = sub.add_parser("pipeline", parents=[common], help="run every stage end to end")
    p.add_argument("--fixture", action="store_true", help="use the bundled 10-graph fixture")
    p.set_defaults(func=cmd_pipeline)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    if args.command == "complexity" and len(args.pairs) % 2:
        parser.error("complexity needs an even number of node ids")
    stage = args.command
    try:
        cfg = _settings(args)
        args.func(args, cfg)
    except StageError as exc:
        cause = exc.cause
        if isinstance(cause, FileNotFoundError):
            print(f"error [{exc.stage}]: file not found: {cause.filename or cause}", file=sys.stderr)
            return EXIT_USAGE
        print(f"error [{exc.stage}]: {cause}", file=sys.stderr)
        return EXIT_FAILURE
    except FileNotFoundError as exc:
        print(f"error [{stage}]: file not found: {exc.filename or exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ValueError, KeyError, OSError) as exc:
        print(f"error [{stage}]: {exc}", file=sys.stderr)
        return EXIT_FAILURE
    return 0


if __name__ == "__main__":
    sys.exit(main())
