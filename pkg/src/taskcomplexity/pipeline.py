"""End-to-end batch run: ingest, layout, enumerate, sample, score, export,
evaluate and plot, with a hashed manifest of every output file."""
import csv
import errno
import hashlib
import json
import logging
from pathlib import Path

from .complexity import ComplexityConfig, complexity_row, write_complexity_csv
from .config import config_hash
from .evaluation import compare_groups, simulate_responses, write_responses_csv
from .graph import TASKS, graph_to_json, read_graph
from .layout import normalize_to_view, stress_layout, write_layout
from .plotting import build_figure, join_responses, save_svg
from .sampling import CONTROLLED_PROPERTIES, PlanConfig, prepare_candidates, sample_plan, write_plan_csv, write_plan_json
from .scene import SceneDescription, write_scene
from .synthetic import study_corpus

logger = logging.getLogger(__name__)

GRAPH_SUFFIXES = (".json", ".txt", ".edges", ".edgelist", ".tsv", ".csv")


class StageError(RuntimeError):
    """A pipeline failure tagged with the stage it happened in."""

    def __init__(self, stage, cause):
        self.stage = stage
        self.cause = cause
        super().__init__(f"[{stage}] {cause}")


def _stage(name):
    def wrap(fn):
        def run(*args, **kwargs):
            try:
                return fn(*args, **kwargs)
            except StageError:
                raise
            except Exception as exc:
                raise StageError(name, exc) from exc

        run.__name__ = fn.__name__
        run.__doc__ = fn.__doc__
        return run

    return wrap


def _graph_files(paths):
    files = []
    for p in map(Path, paths):
        if p.is_dir():
            files.extend(sorted(f for f in p.iterdir() if f.suffix.lower() in GRAPH_SUFFIXES))
        elif p.exists():
            files.append(p)
        else:
            raise FileNotFoundError(errno.ENOENT, "no such file or directory", str(p))
    return files


@_stage("ingest")
def load_graphs(cfg):
    """``[(graph_id, Graph)]`` from ``graphs.paths`` or ``graphs.synthetic`` generator arguments."""
    source = cfg["graphs"]
    if source.get("paths"):
        return [(f.stem, read_graph(f)) for f in _graph_files(source["paths"])]
    if source.get("synthetic") is not None:
        syn = dict(source["synthetic"])
        for key in ("size", "density"):
            if key in syn:
                syn[key] = tuple(syn[key])
        return study_corpus(**syn)
    raise ValueError("config names no graphs: set graphs.paths or graphs.synthetic")


def complexity_config(cfg):
    c = cfg["complexity"]
    return ComplexityConfig(c["mode"], c["mu_node"], c["edge_noise"], bool(c["inflate_nodes"]), int(c["path_cap"]))


def plan_config(cfg):
    p = dict(cfg["plan"])
    p["answer_ranges"] = {k: tuple(v) for k, v in p["answer_ranges"].items()}
    p["density_range"] = None if p.get("density_range") is None else tuple(p["density_range"])
    return PlanConfig(complexity=complexity_config(cfg), **p)


@_stage("layout")
def compute_layouts(graphs, cfg):
    lc = cfg["layout"]
    out = {}
    for gid, g in graphs:
        raw = stress_layout(g, cfg["seed"], lc["max_iter"], lc["tol"], lc["n_init"], lc["cube_side"],
                            lc["node_radius"], lc["edge_radius"])
        out[gid] = normalize_to_view(raw, lc["cube_side"], lc["barycenter_height"])
    return out


def _sha256(path):
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def _write_json(path, doc):
    Path(path).write_text(json.dumps(doc, indent=1, sort_keys=True) + "\n", encoding="utf-8")


def safe_name(instance_id):
    return instance_id.replace(":", "_")


@_stage("candidates")
def _candidates(graphs, layouts, pconf, out, seed, chash):
    cands = prepare_candidates(graphs, layouts, pconf)
    names = sorted({p for props in CONTROLLED_PROPERTIES.values() for p in props})
    with open(out / "candidates.csv", "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["graph_id", "task", "u", "v", "answer", "path_count", *names, "seed", "config_hash"])
        for gid, _ in graphs:
            for task in TASKS:
                for c in cands[gid][task]:
                    props = c.properties.as_dict()
                    w.writerow([gid, task, c.u, c.v, c.answer, c.path_count,
                                *(repr(props[n]) for n in names), seed, chash])
    return cands


@_stage("sample")
def _sample(graphs, layouts, pconf, seed, cands, out, chash):
    plan = sample_plan(graphs, layouts, pconf, seed, cands)
    plan.meta["config_hash"] = chash
    write_plan_json(plan, out / "plan.json")
    write_plan_csv(plan, out / "plan.csv")
    return plan


@_stage("complexity")
def _complexity(plan, out, seed, chash, cconf):
    rows = []
    for iid in sorted(plan.instances):
        inst = plan.instances[iid]
        rows.append(complexity_row(iid, inst.graph_id, inst, inst.score, cconf, seed, chash))
    write_complexity_csv(rows, out / "complexity.csv")
    return rows


@_stage("scene")
def _scenes(plan, graph_map, layouts, cfg, out, chash):
    scene_dir = out / "scenes"
    scene_dir.mkdir(exist_ok=True)
    for iid in sorted(plan.instances):
        inst = plan.instances[iid]
        scene = SceneDescription.from_layout(
            graph_map[inst.graph_id], layouts[inst.graph_id], inst.u, inst.v, cfg["scene"],
            {"seed": cfg["seed"], "config_hash": chash, "instance_id": iid, "task": inst.task},
        )
        write_scene(scene, scene_dir / f"{safe_name(iid)}.json")


@_stage("evaluate")
def _evaluate(plan, cfg, out, chash):
    records = simulate_responses(plan, cfg["seed"])
    write_responses_csv(records, out / "responses.csv")
    correct = {iid: inst.answer for iid, inst in plan.instances.items()}
    report = {
        "seed": cfg["seed"],
        "config_hash": chash,
        "responses": "simulated",
        "comparisons": compare_groups(records, correct, int(cfg["evaluation"]["R"]), cfg["seed"]),
    }
    _write_json(out / "report.json", report)
    return records


@_stage("plot")
def _plot(rows, records, out, seed, chash):
    table = [dict(r, signal=float(r["signal"]), noise=float(r["noise"])) for r in rows]
    fig = build_figure(join_responses(table, records))
    save_svg(fig, out / "plot.svg", f"seed={seed} config_hash={chash}")


def run_pipeline(cfg, out_dir):
    """Run every stage and return the manifest dict (also written to disk)."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    seed = int(cfg["seed"])
    chash = config_hash(cfg)
    graphs = load_graphs(cfg)
    graph_map = dict(graphs)

    (out / "graphs").mkdir(exist_ok=True)
    for gid, g in graphs:
        _write_json(out / "graphs" / f"{gid}.json", graph_to_json(g))

    layouts = compute_layouts(graphs, cfg)
    (out / "layouts").mkdir(exist_ok=True)
    for gid, lay in layouts.items():
        lay.meta["config_hash"] = chash
        write_layout(lay, out / "layouts" / f"{gid}.json")

    pconf = plan_config(cfg)
    cands = _candidates(graphs, layouts, pconf, out, seed, chash)
    plan = _sample(graphs, layouts, pconf, seed, cands, out, chash)
    rows = _complexity(plan, out, seed, chash, pconf.complexity)
    _scenes(plan, graph_map, layouts, cfg, out, chash)
    if cfg["evaluation"].get("simulate_responses"):
        records = _evaluate(plan, cfg, out, chash)
        _plot(rows, records, out, seed, chash)

    files = {
        str(p.relative_to(out)): _sha256(p)
        for p in sorted(out.rglob("*"))
        if p.is_file() and p.name != "manifest.json"
    }
    manifest = {
        "seed": seed,
        "config_hash": chash,
        "config": {**cfg, "graphs": {**cfg["graphs"], "paths": [Path(p).name for p in cfg["graphs"].get("paths", [])]}},
        "decisions": {
            "ideal_edge_length": "cube_side / graph diameter",
            "path_betweenness": plan.meta["path_betweenness_rule"],
            "stratification": plan.meta["stratification_rule"],
            "control_instance": plan.meta["control_rule"],
            "mu_node": pconf.complexity.mu_node,
            "edge_noise": pconf.complexity.edge_noise,
            "signal_mode": pconf.complexity.mode,
            "node_in_region": "node sphere" if pconf.complexity.inflate_nodes else "node center",
        },
        "files": files,
    }
    _write_json(out / "manifest.json", manifest)
    return manifest
