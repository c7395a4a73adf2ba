"""Task instance generation: candidate enumeration, outlier filtering and
seeded, stratified session plans with paired units and counterbalanced task
order."""
import csv
import hashlib
import json
import logging
import math
import warnings
from collections import defaultdict
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .complexity import ComplexityConfig, ComplexityScore, score_candidate
from .graph import TASK_CN, TASK_SP, TASKS, LocalProperties, NodePairCandidate, global_properties
from .properties import PATH_BETWEENNESS_RULE, PropertyContext, annotate

logger = logging.getLogger(__name__)

CONTROLLED_PROPERTIES = {
    TASK_CN: ("local_density", "local_clustering", "degree_centrality", "euclidean_node_distance", "fill_ratio"),
    TASK_SP: ("local_density", "local_clustering", "path_betweenness", "euclidean_node_distance", "fill_ratio"),
}
ANSWER_RANGES = {TASK_CN: (2, 11), TASK_SP: (3, 16)}
STRATIFICATION_RULE = "round-robin over answer values in ascending order, skipping exhausted values"


class InfeasiblePlanError(ValueError):
    """Too few candidates to fill a plan."""


def shortest_path_counts(g):
    """Matrix of shortest-path counts between all node pairs (0 if unreachable)."""
    D = g.distance_matrix
    A = g.adjacency.astype(float)
    S = (D == 0).astype(float)
    finite = D[np.isfinite(D)]
    for d in range(1, int(finite.max()) + 1 if finite.size else 1):
        layer = D == d
        S[layer] = ((S * (D == d - 1)) @ A)[layer]
    return S


def enumerate_candidates(g, layout, task, graph_id=None, cap=None, context=None, with_properties=True):
    """All node pairs with answer >= 1 for ``task``.

    CN answers are common-neighbor counts; SP answers are hop distances, and
    pairs with more than ``cap`` shortest paths are dropped. Pairs are ordered
    by degree. Properties are attached unless ``with_properties`` is false.
    """
    if task not in TASKS:
        raise ValueError(f"unknown task {task!r}; expected one of {TASKS}")
    cap = ComplexityConfig().path_cap if cap is None else cap
    n = g.node_count
    iu, ju = np.triu_indices(n, 1)
    if task == TASK_CN:
        A = g.adjacency.astype(np.int64)
        answers = (A @ A)[iu, ju]
        counts = np.ones_like(answers)
        keep = answers >= 1
    else:
        D = g.distance_matrix
        answers = D[iu, ju]
        counts = shortest_path_counts(g)[iu, ju]
        reachable = np.isfinite(answers) & (answers >= 1)
        keep = reachable & (counts <= cap)
        dropped = int(np.count_nonzero(reachable & (counts > cap)))
        if dropped:
            logger.info("graph %s: %d SP pairs exceed %d shortest paths and are dropped", graph_id, dropped, cap)
    cands = [
        NodePairCandidate.create(g, int(a), int(b), task, int(ans), graph_id, int(c))
        for a, b, ans, c in zip(iu[keep], ju[keep], answers[keep], counts[keep])
    ]
    if with_properties and cands:
        annotate(g, layout, cands, context or PropertyContext(g, layout))
    return cands


def filter_outliers(cands, properties=None, threshold=2.0):
    """Drop candidates with ``|z| >= threshold`` on any controlled property.

    z-scores use the population standard deviation and are taken within each
    ``(graph_id, task)`` group. Properties with zero variance in a group are
    skipped for that group.
    """
    groups = defaultdict(list)
    for i, c in enumerate(cands):
        groups[(c.graph_id, c.task)].append(i)
    keep = np.ones(len(cands), dtype=bool)
    for (graph_id, task), idx in groups.items():
        if len(idx) < 3:
            raise ValueError(f"outlier filtering needs at least 3 candidates, graph {graph_id} task {task} has {len(idx)}")
        names = properties or CONTROLLED_PROPERTIES[task]
        if any(cands[i].properties is None for i in idx):
            raise ValueError("every candidate needs properties before outlier filtering")
        X = np.array([[getattr(cands[i].properties, p) for p in names] for i in idx], dtype=float)
        sd = X.std(axis=0)
        flat = sd == 0
        for p in np.asarray(names)[flat]:
            logger.info("graph %s task %s: property %s has zero variance and is skipped", graph_id, task, p)
        z = np.zeros_like(X)
        z[:, ~flat] = (X[:, ~flat] - X[:, ~flat].mean(axis=0)) / sd[~flat]
        keep[np.asarray(idx)[np.any(np.abs(z) >= threshold, axis=1)]] = False
    return [c for c, k in zip(cands, keep) if k]


# -- plans ------------------------------------------------------------------

@dataclass(frozen=True)
class PlanConfig:
    """Shape of a session plan.

    ``n_blocks`` blocks of ``units_per_block`` paired units each; every unit
    in a block sees the same sequence. Even block counts give exact
    counterbalancing of task order.
    """

    n_blocks: int = 2
    units_per_block: int = 2
    instances_per_task: int = 12
    answer_ranges: dict = field(default_factory=lambda: dict(ANSWER_RANGES))
    density_range: tuple = (0.03, 0.07)
    control_pool: int = 50
    outlier_threshold: float = 2.0
    complexity: ComplexityConfig = field(default_factory=ComplexityConfig)

    @property
    def answers_per_unit(self):
        return 2 * self.instances_per_task + 1

    def to_json(self):
        doc = asdict(self)
        doc["answer_ranges"] = {k: list(v) for k, v in sorted(self.answer_ranges.items())}
        doc["density_range"] = None if self.density_range is None else list(self.density_range)
        return doc

    @classmethod
    def from_json(cls, doc):
        doc = dict(doc)
        if "answer_ranges" in doc:
            doc["answer_ranges"] = {k: tuple(v) for k, v in doc["answer_ranges"].items()}
        if doc.get("density_range") is not None:
            doc["density_range"] = tuple(doc["density_range"])
        if "complexity" in doc:
            doc["complexity"] = ComplexityConfig(**doc["complexity"])
        return cls(**doc)

    def hash(self):
        blob = json.dumps(self.to_json(), sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()[:16]


@dataclass
class TaskInstance:
    instance_id: str
    graph_id: str
    task: str
    u: int
    v: int
    answer: int
    score: ComplexityScore
    properties: LocalProperties
    is_control: bool = False

    def to_json(self):
        return {
            "instance_id": self.instance_id,
            "graph_id": self.graph_id,
            "task": self.task,
            "u": self.u,
            "v": self.v,
            "answer": self.answer,
            "signal": self.score.signal,
            "noise": self.score.noise,
            "combined": self.score.combined,
            "signal_mode": self.score.mode,
            "properties": self.properties.as_dict(),
            "is_control": self.is_control,
        }

    @classmethod
    def from_json(cls, doc):
        score = ComplexityScore(doc["signal"], doc["noise"], doc["task"], doc["signal_mode"])
        return cls(doc["instance_id"], doc["graph_id"], doc["task"], doc["u"], doc["v"], doc["answer"],
                   score, LocalProperties(**doc["properties"]), doc["is_control"])


def instance_id(cand):
    return f"{cand.graph_id}:{cand.task}:{cand.u}-{cand.v}"


@dataclass
class UnitPlan:
    unit_id: str
    block: int
    task_order: tuple
    sequence: list

    def to_json(self):
        return {"unit_id": self.unit_id, "block": self.block, "task_order": list(self.task_order), "sequence": self.sequence}


@dataclass
class SessionPlan:
    seed: int
    config: PlanConfig
    graph_ids: list
    units: list
    instances: dict
    meta: dict = field(default_factory=dict)

    @property
    def pairing(self):
        out = defaultdict(list)
        for unit in self.units:
            out[unit.block].append(unit.unit_id)
        return dict(out)

    def unit(self, unit_id):
        for u in self.units:
            if u.unit_id == unit_id:
                return u
        raise KeyError(unit_id)

    def to_json(self):
        return {
            "seed": self.seed,
            "config": self.config.to_json(),
            "config_hash": self.config.hash(),
            "graph_ids": list(self.graph_ids),
            "pairing": {str(k): v for k, v in self.pairing.items()},
            "units": [u.to_json() for u in self.units],
            "instances": [self.instances[k].to_json() for k in sorted(self.instances)],
            "meta": self.meta,
        }

    @classmethod
    def from_json(cls, doc):
        units = [UnitPlan(u["unit_id"], u["block"], tuple(u["task_order"]), list(u["sequence"])) for u in doc["units"]]
        instances = {d["instance_id"]: TaskInstance.from_json(d) for d in doc["instances"]}
        return cls(doc["seed"], PlanConfig.from_json(doc["config"]), list(doc["graph_ids"]), units, instances, doc.get("meta", {}))


def plan_to_text(plan):
    return json.dumps(plan.to_json(), indent=1, sort_keys=True) + "\n"


def write_plan_json(plan, path):
    Path(path).write_text(plan_to_text(plan), encoding="utf-8")


def read_plan_json(path):
    return SessionPlan.from_json(json.loads(Path(path).read_text(encoding="utf-8")))


PLAN_CSV_COLUMNS = ["unit_id", "block", "position", "instance_id", "graph_id", "task", "u", "v", "answer",
                    "is_control", "signal", "noise", "combined", "seed", "config_hash"]


def write_plan_csv(plan, path):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(PLAN_CSV_COLUMNS)
        for unit in plan.units:
            for pos, iid in enumerate(unit.sequence):
                inst = plan.instances[iid]
                comb = inst.score.combined
                writer.writerow([unit.unit_id, unit.block, pos, iid, inst.graph_id, inst.task, inst.u, inst.v,
                                 inst.answer, int(inst.is_control), repr(float(inst.score.signal)),
                                 repr(float(inst.score.noise)), "" if comb is None else repr(float(comb)),
                                 plan.seed, plan.meta.get("config_hash", plan.config.hash())])


def prepare_candidates(graphs, layouts, config=None):
    """Enumerate, annotate and outlier-filter candidates for every graph.

    Returns ``{graph_id: {task: [candidates]}}`` holding only candidates that
    survived filtering.
    """
    config = config or PlanConfig()
    out = {}
    for graph_id, g in graphs:
        ctx = PropertyContext(g, layouts[graph_id])
        per_task = {}
        for task in TASKS:
            cands = enumerate_candidates(g, layouts[graph_id], task, graph_id, config.complexity.path_cap, ctx)
            cands = [c for c in cands if c.answer >= 1]
            per_task[task] = filter_outliers(cands, threshold=config.outlier_threshold) if len(cands) >= 3 else []
        out[graph_id] = per_task
    return out


def _strata(pool, task, lo, hi):
    strata = defaultdict(list)
    for c in pool:
        if lo <= c.answer <= hi:
            strata[c.answer].append(c)
    return strata


def _draw_series(rng, strata, lo, hi, count, used_graphs, used_keys, task):
    """Round-robin draw of ``count`` candidates over answer values lo..hi."""
    values = [a for a in range(lo, hi + 1)]
    exhausted = set()
    chosen = []
    while len(chosen) < count:
        progressed = False
        for a in values:
            if len(chosen) == count:
                break
            if a in exhausted:
                continue
            options = [c for c in strata.get(a, ()) if c.graph_id not in used_graphs and c.key not in used_keys]
            if not options:
                exhausted.add(a)
                continue
            pick = options[rng.integers(len(options))]
            chosen.append(pick)
            used_graphs.add(pick.graph_id)
            used_keys.add(pick.key)
            progressed = True
        if not progressed:
            missing = ", ".join(str(a) for a in values)
            raise InfeasiblePlanError(
                f"{task} series: candidates for answer values {missing} ran out after {len(chosen)} of {count} instances"
            )
    skipped = sorted(exhausted)
    if skipped:
        logger.info("%s answer values %s were exhausted; stratum counts are skewed", task, skipped)
    return chosen, skipped


def _pick_control(rng, strata, lo, hi, used_graphs, used_keys, graphs, layouts, config, task):
    for a in range(lo, hi + 1):
        options = [c for c in strata.get(a, ()) if c.graph_id not in used_graphs and c.key not in used_keys]
        if not options:
            continue
        if len(options) > config.control_pool:
            idx = np.sort(rng.choice(len(options), size=config.control_pool, replace=False))
            options = [options[i] for i in idx]
        scored = [(c, score_candidate(layouts[c.graph_id], graphs[c.graph_id], c, config.complexity)) for c in options]
        return min(scored, key=lambda cs: (-math.inf if cs[1].noise_free else cs[1].combined, cs[1].signal))
    raise InfeasiblePlanError(f"{task} control: no candidate with an answer in [{lo}, {hi}] on an unused graph")


def sample_plan(graphs, layouts, config=None, seed=0, candidates=None):
    """Seeded session plan over ``graphs`` (a list of ``(graph_id, Graph)``).

    Each block of paired units receives one control instance followed by two
    task series of ``instances_per_task`` instances, every one on a different
    graph. Task order alternates between blocks. Within a task, answer values
    are drawn round-robin in ascending order so each value in range appears
    as evenly as the pool allows. The control is the candidate with the lowest
    combined complexity among a seeded subsample of the easiest available
    answer value of the first series.
    """
    config = config or PlanConfig()
    graph_map = dict(graphs)
    if config.density_range is not None:
        lo, hi = config.density_range
        eligible = [gid for gid, g in graphs if lo <= global_properties(g)[1] <= hi]
    else:
        eligible = [gid for gid, _ in graphs]
    if len(eligible) < config.answers_per_unit:
        raise InfeasiblePlanError(
            f"{len(eligible)} eligible graphs cannot give {config.answers_per_unit} distinct graphs per unit"
        )
    if config.n_blocks % 2:
        warnings.warn(f"{config.n_blocks} blocks cannot counterbalance task order exactly", stacklevel=2)
    if candidates is None:
        candidates = prepare_candidates([(gid, graph_map[gid]) for gid in eligible], layouts, config)

    pools = {task: [c for gid in eligible for c in candidates[gid][task]] for task in TASKS}
    strata = {task: _strata(pools[task], task, *config.answer_ranges[task]) for task in TASKS}

    used_keys = set()
    units, instances, skew = [], {}, {}
    for block, child in enumerate(np.random.SeedSequence(seed).spawn(config.n_blocks)):
        rng = np.random.default_rng(child)
        order = (TASK_CN, TASK_SP) if block % 2 == 0 else (TASK_SP, TASK_CN)
        used_graphs = set()
        lo, hi = config.answer_ranges[order[0]]
        control, control_score = _pick_control(rng, strata[order[0]], lo, hi, used_graphs, used_keys,
                                               graph_map, layouts, config, order[0])
        used_graphs.add(control.graph_id)
        used_keys.add(control.key)
        instances[instance_id(control)] = TaskInstance(instance_id(control), control.graph_id, control.task,
                                                       control.u, control.v, control.answer, control_score,
                                                       control.properties, True)
        sequence = [instance_id(control)]
        for task in order:
            series, skipped = _draw_series(rng, strata[task], *config.answer_ranges[task],
                                           config.instances_per_task, used_graphs, used_keys, task)
            skew[f"{block}:{task}"] = skipped
            series = [series[i] for i in rng.permutation(len(series))]
            for c in series:
                iid = instance_id(c)
                score = score_candidate(layouts[c.graph_id], graph_map[c.graph_id], c, config.complexity)
                instances[iid] = TaskInstance(iid, c.graph_id, c.task, c.u, c.v, c.answer, score, c.properties)
                sequence.append(iid)
        for k in range(config.units_per_block):
            units.append(UnitPlan(f"b{block:02d}u{k}", block, order, list(sequence)))

    meta = {
        "stratification_rule": STRATIFICATION_RULE,
        "path_betweenness_rule": PATH_BETWEENNESS_RULE,
        "control_rule": "lowest combined complexity in the easiest answer value, placed first",
        "exhausted_answer_values": skew,
        "eligible_graphs": eligible,
    }
    return SessionPlan(int(seed), config, [gid for gid, _ in graphs], units, instances, meta)
