"""Response scoring: accuracy, group-type harmonization and paired resampling
statistics (stratified bootstrap and sign-flip permutation test)."""
import csv
import math
from collections import defaultdict
from dataclasses import dataclass, field
from itertools import permutations

import numpy as np

from ._validation import check_count

INDIVIDUAL = "individual"
AD_HOC = "ad_hoc_pair"
NOMINAL = "nominal_pair"
GROUP_TYPES = (INDIVIDUAL, AD_HOC, NOMINAL)
MIN_RESAMPLES = 1000


def accuracy(a_correct, a_actual):
    """``max(1 - |a_correct - a_actual| / a_correct, 0)``; works on arrays."""
    c = np.asarray(a_correct, dtype=float)
    a = np.asarray(a_actual, dtype=float)
    if np.any(c <= 0):
        raise ValueError("correct answers must be >= 1")
    out = np.maximum(1.0 - np.abs(c - a) / c, 0.0)
    return float(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class MemberResponse:
    member: str
    answer: int
    time_s: float

    def __post_init__(self):
        if not self.time_s > 0:
            raise ValueError(f"completion time must be > 0, got {self.time_s!r}")


@dataclass
class SessionRecord:
    """All responses of one between-subject unit.

    ``responses`` maps instance id to the member rows for that instance:
    one row for individuals, two rows sharing the agreed answer for ad hoc
    pairs, and two independent rows for nominal pairs.
    """

    unit_id: str
    group_type: str
    responses: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.group_type not in GROUP_TYPES:
            raise ValueError(f"group_type must be one of {GROUP_TYPES}, got {self.group_type!r}")

    @property
    def instance_ids(self):
        return frozenset(self.responses)


def _expected_members(group_type):
    return 1 if group_type == INDIVIDUAL else 2


def harmonize(record, correct):
    """Per-instance ``(accuracy, time_s)`` for a unit.

    Nominal pairs take the best member accuracy and the slowest member time.
    Ad hoc pairs score their agreed answer and take the slower member time.
    Individuals pass through. ``correct`` maps instance id to correct answer.
    """
    out = {}
    need = _expected_members(record.group_type)
    for iid, rows in record.responses.items():
        if iid not in correct:
            raise KeyError(f"no correct answer for instance {iid}")
        if len(rows) != need:
            raise ValueError(
                f"unit {record.unit_id} ({record.group_type}) has {len(rows)} member rows for {iid}, expected {need}"
            )
        accs = [accuracy(correct[iid], r.answer) for r in rows]
        time_s = max(r.time_s for r in rows)
        if record.group_type == AD_HOC and len({r.answer for r in rows}) != 1:
            raise ValueError(f"ad hoc pair {record.unit_id} gave different answers for {iid}")
        out[iid] = (max(accs), time_s)
    return out


def split_nominal(record, seed=0):
    """Individual record built from one randomly chosen member of a nominal pair."""
    if record.group_type != NOMINAL:
        raise ValueError("only nominal pairs can be split into individuals")
    members = sorted({r.member for rows in record.responses.values() for r in rows})
    rng = np.random.default_rng(seed)
    pick = members[rng.integers(len(members))]
    responses = {iid: [r for r in rows if r.member == pick] for iid, rows in record.responses.items()}
    return SessionRecord(f"{record.unit_id}:{pick}", INDIVIDUAL, responses)


RESPONSE_COLUMNS = ["unit_id", "group_type", "instance_id", "member", "answer", "time_s"]


def read_responses_csv(path):
    records = {}
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        missing = set(RESPONSE_COLUMNS) - set(reader.fieldnames or ())
        if missing:
            raise ValueError(f"{path}: missing columns {sorted(missing)}")
        for row in reader:
            rec = records.setdefault(row["unit_id"], SessionRecord(row["unit_id"], row["group_type"]))
            if rec.group_type != row["group_type"]:
                raise ValueError(f"unit {row['unit_id']} has mixed group types")
            rec.responses.setdefault(row["instance_id"], []).append(
                MemberResponse(row["member"], int(row["answer"]), float(row["time_s"]))
            )
    return [records[k] for k in sorted(records)]


def write_responses_csv(records, path):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(RESPONSE_COLUMNS)
        for rec in records:
            for iid in sorted(rec.responses):
                for r in rec.responses[iid]:
                    writer.writerow([rec.unit_id, rec.group_type, iid, r.member, r.answer, repr(r.time_s)])


def paired_values(records_x, records_y, correct, measure="accuracy"):
    """Match units of two group types that solved identical instance sets.

    Returns a list with one ``(n_k, 2)`` array per matched unit pair, rows
    being ``(x, y)`` per shared instance. ``measure="time"`` gives log times.
    """
    if measure not in ("accuracy", "time"):
        raise ValueError(f"measure must be 'accuracy' or 'time', got {measure!r}")
    col = 0 if measure == "accuracy" else 1
    by_set = defaultdict(list)
    for rec in records_y:
        by_set[rec.instance_ids].append(rec)
    groups = []
    for rx in records_x:
        partners = by_set.get(rx.instance_ids)
        if not partners:
            continue
        ry = partners.pop(0)
        hx, hy = harmonize(rx, correct), harmonize(ry, correct)
        rows = [(hx[i][col], hy[i][col]) for i in sorted(hx)]
        arr = np.array(rows, dtype=float)
        if measure == "time":
            arr = np.log(arr)
        groups.append(arr)
    return groups


def _check_groups(groups):
    groups = [np.asarray(g, dtype=float).reshape(-1, 2) for g in groups]
    if len(groups) < 2:
        raise ValueError(f"need at least 2 units, got {len(groups)}")
    for k, g in enumerate(groups):
        if len(g) == 0:
            raise ValueError(f"unit {k} has no paired measures")
    return groups


def _padded_differences(groups):
    sizes = np.array([len(g) for g in groups])
    diffs = np.zeros((len(groups), sizes.max()))
    for k, g in enumerate(groups):
        diffs[k, : len(g)] = g[:, 1] - g[:, 0]
    return diffs, sizes


@dataclass(frozen=True)
class BootstrapResult:
    mean_diff: float
    ci_low: float
    ci_high: float
    n_units: int
    R: int
    seed: int


def stratified_bootstrap(groups, R=10_000, seed=0, level=0.95):
    """Percentile CI of the paired mean difference ``y - x``.

    Units are resampled with replacement, then the measures within each drawn
    unit are resampled with replacement.
    """
    R = check_count(R, "R", MIN_RESAMPLES)
    groups = _check_groups(groups)
    diffs, sizes = _padded_differences(groups)
    estimate = float(diffs.sum() / sizes.sum())
    rng = np.random.default_rng(seed)
    U = len(groups)
    units = rng.integers(U, size=(R, U))
    n = sizes[units]
    cols = np.floor(rng.random((R, U, diffs.shape[1])) * n[:, :, None]).astype(np.int64)
    drawn = diffs[units[:, :, None], cols]
    valid = np.arange(diffs.shape[1])[None, None, :] < n[:, :, None]
    stats = np.where(valid, drawn, 0.0).sum(axis=(1, 2)) / n.sum(axis=1)
    alpha = (1.0 - level) / 2.0
    low, high = np.quantile(stats, [alpha, 1.0 - alpha])
    # collapse float noise when every replicate is the same value
    if np.ptp(stats) <= 1e-12 * max(1.0, abs(estimate)):
        low = high = estimate
    return BootstrapResult(estimate, float(low), float(high), U, R, int(seed))


def paired_permutation_test(groups, R=10_000, seed=0):
    """Two-sided sign-flip permutation p-value for the paired mean difference.

    All differences of one unit share a sign flip. Returns 1.0 when every
    difference is zero.
    """
    R = check_count(R, "R", MIN_RESAMPLES)
    groups = _check_groups(groups)
    diffs, sizes = _padded_differences(groups)
    unit_sums = diffs.sum(axis=1)
    total = sizes.sum()
    if np.all(diffs == 0):
        return 1.0
    observed = abs(unit_sums.sum()) / total
    rng = np.random.default_rng(seed)
    signs = rng.choice(np.array([-1.0, 1.0]), size=(R, len(groups)))
    perm = np.abs(signs @ unit_sums) / total
    hits = np.count_nonzero(perm >= observed * (1.0 - 1e-12))
    return (1.0 + hits) / (R + 1.0)


def compare_groups(records, correct, R=10_000, seed=0):
    """Bootstrap and permutation results for every pair of group types present.

    Each comparison pairs units of the two types that solved the same
    instances; time comparisons use log times.
    """
    by_type = defaultdict(list)
    for rec in records:
        by_type[rec.group_type].append(rec)
    report = []
    for gx, gy in permutations(GROUP_TYPES, 2):
        if GROUP_TYPES.index(gx) > GROUP_TYPES.index(gy) or not by_type[gx] or not by_type[gy]:
            continue
        for measure in ("accuracy", "time"):
            groups = paired_values(by_type[gx], list(by_type[gy]), correct, measure)
            entry = {"x": gx, "y": gy, "measure": measure, "n_units": len(groups), "R": R, "seed": seed}
            if len(groups) >= 2:
                boot = stratified_bootstrap(groups, R, seed)
                entry.update(mean_diff=boot.mean_diff, ci_low=boot.ci_low, ci_high=boot.ci_high,
                             p_value=paired_permutation_test(groups, R, seed))
                if measure == "time":
                    entry["time_ratio"] = math.exp(boot.mean_diff)
            report.append(entry)
    return report


def simulate_responses(plan, seed=0, group_types=(AD_HOC, NOMINAL), noise_scale=0.15, base_time=20.0):
    """Synthetic responses for every unit of a plan, for demos and tests.

    Units within a block get ``group_types`` in turn. Answer errors and log
    times grow with the instance's combined complexity. These are not human
    data.
    """
    rng = np.random.default_rng(seed)
    records = []
    for unit in plan.units:
        k = int(unit.unit_id.rsplit("u", 1)[-1])
        gtype = group_types[k % len(group_types)]
        members = ("a",) if gtype == INDIVIDUAL else ("a", "b")
        rec = SessionRecord(unit.unit_id, gtype)
        for iid in unit.sequence:
            inst = plan.instances[iid]
            comb = inst.score.combined
            load = 0.0 if comb is None else max(comb, 0.0)
            shared = rng.normal(0.0, noise_scale * inst.answer * (1.0 + 0.1 * load))
            rows = []
            for m in members:
                err = shared if gtype == AD_HOC else rng.normal(0.0, noise_scale * inst.answer * (1.0 + 0.1 * load))
                answer = max(0, int(round(inst.answer + err)))
                time_s = float(base_time * math.exp(0.1 * load + rng.normal(0.0, 0.3)))
                rows.append(MemberResponse(m, answer, round(time_s, 3)))
            if gtype == AD_HOC:
                rows = [MemberResponse(r.member, rows[0].answer, r.time_s) for r in rows]
            rec.responses[iid] = rows
        records.append(rec)
    return records
