import csv
import json
import math
import subprocess
import sys
from pathlib import Path

import numpy as np
import pytest

from taskcomplexity.cli import main
from taskcomplexity.complexity import read_complexity_csv
from taskcomplexity.config import DEFAULTS, config_hash, load_config
from taskcomplexity.evaluation import SessionRecord, MemberResponse, read_responses_csv
from taskcomplexity.graph import Graph, graph_to_json
from taskcomplexity.layout import read_layout
from taskcomplexity.plotting import OrphanInstancesError, build_figure, join_responses
from taskcomplexity.scene import SceneDescription, read_scene, write_scene


@pytest.fixture
def small_graph(tmp_path):
    edges = [(0, 1), (1, 2), (2, 3), (3, 0), (0, 2), (3, 4), (4, 5), (5, 1)]
    path = tmp_path / "small.json"
    path.write_text(json.dumps(graph_to_json(Graph.from_edges(edges))))
    return path


# -- configuration -------------------------------------------------------------

def test_config_precedence(tmp_path):
    cfg_file = tmp_path / "c.toml"
    cfg_file.write_text('seed = 3\n[complexity]\nmu_node = "zero"\nmode = "relative"\n[graphs]\npaths = ["a.json"]\n')
    cfg = load_config(cfg_file, env={})
    assert cfg["seed"] == 3 and cfg["complexity"]["mu_node"] == "zero"
    assert cfg["complexity"]["edge_noise"] == DEFAULTS["complexity"]["edge_noise"]
    assert cfg["graphs"]["paths"] == [str(tmp_path / "a.json")]
    cfg = load_config(cfg_file, env={"TICX_SEED": "5", "TICX_MU_NODE": "diameter"})
    assert cfg["seed"] == 5 and cfg["complexity"]["mu_node"] == "diameter"
    cfg = load_config(cfg_file, env={"TICX_SEED": "5"}, overrides={("seed",): 9, ("complexity", "mode"): None})
    assert cfg["seed"] == 9 and cfg["complexity"]["mode"] == "relative"


def test_json_config_and_hash(tmp_path):
    (tmp_path / "a").mkdir()
    (tmp_path / "b").mkdir()
    for d in ("a", "b"):
        (tmp_path / d / "c.json").write_text(json.dumps({"graphs": {"paths": ["g.json"]}, "seed": 4}))
    ha = config_hash(load_config(tmp_path / "a" / "c.json", env={}))
    hb = config_hash(load_config(tmp_path / "b" / "c.json", env={}))
    assert ha == hb
    assert ha != config_hash(load_config(tmp_path / "a" / "c.json", env={"TICX_SEED": "5"}))


# -- scene -----------------------------------------------------------------------

def _scene(**kw):
    args = dict(positions=[[0, 1.2, 0], [0.5, 1.6, 0.2], [-0.3, 1.4, 0.1]], edges=[(0, 1), (1, 2)],
                selected=(0, 2), labels=["1", "2", "3"], node_radius=0.01, edge_radius=0.002,
                bounds=[[-0.5, 0.95, -0.5], [0.5, 1.95, 0.5]])
    args.update(kw)
    return SceneDescription(**args)


def test_scene_round_trip(tmp_path):
    scene = _scene(meta={"seed": 1})
    write_scene(scene, tmp_path / "s.json")
    doc = json.loads((tmp_path / "s.json").read_text())
    assert doc["units"] == "m" and doc["up"] == "+y"
    assert doc["style"]["graph_color"] == "#56B4E9" and doc["style"]["selection_color"] == "#D55E00"
    back = read_scene(tmp_path / "s.json")
    assert np.allclose(back.positions, scene.positions, rtol=0, atol=1e-9)
    assert back.selected == scene.selected and back.labels == scene.labels


@pytest.mark.parametrize("kw", [{"selected": (0, 0)}, {"selected": (0, 1, 2)}, {"selected": (0, 7)},
                                {"labels": ["1"]}, {"positions": [[0, 0, 0], [2, 0, 0], [0, 1, 0]]}])
def test_scene_validation(kw):
    with pytest.raises(ValueError):
        _scene(**kw)


def test_scene_rejects_foreign_documents():
    with pytest.raises(ValueError):
        SceneDescription.from_json({"format": "other"})


# -- plotting --------------------------------------------------------------------

def _rows():
    return [
        {"instance_id": "i1", "answer": 4, "signal": 0.2, "noise": 0.5},
        {"instance_id": "i2", "answer": 6, "signal": 1.4, "noise": 3.0},
        {"instance_id": "i3", "answer": 3, "signal": 0.7, "noise": 12.0},
    ]


def _recs():
    return [SessionRecord("u", "individual", {i: [MemberResponse("a", a, t)] for i, a, t in
                                              (("i1", 4, 10.0), ("i2", 5, 25.0), ("i3", 3, 60.0))})]


def test_plot_axes_cover_data_and_use_ln_noise():
    joined = join_responses(_rows(), _recs())
    fig = build_figure(joined)
    ax_signal, ax_noise = fig.axes[2], fig.axes[3]
    lo, hi = ax_noise.get_xlim()
    ln = [math.log(r["noise"]) for r in _rows()]
    assert lo <= min(ln) and hi >= max(ln)
    # ln(0.5) < 0 would be impossible on a raw noise axis
    assert lo < 0
    visible = [t for t in ax_noise.get_xticks() if lo <= t <= hi]
    assert min(visible) < max(ln) and max(visible) > min(ln)
    slo, shi = ax_signal.get_xlim()
    assert slo <= 0.2 and shi >= 1.4
    tlo, thi = fig.axes[0].get_ylim()
    assert fig.axes[0].get_yscale() == "log" and tlo <= 10.0 and thi >= 60.0


def test_empty_plot_placeholder():
    fig = build_figure([])
    assert [t.get_text() for t in fig.texts] == ["no responses"]
    assert not any(ax.axison for ax in fig.axes)


def test_plot_orphans_listed():
    recs = _recs()
    recs[0].responses["ghost"] = [MemberResponse("a", 1, 1.0)]
    with pytest.raises(OrphanInstancesError, match="ghost"):
        join_responses(_rows(), recs)


def test_plot_cli_empty_and_orphans(tmp_path, capsys):
    from taskcomplexity.complexity import COMPLEXITY_COLUMNS

    with open(tmp_path / "c.csv", "w", newline="") as fh:
        w = csv.DictWriter(fh, COMPLEXITY_COLUMNS)
        w.writeheader()
        w.writerow({k: "" for k in COMPLEXITY_COLUMNS} | {"instance_id": "i1", "u": 0, "v": 1, "answer": 3,
                                                         "signal": 0.1, "noise": 0.2})
    (tmp_path / "r.csv").write_text("unit_id,group_type,instance_id,member,answer,time_s\n")
    assert main(["plot", str(tmp_path / "c.csv"), str(tmp_path / "r.csv"), "--out", str(tmp_path / "p.svg")]) == 0
    assert (tmp_path / "p.svg").read_text().lstrip().startswith("<?xml")
    (tmp_path / "r2.csv").write_text("unit_id,group_type,instance_id,member,answer,time_s\nu,individual,zz,a,1,2.0\n")
    assert main(["plot", str(tmp_path / "c.csv"), str(tmp_path / "r2.csv"), "--out", str(tmp_path / "q.svg")]) == 1
    assert "zz" in capsys.readouterr().err


# -- subcommands -------------------------------------------------------------------

def test_missing_file_exit_code(tmp_path, capsys):
    missing = tmp_path / "nope.txt"
    assert main(["layout", str(missing)]) == 2
    err = capsys.readouterr().err
    assert str(missing) in err and err.startswith("error [layout]")
    assert main(["layout", str(missing), "--config", str(tmp_path / "none.toml")]) == 2
    assert "none.toml" in capsys.readouterr().err


def test_bad_choice_is_usage_error():
    with pytest.raises(SystemExit) as exc:
        main(["layout", "x", "--mode", "sideways"])
    assert exc.value.code == 2


def test_layout_candidates_complexity_scene(tmp_path, small_graph):
    lay = tmp_path / "lay.json"
    assert main(["layout", str(small_graph), "--out", str(lay), "--seed", "3"]) == 0
    layout = read_layout(lay)
    assert layout.meta["seed"] == 3 and "config_hash" in layout.meta
    assert main(["candidates", str(small_graph), str(lay), "--task", "CN", "--out", str(tmp_path / "c.csv")]) == 0
    with open(tmp_path / "c.csv") as fh:
        rows = list(csv.DictReader(fh))
    assert rows and {"seed", "config_hash", "local_density"} <= set(rows[0])
    assert main(["complexity", str(small_graph), str(lay), "--task", "SP", "1", "4", "0", "5",
                 "--mu-node", "zero", "--edge-noise", "clipped", "--mode", "relative",
                 "--out", str(tmp_path / "x.csv")]) == 0
    out = read_complexity_csv(tmp_path / "x.csv")
    assert [r["signal_mode"] for r in out] == ["relative"] * 2
    assert {r["mu_node_mode"] for r in out} == {"zero"} and {r["clip_mode"] for r in out} == {"clipped"}
    assert main(["scene", str(small_graph), str(lay), "0", "4", "--out", str(tmp_path / "s.json")]) == 0
    scene = read_scene(tmp_path / "s.json")
    assert np.allclose(scene.positions, layout.positions, rtol=0, atol=1e-9)
    assert scene.meta["seed"] == 0


def test_env_override_reaches_outputs(tmp_path, small_graph, monkeypatch):
    lay = tmp_path / "lay.json"
    main(["layout", str(small_graph), "--out", str(lay)])
    monkeypatch.setenv("TICX_MODE", "relative")
    monkeypatch.setenv("TICX_SEED", "12")
    assert main(["complexity", str(small_graph), str(lay), "--task", "SP", "1", "4", "--out", str(tmp_path / "x.csv")]) == 0
    row = read_complexity_csv(tmp_path / "x.csv")[0]
    assert row["signal_mode"] == "relative" and row["seed"] == "12"
    assert main(["complexity", str(small_graph), str(lay), "--task", "SP", "1", "4", "--mode", "absolute",
                 "--out", str(tmp_path / "y.csv")]) == 0
    assert read_complexity_csv(tmp_path / "y.csv")[0]["signal_mode"] == "absolute"


def test_odd_pair_list_is_usage_error(small_graph):
    with pytest.raises(SystemExit):
        main(["complexity", str(small_graph), "lay.json", "--task", "SP", "1"])


def test_stage_error_exit_code(tmp_path, small_graph, capsys):
    lay = tmp_path / "lay.json"
    main(["layout", str(small_graph), "--out", str(lay)])
    assert main(["complexity", str(small_graph), str(lay), "--task", "CN", "4", "5"]) == 1
    assert capsys.readouterr().err.startswith("error [complexity]")


# -- pipeline outputs ------------------------------------------------------------------

def test_pipeline_outputs(fixture_runs):
    out, _, code = fixture_runs[0]
    assert code == 0
    manifest = json.loads((out / "manifest.json").read_text())
    for name in ("plan.json", "plan.csv", "complexity.csv", "candidates.csv", "responses.csv", "report.json",
                 "plot.svg"):
        assert name in manifest["files"]
    assert manifest["seed"] == 7 and manifest["decisions"]["mu_node"] == "diameter"
    chash = manifest["config_hash"]
    assert json.loads((out / "plan.json").read_text())["meta"]["config_hash"] == chash
    assert json.loads((out / "report.json").read_text())["config_hash"] == chash
    assert chash in (out / "plot.svg").read_text()
    for f in (out / "layouts").iterdir():
        assert json.loads(f.read_text())["meta"]["config_hash"] == chash
    with open(out / "complexity.csv") as fh:
        assert {r["config_hash"] for r in csv.DictReader(fh)} == {chash}


def test_plan_evaluate_plot_from_pipeline_outputs(fixture_runs, tmp_path):
    from taskcomplexity.fixtures import fixture_config_path

    out = fixture_runs[0][0]
    cfg = str(fixture_config_path())
    assert main(["plan", str(out / "graphs"), "--layouts", str(out / "layouts"), "--config", cfg,
                 "--out", str(tmp_path / "plan.json")]) == 0
    assert json.loads((tmp_path / "plan.json").read_text())["instances"] == json.loads((out / "plan.json").read_text())["instances"]
    assert main(["evaluate", str(out / "plan.json"), str(out / "responses.csv"), "--config", cfg,
                 "--out", str(tmp_path / "report.json")]) == 0
    assert json.loads((tmp_path / "report.json").read_text())["comparisons"] == json.loads((out / "report.json").read_text())["comparisons"]
    assert main(["plot", str(out / "complexity.csv"), str(out / "responses.csv"), "--out", str(tmp_path / "p.svg")]) == 0


def test_console_script_help():
    res = subprocess.run([sys.executable, "-m", "taskcomplexity.cli", "--help"], capture_output=True, text=True)
    assert res.returncode == 0
    for cmd in ("layout", "candidates", "complexity", "plan", "evaluate", "scene", "plot", "pipeline"):
        assert cmd in res.stdout
