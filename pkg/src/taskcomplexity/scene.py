"""Scene descriptions for mixed-reality clients.

A scene is a JSON document in metres with +Y up. It carries node positions
and labels, edges, element radii, the two selected nodes, colors and the
view cube. See ``SCENE_SCHEMA`` for the field list.
"""
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .config import DEFAULTS

SCENE_FORMAT = "taskcomplexity.scene"
SCENE_VERSION = 1

SCENE_SCHEMA = {
    "format": "always 'taskcomplexity.scene'",
    "version": "integer schema version",
    "units": "always 'm'",
    "up": "always '+y'",
    "nodes": "list of {id, label, position: [x, y, z]}",
    "edges": "list of [a, b] node id pairs",
    "selected": "exactly two node ids",
    "style": "{graph_color, selection_color, node_radius, edge_radius}",
    "view": "{cube_side, barycenter_height, bounds: [[x, y, z], [x, y, z]]}",
    "meta": "free-form provenance (seed, config_hash, instance_id, ...)",
}


@dataclass
class SceneDescription:
    positions: np.ndarray
    edges: list
    selected: tuple
    labels: list
    node_radius: float
    edge_radius: float
    bounds: np.ndarray
    cube_side: float = 1.0
    barycenter_height: float = 1.45
    graph_color: str = DEFAULTS["scene"]["graph_color"]
    selection_color: str = DEFAULTS["scene"]["selection_color"]
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.positions = np.asarray(self.positions, dtype=float).reshape(-1, 3)
        self.bounds = np.asarray(self.bounds, dtype=float).reshape(2, 3)
        n = len(self.positions)
        sel = tuple(int(s) for s in self.selected)
        if len(sel) != 2 or sel[0] == sel[1] or not all(0 <= s < n for s in sel):
            raise ValueError(f"a scene needs exactly two distinct selected nodes, got {self.selected!r}")
        self.selected = sel
        if len(self.labels) != n:
            raise ValueError("one label per node is required")
        if n and np.ptp(self.positions, axis=0).max() > self.cube_side * (1 + 1e-9):
            raise ValueError(f"layout extent exceeds the {self.cube_side} m view cube; normalize it first")

    @classmethod
    def from_layout(cls, g, layout, u, v, colors=None, meta=None):
        colors = colors or DEFAULTS["scene"]
        m = layout.meta
        return cls(
            layout.positions,
            [list(map(int, e)) for e in g.edge_array],
            (u, v),
            list(g.labels),
            layout.node_radius,
            layout.edge_radius,
            layout.bounds,
            m.get("cube_side", float(np.ptp(layout.bounds, axis=0).max())),
            m.get("barycenter_height", DEFAULTS["layout"]["barycenter_height"]),
            colors["graph_color"],
            colors["selection_color"],
            dict(meta or {}),
        )

    def to_json(self):
        return {
            "format": SCENE_FORMAT,
            "version": SCENE_VERSION,
            "units": "m",
            "up": "+y",
            "nodes": [
                {"id": i, "label": lab, "position": p}
                for i, (lab, p) in enumerate(zip(self.labels, self.positions.tolist()))
            ],
            "edges": [list(e) for e in self.edges],
            "selected": list(self.selected),
            "style": {
                "graph_color": self.graph_color,
                "selection_color": self.selection_color,
                "node_radius": self.node_radius,
                "edge_radius": self.edge_radius,
            },
            "view": {
                "cube_side": self.cube_side,
                "barycenter_height": self.barycenter_height,
                "bounds": self.bounds.tolist(),
            },
            "meta": self.meta,
        }

    @classmethod
    def from_json(cls, doc):
        if doc.get("format") != SCENE_FORMAT:
            raise ValueError(f"not a scene document: format={doc.get('format')!r}")
        nodes = sorted(doc["nodes"], key=lambda d: d["id"])
        style, view = doc["style"], doc["view"]
        return cls(
            np.array([d["position"] for d in nodes], dtype=float),
            [tuple(e) for e in doc["edges"]],
            tuple(doc["selected"]),
            [d["label"] for d in nodes],
            style["node_radius"],
            style["edge_radius"],
            view["bounds"],
            view["cube_side"],
            view["barycenter_height"],
            style["graph_color"],
            style["selection_color"],
            doc.get("meta", {}),
        )


def write_scene(scene, path):
    Path(path).write_text(json.dumps(scene.to_json(), indent=1, sort_keys=True) + "\n", encoding="utf-8")


def read_scene(path):
    return SceneDescription.from_json(json.loads(Path(path).read_text(encoding="utf-8")))
