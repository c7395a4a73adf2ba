"""Run configuration: defaults, JSON/TOML loading and environment overrides."""
import copy
import hashlib
import json
import os
from pathlib import Path

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

ENV_PREFIX = "TICX_"

# Okabe-Ito palette entries
OKABE_ITO = {
    "black": "#000000",
    "orange": "#E69F00",
    "sky_blue": "#56B4E9",
    "bluish_green": "#009E73",
    "yellow": "#F0E442",
    "blue": "#0072B2",
    "vermilion": "#D55E00",
    "reddish_purple": "#CC79A7",
}

DEFAULTS = {
    "seed": 0,
    "graphs": {"paths": [], "synthetic": None},
    "layout": {
        "max_iter": 3000,
        "tol": 1e-7,
        "n_init": 32,
        "cube_side": 1.0,
        "barycenter_height": 1.45,
        "node_radius": 0.01,
        "edge_radius": 0.002,
    },
    "complexity": {
        "mode": "absolute",
        "mu_node": "diameter",
        "edge_noise": "full",
        "inflate_nodes": False,
        "path_cap": 64,
    },
    "plan": {
        "n_blocks": 2,
        "units_per_block": 2,
        "instances_per_task": 12,
        "answer_ranges": {"CN": [2, 11], "SP": [3, 16]},
        "density_range": [0.03, 0.07],
        "control_pool": 50,
        "outlier_threshold": 2.0,
    },
    "scene": {"graph_color": OKABE_ITO["sky_blue"], "selection_color": OKABE_ITO["vermilion"]},
    "evaluation": {"R": 10_000, "simulate_responses": False},
}

# environment variable suffix -> config key path
ENV_KEYS = {
    "SEED": ("seed",),
    "MU_NODE": ("complexity", "mu_node"),
    "EDGE_NOISE": ("complexity", "edge_noise"),
    "MODE": ("complexity", "mode"),
}


def deep_merge(base, update):
    out = copy.deepcopy(base)
    for key, value in update.items():
        if isinstance(value, dict) and isinstance(out.get(key), dict):
            out[key] = deep_merge(out[key], value)
        else:
            out[key] = copy.deepcopy(value)
    return out


def read_config_file(path):
    """Parse a ``.toml`` or ``.json`` config file into a dict."""
    path = Path(path)
    text = path.read_text(encoding="utf-8")
    if path.suffix.lower() == ".toml":
        return tomllib.loads(text)
    return json.loads(text)


def set_key(cfg, keys, value):
    node = cfg
    for k in keys[:-1]:
        node = node.setdefault(k, {})
    node[keys[-1]] = value


def load_config(path=None, env=None, overrides=None):
    """Defaults, then the config file, then ``TICX_*`` variables, then ``overrides``.

    ``overrides`` maps key paths (tuples) to values, e.g. from CLI flags.
    Relative graph paths in a config file resolve against its directory.
    """
    cfg = copy.deepcopy(DEFAULTS)
    if path is not None:
        doc = read_config_file(path)
        paths = doc.get("graphs", {}).get("paths")
        if paths:
            base = Path(path).parent
            doc["graphs"]["paths"] = [str(base / p) for p in paths]
        cfg = deep_merge(cfg, doc)
    env = os.environ if env is None else env
    for suffix, keys in ENV_KEYS.items():
        raw = env.get(ENV_PREFIX + suffix)
        if raw is not None:
            set_key(cfg, keys, int(raw) if keys == ("seed",) else raw)
    for keys, value in (overrides or {}).items():
        if value is not None:
            set_key(cfg, keys, value)
    return cfg


def config_hash(cfg):
    """Short content hash of a config (graph paths excluded, only their names count)."""
    doc = copy.deepcopy(cfg)
    doc["graphs"]["paths"] = [Path(p).name for p in doc["graphs"].get("paths", [])]
    return hashlib.sha256(json.dumps(doc, sort_keys=True).encode()).hexdigest()[:16]
