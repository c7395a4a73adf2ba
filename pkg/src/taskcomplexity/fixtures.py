"""Access to the bundled example data."""
from importlib import resources


def fixture_dir():
    return resources.files("taskcomplexity") / "data" / "fixture"


def fixture_config_path():
    """Path of the bundled 10-graph pipeline config."""
    return fixture_dir() / "fixture.toml"
