"""Bundled model, scene, and behavior files."""

from importlib import resources
from pathlib import Path


def asset_path(name: str) -> Path:
    return Path(str(resources.files("behavior_forge") / "assets" / name))
