"""The shipped model corpus."""

from __future__ import annotations

from importlib import resources
from pathlib import Path

from .parser import parse_net

CORPUS = ("chain", "cycle", "choice", "race", "skew", "gasburner")
SCALING_MODEL = "gasburner4"


def model_path(name: str) -> Path:
    return Path(str(resources.files("tbtrg") / "models" / f"{name}.tbn"))


def resolve(name_or_path: str) -> Path:
    """A file path as given, else a shipped model by name."""
    p = Path(name_or_path)
    if p.exists():
        return p
    shipped = model_path(name_or_path)
    if shipped.exists():
        return shipped
    raise FileNotFoundError(f"no such net file or shipped model: {name_or_path}")


def load(name_or_path: str) -> tuple:
    return parse_net(resolve(name_or_path))
