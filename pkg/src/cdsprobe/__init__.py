"""Model-based testing of cockpit display systems."""
from importlib import resources
from pathlib import Path

__version__ = "0.1.0"


def data_path(name: str = "") -> Path:
    """Location of a file from the bundled PFD example dataset."""
    return Path(str(resources.files(__package__) / "data")) / name
