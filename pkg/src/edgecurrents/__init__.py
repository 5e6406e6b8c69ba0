"""Edge and bulk currents of a disordered magnetic Schrodinger operator on a cylinder."""
from importlib.metadata import PackageNotFoundError, version

try:
    __version__ = version("artifact")
except PackageNotFoundError:  # running from a source tree
    __version__ = "0.1.0"
