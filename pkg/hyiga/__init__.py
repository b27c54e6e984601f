from . import assembly, benchmarks, element, errors, material, nurbs, utils

try:
    from .version import __version__, git_version  # noqa: F401
except ImportError:
    pass

__all__ = [
    "nurbs",
    "material",
    "element",
    "assembly",
    "benchmarks",
    "errors",
    "utils",
]
