import importlib.util


def is_module_available(*modules: str) -> bool:
    r"""Returns if every top-level module in :attr:`modules` can be found *without*
    importing it. The optional ``meshio`` reader used to validate VTK exports
    is checked this way.
    """
    return all(importlib.util.find_spec(m) is not None for m in modules)
