"""Topological crackle simulation and verification (C++ core)."""

try:
    from ._crackle import *  # noqa: F401,F403  (installed package layout)
    from ._crackle import __version__  # noqa: F401
except ImportError:  # build-tree layout: _crackle.so next to the package dir
    from _crackle import *  # noqa: F401,F403
    from _crackle import __version__  # noqa: F401
