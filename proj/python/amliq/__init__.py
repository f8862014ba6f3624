"""American put pricing under stochastic illiquidity with transaction costs."""

try:
    from ._amliq import *  # noqa: F401,F403
    from ._amliq import __doc__ as _core_doc
except ImportError:
    # in-tree test runs put the extension on sys.path directly
    from _amliq import *  # noqa: F401,F403
    from _amliq import __doc__ as _core_doc

__doc__ = _core_doc
__version__ = "0.1.0"
