"""Teleoperated-driving security toolkit.

Thin re-export of the compiled extension. The module is looked up first
inside the package (wheel layout), then on sys.path (in-tree builds put the
shared object in <build>/python; add that directory to PYTHONPATH).
"""

try:
    from ._todsec import *  # noqa: F401,F403
    from ._todsec import __doc__ as _doc
except ImportError:
    from _todsec import *  # noqa: F401,F403
    from _todsec import __doc__ as _doc

__doc__ = _doc
__version__ = "0.1.0"
