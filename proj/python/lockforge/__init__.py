try:
    from ._lockforge import *  # noqa: F401,F403  (wheel layout)
except ImportError:  # in-tree builds put the module next to the build dir
    from _lockforge import *  # noqa: F401,F403
