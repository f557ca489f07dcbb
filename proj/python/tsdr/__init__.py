from ._tsdr import *  # noqa: F401,F403
