from ._blowup import *  # noqa: F401,F403
from ._blowup import ConfigError, DomainError, NumericalError  # noqa: F401
