"""Exception hierarchy. Each error carries a module-qualified code for the CLI."""


class JarnikError(Exception):
    code = "jarnik.error"
    exit_status = 1


class ConfigError(JarnikError, ValueError):
    code = "cli.config"
    exit_status = 2


class CapacityError(JarnikError):
    """A finite resource cap (sieve ceiling, candidate cap, bit cap) was exceeded."""

    code = "capacity"
    exit_status = 3


class InvariantError(JarnikError):
    code = "invariant"


class TooSmallError(JarnikError, ValueError):
    """No admissible value exists for the given modulus (e.g. q_k < 1)."""

    code = "synth.m_too_small"


class StarvedLevelError(JarnikError):
    code = "families.level_starved"

    def __init__(self, message, parent=None):
        super().__init__(message)
        self.parent = parent


class UndecidedError(JarnikError):
    """An enclosure stayed too wide to decide a strict comparison."""

    code = "path.undecided"
