"""Exception hierarchy shared by all modules.

The CLI maps these onto process exit codes: ConfigError -> 2, DomainError
(and subclasses) -> 3, TruncationError -> 4.
"""


class JcOscError(Exception):
    """Base class for everything raised deliberately by this package."""


class ConfigError(JcOscError):
    """Bad or missing configuration (unknown key, wrong type, absent file)."""


class DomainError(JcOscError):
    """Parameters left the validity domain of a formula or algorithm."""


class NoRootError(DomainError):
    """A required root does not exist in the search interval."""


class GridResolutionError(DomainError):
    """Root bracketing produced an inconsistent count; grid too coarse."""


class ConvergenceError(DomainError):
    """An iterative solve failed to reach its tolerance."""


class BranchFollowingError(DomainError):
    """Maximum-overlap continuation lost the branch (overlap below threshold)."""


class StepUnderflowError(DomainError):
    """Adaptive integrator step size collapsed below the representable floor."""


class TruncationError(JcOscError):
    """Fock-space truncation artifact treated as fatal by caller request."""
