"""Exception types shared across the package."""


class LaceBoundsError(Exception):
    """Base class for all package errors."""


class ConfigError(LaceBoundsError, ValueError):
    """Malformed model or run configuration."""


class BudgetExceeded(LaceBoundsError):
    """An exact computation would exceed its configured size budget."""


class BondBudgetExceeded(BudgetExceeded):
    """Too many bonds for exhaustive configuration enumeration."""


class StateBudgetExceeded(BudgetExceeded):
    """Too many wet-set states for the transfer computation."""


class PathBudgetExceeded(BudgetExceeded):
    """Too many simple paths for the disjoint-witness search."""
