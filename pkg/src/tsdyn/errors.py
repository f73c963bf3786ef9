"""Exception types shared across the library."""


class TimeScaleDomainError(ValueError):
    """A point lies outside the time scale, or outside the domain of psi."""


class AssumptionError(RuntimeError):
    """A spectral assumption required for the bounded solution fails."""


class HorizonError(RuntimeError):
    """The truncation horizon reaches past the first defined sequence term."""


class ConvergenceError(RuntimeError):
    """An iterative matrix routine failed to stabilize."""


class MissingSampleError(KeyError):
    """A solution object does not hold a sample at the requested abscissa."""


class ConfigError(ValueError):
    """A scenario configuration file failed validation."""

    def __init__(self, issues):
        if isinstance(issues, str):
            issues = [issues]
        self.issues = list(issues)
        super().__init__("; ".join(self.issues))
