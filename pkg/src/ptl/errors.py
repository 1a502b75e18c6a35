"""Exception types shared across the package."""


class ConfigurationError(ValueError):
    """An estimator or generator was configured inconsistently with its inputs."""


class SingularDesignError(RuntimeError):
    """A linear system is rank deficient or too ill-conditioned to solve reliably."""
