"""Exception types shared across the package."""


class DomainError(ValueError):
    """A query or parameter lies outside the domain it was declared on."""


class ConfigError(ValueError):
    """A configuration value or file is invalid or inconsistent."""


class DivergenceError(RuntimeError):
    """The dual ascent produced non-finite iterates."""

    def __init__(self, iteration: int, lam_norm: float, mu_norm: float):
        self.iteration = iteration
        self.lam_norm = lam_norm
        self.mu_norm = mu_norm
        super().__init__(
            f"non-finite supergradient at iteration {iteration} "
            f"(|lambda|={lam_norm:.6g}, |mu|={mu_norm:.6g}); "
            "reduce the step sizes or the batch variance"
        )
