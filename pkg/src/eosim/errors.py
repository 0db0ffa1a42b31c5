"""Exception types shared across the package."""


class ConfigError(ValueError):
    """Invalid or missing configuration value.

    ``field`` is the dotted path of the offending entry, e.g.
    ``system.microwave.kappa_in``.
    """

    def __init__(self, field: str, message: str):
        self.field = field
        super().__init__(f"{field}: {message}")


class NumericalError(RuntimeError):
    """A numerical procedure failed (divergence, singular system, ...)."""


class SingularMatrixError(NumericalError):
    """The frequency-domain system matrix could not be inverted."""

    def __init__(self, omega: float):
        self.omega = omega
        super().__init__(f"scattering matrix is singular at omega = {omega:.6g} rad/s")


class IntegrationError(NumericalError):
    """Time integration produced NaN or diverged.

    Carries the step index, the name of the first offending mode and the
    magnitude that triggered the abort.
    """

    MODE_NAMES = ("a_p", "a_o", "a_s", "a_e", "a_r")

    def __init__(self, step: int, mode_index: int, magnitude: float):
        self.step = step
        self.mode = self.MODE_NAMES[mode_index]
        self.magnitude = magnitude
        super().__init__(
            f"integration aborted at step {step}: |{self.mode}| = {magnitude:.3e} "
            "(NaN or divergence)"
        )
