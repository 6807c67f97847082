"""Exception hierarchy shared by every cpscan module."""


class CpscanError(Exception):
    """Base class for all errors raised by cpscan."""


class ConfigurationError(CpscanError, ValueError):
    """Invalid hyperparameter, window size, or generator setting."""


class ShapeError(CpscanError, ValueError):
    """Array dimensions do not agree with the model or dataset."""


class EmptyWindowError(CpscanError, ValueError):
    """A loss or error was requested over zero rows."""


class SeriesTooShortError(CpscanError, ValueError):
    """The series cannot hold one training plus one test window."""

    def __init__(self, n_rows, min_rows):
        self.n_rows = n_rows
        self.min_rows = min_rows
        super().__init__(
            f"series has {n_rows} rows but at least {min_rows} are required"
        )


class TrainingDivergenceError(CpscanError, RuntimeError):
    """Training produced a non-finite loss.

    ``epoch`` is the epoch at which it happened; ``t`` is the window start
    when raised from a curve scan (``None`` otherwise).
    """

    def __init__(self, epoch, t=None):
        self.epoch = epoch
        self.t = t
        where = f" for window t={t}" if t is not None else ""
        super().__init__(f"non-finite training loss at epoch {epoch}{where}")


class IntegrationError(CpscanError, RuntimeError):
    """ODE integration left the finite range."""

    def __init__(self, step):
        self.step = step
        super().__init__(f"non-finite state at integration step {step}")


class UndefinedMetricError(CpscanError, ValueError):
    """A metric was requested with an empty ground-truth set."""
