"""Exception types shared across the package."""

from __future__ import annotations

from typing import TYPE_CHECKING

if TYPE_CHECKING:
    from .filters import StepRecord


class DivergenceError(RuntimeError):
    """A weight vector became non-finite during adaptation.

    Carries the iteration index at which the first non-finite tap appeared
    and, for ensemble runs, the indices of the offending runs.  ``record``
    holds the step record that produced the non-finite update so callers
    configured to drop divergent runs can resume the surviving ones.
    """

    def __init__(
        self,
        iteration: int,
        runs: tuple[int, ...] | None = None,
        record: "StepRecord | None" = None,
    ) -> None:
        self.iteration = int(iteration)
        self.runs = runs
        self.record = record
        where = f"iteration {self.iteration}"
        if runs:
            where += f" in runs {list(runs)}"
        super().__init__(f"filter weights diverged at {where}")


class StabilityError(ValueError):
    """Parameters sit outside the stability region of a closed form."""


class DegenerateMomentError(ValueError):
    """A measured moment cannot parameterize the excess-MSE formula."""


class ConfigError(ValueError):
    """Config text is invalid; carries the 1-based line number when known."""

    def __init__(self, message: str, line: int | None = None) -> None:
        self.line = line
        prefix = f"line {line}: " if line is not None else ""
        super().__init__(prefix + message)


class StepSizeWarning(UserWarning):
    """The step size violates the mean-convergence bound mu < 1/lambda_max."""
