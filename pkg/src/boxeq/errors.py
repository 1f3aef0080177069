"""Exception types shared across the package."""


class BoxEqError(Exception):
    """Base class for all errors raised by boxeq."""


class ProblemError(BoxEqError, ValueError):
    """Invalid or inconsistent problem input.

    ``path`` names the offending field, e.g. ``"c/-1"`` or ``"fibers/0/f"``.
    """

    def __init__(self, message, path=""):
        self.path = path
        super().__init__(f"{path}: {message}" if path else message)


class OutsideSampledRange(BoxEqError, LookupError):
    """A fiber function was queried at an index it does not carry."""

    def __init__(self, index, n_lo, n_hi, offset=None):
        self.index = index
        self.n_lo = n_lo
        self.n_hi = n_hi
        where = "" if offset is None else f" (fiber offset {offset!r})"
        super().__init__(f"index {index} outside sampled range [{n_lo}, {n_hi}]{where}")


# Alias used in solver/oracle signatures.
MissingSample = OutsideSampledRange


class SingularSystem(BoxEqError, ArithmeticError):
    """A matrix that must be invertible failed the singular-value test.

    ``name`` identifies the matrix (``"theta"``, ``"Theta1"``, ``"Theta"``,
    ``"dense"``...) and ``ratio`` is sigma_min / sigma_max as measured.
    """

    def __init__(self, name, ratio, threshold, detail=""):
        self.name = name
        self.ratio = float(ratio)
        self.threshold = float(threshold)
        msg = f"{name} is numerically singular: sigma_min/sigma_max = {self.ratio:.3e} < {self.threshold:.1e}"
        if detail:
            msg += f" ({detail})"
        super().__init__(msg)


class SingularMatrix(SingularSystem):
    """One of the kernel matrices (alpha, c_N, c_1, ...) is not invertible."""
