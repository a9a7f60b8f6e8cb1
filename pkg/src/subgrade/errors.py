"""Exception hierarchy shared across the toolkit."""


class ToolkitError(Exception):
    """Base class for all toolkit errors."""


# -- dataset -----------------------------------------------------------------

class MissingColumn(ToolkitError):
    def __init__(self, name: str):
        super().__init__(f"required column {name!r} not found in header")
        self.name = name


class UnparseableCell(ToolkitError):
    def __init__(self, row: int, col: str, raw: str):
        super().__init__(f"cell ({row}, {col!r}) does not parse as a real number: {raw!r}")
        self.row = row
        self.col = col


class NonFiniteValue(ToolkitError):
    def __init__(self, row: int, col: str):
        super().__init__(f"non-finite value at ({row}, {col!r})")
        self.row = row
        self.col = col


class TooFewRows(ToolkitError):
    pass


class DegenerateSplit(ToolkitError):
    pass


# -- metrics -----------------------------------------------------------------

class ConstantActual(ToolkitError):
    pass


class NearZeroActual(ToolkitError):
    def __init__(self, row: int):
        super().__init__(f"actual value at position {row} is too close to zero for a relative error")
        self.row = row


# -- models ------------------------------------------------------------------

class DimensionMismatch(ToolkitError):
    pass


class DegenerateInput(ToolkitError):
    pass


class DegenerateDenominator(ToolkitError):
    pass


class DidNotConverge(ToolkitError):
    pass


# -- tuning ------------------------------------------------------------------

class BadFoldCount(ToolkitError):
    pass


class CandidateInfeasible(ToolkitError):
    pass


class AllCandidatesInfeasible(ToolkitError):
    pass


# -- sensitivity -------------------------------------------------------------

class UnknownFeature(ToolkitError):
    def __init__(self, name: str):
        super().__init__(f"unknown feature {name!r}")
        self.name = name


class DegenerateFeature(ToolkitError):
    pass


# -- experiment --------------------------------------------------------------

class ConfigError(ToolkitError):
    pass
