class ParameterRangeError(ValueError):
    pass


class DegenerateSamplingError(Exception):
    pass


class NearSingularError(Exception):
    pass


class AntipodalPairingError(Exception):
    pass


class NoConvergenceError(Exception):
    pass


class DriftBudgetError(Exception):
    pass
