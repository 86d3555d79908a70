"""Exception hierarchy for the planning pipeline."""


class TripathError(Exception):
    """Base class for all planner errors."""


class GeometryError(TripathError):
    """Invalid geometric input (degenerate polygon, crossing constraints, ...)."""


class MeshError(TripathError):
    """Triangulation construction or query failure."""


class PointLocationError(MeshError):
    """Query point lies outside the triangulated domain."""


class NoPathError(TripathError):
    """No connected free-simplex corridor exists for an aircraft."""

    def __init__(self, message, aircraft=None):
        super().__init__(message)
        self.aircraft = aircraft


class InfeasibleSeedError(TripathError):
    """Apex inflation cannot produce a tangent arc (corner too sharp)."""

    def __init__(self, message, apex_index=None):
        super().__init__(message)
        self.apex_index = apex_index


class BudgetError(TripathError):
    """A flight-time difference falls in no feasible orbit-count window."""


class ScenarioError(TripathError):
    """Scenario file failed to parse or violates an invariant."""

    def __init__(self, message, field=None):
        super().__init__(message)
        self.field = field


class SolverError(TripathError):
    """NLP solve aborted or failed to converge."""


class PlanningError(TripathError):
    """A per-aircraft optimal-control stage failed."""

    def __init__(self, message, aircraft=None, stage=None):
        super().__init__(message)
        self.aircraft = aircraft
        self.stage = stage
