"""Exception hierarchy shared across the package.

Everything raised on purpose derives from TrackerError so callers (CLI, API,
ingestion) can catch one base class and map it to an exit code or HTTP status.
"""

from __future__ import annotations


class TrackerError(Exception):
    """Base class for all domain errors raised by this package."""


# --- map / scenario / manifest parsing ---------------------------------------

class MalformedHeader(TrackerError):
    """Map or scenario header does not match the expected grammar."""


class DimensionMismatch(TrackerError):
    """Map body does not agree with the declared width/height."""


class MalformedRow(TrackerError):
    """Scenario row has the wrong field count or inconsistent content."""

    def __init__(self, message: str, row: int | None = None):
        super().__init__(message)
        self.row = row


class NonNumericField(TrackerError):
    """Scenario row field that must be numeric is not."""

    def __init__(self, message: str, row: int | None = None):
        super().__init__(message)
        self.row = row


class EmptyScenario(TrackerError):
    """Scenario file contains no entries."""


class AgentCountOutOfRange(TrackerError):
    """Requested agent count exceeds the scenario's entry list (or is < 1)."""


class DuplicateMapAssignment(TrackerError):
    """A map is assigned to more than one domain in a manifest."""


class UnknownDomainName(TrackerError):
    """Manifest references a domain outside the fixed vocabulary."""


class ScenarioBindError(TrackerError):
    """Scenario entries disagree with the map they are bound to."""


# --- plan decoding / simulation ----------------------------------------------

class IllegalCharacter(TrackerError):
    """Plan string contains a character outside the action alphabet."""

    def __init__(self, char: str, index: int):
        super().__init__(f"illegal plan character {char!r} at index {index}")
        self.char = char
        self.index = index


class SimulationError(TrackerError):
    """An agent's motion left the traversable area. Carries the timestep."""

    def __init__(self, message: str, time: int):
        super().__init__(message)
        self.time = time


class OutOfBounds(SimulationError):
    """Move crossed the map boundary."""


class IntoObstacle(SimulationError):
    """Move entered a blocked cell."""


class GoalNotReached(TrackerError):
    """Path does not terminate at the agent's goal."""


# --- bounds -------------------------------------------------------------------

class NonTraversableEndpoint(TrackerError):
    """Shortest-path query endpoint is blocked or out of bounds."""


class UnreachablePair(TrackerError):
    """No path exists between an agent's start and goal."""

    def __init__(self, agent: int):
        super().__init__(f"agent {agent}: goal unreachable from start")
        self.agent = agent


class InconsistentBounds(TrackerError):
    """Claimed solution cost is below the lower bound."""


class DegenerateLowerBound(TrackerError):
    """Suboptimality ratio undefined: lower bound 0 with positive cost."""


class BucketUnsatisfiable(TrackerError):
    """A distance bucket cannot be filled with enough start/goal pairs."""

    def __init__(self, bucket: int, found: int, needed: int):
        super().__init__(
            f"bucket {bucket}: only {found} candidate pairs, need {needed}"
        )
        self.bucket = bucket
        self.found = found
        self.needed = needed


class NotEnoughCells(TrackerError):
    """Map has fewer traversable cells than requested agents."""


# --- tracking ------------------------------------------------------------------

class BoundConflict(TrackerError):
    """A verified solution cost and a claimed lower bound contradict.

    kind is 'lb_exceeds_cost' when a candidate lower bound overshoots an
    already verified cost (the candidate's batch is at fault), and
    'cost_undercuts_lb' when a newly verified cost lands below stored lower
    bounds (those bounds' batches are at fault). offending_batches lists the
    batch ids whose lower bounds must be revoked.
    """

    def __init__(self, kind: str, instance, offending_batches: tuple[str, ...]):
        super().__init__(f"{kind} on {instance}: batches {offending_batches}")
        self.kind = kind
        self.instance = instance
        self.offending_batches = offending_batches


class UnknownBatch(TrackerError):
    """Batch id not present in the store."""


class EmptyScope(TrackerError):
    """Query scope matches no instances in the loaded benchmark."""


class UnknownMap(TrackerError):
    """Map name not present in the loaded benchmark."""


class UnknownScenario(TrackerError):
    """Scenario (kind, index) not present for the given map."""


# --- ingestion ------------------------------------------------------------------

class MissingHeader(TrackerError):
    """Submission CSV does not start with the required header row."""


class ColumnCountMismatch(TrackerError):
    """Submission CSV row has the wrong number of columns."""

    def __init__(self, row: int, found: int, expected: int):
        super().__init__(f"row {row}: {found} columns, expected {expected}")
        self.row = row


class MalformedDescriptor(TrackerError):
    """Batch descriptor file is missing required fields or unparseable."""


# --- runner ---------------------------------------------------------------------

class AdapterSpawnFailure(TrackerError):
    """Solver process could not be started."""


class OutputContractViolation(TrackerError):
    """Solver output could not be parsed or its plan failed validation."""

    def __init__(self, message: str, agents: int | None = None):
        super().__init__(message)
        self.agents = agents
