"""Exception types shared across the package.

Protocol violations and ontology constraint violations are *data* (see
`runtime.ProtocolViolation` and `ontology.Violation`), not exceptions;
everything here signals a caller error or a broken input.
"""


class CrisisMeshError(Exception):
    """Base class for all package errors."""


# -- knowledge store ---------------------------------------------------------

class InvalidTriple(CrisisMeshError):
    """A triple breaks term typing rules (variable in data, empty IRI, ...)."""


class ParseError(CrisisMeshError):
    """Malformed query, triple document, scenario, or config input."""

    def __init__(self, message, line=None, column=None, expected=None):
        self.line = line
        self.column = column
        self.expected = expected
        loc = ""
        if line is not None:
            loc = f" at line {line}" + (f", column {column}" if column is not None else "")
        super().__init__(f"{message}{loc}")


class UnboundVariable(CrisisMeshError):
    """A select or filter variable occurs in no pattern."""


class TypeMismatch(CrisisMeshError):
    """Ordering comparator applied to a non-numeric value."""


# -- ontology ----------------------------------------------------------------

class SchemaError(CrisisMeshError):
    """Schema invariant broken: cyclic subclass edges or dangling references."""


class UnknownClass(CrisisMeshError):
    """Class IRI not present in the schema."""


class EmptyObservation(CrisisMeshError):
    """Crisis-type matching was handed an empty feature set."""


# -- agent runtime -----------------------------------------------------------

class DuplicateId(CrisisMeshError):
    """Agent id already deployed."""


class SecondDecisionMaker(CrisisMeshError):
    """A deployed decision maker already exists."""


class UnknownAgent(CrisisMeshError):
    """Sender or receiver is not a deployed agent."""


class InvalidReply(CrisisMeshError):
    """in_reply_to references no prior reply_with in the conversation."""


class SelfSend(CrisisMeshError):
    """Message lists its own sender among the receivers."""


# -- pipeline ----------------------------------------------------------------

class IllegalTransition(CrisisMeshError):
    """(phase, event) pair outside the pipeline transition table."""

    def __init__(self, from_phase, event):
        self.from_phase = from_phase
        self.event = event
        super().__init__(f"illegal transition: {from_phase} + {event}")


class NoEligibleTarget(CrisisMeshError):
    """No deployed agent carries the role required by the chosen task."""


# -- scenario harness --------------------------------------------------------

class UnknownAgentInEvent(CrisisMeshError):
    """Scenario event references an agent missing from the roster."""


class UnsortedEvents(CrisisMeshError):
    """Scenario events are not ordered by tick."""


class ConfigError(CrisisMeshError):
    """Bad key, value, or syntax in a configuration file."""


# -- gateway -----------------------------------------------------------------

class BadCredentials(CrisisMeshError):
    """Operator/secret pair does not match the credential file."""


class SessionExists(CrisisMeshError):
    """An operator session is already active."""


class Unauthorized(CrisisMeshError):
    """Missing or stale session token."""


class WrongPhase(CrisisMeshError):
    """Recommendation submitted outside the Decision/Monitoring phases."""


class UnknownTarget(CrisisMeshError):
    """Recommendation targets an agent that is not deployed."""
