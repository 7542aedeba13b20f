"""Exception hierarchy shared across the package.

Two broad families matter to callers: configuration problems (bad files,
bad parameters -- CLI exit code 2) and simulation problems (violated
preconditions at runtime -- CLI exit code 3).
"""

from __future__ import annotations


class CollabError(Exception):
    """Base class for all package errors."""


class ConfigError(CollabError):
    """Invalid configuration, layout file, or CLI arguments."""


class SimulationError(CollabError):
    """Runtime violation inside the simulation or planning machinery."""


# -- world -------------------------------------------------------------

class MissingGoal(SimulationError):
    """A non-waiting agent has no goal while tasks remain."""


# -- inference ---------------------------------------------------------

class StepTooLarge(SimulationError):
    """Observed human step exceeds one tick of travel."""


class EmptySupport(SimulationError):
    """Belief requested over an empty candidate set."""


class DegenerateBelief(SimulationError):
    """All posterior mass underflowed to zero."""


# -- planner -----------------------------------------------------------

class NoTasks(SimulationError):
    """Plan requested with no remaining tasks."""


class MalformedSequence(SimulationError):
    """Agent sequences do not cover the remaining tasks consistently."""


class TooLarge(SimulationError):
    """Instance exceeds the exhaustive-enumeration guard."""


# -- policies / humans -------------------------------------------------

class WrongPolicy(SimulationError):
    """Controller event sent to a policy kind that does not accept it."""


class EmptyRemaining(SimulationError):
    """Goal choice requested with no remaining tasks."""


# -- layout generation -------------------------------------------------

class PackingFailure(ConfigError):
    """Could not place tasks at the required separation."""


# -- harness -----------------------------------------------------------

class NotApplicable(SimulationError):
    """Metric undefined for this trial kind."""


class NonTermination(SimulationError):
    """Trial exceeded the safety bound on tick count."""


# -- service -----------------------------------------------------------

class ProtocolError(CollabError):
    """Client message invalid for the current session phase."""
