"""Exception hierarchy shared across the package."""


class ConvexBPError(Exception):
    """Base class for all package errors."""


# -- model construction / evaluation --------------------------------------

class DanglingVariableRef(ConvexBPError):
    """A factor scope references a variable that does not exist."""


class DuplicateScopeVariable(ConvexBPError):
    """A factor scope lists the same variable twice."""


class TableSizeMismatch(ConvexBPError):
    """An energy table's shape does not match its scope's cardinalities."""


class NegativeInfiniteEnergy(ConvexBPError):
    """An energy entry is -inf or NaN (only +inf is a legal sentinel)."""


class InvalidAssignment(ConvexBPError):
    """An assignment has the wrong length or an out-of-range state."""


class NonPositiveTemperature(ConvexBPError):
    """Temperature must be strictly positive."""


# -- counting numbers ------------------------------------------------------

class NonPairwiseFactor(ConvexBPError):
    """Operation requires factors of arity at most two."""


class RhoOutOfRange(ConvexBPError):
    """Edge appearance probabilities must lie in (0, 1]."""


class NegativeFactorCount(ConvexBPError):
    """A factor counting number is negative."""


# -- propagation engine ----------------------------------------------------

class CiEqualsOne(ConvexBPError):
    """Variable counting number c_i must stay below 1 for the engine."""


class FactorCountNotOne(ConvexBPError):
    """The engine requires c_alpha = 1 for every factor."""


class NumericalOverflow(ConvexBPError):
    """A log quantity left (-inf, 0]; this signals a bug or a degenerate model."""


# -- beliefs ---------------------------------------------------------------

class AllZeroBelief(ConvexBPError):
    """A belief table normalizes to nothing (contradictory zero structure)."""


class SupportMismatch(ConvexBPError):
    """Model support and belief support disagree on some assignment."""


# -- extraction ------------------------------------------------------------

class NotConverged(ConvexBPError):
    """Extraction requires a converged fixed point."""


class NoCertificate(ConvexBPError):
    """Extraction requires a convexity certificate."""


class SearchLimitExceeded(ConvexBPError):
    """The maximizer-consistency search exhausted its node budget."""


class NoConsistentMaximizer(ConvexBPError):
    """No single assignment maximizes every factor belief (frustrated cycle)."""


class ComponentTooLarge(ConvexBPError):
    """A tied component's joint state space exceeds the configured cap."""


class BoundaryCheckFailed(ConvexBPError):
    """A factor straddling tied and non-tied variables is not maximized."""


class BoundaryNotUniform(ConvexBPError):
    """A tied-boundary variable does not have a fully uniform belief."""


# -- annealing -------------------------------------------------------------

class StageDiverged(ConvexBPError):
    """An annealing stage failed to converge, also after the damping retry."""


# -- oracles ---------------------------------------------------------------

class BudgetExceeded(ConvexBPError):
    """The joint state space exceeds the enumeration budget."""


# -- file formats ----------------------------------------------------------

class MalformedAlist(ConvexBPError):
    """The alist text does not follow the expected layout."""


class InconsistentAdjacency(ConvexBPError):
    """Column and row adjacency lists of an alist disagree."""


class CrossoverOutOfRange(ConvexBPError):
    """BSC crossover probability must lie in (0, 0.5)."""


class MalformedUai(ConvexBPError):
    """The UAI text does not follow the MARKOV layout."""


class NegativeProbability(ConvexBPError):
    """UAI factor tables must be nonnegative."""
