"""Exception hierarchy shared by all subsystems."""


class SeqgenError(Exception):
    """Base class for domain errors raised by seqgen."""


class TruncationLeakError(SeqgenError):
    """Probability mass reached the edge of a truncated state space."""


class PhaseError(SeqgenError):
    """Operation is undefined in the requested phase of the walk."""


class DimensionError(SeqgenError):
    """Operator or state dimensions do not agree."""


class EmptySupportError(SeqgenError):
    """Post-selection succeeds with probability zero."""


class DegenerateSteadyStateError(SeqgenError):
    """Channel fixed point is not unique."""


class SizeLimitError(SeqgenError):
    """Request exceeds the exhaustive-enumeration regime."""


class CutError(SeqgenError):
    """Bipartition cut outside the allowed range."""


class InsufficientDataError(SeqgenError):
    """Too few points for a fit or an ensemble estimate."""


class GrammarError(SeqgenError):
    """Malformed or invalid grammar file."""

    def __init__(self, message, violations=None, line=None):
        self.violations = list(violations or [])
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class GeometryError(SeqgenError):
    """Conveyor lattice geometry violated (cursor overlap, width exhausted)."""


class AuditError(SeqgenError):
    """A conveyor particle took part in more than one nontrivial gate."""

    def __init__(self, message, particle=None):
        self.particle = particle
        super().__init__(message)


class CycleInvariantError(SeqgenError):
    """An X symbol survived past the reset stage of a three-leg cycle."""


class UnknownSymbolError(GrammarError):
    """String contains a terminal the grammar does not know."""
