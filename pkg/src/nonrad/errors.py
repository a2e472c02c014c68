"""Exception hierarchy.

Every error carries a stable machine-parsable identifier (``ident``) and a
distinct process exit code used by the CLI, so scripted callers can branch
on failures without parsing prose.
"""

from __future__ import annotations


class NonradError(Exception):
    """Base class for all toolkit errors."""

    ident = "NonradError"
    exit_code = 10

    def __str__(self) -> str:
        msg = super().__str__()
        return f"{self.ident}: {msg}" if msg else self.ident


class OutOfDomain(NonradError):
    """A time falls outside a trajectory's domain (or a root would)."""

    ident = "OutOfDomain"
    exit_code = 11


class NoBracket(NonradError):
    """Root finder could not establish a sign-changing bracket."""

    ident = "NoBracket"
    exit_code = 12


class DegenerateInterval(NonradError):
    """Influence interval has zero width (coincident points)."""

    ident = "DegenerateInterval"
    exit_code = 13


class TooManyExcluded(NonradError):
    """Excluded sample fraction exceeded the configured bound."""

    ident = "TooManyExcluded"
    exit_code = 14


class TransversalityViolated(NonradError):
    """Far-field input has a longitudinal component beyond tolerance."""

    ident = "TransversalityViolated"
    exit_code = 15


class BreakpointInStencil(NonradError):
    """A finite-difference stencil straddles a breakpoint."""

    ident = "BreakpointInStencil"
    exit_code = 16


class CausalityLoop(NonradError):
    """Chain construction revisited a jump time (degenerate spacing)."""

    ident = "CausalityLoop"
    exit_code = 17


class Superluminal(NonradError):
    """A velocity reached or exceeded the speed of light."""

    ident = "Superluminal"
    exit_code = 18


class FitDegenerate(NonradError):
    """Too few (or ill-conditioned) samples for a least-squares fit."""

    ident = "FitDegenerate"
    exit_code = 19


class DegenerateDirections(NonradError):
    """Direction set does not span three dimensions."""

    ident = "DegenerateDirections"
    exit_code = 20


class DegreeOverflow(NonradError):
    """Piecewise-polynomial degree exceeded the configured maximum."""

    ident = "DegreeOverflow"
    exit_code = 21


class CoverageGap(NonradError):
    """A required cone time leaves the partner trajectory's domain."""

    ident = "CoverageGap"
    exit_code = 22


class Collision(NonradError):
    """Inter-particle separation fell below the configured minimum."""

    ident = "Collision"
    exit_code = 23


class NotABreakpoint(NonradError):
    """Requested time is not a breakpoint of the trajectory."""

    ident = "NotABreakpoint"
    exit_code = 24


class LineSearchFailure(NonradError):
    """Optimizer line search could not produce an acceptable step."""

    ident = "LineSearchFailure"
    exit_code = 25


class SchemaError(NonradError):
    """Input file violates a schema; ``path`` names the offending field."""

    ident = "SchemaError"
    exit_code = 26

    def __init__(self, path: str, message: str):
        super().__init__(f"{path}: {message}")
        self.path = path


class InvariantViolation(NonradError):
    """A constructor invariant failed (continuity, ordering, finiteness)."""

    ident = "InvariantViolation"
    exit_code = 27


class ConvergenceFailure(NonradError):
    """An iterative construction or solve did not converge."""

    ident = "ConvergenceFailure"
    exit_code = 28
