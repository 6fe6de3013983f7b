"""
Exception types raised by infosubs.

Every error carries the fields that produced it so the CLI (and tests) can
report them without parsing messages.
"""

from __future__ import annotations


class InfosubsError(RuntimeError):
    """Base class for all library errors."""


class StructureError(InfosubsError, ValueError):
    """Raised when an information structure or lattice element is invalid."""


class CapExceededError(InfosubsError):
    """Raised when an enumeration would exceed its configured cap."""

    def __init__(self, what: str, size: int, cap: int, cost: str | None = None) -> None:
        self.what = what
        self.size = size
        self.cap = cap
        self.cost = cost
        message = f"{what}: size {size} exceeds cap {cap}"
        if cost:
            message += f" ({cost})"
        super().__init__(message)


class ConvexityError(InfosubsError, ValueError):
    """Raised when an expected-score function fails its convexity probe."""

    def __init__(self, kind: str, detail: str) -> None:
        self.kind = kind
        self.detail = detail
        super().__init__(f"{kind} is not convex: {detail}")


class SamplingError(InfosubsError, ValueError):
    """Raised when a sampled estimate cannot carry a Hoeffding guarantee."""


class MonotonicityError(InfosubsError, ValueError):
    """Raised when a set function decreases on a queried pair."""

    def __init__(self, subset: frozenset[int], element: int, low: float, high: float) -> None:
        self.subset = subset
        self.element = element
        self.low = low
        self.high = high
        super().__init__(
            f"f is not monotone: f({sorted(subset)}) = {low} > "
            f"f({sorted(subset | {element})}) = {high}"
        )


class SeparationRefused(InfosubsError):
    """Raised when no separating decision problem exists for a structure."""


class ProfileError(InfosubsError, ValueError):
    """Raised when a market strategy profile is malformed."""


class VerificationError(InfosubsError, AssertionError):
    """Raised when a check that must hold by theorem fails on an instance."""
