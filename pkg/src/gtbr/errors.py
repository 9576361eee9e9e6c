"""Exception types shared across the package."""

from __future__ import annotations


class GtbrError(Exception):
    """Base class for all errors raised by this package."""


class NonConforming(GtbrError):
    """A packet length exceeds the tokens available in its slot."""

    def __init__(self, slot: int, available: int, requested: int):
        self.slot = slot
        self.available = available
        self.requested = requested
        super().__init__(
            f"slot {slot}: requested {requested} bits but only {available} tokens available"
        )


class HorizonMismatch(GtbrError):
    def __init__(self, gtbr_horizon: int, stbr_horizon: int):
        self.gtbr_horizon = gtbr_horizon
        self.stbr_horizon = stbr_horizon
        super().__init__(f"horizons differ: GTBR N={gtbr_horizon}, STBR N={stbr_horizon}")


class ResourceLimit(GtbrError):
    """A configured size, bit-length or time cap was exceeded."""


class StateOutOfRange(GtbrError):
    pass


class EnumerationTooLarge(ResourceLimit):
    pass


class PayloadExhausted(GtbrError):
    pass
