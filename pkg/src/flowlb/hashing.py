"""64-bit avalanche mixing for flow keys.

Flow keys stand in for the hash of a connection's 5-tuple; everything
downstream only ever consumes the integer. The mixer is the splitmix64
finalizer, which is cheap, well distributed, and easy to reproduce in any
language.
"""

from __future__ import annotations

_MASK = (1 << 64) - 1

# distinct fixed salts for the independent hashing contexts
STAGE2_SEED = 0x9E3779B97F4A7C15
LB_PICK_SEED = 0xBF58476D1CE4E5B9
VIP_MIX_SEED = 0x94D049BB133111EB


def mix64(x: int, seed: int = 0) -> int:
    """Avalanche-mix a 64-bit value (splitmix64 finalizer), optionally salted."""
    x = (x + seed) & _MASK
    x ^= x >> 30
    x = (x * 0xBF58476D1CE4E5B9) & _MASK
    x ^= x >> 27
    x = (x * 0x94D049BB133111EB) & _MASK
    x ^= x >> 31
    return x
