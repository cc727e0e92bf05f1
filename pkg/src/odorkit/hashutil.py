"""Deterministic 64-bit hashing shared by atom invariants and fingerprints.

Python's builtin hash() is salted per process, so fingerprint bit positions
would not be reproducible across runs. This module provides a fixed mixing
function (splitmix64 finalizer) so hashed identifiers are stable across
runs and platforms.
"""

_MASK64 = (1 << 64) - 1
_SEED = 0x9E3779B97F4A7C15


def mix64(x: int) -> int:
    """splitmix64 finalizer: one round of avalanche mixing on a 64-bit int."""
    z = (x + 0x9E3779B97F4A7C15) & _MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return (z ^ (z >> 31)) & _MASK64


def hash_ints(values, seed: int = _SEED) -> int:
    """Combine a sequence of ints into one 64-bit hash, order sensitive."""
    h = seed & _MASK64
    for v in values:
        h = mix64(h ^ (int(v) & _MASK64))
    return h


def hash_text(text: str, seed: int = _SEED) -> int:
    """Hash a short ASCII string (element symbols and the like)."""
    return hash_ints(text.encode("ascii"), seed)
