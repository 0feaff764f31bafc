"""Counter-based 64-bit generator for portable datum sampling.

The single-datum stepper must produce the same index sequence from the
same seed in every implementation of the hot loop (compiled or not), so
the draw at step t is a pure function of (seed, t): one round of the
SplitMix64 output function applied to seed + t * GOLDEN, where GOLDEN is
the 64-bit golden-ratio increment 0x9E3779B97F4A7C15.

uniform(seed, t) maps the top 53 bits of that word to [0, 1);
component_index(seed, t, m) returns 1 + floor(uniform * m), a 1-based
index in 1..m.
"""

__all__ = ["splitmix64", "uniform", "component_index"]

_MASK = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15
_MUL1 = 0xBF58476D1CE4E5B9
_MUL2 = 0x94D049BB133111EB
_INV53 = 1.0 / (1 << 53)


def splitmix64(seed: int, t: int) -> int:
    """The t-th output word of SplitMix64 started at ``seed``."""
    z = (seed + (t + 1) * _GOLDEN) & _MASK
    z = ((z ^ (z >> 30)) * _MUL1) & _MASK
    z = ((z ^ (z >> 27)) * _MUL2) & _MASK
    return z ^ (z >> 31)


def uniform(seed: int, t: int) -> float:
    """Uniform double in [0, 1) from the step-t word."""
    return (splitmix64(seed, t) >> 11) * _INV53


def component_index(seed: int, t: int, m: int) -> int:
    """Uniform 1-based index in 1..m for step t."""
    if m < 1:
        raise ValueError("m must be >= 1")
    k = 1 + int(uniform(seed, t) * m)
    return min(k, m)
