"""SplitMix64 generator.

Constants follow Steele, Lea & Flood's SplitMix64: the state advances by
the golden-ratio increment 0x9E3779B97F4A7C15 and is finalised by the
mixer with multipliers 0xBF58476D1CE4E5B9 and 0x94D049BB133111EB and
shifts 30, 27, 31. Any implementation using the same constants and the
same float conversions reproduces the same streams.
"""
import math

MASK64 = (1 << 64) - 1
GOLDEN = 0x9E3779B97F4A7C15
_M1 = 0xBF58476D1CE4E5B9
_M2 = 0x94D049BB133111EB
_INV53 = 2.0 ** -53


def mix64(z: int) -> int:
    z &= MASK64
    z = ((z ^ (z >> 30)) * _M1) & MASK64
    z = ((z ^ (z >> 27)) * _M2) & MASK64
    return z ^ (z >> 31)


def derive_seed(seed: int, index: int) -> int:
    """Independent child seed for stream ``index`` of ``seed``."""
    return mix64((seed + GOLDEN * (index + 1)) & MASK64)


class SplitMix64:
    def __init__(self, seed: int):
        self.state = int(seed) & MASK64
        self._spare = None

    def next_u64(self) -> int:
        self.state = (self.state + GOLDEN) & MASK64
        return mix64(self.state)

    def uniform(self) -> float:
        """Uniform on [0, 1) with 53 random bits."""
        return (self.next_u64() >> 11) * _INV53

    def uniform_open(self) -> float:
        """Uniform on (0, 1); safe to take the log of."""
        return ((self.next_u64() >> 11) + 0.5) * _INV53

    def exponential(self, rate: float) -> float:
        return -math.log(self.uniform_open()) / rate

    def normal(self) -> float:
        """Standard normal by Box-Muller; the sine variate is kept for the next call."""
        if self._spare is not None:
            z, self._spare = self._spare, None
            return z
        radius = math.sqrt(-2.0 * math.log(self.uniform_open()))
        theta = 2.0 * math.pi * self.uniform()
        self._spare = radius * math.sin(theta)
        return radius * math.cos(theta)
