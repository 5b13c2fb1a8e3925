"""Deterministic counter-based random streams.

Every stochastic choice in the engine is drawn from an :class:`RngState`,
whose output is a pure function of (key, draw counter). Per-image streams
are derived independently from (seed, epoch, image index), so results never
depend on worker count, scheduling, or platform.

Draws are generated with keyed BLAKE2b over the block counter: fully
specified, portable, and of cryptographic quality, which makes collision
and bias arguments trivial. One digest yields eight 64-bit draws; the
block is cached so consecutive draws cost one hash per eight.
"""

from __future__ import annotations

import hashlib
import struct

_U64 = 0xFFFFFFFFFFFFFFFF
_DRAWS_PER_BLOCK = 8
_FLOAT_SCALE = 2.0 ** -53


def _digest(key: int, data: bytes, person: bytes) -> int:
    h = hashlib.blake2b(
        data, digest_size=8, key=key.to_bytes(8, "little"), person=person
    )
    return int.from_bytes(h.digest(), "little")


class RngState:
    """Counter-based stream: 64-bit key, 128-bit draw counter.

    Every ``next_*`` method consumes exactly one draw and no sampler ever
    rejects, so callers can budget a fixed number of draws per operation
    and keep independent streams aligned.
    """

    __slots__ = ("_key", "_counter", "_block", "_block_index")

    def __init__(self, key: int, counter: int = 0):
        if counter < 0:
            raise ValueError("counter must be non-negative")
        self._key = key & _U64
        self._counter = counter
        self._block = b""
        self._block_index = -1

    @property
    def key(self) -> int:
        return self._key

    @property
    def counter(self) -> int:
        return self._counter

    def clone(self) -> "RngState":
        return RngState(self._key, self._counter)

    def next_u64(self) -> int:
        counter = self._counter
        block_index = counter >> 3
        if block_index != self._block_index:
            self._block = hashlib.blake2b(
                block_index.to_bytes(16, "little"),
                digest_size=64,
                key=self._key.to_bytes(8, "little"),
                person=b"inaug.stream",
            ).digest()
            self._block_index = block_index
        self._counter = counter + 1
        offset = (counter & 7) * 8
        return int.from_bytes(self._block[offset : offset + 8], "little")

    def next_float(self) -> float:
        """Uniform float in [0, 1) with 53 random bits."""
        return (self.next_u64() >> 11) * _FLOAT_SCALE

    def next_below(self, n: int) -> int:
        """Uniform integer in [0, n) from a single draw.

        Multiply-shift keeps consumption at exactly one draw; the bias is
        O(n / 2**64), irrelevant at the range sizes used here.
        """
        if n <= 0:
            raise ValueError("n must be positive")
        return (self.next_u64() * n) >> 64

    def next_sign(self) -> int:
        """Uniform sign in {-1, +1}."""
        return 1 if self.next_u64() & 1 else -1

    def skip(self, draws: int) -> None:
        """Advance the counter without producing output."""
        if draws < 0:
            raise ValueError("draws must be non-negative")
        self._counter += draws

    def split(self, label: int) -> "RngState":
        """Independent stream derived from (key, label); self is untouched."""
        if label < 0:
            raise ValueError("label must be non-negative")
        key = _digest(self._key, label.to_bytes(16, "little"), b"inaug.split")
        return RngState(key)

    def __repr__(self) -> str:
        return f"RngState(key=0x{self._key:016x}, counter={self._counter})"


def spread_below(draw: int, n: int) -> int:
    """Map an already-consumed 64-bit draw onto [0, n)."""
    if n <= 0:
        raise ValueError("n must be positive")
    return ((draw & _U64) * n) >> 64


def derive_stream(seed: int, *labels: int) -> RngState:
    """Pure derivation of a stream key from a seed and integer labels."""
    data = struct.pack(f"<{len(labels)}q", *labels) if labels else b""
    return RngState(_digest(seed & _U64, data, b"inaug.derive"))


def derive_image_rng(global_seed: int, epoch: int, image_index: int) -> RngState:
    """Per-image stream: a pure function of (seed, epoch, image index)."""
    return derive_stream(global_seed, epoch, image_index)
