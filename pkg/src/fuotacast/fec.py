"""Rateless-code decode statistics.

Nothing here builds an actual encoder. The rest of the system only needs
the number of successful receptions after which a recipient can decode,
and that number is fully described by a short per-fragment failure chain:
decoding always fails with fewer than ``fragments`` receptions, fails with
probability ``failure_at_k`` at exactly ``fragments``, and with probability
``failure_beyond_k`` for each further reception. ``ideal`` mode decodes at
exactly ``fragments``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

MODES = ("raptor", "ideal")


@dataclass(frozen=True)
class RatelessModel:
    fragments: int
    mode: str = "raptor"
    failure_at_k: float = 0.85
    failure_beyond_k: float = 0.567

    def __post_init__(self) -> None:
        if self.fragments < 1:
            raise ValueError("fragments must be at least 1")
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}, got {self.mode!r}")
        for name in ("failure_at_k", "failure_beyond_k"):
            p = getattr(self, name)
            if not 0.0 <= p <= 1.0:
                raise ValueError(f"{name} must be a probability, got {p}")
        if self.mode == "raptor" and self.failure_beyond_k >= 1.0:
            raise ValueError("failure_beyond_k must be below 1 for a finite expected overhead")

    def conditional_failure(self, received: int) -> float:
        """P(still undecodable after ``received`` successes, given it was
        undecodable one reception earlier)."""
        if received < self.fragments:
            return 1.0
        if self.mode == "ideal":
            return 0.0
        return self.failure_at_k if received == self.fragments else self.failure_beyond_k

    def completion_pmf(self, count: int) -> float:
        """P(decoding first succeeds at exactly ``count`` receptions)."""
        k = self.fragments
        if count < k:
            return 0.0
        if self.mode == "ideal":
            return 1.0 if count == k else 0.0
        if count == k:
            return 1.0 - self.failure_at_k
        return (
            self.failure_at_k
            * self.failure_beyond_k ** (count - k - 1)
            * (1.0 - self.failure_beyond_k)
        )

    def completion_tail(self, count: int) -> float:
        """P(decoding still incomplete after ``count`` receptions)."""
        k = self.fragments
        if count < k:
            return 1.0
        if self.mode == "ideal":
            return 0.0
        return self.failure_at_k * self.failure_beyond_k ** (count - k)

    def expected_fragments(self) -> float:
        """Mean number of successful receptions needed to decode."""
        if self.mode == "ideal":
            return float(self.fragments)
        return self.fragments + self.failure_at_k / (1.0 - self.failure_beyond_k)

    def sample_completion_threshold(self, rng: np.random.Generator, size=None):
        """Draw the reception count at which decoding succeeds."""
        k = self.fragments
        if self.mode == "ideal":
            return k if size is None else np.full(size, k, dtype=np.int64)
        if size is None:
            if rng.random() < 1.0 - self.failure_at_k:
                return k
            return k + int(rng.geometric(1.0 - self.failure_beyond_k))
        at_k = rng.random(size) < 1.0 - self.failure_at_k
        extra = rng.geometric(1.0 - self.failure_beyond_k, size)
        return np.where(at_k, k, k + extra).astype(np.int64)
