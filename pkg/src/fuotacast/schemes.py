"""Transmission policies.

Which spreading factor the gateway uses for the t-th multicast frame, and
how a session advances or stops, for the sequential-SF ramp policy, the
fixed-SF baselines, and the group-based baseline.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Iterable, Iterator, Optional, Union

from .phy import check_sf


class NoProgressError(RuntimeError):
    """A stream hit its transmission cap with recipients still unfinished."""


@dataclass(frozen=True)
class ProposedScheme:
    """Sequential ramp: ``frames_per_round`` frames at each SF from
    ``min_sf`` upward, then stay at ``max_sf`` until everyone is done."""

    min_sf: int = 7
    max_sf: int = 12
    frames_per_round: int = 300

    def __post_init__(self) -> None:
        check_sf(self.min_sf)
        check_sf(self.max_sf)
        if self.min_sf > self.max_sf:
            raise ValueError("min_sf must not exceed max_sf")
        if self.frames_per_round < 1:
            raise ValueError("frames_per_round must be at least 1")

    @property
    def label(self) -> str:
        return "proposed"

    def sf_for_transmission(self, t: int) -> int:
        if t < 1:
            raise ValueError("frame index is 1-based")
        return min(self.min_sf + (t - 1) // self.frames_per_round, self.max_sf)


@dataclass(frozen=True)
class FixedSfScheme:
    """Every frame at one spreading factor."""

    sf: int

    def __post_init__(self) -> None:
        check_sf(self.sf)

    @property
    def label(self) -> str:
        return f"fsf-{self.sf}"

    def sf_for_transmission(self, t: int) -> int:
        if t < 1:
            raise ValueError("frame index is 1-based")
        return self.sf


@dataclass(frozen=True)
class GroupBasedScheme:
    """Each recipient is pinned to the SF that minimizes its own expected
    cost; groups are then served one SF at a time, fastest SF first."""

    criterion: str = "energy"

    def __post_init__(self) -> None:
        if self.criterion not in ("energy", "latency"):
            raise ValueError("criterion must be 'energy' or 'latency'")

    @property
    def label(self) -> str:
        return "gb-e" if self.criterion == "energy" else "gb-l"


Scheme = Union[ProposedScheme, FixedSfScheme, GroupBasedScheme]


def session_schedule(
    scheme: Scheme,
    is_complete: Callable[[Optional[int]], bool],
    cap_per_stream: int,
    groups: Optional[Iterable[int]] = None,
) -> Iterator[tuple[int, int, Optional[int]]]:
    """Yield ``(frame_index, sf, group_sf)`` until completion feedback stops
    each stream.

    ``is_complete`` is the genie-aided feedback: queried with ``None`` for
    the single-stream schemes and with the group's SF for the group-based
    scheme. Frame indices are global and 1-based. A stream that reaches
    ``cap_per_stream`` frames without completing raises
    :class:`NoProgressError`; for the group-based scheme remaining groups
    are not served once one stalls.
    """
    if cap_per_stream < 1:
        raise ValueError("cap_per_stream must be at least 1")
    t = 0
    if isinstance(scheme, GroupBasedScheme):
        if groups is None:
            raise ValueError("group-based scheduling needs the SF group assignment")
        for group_sf in sorted({check_sf(sf) for sf in groups}):
            sent = 0
            while not is_complete(group_sf):
                if sent >= cap_per_stream:
                    raise NoProgressError(
                        f"group at SF{group_sf} shows no progress after {sent} frames"
                    )
                t += 1
                sent += 1
                yield t, group_sf, group_sf
    else:
        sent = 0
        while not is_complete(None):
            if sent >= cap_per_stream:
                raise NoProgressError(f"session shows no progress after {sent} frames")
            t += 1
            sent += 1
            yield t, scheme.sf_for_transmission(t), None


def assign_group_energy(
    distance_m: float,
    phy,
    link,
    field,
    fragments: float,
    payload_bytes: int,
    **kwargs,
) -> int:
    """SF minimizing the expected listening energy to collect ``fragments``
    at this distance. Keyword arguments pass through to
    :func:`fuotacast.analysis.assign_group_sf`."""
    from . import analysis

    tables = analysis.success_tables(distance_m, payload_bytes, phy, link, field)
    return analysis.assign_group_sf(tables, fragments, phy, "energy", **kwargs)


def assign_group_latency(
    distance_m: float,
    phy,
    link,
    field,
    fragments: float,
    payload_bytes: int,
    **kwargs,
) -> int:
    """SF minimizing the expected duty-cycled service time to collect
    ``fragments`` at this distance."""
    from . import analysis

    tables = analysis.success_tables(distance_m, payload_bytes, phy, link, field)
    return analysis.assign_group_sf(tables, fragments, phy, "latency", **kwargs)
