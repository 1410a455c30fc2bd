"""Battery-lifetime bookkeeping.

A recipient splits each year between three draw levels: transmitting its
periodic uplink report, listening during firmware update sessions, and
sleeping. Lifetime is the battery charge divided by the yearly draw.
"""

from __future__ import annotations

from dataclasses import dataclass

HOURS_PER_YEAR = 8760.0
MONTHS_PER_YEAR = 12.0
SECONDS_PER_HOUR = 3600.0


@dataclass(frozen=True)
class DutyProfile:
    """Yearly duty mix of one recipient, currents in mA."""

    battery_mah: float
    updates_per_month: float
    uplink_period_hr: float
    uplink_airtime_s: float
    tx_current_ma: float
    rx_current_ma: float
    sleep_current_ma: float

    def __post_init__(self) -> None:
        if self.battery_mah <= 0.0:
            raise ValueError("battery_mah must be positive")
        if self.updates_per_month < 0.0:
            raise ValueError("updates_per_month must be nonnegative")
        if self.uplink_period_hr <= 0.0:
            raise ValueError("uplink_period_hr must be positive")
        if self.uplink_airtime_s < 0.0:
            raise ValueError("uplink_airtime_s must be nonnegative")
        for name in ("tx_current_ma", "rx_current_ma", "sleep_current_ma"):
            if getattr(self, name) < 0.0:
                raise ValueError(f"{name} must be nonnegative")

    def tx_hours_per_year(self) -> float:
        uplinks = HOURS_PER_YEAR / self.uplink_period_hr
        return uplinks * self.uplink_airtime_s / SECONDS_PER_HOUR

    def rx_hours_per_year(self, rx_hours_per_update: float) -> float:
        return MONTHS_PER_YEAR * self.updates_per_month * rx_hours_per_update


def rx_hours_per_update(receive_energy_j: float, rx_power_w: float) -> float:
    """Listening hours implied by the energy one update session costs."""
    if receive_energy_j < 0.0:
        raise ValueError("receive_energy_j must be nonnegative")
    if rx_power_w <= 0.0:
        raise ValueError("rx_power_w must be positive")
    return receive_energy_j / rx_power_w / SECONDS_PER_HOUR


def battery_lifetime_years(profile: DutyProfile, rx_hours_per_update: float) -> float:
    """Years until the battery is drained by the tx/rx/sleep duty mix."""
    if rx_hours_per_update < 0.0:
        raise ValueError("rx_hours_per_update must be nonnegative")
    tx_hours = profile.tx_hours_per_year()
    rx_hours = profile.rx_hours_per_year(rx_hours_per_update)
    sleep_hours = HOURS_PER_YEAR - tx_hours - rx_hours
    if sleep_hours < 0.0:
        raise ValueError(
            "the transmit and listen duties already exceed the whole year;"
            " the sleep share would be negative"
        )
    drain_mah = (
        profile.tx_current_ma * tx_hours
        + profile.rx_current_ma * rx_hours
        + profile.sleep_current_ma * sleep_hours
    )
    return profile.battery_mah / drain_mah
