"""Monte Carlo session simulator.

One session multicasts a firmware image to a cohort of recipients under a
chosen transmission policy. Per frame and recipient the simulator draws
Rayleigh fading against the detection threshold and a Poisson number of
interferer-frame overlaps judged by the capture matrix; recipients stop
listening the moment their rateless decoder is satisfied, and each stream
stops the moment its last recipient finishes (instant completion feedback).

Interferer overlaps are generated per desired frame as a Poisson event
stream whose rate matches the per-interferer collision windows, which
linearizes each interferer's Bernoulli overlap. The quadratic correction
is of order the collision probability itself (~1e-4 at the default load),
far below the simulation's statistical resolution.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from . import analysis
from .channel import InterfererField, LinkModel, interference_radius, mean_interferer_count
from .config import ExperimentSpec
from .fec import RatelessModel
from .phy import ALL_SFS, SF_MIN, PhyProfile, check_sf
from .schemes import FixedSfScheme, GroupBasedScheme, ProposedScheme, Scheme


@dataclass(frozen=True)
class RecipientOutcome:
    """What one recipient experienced during one session."""

    distance_m: float
    fragments_needed: int
    fragments_received: int
    completed: bool
    completion_time_s: float
    energy_fragments_j: float
    energy_control_j: float
    attempts_full: int
    attempts_preamble_only: int
    assigned_sf: Optional[int] = None


@dataclass(frozen=True)
class SessionResult:
    outcomes: tuple[RecipientOutcome, ...]
    transmissions: int
    duration_s: float
    incomplete: bool


@dataclass(frozen=True)
class ExperimentResult:
    """Per-bin and averaged metrics over repeated sessions of one scheme."""

    scheme: str
    runs: int
    seed: int
    config_fingerprint: str
    bin_distances: tuple[float, ...]
    ee_norm_mean: tuple[float, ...]
    ee_norm_stderr: tuple[float, ...]
    dt_hours_mean: tuple[float, ...]
    dt_hours_stderr: tuple[float, ...]
    avg_ee_norm: float
    avg_dt_hours: float
    incomplete_sessions: int
    unfinished_recipients: int


def collision_outcome(
    desired_power_w: float,
    desired_sf: int,
    interferer_frames: Sequence[tuple[float, int]],
    phy: PhyProfile,
) -> str:
    """Capture verdict for one desired frame against concurrent frames.

    ``interferer_frames`` holds (received power, sf) pairs. The desired
    frame is lost as soon as any one of them pushes it under the capture
    threshold.
    """
    s = check_sf(desired_sf)
    for power, j in interferer_frames:
        if desired_power_w < phy.capture_ratio(s, j) * power:
            return "lost"
    return "survive"


def stream_timeline(
    sf_sequence: Sequence[int],
    phy: PhyProfile,
    payload_bytes: int,
    duty_cycle_max_percent: float,
) -> tuple[np.ndarray, np.ndarray]:
    """Slot-end times and cumulative airtime of a frame stream.

    Frames transmit at the end of their duty slot, so the airtime budget
    holds at every prefix: cumulative airtime / elapsed <= duty cycle.
    """
    slots = np.array(
        [analysis.duty_slot_s(phy, s, payload_bytes, duty_cycle_max_percent) for s in sf_sequence]
    )
    airtimes = np.array([phy.frame_airtime(s, payload_bytes) for s in sf_sequence])
    return np.cumsum(slots), np.cumsum(airtimes)


class _SfTables:
    """Per-SF constants reused across every chunk of a session."""

    def __init__(self, phy: PhyProfile, field: InterfererField, payload_bytes: int,
                 duty_cycle_max_percent: float):
        n_sf = len(ALL_SFS)
        self.e_frame = np.zeros(n_sf)
        self.e_preamble = np.zeros(n_sf)
        self.slot_s = np.zeros(n_sf)
        self.event_rate_per_interferer = np.zeros(n_sf)
        self.sf_event_cdf = np.zeros((n_sf, n_sf))
        self.preamble_share = np.zeros((n_sf, n_sf))
        self.capture = np.zeros((n_sf, n_sf))
        mix = np.array([field.sf_probabilities[j] for j in ALL_SFS])
        l_bar = np.array([field.mean_frame_duration_s[j] for j in ALL_SFS])
        for row, s in enumerate(ALL_SFS):
            l_fr = phy.frame_airtime(s, payload_bytes)
            l_pr = phy.preamble_duration(s)
            self.e_frame[row] = phy.rx_energy_frame(s, payload_bytes)
            self.e_preamble[row] = phy.rx_energy_preamble(s)
            self.slot_s[row] = analysis.duty_slot_s(phy, s, payload_bytes, duty_cycle_max_percent)
            windows = mix * (l_fr + l_bar)
            self.event_rate_per_interferer[row] = (
                field.frame_rate_hz * windows.sum() / field.channel_count
            )
            total = windows.sum()
            self.sf_event_cdf[row] = np.cumsum(windows / total) if total > 0 else 1.0
            self.preamble_share[row] = (l_pr + l_bar) / (l_fr + l_bar)
            self.capture[row] = [phy.capture_ratio(s, j) for j in ALL_SFS]


class _SessionState:
    """Mutable per-recipient bookkeeping for one session."""

    def __init__(self, distances: np.ndarray, thresholds: np.ndarray,
                 int_offsets: np.ndarray, int_u_alpha: np.ndarray,
                 detect_c: np.ndarray):
        n = distances.size
        self.distances = distances
        self.thresholds = thresholds
        self.int_offsets = int_offsets
        self.int_counts = np.diff(int_offsets)
        self.int_u_alpha = int_u_alpha
        self.detect_c = detect_c
        self.received = np.zeros(n, dtype=np.int64)
        self.completed = np.zeros(n, dtype=bool)
        self.completion_time = np.full(n, np.nan)
        self.full_listens = np.zeros((n, len(ALL_SFS)), dtype=np.int64)
        self.preamble_listens = np.zeros((n, len(ALL_SFS)), dtype=np.int64)


def _serve_segment(
    rng: np.random.Generator,
    state: _SessionState,
    tables: _SfTables,
    d_alpha: np.ndarray,
    sf: int,
    max_frames: int,
    active: np.ndarray,
    t_start: float,
    chunk_frames: int,
) -> tuple[int, np.ndarray]:
    """Send up to ``max_frames`` frames at one SF to the active recipients.

    Returns frames actually transmitted and the still-active recipient
    indices. Mutates the session state in place.
    """
    row = sf - SF_MIN
    sent = 0
    while sent < max_frames and active.size > 0:
        f = min(chunk_frames, max_frames - sent)
        a = active.size
        fading = rng.exponential(1.0, size=(a, f))
        detected = fading > state.detect_c[active, row][:, None]

        frame_kill = np.zeros((a, f), dtype=bool)
        pre_kill = np.zeros((a, f), dtype=bool)
        rates = tables.event_rate_per_interferer[row] * state.int_counts[active]
        if rates.max(initial=0.0) > 0.0:
            k = rng.poisson(lam=rates[:, None], size=(a, f))
            total = int(k.sum())
            if total > 0:
                cell = np.repeat(np.arange(a * f), k.ravel())
                r_loc = cell // f
                g = active[r_loc]
                j = np.searchsorted(tables.sf_event_cdf[row], rng.random(total), side="right")
                j = np.minimum(j, len(ALL_SFS) - 1)
                src_local = (rng.random(total) * state.int_counts[g]).astype(np.int64)
                u_alpha = state.int_u_alpha[state.int_offsets[g] + src_local]
                a_event = fading.ravel()[cell]
                # the overlap kills when the interferer's fading pushes its
                # power past the desired power over the capture threshold
                limit = a_event * u_alpha / (d_alpha[g] * tables.capture[row, j])
                kill = rng.exponential(1.0, size=total) > limit
                in_pre = rng.random(total) < tables.preamble_share[row, j]
                fk = np.bincount(cell[kill], minlength=a * f) > 0
                pk = np.bincount(cell[kill & in_pre], minlength=a * f) > 0
                frame_kill = fk.reshape(a, f)
                pre_kill = pk.reshape(a, f)

        success = detected & ~frame_kill
        preamble_ok = detected & ~pre_kill

        need = (state.thresholds[active] - state.received[active])[:, None]
        cum = np.cumsum(success, axis=1)
        hit = cum >= need
        done = hit.any(axis=1)
        first = np.where(done, hit.argmax(axis=1), f)

        listen_mask = np.arange(f)[None, :] <= np.minimum(first, f - 1)[:, None]
        full = (preamble_ok & listen_mask).sum(axis=1)
        state.full_listens[active, row] += full
        state.preamble_listens[active, row] += listen_mask.sum(axis=1) - full
        state.received[active] += np.where(
            done, need[:, 0], (success & listen_mask).sum(axis=1)
        )

        frames_now = int(first.max()) + 1 if bool(done.all()) else f
        finishers = active[done]
        state.completed[finishers] = True
        state.completion_time[finishers] = (
            t_start + (sent + first[done] + 1) * tables.slot_s[row]
        )
        active = active[~done]
        sent += frames_now
        if bool(done.all()):
            break
    return sent, active


def _place_recipients(spec: ExperimentSpec, rng: np.random.Generator) -> np.ndarray:
    lay = spec.layout
    if lay.kind == "grid":
        bins = np.array(spec.grid_distances())
        base, rem = divmod(lay.recipients, bins.size)
        counts = np.full(bins.size, base, dtype=np.int64)
        counts[:rem] += 1
        return np.repeat(bins, counts)
    radius = spec.network.cell_radius_m
    return radius * np.sqrt(rng.random(lay.recipients))


def attempts_cap(spec: ExperimentSpec, code: RatelessModel) -> int:
    """Frame budget per stream; a stream that exhausts it is abandoned."""
    return math.ceil(spec.sim.transmission_cap_factor * code.expected_fragments())


def run_session(
    spec: ExperimentSpec,
    scheme: Scheme,
    rng: np.random.Generator,
    *,
    group_assignment: Optional[dict[float, Optional[int]]] = None,
    distances: Optional[np.ndarray] = None,
    code: Optional[RatelessModel] = None,
) -> SessionResult:
    """Simulate one complete firmware session."""
    phy, net = spec.phy, spec.network
    link, fld = net.link, net.interferers
    payload = spec.firmware.fragment_payload_bytes
    code = code or spec.firmware.code

    if distances is None:
        distances = _place_recipients(spec, rng)
    else:
        distances = np.asarray(distances, dtype=float)
    n = distances.size

    radius_i = interference_radius(link, fld, phy.sensitivity_w(max(ALL_SFS)))
    counts = rng.poisson(mean_interferer_count(fld, radius_i), size=n)
    offsets = np.concatenate([[0], np.cumsum(counts)]).astype(np.int64)
    positions = radius_i * np.sqrt(rng.random(int(counts.sum())))
    thresholds = code.sample_completion_threshold(rng, size=n)

    d_alpha = distances**link.path_loss_exponent
    detect_c = np.empty((n, len(ALL_SFS)))
    for row, s in enumerate(ALL_SFS):
        detect_c[:, row] = phy.sensitivity_w(s) * d_alpha / (link.link_gain * link.tx_rf_power_w)

    tables = _SfTables(phy, fld, payload, net.duty_cycle_max_percent)
    state = _SessionState(
        distances=distances,
        thresholds=np.asarray(thresholds, dtype=np.int64),
        int_offsets=offsets,
        int_u_alpha=positions**link.path_loss_exponent,
        detect_c=detect_c,
    )

    cap = attempts_cap(spec, code)
    chunk = spec.sim.chunk_frames
    transmissions = 0
    elapsed = 0.0
    incomplete = False
    assigned: list[Optional[int]] = [None] * n

    if isinstance(scheme, GroupBasedScheme):
        if group_assignment is None:
            raise ValueError("group-based simulation needs a precomputed SF assignment")
        member_sf = np.array(
            [_lookup_assignment(group_assignment, d) for d in distances], dtype=float
        )
        assigned = [None if math.isnan(s) else int(s) for s in member_sf]
        for sf in sorted({int(s) for s in member_sf if not math.isnan(s)}):
            group = np.flatnonzero(member_sf == sf)
            sent, left = _serve_segment(
                rng, state, tables, d_alpha, sf, cap, group, elapsed, chunk
            )
            transmissions += sent
            elapsed += sent * tables.slot_s[sf - SF_MIN]
            if left.size > 0:
                incomplete = True
        if any(a is None for a in assigned):
            incomplete = True
    elif isinstance(scheme, FixedSfScheme):
        active = np.arange(n)
        sent, left = _serve_segment(
            rng, state, tables, d_alpha, scheme.sf, cap, active, elapsed, chunk
        )
        transmissions += sent
        elapsed += sent * tables.slot_s[scheme.sf - SF_MIN]
        if left.size > 0:
            incomplete = True
    elif isinstance(scheme, ProposedScheme):
        active = np.arange(n)
        for sf in range(scheme.min_sf, scheme.max_sf + 1):
            if active.size == 0 or transmissions >= cap:
                break
            if sf < scheme.max_sf:
                budget = min(scheme.frames_per_round, cap - transmissions)
            else:
                budget = cap - transmissions
            sent, active = _serve_segment(
                rng, state, tables, d_alpha, sf, budget, active, elapsed, chunk
            )
            transmissions += sent
            elapsed += sent * tables.slot_s[sf - SF_MIN]
        if active.size > 0:
            incomplete = True
    else:
        raise TypeError(f"unknown scheme {scheme!r}")

    control = analysis.control_energy_j(
        phy, net.control_listen_s, net.ack_payload_bytes, net.ack_uplink_sf
    )
    outcomes = []
    for g in range(n):
        energy = float(
            state.full_listens[g] @ tables.e_frame
            + state.preamble_listens[g] @ tables.e_preamble
        )
        outcomes.append(
            RecipientOutcome(
                distance_m=float(distances[g]),
                fragments_needed=int(state.thresholds[g]),
                fragments_received=int(state.received[g]),
                completed=bool(state.completed[g]),
                completion_time_s=float(state.completion_time[g]),
                energy_fragments_j=energy,
                energy_control_j=control if state.completed[g] else 0.0,
                attempts_full=int(state.full_listens[g].sum()),
                attempts_preamble_only=int(state.preamble_listens[g].sum()),
                assigned_sf=assigned[g],
            )
        )
    return SessionResult(
        outcomes=tuple(outcomes),
        transmissions=transmissions,
        duration_s=elapsed,
        incomplete=incomplete,
    )


def _lookup_assignment(assignment: dict[float, Optional[int]], distance: float) -> float:
    keys = sorted(assignment)
    nearest = min(keys, key=lambda x: abs(x - distance))
    sf = assignment[nearest]
    return float("nan") if sf is None else float(sf)


def _group_assignment_for(
    spec: ExperimentSpec, scheme: GroupBasedScheme, code: RatelessModel
) -> dict[float, Optional[int]]:
    if spec.layout.kind == "grid":
        lattice: Sequence[float] = spec.grid_distances()
    else:
        radius = spec.network.cell_radius_m
        lattice = tuple(radius * (j + 1) / 256 for j in range(256))
    return analysis.group_assignment_map(
        lattice,
        spec.firmware.fragment_payload_bytes,
        spec.phy,
        spec.network.link,
        spec.network.interferers,
        code.expected_fragments(),
        scheme.criterion,
        duty_cycle_max_percent=spec.network.duty_cycle_max_percent,
        options=spec.analysis,
        max_expected_attempts=attempts_cap(spec, code),
    )


def run_experiment(
    spec: ExperimentSpec,
    scheme: Scheme,
    *,
    runs: Optional[int] = None,
    seed: Optional[int] = None,
    code: Optional[RatelessModel] = None,
) -> ExperimentResult:
    """Repeat sessions with independent seeds and reduce to binned metrics."""
    runs = runs if runs is not None else spec.sim.runs
    seed = seed if seed is not None else spec.seed
    code = code or spec.firmware.code
    if runs < 1:
        raise ValueError("runs must be at least 1")

    group_assignment = None
    if isinstance(scheme, GroupBasedScheme):
        group_assignment = _group_assignment_for(spec, scheme, code)

    bins = np.array(spec.grid_distances())
    edges = np.linspace(0.0, spec.network.cell_radius_m, bins.size + 1)
    e_norm = analysis.normalization_energy_j(
        spec.phy, spec.firmware.fragments, spec.firmware.fragment_payload_bytes
    )

    ee_runs = np.full((runs, bins.size), np.nan)
    dt_runs = np.full((runs, bins.size), np.nan)
    incomplete_sessions = 0
    unfinished = 0
    children = np.random.SeedSequence(seed).spawn(runs)
    for r in range(runs):
        rng = np.random.default_rng(children[r])
        session = run_session(
            spec, scheme, rng, group_assignment=group_assignment, code=code
        )
        if session.incomplete:
            incomplete_sessions += 1
        d = np.array([o.distance_m for o in session.outcomes])
        ok = np.array([o.completed for o in session.outcomes])
        ee = np.array([o.energy_fragments_j for o in session.outcomes]) / e_norm
        dt = np.array([o.completion_time_s for o in session.outcomes]) / 3600.0
        unfinished += int((~ok).sum())
        which = np.clip(np.digitize(d, edges, right=True) - 1, 0, bins.size - 1)
        for b in range(bins.size):
            members = ok & (which == b)
            if members.any():
                ee_runs[r, b] = ee[members].mean()
                dt_runs[r, b] = dt[members].mean()

    def reduce(per_run: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        means = np.full(bins.size, np.nan)
        errs = np.full(bins.size, np.nan)
        for b in range(bins.size):
            col = per_run[:, b]
            col = col[~np.isnan(col)]
            if col.size > 0:
                means[b] = col.mean()
                errs[b] = (
                    col.std(ddof=1) / math.sqrt(col.size) if col.size > 1 else 0.0
                )
        return means, errs

    ee_mean, ee_err = reduce(ee_runs)
    dt_mean, dt_err = reduce(dt_runs)
    return ExperimentResult(
        scheme=scheme.label,
        runs=runs,
        seed=seed,
        config_fingerprint=spec.fingerprint(),
        bin_distances=tuple(float(b) for b in bins),
        ee_norm_mean=tuple(float(x) for x in ee_mean),
        ee_norm_stderr=tuple(float(x) for x in ee_err),
        dt_hours_mean=tuple(float(x) for x in dt_mean),
        dt_hours_stderr=tuple(float(x) for x in dt_err),
        avg_ee_norm=float(np.nanmean(ee_mean)) if not np.all(np.isnan(ee_mean)) else float("nan"),
        avg_dt_hours=float(np.nanmean(dt_mean)) if not np.all(np.isnan(dt_mean)) else float("nan"),
        incomplete_sessions=incomplete_sessions,
        unfinished_recipients=unfinished,
    )
