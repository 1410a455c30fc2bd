"""Monte Carlo session simulator.

The strongest checks run the simulator in regimes where its output is
forced: a clean channel with an ideal decoder must produce exactly one
full-frame listen per fragment, and a deaf link must burn the whole frame
budget as preamble-only listens. Statistical agreement with the closed
forms is checked at a pinned distance with a seeded run.
"""

import dataclasses
import math

import numpy as np
import pytest

from fuotacast import analysis, sim
from fuotacast.config import load_default_spec
from fuotacast.schemes import FixedSfScheme, GroupBasedScheme, ProposedScheme

PAYLOAD = 50

CLEAN_OVERRIDES = {
    "phy": {
        "sensitivity_dbm": {
            7: -995.0, 8: -996.0, 9: -997.0,
            10: -998.0, 11: -999.0, 12: -1000.0,
        }
    },
    "interferers": {"intensity_per_m2": 0.0},
}


def _ideal(spec):
    return dataclasses.replace(spec.firmware.code, mode="ideal")


class TestCleanChannelExactness:
    def test_every_listen_is_a_reception(self):
        spec = load_default_spec(CLEAN_OVERRIDES)
        rng = np.random.default_rng(7)
        res = sim.run_session(
            spec,
            FixedSfScheme(7),
            rng,
            distances=np.full(10, 300.0),
            code=_ideal(spec),
        )
        phy = spec.phy
        k = spec.firmware.fragments
        slot = analysis.duty_slot_s(phy, 7, PAYLOAD, 1.0)
        control = analysis.control_energy_j(phy, 60.0, 12, 12)
        assert res.transmissions == k
        assert not res.incomplete
        assert res.duration_s == pytest.approx(k * slot, rel=1e-12)
        for o in res.outcomes:
            assert o.completed
            assert o.fragments_needed == k
            assert o.fragments_received == k
            assert o.attempts_full == k
            assert o.attempts_preamble_only == 0
            assert o.energy_fragments_j == k * phy.rx_energy_frame(7, PAYLOAD)
            assert o.energy_control_j == control
            assert o.completion_time_s == pytest.approx(k * slot, rel=1e-12)
        assert control == pytest.approx(7.840374220800001, rel=1e-12)

    def test_ramp_finishes_inside_first_round(self):
        spec = load_default_spec(CLEAN_OVERRIDES)
        rng = np.random.default_rng(8)
        res = sim.run_session(
            spec,
            ProposedScheme(7, 12, 300),
            rng,
            distances=np.full(5, 900.0),
            code=_ideal(spec),
        )
        k = spec.firmware.fragments
        assert res.transmissions == k
        assert all(o.completed and o.attempts_full == k for o in res.outcomes)


class TestDeafLinkExhaustion:
    def test_budget_burned_as_preamble_listens(self):
        deaf = load_default_spec(
            {
                "phy": {
                    "sensitivity_dbm": {
                        7: -10.0, 8: -11.0, 9: -12.0,
                        10: -13.0, 11: -14.0, 12: -15.0,
                    }
                },
                "layout": {"recipients": 12},
            }
        )
        rng = np.random.default_rng(9)
        cap = sim.attempts_cap(deaf, deaf.firmware.code)
        res = sim.run_session(
            deaf, FixedSfScheme(9), rng, distances=np.full(12, 800.0)
        )
        assert res.incomplete
        assert res.transmissions == cap
        e_pr = deaf.phy.rx_energy_preamble(9)
        for o in res.outcomes:
            assert not o.completed
            assert o.fragments_received == 0
            assert o.attempts_full == 0
            assert o.attempts_preamble_only == cap
            assert o.energy_fragments_j == pytest.approx(cap * e_pr, rel=1e-12)
            assert o.energy_control_j == 0.0
            assert math.isnan(o.completion_time_s)


class TestAttemptsCap:
    def test_scales_with_expected_fragments(self, spec):
        assert sim.attempts_cap(spec, spec.firmware.code) == 10099
        assert sim.attempts_cap(spec, _ideal(spec)) == 10000


class TestCollisionOutcome:
    def test_same_sf_capture(self, phy):
        xi = phy.capture_ratio(7, 7)
        assert sim.collision_outcome(1.0, 7, [(1.1 / xi, 7)], phy) == "lost"
        assert sim.collision_outcome(1.0, 7, [(0.9 / xi, 7)], phy) == "survive"

    def test_cross_sf_rejection(self, phy):
        xi = phy.capture_ratio(7, 12)
        assert xi < 1.0
        assert sim.collision_outcome(1.0, 7, [(0.5, 12)], phy) == "survive"
        assert sim.collision_outcome(1.0, 7, [(1.5 / xi, 12)], phy) == "lost"

    def test_any_single_loss_kills(self, phy):
        xi = phy.capture_ratio(10, 10)
        frames = [(0.1, 10), (0.2, 10), (2.0 / xi, 10)]
        assert sim.collision_outcome(1.0, 10, frames, phy) == "lost"
        assert sim.collision_outcome(1.0, 10, [], phy) == "survive"


class TestStreamTimeline:
    def test_cumulative_slots_and_airtime(self, phy):
        seq = [7, 7, 8, 12]
        ends, air = sim.stream_timeline(seq, phy, PAYLOAD, 1.0)
        slots = [analysis.duty_slot_s(phy, s, PAYLOAD, 1.0) for s in seq]
        airs = [phy.frame_airtime(s, PAYLOAD) for s in seq]
        assert np.allclose(ends, np.cumsum(slots), rtol=1e-12)
        assert np.allclose(air, np.cumsum(airs), rtol=1e-12)

    def test_duty_cycle_holds_at_every_prefix(self, phy):
        seq = [7, 9, 12, 8, 11, 7]
        ends, air = sim.stream_timeline(seq, phy, PAYLOAD, 1.0)
        assert np.all(air / ends <= 0.01 + 1e-12)


class TestReproducibility:
    def test_same_seed_same_session(self):
        spec = load_default_spec({"layout": {"recipients": 30}})
        a = sim.run_session(spec, FixedSfScheme(12), np.random.default_rng(42))
        b = sim.run_session(spec, FixedSfScheme(12), np.random.default_rng(42))
        assert repr(a.outcomes) == repr(b.outcomes)
        assert a.transmissions == b.transmissions
        assert a.duration_s == b.duration_s

    def test_different_seed_diverges(self):
        spec = load_default_spec({"layout": {"recipients": 30}})
        a = sim.run_session(spec, FixedSfScheme(12), np.random.default_rng(42))
        b = sim.run_session(spec, FixedSfScheme(12), np.random.default_rng(43))
        assert repr(a.outcomes) != repr(b.outcomes)


class TestEnergyBookkeeping:
    def test_single_sf_energy_identity(self):
        spec = load_default_spec({"layout": {"recipients": 40}})
        res = sim.run_session(spec, FixedSfScheme(12), np.random.default_rng(5))
        e_fr = spec.phy.rx_energy_frame(12, PAYLOAD)
        e_pr = spec.phy.rx_energy_preamble(12)
        for o in res.outcomes:
            want = o.attempts_full * e_fr + o.attempts_preamble_only * e_pr
            assert o.energy_fragments_j == pytest.approx(want, rel=1e-12)

    def test_received_never_exceeds_needed(self):
        spec = load_default_spec({"layout": {"recipients": 40}})
        res = sim.run_session(spec, ProposedScheme(7, 12, 300), np.random.default_rng(6))
        for o in res.outcomes:
            assert o.fragments_received <= o.fragments_needed
            assert o.completed == (o.fragments_received == o.fragments_needed)


class TestGroupBasedSession:
    def test_assignment_is_respected(self):
        spec = load_default_spec()
        distances = np.array([200.0, 200.0, 800.0, 800.0])
        assignment = {200.0: 8, 800.0: 11}
        res = sim.run_session(
            spec,
            GroupBasedScheme("energy"),
            np.random.default_rng(11),
            group_assignment=assignment,
            distances=distances,
        )
        assert [o.assigned_sf for o in res.outcomes] == [8, 8, 11, 11]
        e_fr8 = spec.phy.rx_energy_frame(8, PAYLOAD)
        e_pr8 = spec.phy.rx_energy_preamble(8)
        for o in res.outcomes[:2]:
            want = o.attempts_full * e_fr8 + o.attempts_preamble_only * e_pr8
            assert o.energy_fragments_j == pytest.approx(want, rel=1e-12)

    def test_unreachable_member_marks_incomplete(self):
        spec = load_default_spec()
        res = sim.run_session(
            spec,
            GroupBasedScheme("energy"),
            np.random.default_rng(12),
            group_assignment={300.0: 9, 950.0: None},
            distances=np.array([300.0, 950.0]),
        )
        assert res.incomplete
        served, skipped = res.outcomes
        assert served.assigned_sf == 9
        assert skipped.assigned_sf is None
        assert not skipped.completed
        assert skipped.attempts_full == 0 and skipped.attempts_preamble_only == 0

    def test_missing_assignment_raises(self):
        spec = load_default_spec()
        with pytest.raises(ValueError):
            sim.run_session(
                spec, GroupBasedScheme("energy"), np.random.default_rng(1)
            )


class TestAgainstClosedForms:
    def test_pinned_distance_energy_and_time(self):
        spec = load_default_spec()
        scheme = ProposedScheme(7, 12, 300)
        needed = spec.firmware.code.expected_fragments()
        tab = analysis.success_tables(
            500.0, PAYLOAD, spec.phy, spec.network.link, spec.network.interferers,
            options=spec.analysis,
        )
        want = analysis.evaluate_proposed(
            tab, scheme, needed, spec.phy,
            duty_cycle_max_percent=spec.network.duty_cycle_max_percent,
            options=spec.analysis,
        )
        rng_master = np.random.SeedSequence(2024).spawn(60)
        energies, times = [], []
        for child in rng_master:
            res = sim.run_session(
                spec, scheme, np.random.default_rng(child),
                distances=np.full(50, 500.0),
            )
            for o in res.outcomes:
                if o.completed:
                    energies.append(o.energy_fragments_j)
                    times.append(o.completion_time_s)
        assert np.mean(energies) == pytest.approx(want.energy_fragments_j, rel=0.05)
        assert np.mean(times) == pytest.approx(want.update_time_s, rel=0.05)


class TestRunExperiment:
    def test_binning_and_reduction(self):
        spec = load_default_spec({"layout": {"recipients": 30}, "sim": {"runs": 3}})
        res = sim.run_experiment(spec, FixedSfScheme(12), runs=3, seed=1)
        assert res.bin_distances == spec.grid_distances()
        assert res.scheme == "fsf-12"
        assert res.runs == 3
        assert res.config_fingerprint == spec.fingerprint()
        for mean, err in zip(res.ee_norm_mean, res.ee_norm_stderr):
            assert math.isnan(mean) == math.isnan(err)
            if not math.isnan(mean):
                assert mean > 0 and err >= 0
        assert res.avg_ee_norm > 0
        assert res.avg_dt_hours > 0

    def test_single_run_has_zero_stderr(self):
        spec = load_default_spec({"layout": {"recipients": 30}})
        res = sim.run_experiment(spec, FixedSfScheme(12), runs=1, seed=3)
        for mean, err in zip(res.dt_hours_mean, res.dt_hours_stderr):
            if not math.isnan(mean):
                assert err == 0.0

    def test_experiment_is_reproducible(self):
        spec = load_default_spec({"layout": {"recipients": 20}})
        a = sim.run_experiment(spec, ProposedScheme(7, 12, 300), runs=2, seed=11)
        b = sim.run_experiment(spec, ProposedScheme(7, 12, 300), runs=2, seed=11)
        assert a == b

    def test_rejects_zero_runs(self, spec):
        with pytest.raises(ValueError):
            sim.run_experiment(spec, FixedSfScheme(12), runs=0, seed=1)

    def test_unknown_scheme_type_rejected(self, spec):
        with pytest.raises(TypeError):
            sim.run_session(spec, object(), np.random.default_rng(1))


class TestGridPlacement:
    def test_grid_layout_lands_on_bins(self):
        spec = load_default_spec({"layout": {"recipients": 23}})
        res = sim.run_session(spec, FixedSfScheme(12), np.random.default_rng(2))
        grid = set(spec.grid_distances())
        seen = [o.distance_m for o in res.outcomes]
        assert set(seen) <= grid
        counts = [seen.count(g) for g in sorted(grid)]
        assert max(counts) - min(counts) <= 1

    def test_disc_layout_stays_inside_cell(self):
        spec = load_default_spec({"layout": {"kind": "disc", "recipients": 50}})
        res = sim.run_session(spec, FixedSfScheme(12), np.random.default_rng(3))
        radius = spec.network.cell_radius_m
        assert all(0.0 < o.distance_m <= radius for o in res.outcomes)
