import json
import math
import random

import pytest

from photonapprox.exceptions import ConfigError, TraceError
from photonapprox.fpapprox import FloatWord
from photonapprox.laser import LaserBudget, LsbMode, TransmitPlan
from photonapprox.photonics import LinkPath, LossParameters, clos_topology
from photonapprox.signaling import OOK, PAM4
from photonapprox.simcore import (
    EnergyConstants,
    Packet,
    PacketKind,
    Policy,
    PolicyConfig,
    TraceSimulator,
    commanded_power,
    compare_policies,
    iter_trace,
    parse_packet,
    policy_config_for_app,
    read_trace,
    simulate_trace,
    write_trace,
)
from photonapprox.workload import generate_trace

DEVICE = LossParameters()
TOPO = clos_topology()
NO_OVERHEAD = EnergyConstants(
    router_energy_pj_per_word=0.0,
    gwi_energy_pj_per_word=0.0,
    lookup_table_power_mw=0.0,
    receiver_selection_cycles=0,
)


@pytest.fixture(scope="module")
def trace():
    return generate_trace(TOPO, 600, 0.6, seed=7)


class TestPackets:
    def test_json_roundtrip(self):
        p = Packet(3, "c0", "c2", PacketKind.FLOAT, True, (FloatWord.from_float(1.5).raw, 0))
        assert parse_packet(p.to_json()) == p

    def test_approx_requires_float(self):
        with pytest.raises(TraceError):
            Packet(1, "a", "b", PacketKind.INT, True)

    def test_bad_line_number_reported(self):
        lines = [Packet(0, "c0", "c1", PacketKind.INT, False, (1,)).to_json(), '{"seq": 1, "src": "c0"}']
        with pytest.raises(TraceError, match="line 2"):
            list(iter_trace(lines))

    def test_bad_hex_word(self):
        line = '{"seq":4,"src":"c0","dst":"c1","kind":"float","approx":true,"payload":["zz"]}'
        with pytest.raises(TraceError, match="seq 4"):
            parse_packet(line)

    def test_oversized_word(self):
        line = '{"seq":4,"src":"c0","dst":"c1","kind":"float","approx":true,"payload":["1ffffffffffffffff"]}'
        with pytest.raises(TraceError):
            parse_packet(line)

    def test_file_roundtrip(self, tmp_path, trace):
        write_trace(trace, tmp_path / "t.jsonl")
        assert read_trace(tmp_path / "t.jsonl") == trace


class TestPolicyConfig:
    def test_fixed_prior_is_pinned(self):
        cfg = PolicyConfig(Policy.FIXED_PRIOR, 4, 0.1)
        assert (cfg.num_approx_bits, cfg.reduction_fraction) == (16, 0.8)

    def test_fixed_prior_ignores_application(self):
        for app in ("fft", "sobel", "blackscholes"):
            cfg = policy_config_for_app(Policy.FIXED_PRIOR, app)
            assert (cfg.num_approx_bits, cfg.reduction_fraction) == (16, 0.8)

    def test_presets(self):
        cfg = policy_config_for_app(Policy.LOSS_AWARE_OOK, "jpeg")
        assert (cfg.num_approx_bits, cfg.reduction_fraction) == (24, 0.8)
        assert policy_config_for_app(Policy.TRUNCATION, "fft").num_approx_bits == 8

    def test_unknown_app(self):
        with pytest.raises(ConfigError):
            policy_config_for_app(Policy.LOSS_AWARE_OOK, "doom")

    def test_policy_names(self):
        assert Policy.parse("LOSS_AWARE_PAM4") is Policy.LOSS_AWARE_PAM4
        with pytest.raises(ConfigError):
            Policy.parse("magic")


class TestCommandedPower:
    def plan(self, mode, k, lsb=None):
        return TransmitPlan("ook", 0.0, mode, k, lsb)

    def test_all_full(self):
        assert commanded_power(self.plan(LsbMode.FULL, 0), OOK, 64) == 64.0

    def test_truncated_half(self):
        assert commanded_power(self.plan(LsbMode.TRUNCATED, 32), OOK, 64) == 32.0

    def test_reduced_twenty_percent(self):
        lsb = 10 * math.log10(0.2)
        assert commanded_power(self.plan(LsbMode.REDUCED, 32, lsb), OOK, 64) == pytest.approx(32 + 32 * 0.2)

    def test_pam4_counts_symbols(self):
        plan = TransmitPlan("pam4", 0.0, LsbMode.TRUNCATED, 32)
        assert commanded_power(plan, PAM4) == 16.0


class TestSimulate:
    def test_empty_trace(self):
        out, ledger, report = simulate_trace([], TOPO, DEVICE, PolicyConfig(Policy.BASELINE))
        assert out == [] and report.packets == 0 and report.epb_pj_per_bit is None

    def test_baseline_is_identity(self, trace):
        out, _, report = simulate_trace(trace, TOPO, DEVICE, PolicyConfig(Policy.BASELINE))
        assert [p.payload for p in out] == [p.payload for p in trace]
        assert report.mode_histogram["full"] == report.approximable_packets

    def test_single_packet_energy(self):
        # 1 mW commanded over 64 wavelengths, one 5 GHz cycle
        per_lambda = 10 * math.log10(1 / 64)
        path = LinkPath("s", "d", through_mrs=0)
        drop = DEVICE.mr_drop_loss_db
        params = LossParameters(detector_sensitivity_dbm=per_lambda - drop)
        pkt = Packet(0, "s", "d", PacketKind.INT, False, (0,))
        _, ledger, report = simulate_trace([pkt], [path], params, PolicyConfig(Policy.BASELINE), NO_OVERHEAD)
        assert ledger.laser_energy_pj == pytest.approx(0.2, rel=1e-12)
        assert ledger.laser_energy_pj / ledger.bits_transferred == pytest.approx(3.125e-3, rel=1e-12)

    def test_unknown_node(self):
        pkt = Packet(42, "c0", "nowhere", PacketKind.INT, False, (0,))
        with pytest.raises(TraceError, match="seq 42"):
            simulate_trace([pkt], TOPO, DEVICE, PolicyConfig(Policy.BASELINE))

    def test_integer_packets_never_touched(self, trace):
        out, _, _ = simulate_trace(trace, TOPO, DEVICE, PolicyConfig(Policy.TRUNCATION, 32, 1.0))
        for before, after in zip(trace, out):
            if before.kind is not PacketKind.FLOAT:
                assert before == after

    def test_full_reduction_equals_truncation(self, trace):
        aware, _, _ = simulate_trace(trace, TOPO, DEVICE, PolicyConfig(Policy.LOSS_AWARE_OOK, 20, 1.0))
        trunc, _, _ = simulate_trace(trace, TOPO, DEVICE, PolicyConfig(Policy.TRUNCATION, 20, 1.0))
        assert aware == trunc

    def test_pam4_policy_needs_pam4_link(self):
        with pytest.raises(ConfigError):
            TraceSimulator(TOPO, DEVICE, PolicyConfig(Policy.LOSS_AWARE_PAM4, 32, 0.5), scheme=OOK)

    @pytest.mark.parametrize("policy", list(Policy))
    def test_msb_safety(self, trace, policy):
        cfg = PolicyConfig(policy, 32, 0.9)
        out, _, _ = simulate_trace(trace, TOPO, DEVICE, cfg)
        for before, after in zip(trace, out):
            assert [w >> 32 for w in before.payload] == [w >> 32 for w in after.payload]

    def test_ledger_components_sum(self, trace):
        _, ledger, report = simulate_trace(trace, TOPO, DEVICE, PolicyConfig(Policy.LOSS_AWARE_OOK, 28, 0.8))
        assert ledger.total_energy_pj == ledger.laser_energy_pj + ledger.tuning_energy_pj + ledger.electrical_energy_pj
        assert ledger.laser_energy_pj == math.fsum(r.laser_pj for r in ledger.records)
        assert report.total_energy_pj == ledger.total_energy_pj

    def test_replay_order_independent_totals(self, trace):
        cfg = PolicyConfig(Policy.LOSS_AWARE_OOK, 28, 0.8)
        _, a, _ = simulate_trace(trace, TOPO, DEVICE, cfg)
        shuffled = list(trace)
        random.Random(3).shuffle(shuffled)
        _, b, _ = simulate_trace(shuffled, TOPO, DEVICE, cfg)
        assert a.to_dict() == b.to_dict()

    def test_deterministic_reports(self, trace):
        cfg = PolicyConfig(Policy.LOSS_AWARE_PAM4, 32, 0.5)
        runs = [simulate_trace(trace, TOPO, DEVICE, cfg) for _ in range(2)]
        assert runs[0][0] == runs[1][0]
        assert json.dumps(runs[0][2].to_dict()) == json.dumps(runs[1][2].to_dict())

    def test_per_packet_dominance(self, trace):
        cfgs = {m: PolicyConfig(p, 24, r) for m, p, r in (
            ("full", Policy.BASELINE, 0.0),
            ("reduced", Policy.FIXED_PRIOR, 0.8),
            ("truncated", Policy.TRUNCATION, 1.0),
        )}
        # fixed-prior pins 16 bits; compare like with like
        cfgs["truncated"] = PolicyConfig(Policy.TRUNCATION, 16, 1.0)
        ledgers = {m: simulate_trace(trace, TOPO, DEVICE, c)[1] for m, c in cfgs.items()}
        for t, r, f in zip(ledgers["truncated"].records, ledgers["reduced"].records, ledgers["full"].records):
            assert t.laser_pj <= r.laser_pj <= f.laser_pj


def far_trace(n=200):
    return generate_trace(TOPO, n, 1.0, seed=3, destinations="farthest")


class TestCompare:
    def test_baseline_vs_itself(self, trace):
        rep = compare_policies(trace, TOPO, DEVICE, application="fft")
        assert rep.reductions["baseline"]["baseline"] == {"laser_power_pct": 0.0, "epb_pct": 0.0}

    def test_unknown_application(self, trace):
        with pytest.raises(ConfigError):
            compare_policies(trace, TOPO, DEVICE, application="quake")

    def test_needs_application_or_configs(self, trace):
        with pytest.raises(ConfigError):
            compare_policies(trace, TOPO, DEVICE)

    def test_pam4_below_ook(self, trace):
        rep = compare_policies(trace, TOPO, DEVICE, application="blackscholes")
        assert rep.reports["loss-aware-pam4"].laser_energy_pj < rep.reports["loss-aware-ook"].laser_energy_pj

    def test_truncation_beats_fixed_prior_when_all_far(self):
        rep = compare_policies(far_trace(), TOPO, DEVICE, application="sobel")
        assert rep.reports["fixed-prior"].mode_histogram["reduced"] == 200
        assert rep.reports["truncation"].epb_pj_per_bit <= rep.reports["fixed-prior"].epb_pj_per_bit

    def test_loss_aware_truncates_all_far(self):
        rep = compare_policies(far_trace(), TOPO, DEVICE, application="blackscholes")
        assert rep.reports["loss-aware-ook"].mode_histogram == {"full": 0, "reduced": 0, "truncated": 200}

    def test_dict_roundtrip(self, trace):
        rep = compare_policies(trace, TOPO, DEVICE, application="jpeg")
        again = type(rep).from_dict(json.loads(json.dumps(rep.to_dict())))
        assert again.to_dict() == rep.to_dict()
