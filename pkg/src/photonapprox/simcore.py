"""Trace-driven replay of packets over SWMR photonic links with energy accounting."""

from __future__ import annotations

import csv
import enum
import io
import json
import math
from collections import Counter
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Callable, Iterable, Iterator, Mapping, Optional, Sequence

import numpy as np

from .exceptions import ConfigError, InputDataError, TraceError
from .fpapprox import WORD_BITS
from .laser import LaserBudget, LsbMode, TransmitPlan, dbm_to_mw
from .photonics import LinkPath, LossParameters, LossTable, build_loss_table, paths_by_route, tuning_power
from .signaling import OOK, PAM4, SignalingScheme, ThresholdChannel, DEFAULT_CHANNEL, transmit_words


# -- packets and traces ------------------------------------------------------


class PacketKind(enum.Enum):
    FLOAT = "float"
    INT = "int"
    CTL = "ctl"


@dataclass(frozen=True)
class Packet:
    seq: int
    src: str
    dst: str
    kind: PacketKind
    approx: bool
    payload: tuple[int, ...] = ()

    def __post_init__(self):
        if self.approx and self.kind is not PacketKind.FLOAT:
            raise TraceError("only float packets may be flagged approximable", seq=self.seq)
        object.__setattr__(self, "payload", tuple(self.payload))

    def to_json(self) -> str:
        return json.dumps(
            {
                "seq": self.seq,
                "src": self.src,
                "dst": self.dst,
                "kind": self.kind.value,
                "approx": self.approx,
                "payload": [f"{w:016x}" for w in self.payload],
            },
            separators=(",", ":"),
        )

    def with_payload(self, payload: Sequence[int]) -> "Packet":
        return Packet(self.seq, self.src, self.dst, self.kind, self.approx, tuple(payload))


def parse_packet(line: str, lineno: Optional[int] = None, path=None) -> Packet:
    try:
        rec = json.loads(line)
    except json.JSONDecodeError as exc:
        raise TraceError(f"invalid JSON: {exc.msg}", path=path, line=lineno) from None
    if not isinstance(rec, dict):
        raise TraceError("packet record must be a JSON object", path=path, line=lineno)
    missing = {"seq", "src", "dst", "kind", "approx", "payload"} - set(rec)
    if missing:
        raise TraceError(f"missing fields {sorted(missing)}", path=path, line=lineno)
    seq = rec["seq"]
    if not isinstance(seq, int) or isinstance(seq, bool):
        raise TraceError("seq must be an integer", path=path, line=lineno)
    try:
        kind = PacketKind(rec["kind"])
    except ValueError:
        raise TraceError(f"unknown packet kind {rec['kind']!r}", path=path, line=lineno, seq=seq) from None
    if not isinstance(rec["approx"], bool):
        raise TraceError("approx must be a boolean", path=path, line=lineno, seq=seq)
    if not isinstance(rec["payload"], list):
        raise TraceError("payload must be a list of hex words", path=path, line=lineno, seq=seq)
    words = []
    for item in rec["payload"]:
        try:
            w = int(item, 16)
        except (TypeError, ValueError):
            raise TraceError(f"bad payload word {item!r}", path=path, line=lineno, seq=seq) from None
        if not 0 <= w < 1 << WORD_BITS:
            raise TraceError(f"payload word {item!r} exceeds 64 bits", path=path, line=lineno, seq=seq)
        words.append(w)
    try:
        return Packet(seq, str(rec["src"]), str(rec["dst"]), kind, rec["approx"], tuple(words))
    except TraceError as exc:
        raise TraceError(str(exc), path=path, line=lineno) from None


def iter_trace(lines: Iterable[str], path=None) -> Iterator[Packet]:
    for lineno, line in enumerate(lines, start=1):
        if not line.strip():
            continue
        yield parse_packet(line, lineno, path)


def read_trace(path) -> list[Packet]:
    path = Path(path)
    with path.open() as fh:
        return list(iter_trace(fh, path=str(path)))


def write_trace(packets: Iterable[Packet], path) -> None:
    with Path(path).open("w") as fh:
        for pkt in packets:
            fh.write(pkt.to_json() + "\n")


# -- policies -----------------------------------------------------------------


class Policy(enum.Enum):
    BASELINE = "baseline"
    TRUNCATION = "truncation"
    FIXED_PRIOR = "fixed-prior"
    LOSS_AWARE_OOK = "loss-aware-ook"
    LOSS_AWARE_PAM4 = "loss-aware-pam4"

    @classmethod
    def parse(cls, name: str) -> "Policy":
        key = name.lower().replace("_", "-")
        for p in cls:
            if p.value == key:
                return p
        raise ConfigError(f"unknown policy {name!r}; expected one of {[p.value for p in cls]}")

    @property
    def scheme(self) -> SignalingScheme:
        return PAM4 if self is Policy.LOSS_AWARE_PAM4 else OOK

    @property
    def loss_aware(self) -> bool:
        return self in (Policy.LOSS_AWARE_OOK, Policy.LOSS_AWARE_PAM4)


FIXED_PRIOR_BITS = 16
FIXED_PRIOR_REDUCTION = 0.8


@dataclass(frozen=True)
class PolicyConfig:
    policy: Policy
    num_approx_bits: int = 0
    reduction_fraction: float = 0.0

    def __post_init__(self):
        if self.policy is Policy.FIXED_PRIOR:
            # application-independent setting: 16 LSBs at 20 % laser power
            object.__setattr__(self, "num_approx_bits", FIXED_PRIOR_BITS)
            object.__setattr__(self, "reduction_fraction", FIXED_PRIOR_REDUCTION)
        elif self.policy is Policy.BASELINE:
            object.__setattr__(self, "num_approx_bits", 0)
            object.__setattr__(self, "reduction_fraction", 0.0)
        elif self.policy is Policy.TRUNCATION:
            object.__setattr__(self, "reduction_fraction", 1.0)
        if not 0 <= self.num_approx_bits <= 32:
            raise ConfigError(f"num_approx_bits must be in [0, 32], got {self.num_approx_bits}")
        if not 0.0 <= self.reduction_fraction <= 1.0:
            raise ConfigError(f"reduction_fraction must be in [0, 1], got {self.reduction_fraction}")


@dataclass(frozen=True)
class AppPreset:
    truncation_bits: int
    loss_aware_bits: int
    loss_aware_reduction: float


# Per-application settings that keep output error under 10 %.
APP_PRESETS: Mapping[str, AppPreset] = {
    "blackscholes": AppPreset(12, 32, 0.9),
    "canneal": AppPreset(32, 32, 1.0),
    "fft": AppPreset(8, 32, 0.5),
    "jpeg": AppPreset(20, 24, 0.8),
    "sobel": AppPreset(32, 32, 1.0),
    "streamcluster": AppPreset(12, 28, 0.8),
}


def app_preset(name: str) -> AppPreset:
    try:
        return APP_PRESETS[name.lower()]
    except KeyError:
        raise ConfigError(f"unknown application {name!r}; presets: {sorted(APP_PRESETS)}") from None


def policy_configs(preset: AppPreset) -> dict[Policy, PolicyConfig]:
    return {
        Policy.BASELINE: PolicyConfig(Policy.BASELINE),
        Policy.TRUNCATION: PolicyConfig(Policy.TRUNCATION, preset.truncation_bits, 1.0),
        Policy.FIXED_PRIOR: PolicyConfig(Policy.FIXED_PRIOR),
        Policy.LOSS_AWARE_OOK: PolicyConfig(Policy.LOSS_AWARE_OOK, preset.loss_aware_bits, preset.loss_aware_reduction),
        Policy.LOSS_AWARE_PAM4: PolicyConfig(Policy.LOSS_AWARE_PAM4, preset.loss_aware_bits, preset.loss_aware_reduction),
    }


def policy_config_for_app(policy: Policy, app: str) -> PolicyConfig:
    return policy_configs(app_preset(app))[policy]


# -- energy -------------------------------------------------------------------


@dataclass(frozen=True)
class EnergyConstants:
    """Clock and electrical overheads.

    Router and GWI energies are placeholders, not tool-derived numbers.
    The lookup-table power is the whole-chip table overhead, charged while
    a loss-aware policy is transmitting.
    """

    clock_hz: float = 5e9
    router_energy_pj_per_word: float = 0.5
    gwi_energy_pj_per_word: float = 0.25
    lookup_table_power_mw: float = 0.06
    lookup_cycles: int = 1
    receiver_selection_cycles: int = 1
    receiver_selection_energy_pj: float = 0.0

    @property
    def cycle_ns(self) -> float:
        return 1e9 / self.clock_hz

    @classmethod
    def from_mapping(cls, data: Mapping) -> "EnergyConstants":
        known = set(cls.__dataclass_fields__)
        unknown = set(data) - known
        if unknown:
            raise ConfigError(f"unknown energy keys: {sorted(unknown)}")
        return cls(**data)


def commanded_power(plan: TransmitPlan, scheme: SignalingScheme, n_lambda: Optional[int] = None) -> float:
    """Total laser drive power in mW summed over all wavelengths of the link."""
    n_lambda = scheme.n_lambda if n_lambda is None else n_lambda
    n_approx = plan.num_approx_bits // scheme.bits_per_symbol
    if plan.lsb_mode is LsbMode.FULL:
        n_approx = 0
    msb = (n_lambda - n_approx) * dbm_to_mw(plan.msb_power_per_lambda_dbm)
    if plan.lsb_mode is LsbMode.REDUCED:
        return msb + n_approx * dbm_to_mw(plan.lsb_power_per_lambda_dbm)
    return msb


def laser_savings_model(scheme: SignalingScheme = OOK, per_lambda_dbm: float = 0.0) -> Callable[[int, float], float]:
    """Savings in mW of commanding (k, reduction) versus full power, on a reference link."""
    budget = LaserBudget(scheme.n_lambda, per_lambda_dbm + 10.0 * math.log10(scheme.n_lambda))
    full = commanded_power(TransmitPlan.full(budget, scheme), scheme)

    def savings(num_bits: int, reduction_fraction: float) -> float:
        plan = TransmitPlan.reduced(budget.with_reduction(reduction_fraction), scheme, num_bits)
        return full - commanded_power(plan, scheme)

    return savings


@dataclass(frozen=True)
class PacketEnergy:
    seq: int
    mode: str
    laser_pj: float
    tuning_pj: float
    electrical_pj: float
    cycles: int
    bits: int

    @property
    def total_pj(self) -> float:
        return self.laser_pj + self.tuning_pj + self.electrical_pj


@dataclass
class EnergyLedger:
    laser_energy_pj: float = 0.0
    tuning_energy_pj: float = 0.0
    electrical_energy_pj: float = 0.0
    bits_transferred: int = 0
    cycles: int = 0
    transmit_cycles: int = 0
    records: list[PacketEnergy] = field(default_factory=list, repr=False)

    @property
    def total_energy_pj(self) -> float:
        return self.laser_energy_pj + self.tuning_energy_pj + self.electrical_energy_pj

    @property
    def epb_pj(self) -> Optional[float]:
        if self.bits_transferred == 0:
            return None
        return self.total_energy_pj / self.bits_transferred

    @classmethod
    def from_records(cls, records: Sequence[PacketEnergy], transmit_cycles: int) -> "EnergyLedger":
        # fsum is exactly rounded, so totals do not depend on replay order
        return cls(
            laser_energy_pj=math.fsum(r.laser_pj for r in records),
            tuning_energy_pj=math.fsum(r.tuning_pj for r in records),
            electrical_energy_pj=math.fsum(r.electrical_pj for r in records),
            bits_transferred=sum(r.bits for r in records),
            cycles=sum(r.cycles for r in records),
            transmit_cycles=transmit_cycles,
            records=list(records),
        )

    def to_dict(self) -> dict:
        return {
            "laser_energy_pj": self.laser_energy_pj,
            "tuning_energy_pj": self.tuning_energy_pj,
            "electrical_energy_pj": self.electrical_energy_pj,
            "total_energy_pj": self.total_energy_pj,
            "bits_transferred": self.bits_transferred,
            "cycles": self.cycles,
            "transmit_cycles": self.transmit_cycles,
        }

    def records_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["seq", "mode", "laser_pj", "tuning_pj", "electrical_pj", "cycles", "bits"])
        for r in self.records:
            writer.writerow([r.seq, r.mode, repr(r.laser_pj), repr(r.tuning_pj), repr(r.electrical_pj), r.cycles, r.bits])
        return buf.getvalue()


@dataclass
class SimReport:
    policy: str
    scheme: str
    num_approx_bits: int
    reduction_fraction: float
    packets: int
    approximable_packets: int
    mode_histogram: dict[str, int]
    laser_energy_pj: float
    tuning_energy_pj: float
    electrical_energy_pj: float
    total_energy_pj: float
    bits_transferred: int
    cycles: int
    avg_laser_power_mw: Optional[float]
    epb_pj_per_bit: Optional[float]

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: Mapping) -> "SimReport":
        return cls(**data)


_MODES = (LsbMode.FULL.value, LsbMode.REDUCED.value, LsbMode.TRUNCATED.value)


class TraceSimulator:
    """Replays packets from one policy's point of view.

    Loss tables, budgets and per-route tuning power are computed once at
    construction and are read-only afterwards.
    """

    def __init__(
        self,
        topology: Iterable[LinkPath],
        params: LossParameters,
        config: PolicyConfig,
        constants: EnergyConstants = EnergyConstants(),
        channel: ThresholdChannel = DEFAULT_CHANNEL,
        scheme: Optional[SignalingScheme] = None,
    ):
        self.params = params
        self.config = config
        self.constants = constants
        self.channel = channel
        self.scheme = scheme or config.policy.scheme
        if (self.scheme.name == PAM4.name) != (config.policy is Policy.LOSS_AWARE_PAM4):
            raise ConfigError(f"policy {config.policy.value} cannot run on a {self.scheme.name} link")
        paths = [p.scaled_to(self.scheme.n_lambda) for p in topology]
        self.routes = paths_by_route(paths)
        sources = sorted({p.source for p in paths})
        self.tables: dict[str, LossTable] = {s: build_loss_table(paths, params, s) for s in sources}
        self.budgets = {
            s: LaserBudget.sized_for(t, params, self.scheme, config.reduction_fraction)
            for s, t in self.tables.items()
            if len(t)
        }

    def plan_for(self, packet: Packet) -> TransmitPlan:
        table = self.tables.get(packet.src)
        if table is None or packet.dst not in table:
            raise TraceError(f"no photonic path {packet.src}->{packet.dst}", seq=packet.seq)
        budget = self.budgets[packet.src]
        cfg = self.config
        if not packet.approx or cfg.policy is Policy.BASELINE or cfg.num_approx_bits == 0:
            return TransmitPlan.full(budget, self.scheme)
        if cfg.policy is Policy.TRUNCATION:
            return TransmitPlan.truncated(budget, self.scheme, cfg.num_approx_bits)
        if cfg.policy is Policy.FIXED_PRIOR:
            return TransmitPlan.reduced(budget, self.scheme, cfg.num_approx_bits)
        return TransmitPlan.loss_aware(table[packet.dst], budget, self.scheme, self.params, cfg.num_approx_bits)

    def step(self, packet: Packet) -> tuple[Packet, PacketEnergy, int]:
        plan = self.plan_for(packet)
        dest_loss = self.tables[packet.src][packet.dst]
        if packet.approx and plan.lsb_mode is not LsbMode.FULL:
            words = np.fromiter(packet.payload, dtype=np.uint64, count=len(packet.payload))
            out = transmit_words(words, plan, dest_loss, self.scheme, self.params, self.channel)
            packet = packet.with_payload(int(w) for w in out)

        c = self.constants
        n_words = len(packet.payload)
        cycles = c.receiver_selection_cycles + n_words
        electrical = c.receiver_selection_energy_pj + n_words * (c.router_energy_pj_per_word + c.gwi_energy_pj_per_word)
        if self.config.policy.loss_aware:
            if packet.approx:
                cycles += c.lookup_cycles
            electrical += c.lookup_table_power_mw * cycles * c.cycle_ns
        path = self.routes[(packet.src, packet.dst)]
        record = PacketEnergy(
            seq=packet.seq,
            mode=plan.lsb_mode.value,
            laser_pj=commanded_power(plan, self.scheme) * n_words * c.cycle_ns,
            tuning_pj=tuning_power(path, self.params) * n_words * c.cycle_ns,
            electrical_pj=electrical,
            cycles=cycles,
            bits=n_words * WORD_BITS,
        )
        return packet, record, n_words

    def run(self, trace: Iterable[Packet]) -> tuple[list[Packet], EnergyLedger, SimReport]:
        out: list[Packet] = []
        records: list[PacketEnergy] = []
        hist = Counter({m: 0 for m in _MODES})
        approximable = 0
        transmit_cycles = 0
        for packet in trace:
            mutated, record, n_words = self.step(packet)
            out.append(mutated)
            records.append(record)
            transmit_cycles += n_words
            if packet.approx:
                approximable += 1
                hist[record.mode] += 1
        ledger = EnergyLedger.from_records(records, transmit_cycles)
        time_ns = transmit_cycles * self.constants.cycle_ns
        report = SimReport(
            policy=self.config.policy.value,
            scheme=self.scheme.name,
            num_approx_bits=self.scheme.usable_approx_bits(self.config.num_approx_bits),
            reduction_fraction=self.config.reduction_fraction,
            packets=len(out),
            approximable_packets=approximable,
            mode_histogram={m: hist[m] for m in _MODES},
            laser_energy_pj=ledger.laser_energy_pj,
            tuning_energy_pj=ledger.tuning_energy_pj,
            electrical_energy_pj=ledger.electrical_energy_pj,
            total_energy_pj=ledger.total_energy_pj,
            bits_transferred=ledger.bits_transferred,
            cycles=ledger.cycles,
            avg_laser_power_mw=ledger.laser_energy_pj / time_ns if time_ns else None,
            epb_pj_per_bit=ledger.epb_pj,
        )
        return out, ledger, report


def simulate_trace(
    trace: Iterable[Packet],
    topology: Iterable[LinkPath],
    params: LossParameters,
    config: PolicyConfig,
    constants: EnergyConstants = EnergyConstants(),
    scheme: Optional[SignalingScheme] = None,
) -> tuple[list[Packet], EnergyLedger, SimReport]:
    return TraceSimulator(topology, params, config, constants, scheme=scheme).run(trace)


# -- policy comparison --------------------------------------------------------


def percent_reduction(reference: Optional[float], value: Optional[float]) -> Optional[float]:
    if reference is None or value is None or reference == 0:
        return None
    return (reference - value) / reference * 100.0


@dataclass
class ComparisonReport:
    application: Optional[str]
    reports: dict[str, SimReport]
    reductions: dict[str, dict[str, dict[str, Optional[float]]]]

    def to_dict(self) -> dict:
        return {
            "application": self.application,
            "reports": {k: v.to_dict() for k, v in self.reports.items()},
            "reductions": self.reductions,
        }

    @classmethod
    def from_dict(cls, data: Mapping) -> "ComparisonReport":
        return cls(
            application=data["application"],
            reports={k: SimReport.from_dict(v) for k, v in data["reports"].items()},
            reductions=data["reductions"],
        )

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["policy", "scheme", "num_approx_bits", "reduction_fraction", "avg_laser_power_mw", "laser_energy_pj", "epb_pj_per_bit"])
        for name, r in self.reports.items():
            writer.writerow([name, r.scheme, r.num_approx_bits, r.reduction_fraction, r.avg_laser_power_mw, r.laser_energy_pj, r.epb_pj_per_bit])
        return buf.getvalue()


_COMPARED = (Policy.LOSS_AWARE_OOK, Policy.LOSS_AWARE_PAM4, Policy.BASELINE)
_REFERENCES = (Policy.BASELINE, Policy.FIXED_PRIOR, Policy.TRUNCATION)


def compare_policies(
    trace: Iterable[Packet],
    topology: Iterable[LinkPath],
    params: LossParameters,
    application: Optional[str] = None,
    configs: Optional[Mapping[Policy, PolicyConfig]] = None,
    constants: EnergyConstants = EnergyConstants(),
) -> ComparisonReport:
    """Run all five policies on the same trace and tabulate savings."""
    if configs is None:
        if application is None:
            raise ConfigError("compare needs an application preset or explicit policy configs")
        configs = policy_configs(app_preset(application))
    else:
        configs = dict(configs)
        missing = [p for p in Policy if p not in configs]
        if missing:
            if application is None:
                raise ConfigError(f"no config for policies {[p.value for p in missing]}")
            defaults = policy_configs(app_preset(application))
            configs.update({p: defaults[p] for p in missing})
    trace = list(trace)
    topology = list(topology)
    reports = {}
    for policy in Policy:
        _, _, report = simulate_trace(trace, topology, params, configs[policy], constants)
        reports[policy.value] = report
    reductions: dict[str, dict[str, dict[str, Optional[float]]]] = {}
    for policy in _COMPARED:
        row = {}
        for ref in _REFERENCES:
            if policy is Policy.BASELINE and ref is not Policy.BASELINE:
                continue
            a, b = reports[ref.value], reports[policy.value]
            row[ref.value] = {
                "laser_power_pct": percent_reduction(a.avg_laser_power_mw, b.avg_laser_power_mw),
                "epb_pct": percent_reduction(a.epb_pj_per_bit, b.epb_pj_per_bit),
            }
        reductions[policy.value] = row
    return ComparisonReport(application, reports, reductions)


def read_report(path) -> dict:
    try:
        return json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise InputDataError(f"invalid JSON: {exc.msg}", path=str(path), line=exc.lineno) from None
