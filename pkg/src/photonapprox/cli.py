"""Command-line entry point.

    photonapprox budget    loss tables and laser budgets for OOK and PAM4
    photonapprox simulate  replay a trace under one policy
    photonapprox sweep     quality surface over (bits, power reduction)
    photonapprox compare   all five policies on one trace
    photonapprox gentrace  synthetic JSONL trace

Exit codes: 0 success, 1 configuration error, 2 input-data error.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

from . import photonics
from .exceptions import ConfigError, InputDataError, RoutingError
from .laser import LaserBudget, msb_power_per_lambda
from .photonics import LossParameters, build_all_loss_tables, load_loss_parameters, load_topology
from .quality import (
    DEFAULT_BITS,
    DEFAULT_REDUCTIONS,
    DEFAULT_THRESHOLD,
    demo_input,
    load_kernel_input,
    select_config,
    sensitivity_sweep,
)
from .signaling import SCHEMES, scheme_by_name
from .simcore import (
    APP_PRESETS,
    EnergyConstants,
    Policy,
    PolicyConfig,
    compare_policies,
    laser_savings_model,
    policy_config_for_app,
    read_trace,
    simulate_trace,
    write_trace,
)
from .workload import generate_trace, profile_float_fraction

log = logging.getLogger("photonapprox")

EXIT_OK, EXIT_CONFIG, EXIT_INPUT = 0, 1, 2


@dataclass
class ExperimentConfig:
    topology_path: Optional[str] = None
    loss_params_path: Optional[str] = None
    scheme: str = "ook"
    multiplier_applies_to_full: bool = True
    policy: str = "baseline"
    app: Optional[str] = None
    num_approx_bits: Optional[int] = None
    reduction_fraction: Optional[float] = None
    trace_path: Optional[str] = None
    out_dir: str = "out"
    seed: int = 0
    threshold_pct: float = DEFAULT_THRESHOLD
    sweep: dict = field(default_factory=dict)
    gentrace: dict = field(default_factory=dict)
    energy: dict = field(default_factory=dict)

    @classmethod
    def load(cls, path) -> "ExperimentConfig":
        path = Path(path)
        try:
            data = json.loads(path.read_text())
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc.strerror}") from None
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}:{exc.lineno}: invalid JSON: {exc.msg}") from None
        if not isinstance(data, dict):
            raise ConfigError(f"{path}: config must be a JSON object")
        unknown = set(data) - set(cls.__dataclass_fields__)
        if unknown:
            raise ConfigError(f"{path}: unknown config keys {sorted(unknown)}")
        cfg = cls(**data)
        # relative file references resolve against the config's directory
        for key in ("topology_path", "loss_params_path", "trace_path"):
            value = getattr(cfg, key)
            if value and not Path(value).is_absolute():
                setattr(cfg, key, str(path.parent / value))
        if cfg.sweep.get("input_path") and not Path(cfg.sweep["input_path"]).is_absolute():
            cfg.sweep["input_path"] = str(path.parent / cfg.sweep["input_path"])
        return cfg

    def topology(self):
        path = self.topology_path or photonics.default_topology_path()
        try:
            return load_topology(path)
        except OSError as exc:
            raise ConfigError(f"cannot read topology {path}: {exc.strerror}") from None
        except InputDataError as exc:
            raise ConfigError(str(exc)) from None

    def params(self) -> LossParameters:
        path = self.loss_params_path or photonics.default_params_path()
        try:
            return load_loss_parameters(path)
        except OSError as exc:
            raise ConfigError(f"cannot read loss parameters {path}: {exc.strerror}") from None

    def constants(self) -> EnergyConstants:
        return EnergyConstants.from_mapping(self.energy)

    def policy_config(self) -> PolicyConfig:
        name = self.policy.lower()
        if name == "loss-aware":
            name = f"loss-aware-{self.scheme.lower()}"
        policy = Policy.parse(name)
        if self.app is not None:
            base = policy_config_for_app(policy, self.app)
        else:
            base = PolicyConfig(policy, 0, 0.0)
        bits = base.num_approx_bits if self.num_approx_bits is None else self.num_approx_bits
        red = base.reduction_fraction if self.reduction_fraction is None else self.reduction_fraction
        needs_explicit = policy not in (Policy.BASELINE, Policy.FIXED_PRIOR)
        if self.app is None and needs_explicit and self.num_approx_bits is None:
            raise ConfigError(f"policy {policy.value} needs --app or num_approx_bits in the config")
        return PolicyConfig(policy, bits, red)


def _write_json(path: Path, data) -> None:
    path.write_text(json.dumps(data, indent=2) + "\n")


def _out_dir(cfg: ExperimentConfig) -> Path:
    out = Path(cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _load_trace(cfg: ExperimentConfig):
    if not cfg.trace_path:
        raise ConfigError("no trace given (use --trace or trace_path)")
    try:
        return read_trace(cfg.trace_path)
    except OSError as exc:
        raise InputDataError(f"cannot read trace: {exc.strerror}", path=cfg.trace_path) from None


# -- commands ------------------------------------------------------------------


def cmd_budget(cfg: ExperimentConfig, out=None) -> dict:
    out = out or sys.stdout
    topology = cfg.topology()
    params = cfg.params()
    result = {}
    for name in sorted(SCHEMES):
        scheme = scheme_by_name(name, cfg.multiplier_applies_to_full)
        paths = [p.scaled_to(scheme.n_lambda) for p in topology]
        tables = build_all_loss_tables(paths, params)
        per_source = {}
        for src, table in tables.items():
            if not len(table):
                continue
            budget = LaserBudget.sized_for(table, params, scheme)
            per_source[src] = {
                "loss_db": table.to_dict(),
                "worst_case_loss_db": table.worst_case_loss(),
                "required_total_dbm": budget.full_power_total_dbm,
                "required_per_lambda_dbm": budget.full_power_per_lambda_dbm,
                "commanded_per_lambda_dbm": msb_power_per_lambda(budget, scheme),
            }
        result[name] = {"n_lambda": scheme.n_lambda, "sources": per_source}

    for name, entry in result.items():
        print(f"[{name}] N_lambda={entry['n_lambda']}", file=out)
        for src, row in entry["sources"].items():
            print(
                f"  {src}: worst loss {row['worst_case_loss_db']:.3f} dB, "
                f"P_total {row['required_total_dbm']:.4f} dBm, P_lambda {row['required_per_lambda_dbm']:.4f} dBm",
                file=out,
            )
            for dst, loss in sorted(row["loss_db"].items(), key=lambda kv: (kv[1], kv[0])):
                print(f"    -> {dst}: {loss:.3f} dB", file=out)
    if cfg.out_dir:
        _write_json(_out_dir(cfg) / "budget.json", result)
    return result


def cmd_simulate(cfg: ExperimentConfig, out=None):
    out = out or sys.stdout
    topology = cfg.topology()
    params = cfg.params()
    policy = cfg.policy_config()
    scheme = scheme_by_name(policy.policy.scheme.name, cfg.multiplier_applies_to_full)
    trace = _load_trace(cfg)
    mutated, ledger, report = simulate_trace(trace, topology, params, policy, cfg.constants(), scheme=scheme)
    d = _out_dir(cfg)
    write_trace(mutated, d / "trace.jsonl")
    _write_json(d / "ledger.json", ledger.to_dict())
    (d / "packets.csv").write_text(ledger.records_csv())
    _write_json(d / "report.json", report.to_dict())
    rows = report.to_dict()
    flat = {k: v for k, v in rows.items() if k != "mode_histogram"}
    flat.update({f"mode_{k}": v for k, v in report.mode_histogram.items()})
    (d / "report.csv").write_text(",".join(flat) + "\n" + ",".join(_csv_cell(v) for v in flat.values()) + "\n")
    print(
        f"{report.policy} ({report.scheme}): {report.packets} packets, "
        f"avg laser {report.avg_laser_power_mw} mW, EPB {report.epb_pj_per_bit} pJ/bit, modes {report.mode_histogram}",
        file=out,
    )
    return report


def _csv_cell(v) -> str:
    return "" if v is None else repr(v) if isinstance(v, float) else str(v)


def cmd_sweep(cfg: ExperimentConfig, out=None):
    out = out or sys.stdout
    sweep = dict(cfg.sweep)
    kernel = sweep.get("kernel", "identity")
    if sweep.get("input_path"):
        data = load_kernel_input(sweep["input_path"])
    else:
        data = demo_input(kernel, cfg.seed)
    bits = sweep.get("bits", DEFAULT_BITS)
    if "reductions_pct" in sweep:
        reductions = [p / 100.0 for p in sweep["reductions_pct"]]
    else:
        reductions = DEFAULT_REDUCTIONS
    scheme = scheme_by_name(cfg.scheme, cfg.multiplier_applies_to_full)
    surface = sensitivity_sweep(
        kernel,
        data,
        bits=bits,
        reductions=reductions,
        scheme=scheme,
        topology=cfg.topology(),
        params=cfg.params(),
        source=sweep.get("source", photonics.cluster_id(0)),
        n_jobs=int(sweep.get("n_jobs", 1)),
    )
    selected = select_config(surface, cfg.threshold_pct, laser_savings_model(scheme), application=cfg.app or kernel)
    d = _out_dir(cfg)
    (d / "surface.csv").write_text(surface.to_csv())
    _write_json(d / "selected.json", selected.to_dict())
    print(
        f"{kernel}: selected {selected.num_approx_bits} bits at {selected.reduction_fraction * 100:g}% reduction "
        f"(PE {selected.predicted_pe:.4g}%)",
        file=out,
    )
    return surface, selected


def cmd_compare(cfg: ExperimentConfig, out=None):
    out = out or sys.stdout
    if cfg.app is None:
        raise ConfigError("compare needs --app (one of %s)" % ", ".join(sorted(APP_PRESETS)))
    trace = _load_trace(cfg)
    report = compare_policies(trace, cfg.topology(), cfg.params(), application=cfg.app, constants=cfg.constants())
    d = _out_dir(cfg)
    _write_json(d / "compare.json", report.to_dict())
    (d / "compare.csv").write_text(report.to_csv())
    print(f"{'policy':<16} {'laser mW':>12} {'EPB pJ/bit':>12}", file=out)
    for name, r in report.reports.items():
        print(f"{name:<16} {r.avg_laser_power_mw or 0:>12.5f} {r.epb_pj_per_bit or 0:>12.5f}", file=out)
    for name, refs in report.reductions.items():
        for ref, red in refs.items():
            print(f"{name} vs {ref}: laser {red['laser_power_pct']:.2f}%  EPB {red['epb_pct']:.2f}%", file=out)
    return report


def cmd_gentrace(cfg: ExperimentConfig, out=None):
    out = out or sys.stdout
    g = dict(cfg.gentrace)
    if "profile" in g and "float_fraction" not in g:
        g["float_fraction"] = profile_float_fraction(g.pop("profile"))
    g.pop("profile", None)
    try:
        packets = generate_trace(
            cfg.topology(),
            count=int(g.get("count", 1000)),
            float_fraction=float(g.get("float_fraction", 0.5)),
            seed=cfg.seed,
            destinations=g.get("destinations", "uniform"),
            words_per_packet=int(g.get("words_per_packet", 8)),
            control_fraction=float(g.get("control_fraction", 0.0)),
            params=cfg.params(),
        )
    except ValueError as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(str(exc)) from None
    path = _out_dir(cfg) / "trace.jsonl"
    write_trace(packets, path)
    print(f"wrote {len(packets)} packets to {path}", file=out)
    return path


COMMANDS = {
    "budget": cmd_budget,
    "simulate": cmd_simulate,
    "sweep": cmd_sweep,
    "compare": cmd_compare,
    "gentrace": cmd_gentrace,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="photonapprox", description=__doc__.split("\n\n")[0])
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", help="JSON experiment config")
        p.add_argument("--out", help="output directory")
        p.add_argument("--seed", type=int)
        p.add_argument("--scheme", choices=sorted(SCHEMES))
        p.add_argument("--policy", help="baseline, truncation, fixed-prior, loss-aware-ook, loss-aware-pam4 or loss-aware")
        p.add_argument("--app", help="application preset: " + ", ".join(sorted(APP_PRESETS)))
        p.add_argument("--threshold", type=float, help="error threshold in percent")
        p.add_argument("--topology", help="topology descriptor (JSON or line records)")
        p.add_argument("--params", help="loss parameter JSON")
        p.add_argument("--trace", help="JSONL trace")
        p.add_argument("--bits", type=int, help="number of approximated LSBs")
        p.add_argument("--reduction", type=float, help="LSB laser power reduction fraction in [0, 1]")
        if name == "sweep":
            p.add_argument("--kernel", help="identity, dot, fft, sobel or stream")
            p.add_argument("--input", help="kernel input (PGM/PNG image, raw float64, CSV)")
        if name == "gentrace":
            p.add_argument("--count", type=int)
            p.add_argument("--float-fraction", type=float)
            p.add_argument("--destinations", help="uniform, round-robin, farthest or nearest")
            p.add_argument("--words", type=int, help="words per packet")
    return parser


def resolve_config(args) -> ExperimentConfig:
    cfg = ExperimentConfig.load(args.config) if args.config else ExperimentConfig()
    overrides = {
        "out_dir": args.out,
        "seed": args.seed,
        "scheme": args.scheme,
        "policy": args.policy,
        "app": args.app,
        "threshold_pct": args.threshold,
        "topology_path": args.topology,
        "loss_params_path": args.params,
        "trace_path": args.trace,
        "num_approx_bits": args.bits,
        "reduction_fraction": args.reduction,
    }
    for key, value in overrides.items():
        if value is not None:
            setattr(cfg, key, value)
    if getattr(args, "kernel", None):
        cfg.sweep["kernel"] = args.kernel
    if getattr(args, "input", None):
        cfg.sweep["input_path"] = args.input
    for flag, key in (("count", "count"), ("float_fraction", "float_fraction"), ("destinations", "destinations"), ("words", "words_per_packet")):
        value = getattr(args, flag, None)
        if value is not None:
            cfg.gentrace[key] = value
    return cfg


def main(argv=None) -> int:
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s: %(message)s")
    args = build_parser().parse_args(argv)
    try:
        cfg = resolve_config(args)
        COMMANDS[args.command](cfg)
    except InputDataError as exc:
        log.error("%s", exc)
        return EXIT_INPUT
    except RoutingError as exc:
        log.error("%s", exc.args[0] if exc.args else exc)
        return EXIT_INPUT
    except (ConfigError, ValueError, TypeError) as exc:
        log.error("%s", exc)
        return EXIT_CONFIG
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
