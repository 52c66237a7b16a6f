"""Device losses, link geometry and per-source loss lookup tables.

All losses are in dB, powers in dBm or mW as the field name says.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field, fields, replace
from importlib import resources
from pathlib import Path
from types import MappingProxyType
from typing import Iterable, Mapping

from .exceptions import ConfigError, InputDataError, RoutingError

REFERENCE_LAMBDAS = 64


@dataclass(frozen=True)
class LossParameters:
    """Photonic device coefficients. Defaults are the published device values."""

    detector_sensitivity_dbm: float = -23.4
    mr_through_loss_db: float = 0.02
    mr_drop_loss_db: float = 0.7
    wg_propagation_loss_db_per_cm: float = 0.25
    wg_bend_loss_db: float = 0.01
    thermo_optic_tuning_uw_per_nm: float = 240.0
    # modulator/detector insertion terms not itemised above
    extra_insertion_loss_db: float = 0.0

    def __post_init__(self):
        for f in fields(self):
            if f.name == "detector_sensitivity_dbm":
                continue
            value = getattr(self, f.name)
            if not math.isfinite(value) or value < 0:
                raise ConfigError(f"{f.name} must be a finite non-negative number, got {value!r}")
        if not math.isfinite(self.detector_sensitivity_dbm):
            raise ConfigError("detector_sensitivity_dbm must be finite")

    @classmethod
    def from_mapping(cls, data: Mapping) -> "LossParameters":
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ConfigError(f"unknown loss parameter keys: {sorted(unknown)}")
        try:
            return cls(**{k: float(v) for k, v in data.items()})
        except (TypeError, ValueError) as exc:
            if isinstance(exc, ConfigError):
                raise
            raise ConfigError(f"invalid loss parameter value: {exc}") from None

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class LinkPath:
    """One source-to-destination route along an SWMR waveguide."""

    source: str
    dest: str
    length_cm: float = 0.0
    bends: int = 0
    through_mrs: int = 0
    tuned_mrs: int = 0
    drift_nm: float = 1.0

    def __post_init__(self):
        if self.length_cm < 0 or self.drift_nm < 0:
            raise ConfigError(f"negative geometry on path {self.source}->{self.dest}")
        for name in ("bends", "through_mrs", "tuned_mrs"):
            value = getattr(self, name)
            if int(value) != value or value < 0:
                raise ConfigError(f"{name} must be a non-negative integer on path {self.source}->{self.dest}")

    def scaled_to(self, n_lambda: int, reference: int = REFERENCE_LAMBDAS) -> "LinkPath":
        """Same route with ring banks sized for ``n_lambda`` wavelengths.

        Ring counts in a descriptor are given for ``reference`` wavelengths
        (one ring per wavelength per bank).
        """
        if n_lambda == reference:
            return self
        return replace(
            self,
            through_mrs=self.through_mrs * n_lambda // reference,
            tuned_mrs=self.tuned_mrs * n_lambda // reference,
        )


def path_loss(path: LinkPath, params: LossParameters) -> float:
    return (
        params.wg_propagation_loss_db_per_cm * path.length_cm
        + params.wg_bend_loss_db * path.bends
        + params.mr_through_loss_db * path.through_mrs
        + params.mr_drop_loss_db
        + params.extra_insertion_loss_db
    )


def tuning_power(path: LinkPath, params: LossParameters) -> float:
    """Thermal tuning power of the rings tuned for this path, in mW."""
    return path.tuned_mrs * path.drift_nm * params.thermo_optic_tuning_uw_per_nm / 1000.0


@dataclass(frozen=True)
class LossTable:
    """Offline-computed cumulative loss from one source GWI to each destination."""

    source: str
    entries: Mapping[str, float] = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "entries", MappingProxyType(dict(self.entries)))

    def __getitem__(self, dest: str) -> float:
        try:
            return self.entries[dest]
        except KeyError:
            raise RoutingError(f"no photonic path from {self.source} to {dest}") from None

    def __contains__(self, dest) -> bool:
        return dest in self.entries

    def __len__(self) -> int:
        return len(self.entries)

    def worst_case_loss(self) -> float:
        if not self.entries:
            raise RoutingError(f"loss table for {self.source} is empty")
        return max(self.entries.values())

    def to_dict(self) -> dict:
        return dict(self.entries)


def build_loss_table(topology: Iterable[LinkPath], params: LossParameters, source: str) -> LossTable:
    entries: dict[str, float] = {}
    for path in topology:
        if path.source != source:
            continue
        if path.dest in entries:
            raise ConfigError(f"duplicate path {source}->{path.dest}")
        entries[path.dest] = path_loss(path, params)
    return LossTable(source, entries)


def build_all_loss_tables(topology: Iterable[LinkPath], params: LossParameters) -> dict[str, LossTable]:
    topology = list(topology)
    sources = sorted({p.source for p in topology})
    return {s: build_loss_table(topology, params, s) for s in sources}


def paths_by_route(topology: Iterable[LinkPath]) -> dict[tuple[str, str], LinkPath]:
    routes: dict[tuple[str, str], LinkPath] = {}
    for path in topology:
        key = (path.source, path.dest)
        if key in routes:
            raise ConfigError(f"duplicate path {path.source}->{path.dest}")
        routes[key] = path
    return routes


# -- default topology ---------------------------------------------------------

CLOS_CLUSTERS = 8
CLOS_HOP_LENGTH_CM = 0.5
CLOS_BENDS_PER_HOP = 2
CLOS_BANKS_PER_INTERMEDIATE_CLUSTER = 2  # one per concentrator


def cluster_id(i: int) -> str:
    return f"c{i}"


def clos_topology(
    clusters: int = CLOS_CLUSTERS,
    n_lambda: int = REFERENCE_LAMBDAS,
    hop_length_cm: float = CLOS_HOP_LENGTH_CM,
    bends_per_hop: int = CLOS_BENDS_PER_HOP,
    drift_nm: float = 1.0,
) -> list[LinkPath]:
    """Placeholder geometry for the inter-cluster SWMR waveguides of a Clos PNoC.

    Each source cluster owns a waveguide that visits the other clusters in
    ring order. A destination ``d`` hops away sees ``d`` spans of
    ``hop_length_cm`` with ``bends_per_hop`` bends each, passes the source's
    own modulator bank plus two ring banks per intermediate cluster, and
    tunes the source modulator bank and the destination detector bank.
    These numbers are illustrative, not measured.
    """
    paths = []
    for s in range(clusters):
        for hop in range(1, clusters):
            paths.append(
                LinkPath(
                    source=cluster_id(s),
                    dest=cluster_id((s + hop) % clusters),
                    length_cm=hop_length_cm * hop,
                    bends=bends_per_hop * hop,
                    through_mrs=n_lambda * (1 + CLOS_BANKS_PER_INTERMEDIATE_CLUSTER * (hop - 1)),
                    tuned_mrs=2 * n_lambda,
                    drift_nm=drift_nm,
                )
            )
    return paths


def default_topology_path() -> Path:
    return Path(str(resources.files("photonapprox") / "data" / "clos8.json"))


def default_params_path() -> Path:
    return Path(str(resources.files("photonapprox") / "data" / "loss_params.json"))


# -- file formats -------------------------------------------------------------

_RECORD_KEYS = ("source", "dest", "length_cm", "bends", "through_mrs", "tuned_mrs", "drift_nm")


def _path_from_record(rec: Mapping, where: str) -> LinkPath:
    missing = {"source", "dest"} - set(rec)
    if missing:
        raise InputDataError(f"{where}: missing keys {sorted(missing)}")
    unknown = set(rec) - set(_RECORD_KEYS)
    if unknown:
        raise InputDataError(f"{where}: unknown keys {sorted(unknown)}")
    try:
        return LinkPath(
            source=str(rec["source"]),
            dest=str(rec["dest"]),
            length_cm=float(rec.get("length_cm", 0.0)),
            bends=int(rec.get("bends", 0)),
            through_mrs=int(rec.get("through_mrs", 0)),
            tuned_mrs=int(rec.get("tuned_mrs", 0)),
            drift_nm=float(rec.get("drift_nm", 1.0)),
        )
    except ConfigError as exc:
        raise InputDataError(f"{where}: {exc}") from None
    except (TypeError, ValueError) as exc:
        raise InputDataError(f"{where}: {exc}") from None


def parse_topology(text: str, name: str = "<topology>") -> list[LinkPath]:
    """Parse a JSON document or whitespace-separated line records.

    Line records list the fields in the order
    ``source dest length_cm bends through_mrs tuned_mrs [drift_nm]``;
    ``#`` starts a comment.
    """
    stripped = text.lstrip()
    if stripped.startswith("{") or stripped.startswith("["):
        try:
            doc = json.loads(text)
        except json.JSONDecodeError as exc:
            raise InputDataError(f"invalid JSON: {exc.msg}", path=name, line=exc.lineno) from None
        records = doc.get("paths", []) if isinstance(doc, dict) else doc
        if not isinstance(records, list):
            raise InputDataError("'paths' must be a list", path=name)
        return [_path_from_record(r, f"{name}: path #{i}") for i, r in enumerate(records)]

    paths = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if not 6 <= len(parts) <= 7:
            raise InputDataError(f"expected 6 or 7 fields, got {len(parts)}", path=name, line=lineno)
        paths.append(_path_from_record(dict(zip(_RECORD_KEYS, parts)), f"{name}:{lineno}"))
    return paths


def load_topology(path) -> list[LinkPath]:
    path = Path(path)
    return parse_topology(path.read_text(), name=str(path))


def dump_topology(paths: Iterable[LinkPath]) -> str:
    return json.dumps({"paths": [asdict(p) for p in paths]}, indent=1) + "\n"


def load_loss_parameters(path) -> LossParameters:
    path = Path(path)
    try:
        data = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}:{exc.lineno}: invalid JSON: {exc.msg}") from None
    if not isinstance(data, dict):
        raise ConfigError(f"{path}: loss parameters must be a flat JSON object")
    return LossParameters.from_mapping(data)
