"""Application output quality under approximate transfers.

Small numerical kernels move their floating-point operands across a
simulated photonic link and report percentage output error against an
exact run. A sweep over (approximated bits, power reduction) produces an
error surface from which the most energy-saving feasible setting is picked.
"""

from __future__ import annotations

import csv
import io
import math
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Optional, Sequence

import numpy as np

from .exceptions import ConfigError, InputDataError
from .fpapprox import as_words
from .laser import LaserBudget, TransmitPlan
from .photonics import LinkPath, LossParameters, build_loss_table, clos_topology, cluster_id
from .signaling import OOK, SignalingScheme, transmit_words

DEFAULT_BITS = (4, 8, 12, 16, 20, 24, 28, 32)
DEFAULT_REDUCTIONS = tuple(i / 10 for i in range(11))
DEFAULT_THRESHOLD = 10.0
MAGNITUDE_FLOOR = 1e-12

MAX_FFT_LENGTH = 4096
MAX_IMAGE_SIDE = 512
MAX_VECTOR_LENGTH = 1 << 20


# decimal digits a double carries faithfully (DBL_DIG)
PE_DIGITS = 15


def _round_pe(value: float) -> float:
    # drops last-ulp binary noise: 9.999999999999998 reads back as 10.0
    return float(f"{value:.{PE_DIGITS}g}") if math.isfinite(value) else value


def percent_error(exact: float, approx: float) -> float:
    """|approx - exact| / |exact| * 100, with 0/0 read as no error.

    The result is rounded to 15 significant digits.
    """
    if approx == exact:
        return 0.0
    if exact == 0:
        return math.inf
    diff = abs(approx - exact)
    if math.isinf(diff) and math.isfinite(exact) and math.isfinite(approx):
        # the difference overflowed; the ratio form stays in range
        return _round_pe(abs(approx / exact - 1.0) * 100.0)
    return _round_pe(diff / abs(exact) * 100.0)


def aggregate_percent_error(exact, approx, floor: float = MAGNITUDE_FLOOR) -> float:
    """Mean elementwise percentage error over array outputs.

    Elements whose exact magnitude is below ``floor`` are compared against
    ``floor`` instead, so near-zero outputs do not blow up the mean.
    """
    exact = np.asarray(exact)
    approx = np.asarray(approx)
    if exact.shape != approx.shape:
        raise ValueError(f"shape mismatch {exact.shape} vs {approx.shape}")
    if exact.size == 0:
        return 0.0
    diff = np.abs(approx - exact).ravel()
    scale = np.maximum(np.abs(exact).ravel(), floor)
    return _round_pe(float(np.mean(diff / scale) * 100.0))


# -- link channel -------------------------------------------------------------


def exact_channel(values):
    return np.array(values, copy=True)


@dataclass
class LinkChannel:
    """Carries float arrays from one source GWI across its SWMR waveguide.

    Element ``i`` of the flattened data goes to the ``i % n``-th destination
    in loss order, so a payload sees the full spread of path losses.
    """

    num_approx_bits: int = 0
    reduction_fraction: float = 0.0
    scheme: SignalingScheme = OOK
    params: LossParameters = field(default_factory=LossParameters)
    topology: Optional[Sequence[LinkPath]] = None
    source: str = cluster_id(0)
    loss_aware: bool = True

    def __post_init__(self):
        topology = clos_topology() if self.topology is None else self.topology
        paths = [p.scaled_to(self.scheme.n_lambda) for p in topology]
        table = build_loss_table(paths, self.params, self.source)
        if not len(table):
            raise ConfigError(f"source {self.source} has no destinations")
        budget = LaserBudget.sized_for(table, self.params, self.scheme, self.reduction_fraction)
        self.destinations = sorted(table.entries, key=lambda d: (table[d], d))
        self.losses = [table[d] for d in self.destinations]
        self.plans = []
        for loss in self.losses:
            if self.loss_aware:
                plan = TransmitPlan.loss_aware(loss, budget, self.scheme, self.params, self.num_approx_bits)
            else:
                plan = TransmitPlan.reduced(budget, self.scheme, self.num_approx_bits)
            self.plans.append(plan)

    def transmit_flat(self, words: np.ndarray) -> np.ndarray:
        out = np.empty_like(words)
        n = len(self.destinations)
        for i, (plan, loss) in enumerate(zip(self.plans, self.losses)):
            out[i::n] = transmit_words(words[i::n], plan, loss, self.scheme, self.params)
        return out

    def __call__(self, values):
        arr = np.asarray(values)
        if np.iscomplexobj(arr):
            pairs = np.ascontiguousarray(arr, dtype=np.complex128).view(np.float64)
            return self(pairs).view(np.complex128).reshape(arr.shape)
        words = as_words(arr).ravel()
        return self.transmit_flat(words).view(np.float64).reshape(arr.shape)


# -- kernels ------------------------------------------------------------------


def _identity(data, channel):
    return channel(data)


def _dot_product(data, channel):
    a = channel(data[0])
    b = channel(data[1])
    return np.array([np.dot(a, b)])


def _fft1d(data, channel):
    spectrum = np.fft.fft(channel(data))
    return channel(spectrum)


_SOBEL_X = np.array([[-1.0, 0.0, 1.0], [-2.0, 0.0, 2.0], [-1.0, 0.0, 1.0]])


def sobel_magnitude(image: np.ndarray) -> np.ndarray:
    padded = np.pad(image, 1, mode="edge")
    h, w = image.shape
    gx = np.zeros_like(image, dtype=np.float64)
    gy = np.zeros_like(image, dtype=np.float64)
    for di in range(3):
        for dj in range(3):
            window = padded[di : di + h, dj : dj + w]
            gx += _SOBEL_X[di, dj] * window
            gy += _SOBEL_X[dj, di] * window
    return np.hypot(gx, gy)


def _sobel(data, channel):
    return sobel_magnitude(channel(data))


STREAM_CHUNK = 64


def _stream_mean(data, channel):
    total = np.zeros(data.shape[1])
    for start in range(0, data.shape[0], STREAM_CHUNK):
        chunk = channel(data[start : start + STREAM_CHUNK])
        total = total + chunk.sum(axis=0)
    return channel(total / data.shape[0])


def _check_finite(arr, name):
    if not np.all(np.isfinite(arr)):
        raise InputDataError(f"{name}: input contains NaN or infinity")


def _validate_identity(data):
    arr = np.asarray(data, dtype=np.float64)
    if arr.ndim not in (1, 2) or arr.size == 0 or arr.size > MAX_VECTOR_LENGTH:
        raise InputDataError("identity: expected a non-empty 1-D or 2-D array")
    _check_finite(arr, "identity")
    return arr


def _validate_dot(data):
    arr = np.asarray(data, dtype=np.float64)
    if arr.ndim != 2 or arr.shape[0] != 2 or arr.shape[1] == 0 or arr.shape[1] > MAX_VECTOR_LENGTH:
        raise InputDataError("dot: expected two equal-length vectors (shape (2, n))")
    _check_finite(arr, "dot")
    return arr


def _validate_fft(data):
    arr = np.asarray(data, dtype=np.float64)
    if arr.ndim != 1 or not 0 < arr.size <= MAX_FFT_LENGTH:
        raise InputDataError(f"fft: expected a 1-D signal of length 1..{MAX_FFT_LENGTH}")
    _check_finite(arr, "fft")
    return arr


def _validate_image(data):
    arr = np.asarray(data, dtype=np.float64)
    if arr.ndim != 2 or min(arr.shape) < 3 or max(arr.shape) > MAX_IMAGE_SIDE:
        raise InputDataError(f"sobel: expected a 2-D image between 3x3 and {MAX_IMAGE_SIDE}x{MAX_IMAGE_SIDE}")
    _check_finite(arr, "sobel")
    return arr


def _validate_stream(data):
    arr = np.asarray(data, dtype=np.float64)
    if arr.ndim == 1:
        arr = arr[:, None]
    if arr.ndim != 2 or arr.shape[0] == 0 or arr.size > MAX_VECTOR_LENGTH:
        raise InputDataError("stream: expected a non-empty (points, dims) array")
    _check_finite(arr, "stream")
    return arr


@dataclass(frozen=True)
class Kernel:
    name: str
    run: Callable
    validate: Callable


KERNELS = {
    k.name: k
    for k in (
        Kernel("identity", _identity, _validate_identity),
        Kernel("dot", _dot_product, _validate_dot),
        Kernel("fft", _fft1d, _validate_fft),
        Kernel("sobel", _sobel, _validate_image),
        Kernel("stream", _stream_mean, _validate_stream),
    )
}


def get_kernel(name: str) -> Kernel:
    try:
        return KERNELS[name.lower()]
    except KeyError:
        raise ConfigError(f"unknown kernel {name!r}; expected one of {sorted(KERNELS)}") from None


@dataclass
class QualityReport:
    kernel: str
    exact_output: np.ndarray = field(repr=False)
    approx_output: np.ndarray = field(repr=False)
    percent_error: float

    def summary(self) -> dict:
        return {
            "kernel": self.kernel,
            "output_size": int(self.exact_output.size),
            "exact_mean_abs": float(np.mean(np.abs(self.exact_output))),
            "approx_mean_abs": float(np.mean(np.abs(self.approx_output))),
            "percent_error": self.percent_error,
        }


def run_kernel(kernel, data, channel=exact_channel, exact_output=None) -> QualityReport:
    kernel = get_kernel(kernel) if isinstance(kernel, str) else kernel
    data = kernel.validate(data)
    exact = kernel.run(data, exact_channel) if exact_output is None else exact_output
    approx = kernel.run(data, channel)
    return QualityReport(kernel.name, exact, approx, aggregate_percent_error(exact, approx))


# -- inputs -------------------------------------------------------------------


def reference_image(size: int = 128) -> np.ndarray:
    """Deterministic integer-valued greyscale test scene (ramp, disc, squares)."""
    y, x = np.mgrid[0:size, 0:size]
    img = (x * 96 // size + y * 32 // size).astype(np.float64)
    c = size / 2
    img[(x - c) ** 2 + (y - c) ** 2 < (size / 4) ** 2] += 80
    q = size // 8
    img[q : 2 * q, q : 3 * q] = 220
    img[5 * q : 7 * q, 5 * q : 6 * q] = 10
    return img


def demo_input(kernel: str, seed: int = 0) -> np.ndarray:
    rng = np.random.default_rng(seed)
    name = get_kernel(kernel).name
    if name == "sobel":
        return reference_image()
    if name == "fft":
        t = np.arange(1024)
        return np.sin(2 * np.pi * 5 * t / 1024) + 0.5 * np.cos(2 * np.pi * 37 * t / 1024) + 0.1 * rng.standard_normal(1024)
    if name == "dot":
        return rng.uniform(0.5, 2.0, size=(2, 4096))
    if name == "stream":
        return rng.normal(loc=3.0, scale=1.0, size=(4096, 4))
    return rng.uniform(-100.0, 100.0, size=4096)


def load_kernel_input(path) -> np.ndarray:
    """Read a PGM/PNG image, a raw little-endian float64 file or a CSV table."""
    path = Path(path)
    suffix = path.suffix.lower()
    try:
        if suffix in (".pgm", ".png", ".pnm"):
            from PIL import Image

            with Image.open(path) as im:
                return np.asarray(im.convert("F"), dtype=np.float64)
        if suffix in (".bin", ".f64", ".raw"):
            raw = path.read_bytes()
            if len(raw) % 8:
                raise InputDataError("raw float64 file size is not a multiple of 8", path=str(path))
            return np.frombuffer(raw, dtype="<f8").astype(np.float64)
        arr = np.loadtxt(path, delimiter=",", dtype=np.float64, ndmin=1)
    except InputDataError:
        raise
    except (OSError, ValueError) as exc:
        raise InputDataError(str(exc), path=str(path)) from None
    if arr.ndim == 2 and 1 in arr.shape:
        arr = arr.ravel()
    return arr


# -- sweep and selection ------------------------------------------------------


@dataclass(frozen=True)
class SweepPoint:
    num_lsbs: int
    reduction_fraction: float
    percent_error: float


@dataclass
class SweepSurface:
    kernel: str
    bits: tuple[int, ...]
    reductions: tuple[float, ...]
    pe: np.ndarray  # shape (len(bits), len(reductions))

    def __post_init__(self):
        self.pe = np.asarray(self.pe, dtype=np.float64)
        if self.pe.shape != (len(self.bits), len(self.reductions)):
            raise ValueError("surface grid does not match its axes")

    def points(self) -> list[SweepPoint]:
        return [
            SweepPoint(k, r, float(self.pe[i, j]))
            for i, k in enumerate(self.bits)
            for j, r in enumerate(self.reductions)
        ]

    def at(self, num_lsbs: int, reduction_fraction: float) -> float:
        return float(self.pe[self.bits.index(num_lsbs), self.reductions.index(reduction_fraction)])

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["num_lsbs", "reduction_pct", "percent_error"])
        for p in self.points():
            writer.writerow([p.num_lsbs, _pct(p.reduction_fraction), repr(p.percent_error)])
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str, kernel: str = "") -> "SweepSurface":
        rows = list(csv.DictReader(io.StringIO(text)))
        if not rows:
            raise InputDataError("empty surface CSV")
        try:
            pts = [(int(r["num_lsbs"]), float(r["reduction_pct"]) / 100.0, float(r["percent_error"])) for r in rows]
        except (KeyError, ValueError) as exc:
            raise InputDataError(f"bad surface CSV: {exc}") from None
        bits = tuple(sorted({p[0] for p in pts}))
        reductions = tuple(sorted({p[1] for p in pts}))
        pe = np.full((len(bits), len(reductions)), np.nan)
        for k, r, e in pts:
            pe[bits.index(k), reductions.index(r)] = e
        if np.isnan(pe).any():
            raise InputDataError("surface CSV does not cover the full grid")
        return cls(kernel, bits, reductions, pe)


def _pct(fraction: float) -> str:
    return repr(round(fraction * 100.0, 9))


def sensitivity_sweep(
    kernel,
    data,
    bits: Sequence[int] = DEFAULT_BITS,
    reductions: Sequence[float] = DEFAULT_REDUCTIONS,
    scheme: SignalingScheme = OOK,
    topology: Optional[Sequence[LinkPath]] = None,
    params: Optional[LossParameters] = None,
    source: str = cluster_id(0),
    n_jobs: int = 1,
) -> SweepSurface:
    kernel = get_kernel(kernel) if isinstance(kernel, str) else kernel
    data = kernel.validate(data)
    params = params or LossParameters()
    topology = clos_topology() if topology is None else list(topology)
    bits = tuple(int(k) for k in bits)
    reductions = tuple(float(r) for r in reductions)
    if not bits or not reductions:
        raise ConfigError("sweep grid must be non-empty")
    exact = kernel.run(data, exact_channel)

    def point(kr):
        k, r = kr
        channel = LinkChannel(k, r, scheme, params, topology, source)
        return run_kernel(kernel, data, channel, exact_output=exact).percent_error

    grid = [(k, r) for k in bits for r in reductions]
    if n_jobs > 1:
        with ThreadPoolExecutor(max_workers=n_jobs) as pool:
            values = list(pool.map(point, grid))
    else:
        values = [point(kr) for kr in grid]
    pe = np.array(values).reshape(len(bits), len(reductions))
    return SweepSurface(kernel.name, bits, reductions, pe)


@dataclass(frozen=True)
class SelectedConfig:
    application: str
    num_approx_bits: int
    reduction_fraction: float
    predicted_pe: float
    estimated_savings_mw: float = 0.0

    def to_dict(self) -> dict:
        return {
            "application": self.application,
            "num_approx_bits": self.num_approx_bits,
            "reduction_fraction": self.reduction_fraction,
            "predicted_pe": self.predicted_pe,
            "estimated_savings_mw": self.estimated_savings_mw,
        }


def select_config(
    surface: SweepSurface,
    threshold: float = DEFAULT_THRESHOLD,
    savings: Optional[Callable[[int, float], float]] = None,
    application: Optional[str] = None,
) -> SelectedConfig:
    """Feasible grid point (PE < threshold) with the largest laser savings.

    Ties go to more approximated bits, then to the deeper power reduction.
    """
    if savings is None:
        from .simcore import laser_savings_model

        savings = laser_savings_model()
    name = application or surface.kernel
    points = surface.points()
    if not points:
        raise ConfigError("empty sweep surface")
    feasible = [p for p in points if p.percent_error < threshold]
    if not feasible:
        warnings.warn(f"no sweep point of {name} stays under {threshold}% error; using exact transfers", stacklevel=2)
        return SelectedConfig(name, 0, 0.0, 0.0, 0.0)

    def key(p):
        # rounding keeps dB<->mW noise from breaking exact ties
        return (round(savings(p.num_lsbs, p.reduction_fraction), 9), p.num_lsbs, p.reduction_fraction)

    best = max(feasible, key=key)
    return SelectedConfig(name, best.num_lsbs, best.reduction_fraction, best.percent_error, key(best)[0])
