"""Memory, step, and wall-clock planning for fine-tuning runs.

Weights cost params x bytes-per-parameter at the configured precision.
Training adds gradients at the compute precision, Adam state at 8 bytes per
trainable parameter (two fp32 moments), and activations modeled as a single
calibrated multiple of batch x seq_len x hidden x layers.  Adapter methods
shrink the trainable set to the rank-decomposition matrices; a quantized base
pays a 10% dequantization working-set surcharge.  When a full fine-tune
overflows the device, optimizer state and then gradients spill to host memory
before the run is called infeasible.

All sizes are decimal bytes; reports use 1 GB = 10^9 bytes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from importlib import resources

GB = 1_000_000_000

PRECISION_BYTES = {"fp32": 4.0, "fp16": 2.0, "bf16": 2.0, "int8": 1.0, "nf4": 0.5}

METHODS = ("full", "lora", "qlora")
TASKS = ("text", "code")

# Scale on batch x seq_len x hidden x layers x compute-width for activation
# storage.  Fitted once against a measured 7B half-precision adapter run on an
# 80 GB device and held fixed; see data/calibration.txt for the time table.
ACTIVATION_FACTOR = 3.7

# Adam keeps two fp32 moments per trainable parameter.
OPTIMIZER_BYTES_PER_PARAM = 8.0

# Quantized bases dequantize blocks on the fly during forward/backward.
QLORA_DEQUANT_OVERHEAD = 0.10

# Narrow precisions still run matmuls in half precision, so gradients,
# adapters, and activations never drop below 2 bytes per element.
_MIN_COMPUTE_BYTES = 2.0


class EstimateError(ValueError):
    pass


@dataclass(frozen=True)
class ModelSpec:
    """Architecture facts the formulas need; target_modules lists the
    (d_out, d_in) shapes that receive adapters, per layer."""

    name: str
    params: int
    layers: int
    hidden_dim: int
    target_modules: tuple[tuple[int, int], ...] = ()

    def __post_init__(self) -> None:
        if self.params <= 0:
            raise EstimateError(f"params must be positive, got {self.params}")
        if self.layers <= 0 or self.hidden_dim <= 0:
            raise EstimateError(
                f"layers and hidden_dim must be positive, got {self.layers}/{self.hidden_dim}"
            )
        if not self.target_modules:
            square = (self.hidden_dim, self.hidden_dim)
            object.__setattr__(self, "target_modules", (square, square))
        for shape in self.target_modules:
            if shape[0] <= 0 or shape[1] <= 0:
                raise EstimateError(f"module shape must be positive, got {shape}")


# Attention query and value projections carry the adapters by default.
BUILT_IN_MODELS = {
    "7b": ModelSpec(name="7b", params=7_000_000_000, layers=32, hidden_dim=4096),
    "13b": ModelSpec(name="13b", params=13_000_000_000, layers=40, hidden_dim=5120),
    "70b": ModelSpec(name="70b", params=70_000_000_000, layers=80, hidden_dim=8192),
}


@dataclass(frozen=True)
class TuneConfig:
    method: str
    precision: str
    rank: int = 8
    alpha: int = 32
    batch: int = 1
    grad_accum: int = 1
    seq_len: int = 4096
    epochs: int = 1
    dataset_rows: int = 0
    task: str = "text"
    dataset_bytes: int | None = None

    def __post_init__(self) -> None:
        if self.method not in METHODS:
            raise EstimateError(f"method must be one of {METHODS}, got {self.method!r}")
        if self.precision not in PRECISION_BYTES:
            raise EstimateError(
                f"precision must be one of {tuple(PRECISION_BYTES)}, got {self.precision!r}"
            )
        if self.method == "qlora" and self.precision not in ("int8", "nf4"):
            raise EstimateError(
                f"qlora needs a quantized base (int8 or nf4), got {self.precision!r}"
            )
        if self.task not in TASKS:
            raise EstimateError(f"task must be one of {TASKS}, got {self.task!r}")
        for name in ("rank", "alpha", "batch", "grad_accum", "seq_len", "epochs"):
            if getattr(self, name) < 1:
                raise EstimateError(f"{name} must be >= 1, got {getattr(self, name)}")
        if self.dataset_rows < 0:
            raise EstimateError(f"dataset_rows must be >= 0, got {self.dataset_rows}")


@dataclass(frozen=True)
class HardwareProfile:
    gpu_bytes: int = 80 * GB
    cpu_bytes: int = 170 * GB
    name: str = "single-80GB"

    def __post_init__(self) -> None:
        if self.gpu_bytes <= 0 or self.cpu_bytes <= 0:
            raise EstimateError("hardware budgets must be positive")


@dataclass(frozen=True)
class ResourceEstimate:
    weight_bytes: int
    adapter_bytes: int
    gradient_bytes: int
    optimizer_bytes: int
    activation_bytes: int
    gpu_total_bytes: int
    cpu_total_bytes: int
    trainable_params: int
    feasible: bool
    steps: int = 0
    minutes: float | None = None
    notes: tuple[str, ...] = ()


def weight_memory(params: int, precision: str) -> float:
    """Bytes to hold the base weights; the pure width-times-count formula."""
    if precision not in PRECISION_BYTES:
        raise EstimateError(
            f"precision must be one of {tuple(PRECISION_BYTES)}, got {precision!r}"
        )
    return params * PRECISION_BYTES[precision]


def lora_trainable_params(spec: ModelSpec, rank: int) -> int:
    """Adapter parameter count: each target module gains a down-projection
    (rank x d_in) and an up-projection (d_out x rank)."""
    if rank < 1:
        raise EstimateError(f"rank must be >= 1, got {rank}")
    per_layer = sum(rank * (d_out + d_in) for d_out, d_in in spec.target_modules)
    return spec.layers * per_layer


def step_count(cfg: TuneConfig) -> int:
    """Optimizer steps: dataset passes over the effective batch."""
    if cfg.dataset_rows == 0:
        return 0
    effective = cfg.batch * cfg.grad_accum
    return math.ceil(cfg.dataset_rows / effective) * cfg.epochs


def activation_memory(spec: ModelSpec, cfg: TuneConfig) -> float:
    compute = max(PRECISION_BYTES[cfg.precision], _MIN_COMPUTE_BYTES)
    return ACTIVATION_FACTOR * cfg.batch * cfg.seq_len * spec.hidden_dim * spec.layers * compute


def training_memory(
    spec: ModelSpec, cfg: TuneConfig, hardware: HardwareProfile = HardwareProfile()
) -> ResourceEstimate:
    """Lay the training footprint out on the device, spilling what a full
    fine-tune may page to host memory, and judge feasibility.

    Infeasible configurations come back with feasible=False, never an error.
    """
    weights = weight_memory(spec.params, cfg.precision)
    if cfg.method == "qlora":
        weights *= 1.0 + QLORA_DEQUANT_OVERHEAD

    compute = max(PRECISION_BYTES[cfg.precision], _MIN_COMPUTE_BYTES)
    if cfg.method == "full":
        trainable = spec.params
        adapters = 0.0
        gradients = trainable * PRECISION_BYTES[cfg.precision]
    else:
        trainable = lora_trainable_params(spec, cfg.rank)
        adapters = trainable * compute
        gradients = trainable * compute
    optimizer = trainable * OPTIMIZER_BYTES_PER_PARAM
    activations = activation_memory(spec, cfg)

    gpu = {
        "weights": int(round(weights)),
        "adapters": int(round(adapters)),
        "gradients": int(round(gradients)),
        "optimizer": int(round(optimizer)),
        "activations": int(round(activations)),
    }
    cpu: dict[str, int] = {}
    notes: list[str] = []

    def spill(component: str, note: str) -> None:
        if sum(gpu.values()) > hardware.gpu_bytes:
            cpu[component] = gpu.pop(component)
            notes.append(note)

    if cfg.method == "full":
        spill("optimizer", "paged optimizer assumed")
        spill("gradients", "gradient offload assumed")

    gpu_total = sum(gpu.values())
    cpu_total = sum(cpu.values())
    return ResourceEstimate(
        weight_bytes=int(round(weights)),
        adapter_bytes=int(round(adapters)),
        gradient_bytes=int(round(gradients)),
        optimizer_bytes=int(round(optimizer)),
        activation_bytes=int(round(activations)),
        gpu_total_bytes=gpu_total,
        cpu_total_bytes=cpu_total,
        trainable_params=trainable,
        feasible=gpu_total <= hardware.gpu_bytes and cpu_total <= hardware.cpu_bytes,
        steps=step_count(cfg),
        notes=tuple(notes),
    )


@dataclass(frozen=True)
class CalibrationEntry:
    model_class: str
    precision: str
    seq_len: int
    sec_per_step: float
    source: str


@dataclass(frozen=True)
class CalibrationTable:
    entries: tuple[CalibrationEntry, ...]

    def seconds_per_step(self, spec: ModelSpec, precision: str, seq_len: int) -> float:
        """Measured rate when one exists, else a scaled neighbor.

        Exact (class, precision, seq_len) wins; then the nearest seq_len of
        the same class and precision, scaled linearly in sequence length;
        then the same precision and seq_len of another class with known
        parameter count, scaled by the parameter ratio.
        """
        for entry in self.entries:
            if (
                entry.model_class == spec.name
                and entry.precision == precision
                and entry.seq_len == seq_len
            ):
                return entry.sec_per_step

        same_class = [
            e for e in self.entries if e.model_class == spec.name and e.precision == precision
        ]
        if same_class:
            nearest = min(same_class, key=lambda e: (abs(e.seq_len - seq_len), -e.seq_len))
            return nearest.sec_per_step * seq_len / nearest.seq_len

        peers = [
            e
            for e in self.entries
            if e.precision == precision
            and e.seq_len == seq_len
            and e.model_class in BUILT_IN_MODELS
        ]
        if peers:
            nearest = min(peers, key=lambda e: BUILT_IN_MODELS[e.model_class].params)
            return nearest.sec_per_step * spec.params / BUILT_IN_MODELS[nearest.model_class].params

        available = ", ".join(sorted({e.model_class for e in self.entries})) or "none"
        raise EstimateError(
            f"no calibration for ({spec.name}, {precision}, seq {seq_len}); "
            f"available model classes: {available}"
        )


def parse_calibration(text: str, origin: str = "<calibration>") -> CalibrationTable:
    """Tab-separated records: model_class, precision, seq_len, sec_per_step,
    source description.  Blank lines and # comments are skipped."""
    entries = []
    for number, line in enumerate(text.splitlines(), start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        parts = [p.strip() for p in stripped.split("\t")]
        if len(parts) != 5:
            raise EstimateError(
                f"{origin}:{number}: expected 5 tab-separated fields, got {len(parts)}"
            )
        model_class, precision, seq_len, sec, source = parts
        if precision not in PRECISION_BYTES:
            raise EstimateError(f"{origin}:{number}: unknown precision {precision!r}")
        try:
            entries.append(
                CalibrationEntry(model_class, precision, int(seq_len), float(sec), source)
            )
        except ValueError as exc:
            raise EstimateError(f"{origin}:{number}: {exc}") from exc
    return CalibrationTable(entries=tuple(entries))


def load_calibration(path: str | None = None) -> CalibrationTable:
    if path is None:
        text = (resources.files("tunesmith") / "data" / "calibration.txt").read_text("utf-8")
        return parse_calibration(text, origin="calibration.txt")
    with open(path, encoding="utf-8") as fh:
        return parse_calibration(fh.read(), origin=path)


def time_estimate(spec: ModelSpec, cfg: TuneConfig, calibration: CalibrationTable) -> float:
    """Minutes of fine-tuning: steps times the calibrated seconds per step."""
    steps = step_count(cfg)
    if steps == 0:
        return 0.0
    rate = calibration.seconds_per_step(spec, cfg.precision, cfg.seq_len)
    return steps * rate / 60.0


def lint_config(
    spec: ModelSpec,
    cfg: TuneConfig,
    estimate: ResourceEstimate,
    hardware: HardwareProfile = HardwareProfile(),
) -> list[str]:
    """Advisory findings for configurations that tend to waste a run."""
    findings = []
    if (
        cfg.task == "text"
        and cfg.method in ("lora", "qlora")
        and cfg.rank > 8
        and cfg.alpha / cfg.rank < 4
    ):
        findings.append(
            f"rank {cfg.rank} with alpha {cfg.alpha} updates text knowledge weakly "
            f"(alpha/rank = {cfg.alpha / cfg.rank:g}); prefer rank <= 8 or alpha >= 4x rank"
        )
    if estimate.gpu_total_bytes > 0.95 * hardware.gpu_bytes:
        findings.append(
            f"estimated GPU use {estimate.gpu_total_bytes / GB:.1f} GB exceeds 95% of the "
            f"{hardware.gpu_bytes / GB:.0f} GB budget; leave headroom or reduce batch"
        )
    if cfg.grad_accum > 8:
        findings.append(
            f"gradient accumulation {cfg.grad_accum} stretches wall-clock time; "
            "above 8 the memory savings rarely pay off on one device"
        )
    dataset_bytes = cfg.dataset_bytes
    if dataset_bytes is None:
        # Rough size proxy: one window of seq_len tokens per row, ~4 bytes each.
        dataset_bytes = cfg.dataset_rows * cfg.seq_len * 4
    if cfg.method == "full" and dataset_bytes < 1_000_000:
        findings.append(
            f"full fine-tuning on ~{dataset_bytes / 1000:.0f} KB of data; "
            "adapter methods usually fit small corpora better"
        )
    return findings


def resource_estimate(
    spec: ModelSpec,
    cfg: TuneConfig,
    hardware: HardwareProfile = HardwareProfile(),
    calibration: CalibrationTable | None = None,
) -> ResourceEstimate:
    """Memory layout, step count, minutes (when calibration covers the
    configuration), and lint findings in one record."""
    estimate = training_memory(spec, cfg, hardware)
    minutes: float | None = None
    if calibration is not None:
        try:
            minutes = time_estimate(spec, cfg, calibration)
        except EstimateError:
            minutes = None
    findings = lint_config(spec, cfg, estimate, hardware)
    return replace(estimate, minutes=minutes, notes=estimate.notes + tuple(findings))
