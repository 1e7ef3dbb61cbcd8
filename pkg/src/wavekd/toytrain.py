"""Desk-scale teacher/student distillation on a synthetic sharpening task.

Generators are single 2D cross-correlation kernels plus a bias; kernel size
is the capacity knob (teacher 5x5, student 3x3). A teacher is trained on the
task alone, frozen, and its outputs cached; students are then trained from
the same initialization under each objective:

    task_only       L1 to target
    task+naive_kd   L1 to target + alpha * image-level L1 to teacher
    task+wkd_high   L1 to target + alpha * wavelet L1 to teacher, detail bands
    task+wkd_low    L1 to target + alpha * wavelet L1 to teacher, LL band

Training is full-batch normalized subgradient descent: at step t the
parameters move a distance ``learning_rate / sqrt(t + 1)`` against the
subgradient. All constants of the synthetic task are made up for this demo.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field, replace

import numpy as np

from .bands import canonical_bands
from .distill import DistillConfig, wkd_gradient, wkd_loss
from .errors import InvalidArgumentError, TrainingDivergedError
from .metrics import band_distance
from .rng import SplitMix64
from .wavelet import as_image

OBJECTIVES = ("task_only", "task+naive_kd", "task+wkd_high", "task+wkd_low")

SHARPEN_AMOUNT = 1.5
SMOOTH_PASSES = 3
_BINOMIAL5 = np.array([1.0, 4.0, 6.0, 4.0, 1.0]) / 16.0

NOTES = (
    "synthetic task: inputs are uniform SplitMix64 noise smoothed 3x by a separable "
    "[1,4,6,4,1]/16 filter and min-max rescaled to [0,1]; targets are "
    "clamp(x + 1.5 * (x - box3x3(x)), 0, 1)",
    "generators: one KxK cross-correlation kernel plus bias, reflect padding; "
    "initialized to the identity kernel and zero bias",
    "optimizer: full-batch normalized subgradient descent, step learning_rate/sqrt(t+1)",
    "distances are pooled normalized L1 over the detail bands (high) or the coarsest LL band (low)",
    "all constants of this toy setup are invented for the demonstration",
)


@dataclass(frozen=True)
class ToyGenerator:
    kernel: np.ndarray
    bias: float = 0.0

    def __post_init__(self):
        k = np.array(self.kernel, dtype=np.float64)
        if k.ndim != 2 or k.shape[0] != k.shape[1] or k.shape[0] % 2 == 0:
            raise InvalidArgumentError(f"kernel must be square with odd size, got shape {k.shape}")
        if not (np.all(np.isfinite(k)) and math.isfinite(self.bias)):
            raise InvalidArgumentError("generator parameters must be finite")
        k.flags.writeable = False
        object.__setattr__(self, "kernel", k)
        object.__setattr__(self, "bias", float(self.bias))

    @property
    def size(self) -> int:
        return self.kernel.shape[0]

    @classmethod
    def identity(cls, size: int) -> "ToyGenerator":
        k = np.zeros((size, size))
        k[size // 2, size // 2] = 1.0
        return cls(k, 0.0)


@dataclass(frozen=True)
class ExperimentConfig:
    image_size: int = 32
    train_count: int = 64
    test_count: int = 16
    seeds: tuple = (0, 1, 2, 3, 4)
    steps: int = 500
    learning_rate: float = 0.05
    teacher_K: int = 5
    student_K: int = 3
    objectives: tuple = OBJECTIVES
    distill: DistillConfig = field(default_factory=DistillConfig)

    def __post_init__(self):
        object.__setattr__(self, "seeds", tuple(int(s) for s in self.seeds))
        object.__setattr__(self, "objectives", tuple(self.objectives))
        block = 1 << self.distill.levels
        if self.image_size < block or self.image_size % block:
            raise InvalidArgumentError(
                f"image_size {self.image_size} is not divisible by 2**{self.distill.levels}"
            )
        if self.steps < 1:
            raise InvalidArgumentError("steps must be >= 1")
        if not self.seeds:
            raise InvalidArgumentError("seeds must be non-empty")
        if self.train_count < 1 or self.test_count < 1:
            raise InvalidArgumentError("train_count and test_count must be >= 1")
        if not (math.isfinite(self.learning_rate) and self.learning_rate >= 0):
            raise InvalidArgumentError(f"learning_rate must be finite and >= 0, got {self.learning_rate}")
        for k in (self.teacher_K, self.student_K):
            if k not in (3, 5, 7):
                raise InvalidArgumentError(f"kernel sizes must be 3, 5 or 7, got {k}")
        unknown = [o for o in self.objectives if o not in OBJECTIVES]
        if unknown or not self.objectives:
            raise InvalidArgumentError(f"objectives must be a non-empty subset of {OBJECTIVES}, got {unknown}")

    def to_dict(self) -> dict:
        d = asdict(self)
        d["seeds"] = list(self.seeds)
        d["objectives"] = list(self.objectives)
        return d


# -- data ------------------------------------------------------------------------


def _reflect(x: np.ndarray, p: int) -> np.ndarray:
    if p == 0:
        return x
    return np.pad(x, ((0, 0), (p, p), (p, p)), mode="reflect")


def smooth_noise(noise: np.ndarray) -> np.ndarray:
    """Binomial smoothing then per-image min-max rescale to [0, 1].

    ``noise`` has shape (n, H, W). A constant image stays as it is.
    """
    x = np.asarray(noise, dtype=np.float64)
    for _ in range(SMOOTH_PASSES):
        for axis in (1, 2):
            pad = [(0, 0)] * 3
            pad[axis] = (2, 2)
            xp = np.pad(x, pad, mode="reflect")
            n = x.shape[axis]
            x = sum(c * np.take(xp, np.arange(i, i + n), axis=axis) for i, c in enumerate(_BINOMIAL5))
    lo = x.min(axis=(1, 2), keepdims=True)
    hi = x.max(axis=(1, 2), keepdims=True)
    span = hi - lo
    flat = span == 0
    return np.where(flat, np.clip(x, 0.0, 1.0), (x - lo) / np.where(flat, 1.0, span))


def unsharp_target(x: np.ndarray) -> np.ndarray:
    """clamp(x + 1.5 * (x - box3x3(x)), 0, 1) for an (n, H, W) stack."""
    h, w = x.shape[1:]
    xp = _reflect(x, 1)
    # x - box(x) written as -mean(neighbour - x) so flat regions give exactly 0
    delta = sum(xp[:, i:i + h, j:j + w] - x for i in range(3) for j in range(3)) / 9.0
    return np.clip(x - SHARPEN_AMOUNT * delta, 0.0, 1.0)


def synth_dataset(seed: int, config: ExperimentConfig):
    """Deterministic (inputs, targets), each (train+test, S, S, 1); train images first."""
    s = config.image_size
    n = config.train_count + config.test_count
    noise = SplitMix64(seed).random_array(n * s * s).reshape(n, s, s)
    x = smooth_noise(noise)
    return x[..., np.newaxis], unsharp_target(x)[..., np.newaxis]


# -- model -------------------------------------------------------------------------


def _shifts(x: np.ndarray, k: int):
    """Yield ((u, v), window) for every kernel tap over a padded (n, H, W) stack."""
    p = k // 2
    h, w = x.shape[1:]
    if p and (h <= p or w <= p):
        raise InvalidArgumentError(f"{h}x{w} image is too small for a {k}x{k} kernel")
    xp = _reflect(x, p)
    for u in range(k):
        for v in range(k):
            yield (u, v), xp[:, u:u + h, v:v + w]


def _im2col(x: np.ndarray, k: int) -> np.ndarray:
    """(n*H*W, k*k) matrix of reflect-padded neighbourhoods, taps in row-major order."""
    cols = np.empty((x.size, k * k))
    for (u, v), win in _shifts(x, k):
        cols[:, u * k + v] = win.ravel()
    return cols


def _forward_stack(gen: ToyGenerator, x: np.ndarray, cols: np.ndarray | None = None) -> np.ndarray:
    if cols is None:
        cols = _im2col(x, gen.size)
    return (cols @ gen.kernel.ravel() + gen.bias).reshape(x.shape)


def forward(gen: ToyGenerator, image) -> np.ndarray:
    """Cross-correlate a single-channel image with the kernel and add the bias."""
    x = as_image(image)
    if x.shape[2] != 1:
        raise InvalidArgumentError(f"toy generators take single-channel images, got {x.shape[2]} channels")
    return _forward_stack(gen, x[np.newaxis, :, :, 0])[0][..., np.newaxis]


def _stack(images) -> np.ndarray:
    a = np.asarray(images, dtype=np.float64)
    if a.ndim == 4:
        if a.shape[3] != 1:
            raise InvalidArgumentError("toy generators take single-channel images")
        a = a[..., 0]
    if a.ndim != 3:
        raise InvalidArgumentError(f"expected an (n, H, W[, 1]) stack, got shape {a.shape}")
    return a


@dataclass
class TrainBatch:
    """Inputs and targets as (n, H, W[, 1]) stacks; ``teacher`` holds cached teacher outputs."""

    inputs: np.ndarray
    targets: np.ndarray
    teacher: np.ndarray | None = None
    _cols: dict = field(default_factory=dict, init=False, repr=False)

    def columns(self, k: int) -> np.ndarray:
        if k not in self._cols:
            self._cols[k] = _im2col(self.inputs, k)
        return self._cols[k]

    def __post_init__(self):
        self.inputs = _stack(self.inputs)
        self.targets = _stack(self.targets)
        if self.teacher is not None:
            self.teacher = _stack(self.teacher)
        if self.inputs.shape != self.targets.shape:
            raise InvalidArgumentError(f"inputs {self.inputs.shape} and targets {self.targets.shape} differ")
        if self.teacher is not None and self.teacher.shape != self.inputs.shape:
            raise InvalidArgumentError("teacher outputs must match the inputs' shape")


def _distill_config(objective: str, config: ExperimentConfig) -> DistillConfig | None:
    if objective == "task+wkd_high":
        return replace(config.distill, selector="high_only")
    if objective == "task+wkd_low":
        return replace(config.distill, selector="low_only")
    return None


def objective_gradients(gen: ToyGenerator, batch: TrainBatch, objective: str, config: ExperimentConfig):
    """Losses and exact (sub)gradients w.r.t. kernel and bias.

    Returns ``(losses, grad_kernel, grad_bias)`` where ``losses`` has keys
    ``task``, ``distill`` and ``total``.
    """
    if objective not in config.objectives:
        raise InvalidArgumentError(f"objective {objective!r} is not enabled in this config")
    x = batch.inputs
    n = x.shape[0]
    cols = batch.columns(gen.size)
    y = _forward_stack(gen, x, cols)
    eps = config.distill.grad_epsilon
    alpha = config.distill.alpha

    r = y - batch.targets
    task = float(np.sum(np.abs(r))) / n
    upstream = np.where(np.abs(r) <= eps, 0.0, np.sign(r)) / n
    distill = 0.0
    if objective != "task_only":
        if batch.teacher is None:
            raise InvalidArgumentError(f"objective {objective!r} needs cached teacher outputs")
        if objective == "task+naive_kd":
            d = y - batch.teacher
            distill = float(np.sum(np.abs(d))) / n
            upstream = upstream + alpha * np.where(np.abs(d) <= eps, 0.0, np.sign(d)) / n
        else:
            dc = _distill_config(objective, config)
            ys, ts = y[..., np.newaxis], batch.teacher[..., np.newaxis]
            distill = wkd_loss(ys, ts, dc).value
            upstream = upstream + alpha * wkd_gradient(ys, ts, dc)[..., 0]

    # kernel gradient: correlate the padded input with the upstream gradient
    gk = (cols.T @ upstream.ravel()).reshape(gen.kernel.shape)
    gb = float(np.sum(upstream))
    losses = {"task": task, "distill": distill, "total": task + alpha * distill}
    return losses, gk, gb


def train_step(gen: ToyGenerator, batch: TrainBatch, objective: str, config: ExperimentConfig, step: int = 0):
    """One full-batch update. Returns ``(new_generator, losses)``; losses are pre-update."""
    losses, gk, gb = objective_gradients(gen, batch, objective, config)
    norm = math.sqrt(float(np.sum(gk * gk)) + gb * gb)
    if not (math.isfinite(norm) and math.isfinite(losses["total"])):
        raise TrainingDivergedError(step)
    if norm == 0.0 or config.learning_rate == 0.0:
        return gen, losses
    scale = config.learning_rate / math.sqrt(step + 1) / norm
    return ToyGenerator(gen.kernel - scale * gk, gen.bias - scale * gb), losses


def train(gen: ToyGenerator, batch: TrainBatch, objective: str, config: ExperimentConfig):
    curve = []
    for step in range(config.steps):
        gen, losses = train_step(gen, batch, objective, config, step)
        curve.append(losses["total"])
    return gen, curve


# -- experiment ---------------------------------------------------------------------


@dataclass(frozen=True)
class RunResult:
    seed: int
    role: str  # "teacher" or an objective name
    kernel_size: int
    final_task_l1: float
    high_to_teacher: float
    low_to_teacher: float
    high_to_truth: float
    low_to_truth: float
    loss_curve: tuple

    def to_dict(self) -> dict:
        d = asdict(self)
        d["loss_curve"] = list(self.loss_curve)
        return d


@dataclass(frozen=True)
class ExperimentReport:
    config: ExperimentConfig
    teachers: tuple  # RunResult per seed
    students: tuple  # RunResult per (seed, objective), seed-major

    def mean(self, objective: str, metric: str) -> float:
        vals = [getattr(r, metric) for r in self.students if r.role == objective]
        if not vals:
            raise KeyError(objective)
        return math.fsum(vals) / len(vals)

    def summary(self) -> dict:
        metrics = ("final_task_l1", "high_to_teacher", "low_to_teacher", "high_to_truth", "low_to_truth")
        out = {}
        for obj in self.config.objectives:
            out[obj] = {m: self.mean(obj, m) for m in metrics}
        return out

    def to_dict(self) -> dict:
        return {
            "config": self.config.to_dict(),
            "notes": list(NOTES),
            "teachers": [r.to_dict() for r in self.teachers],
            "students": [r.to_dict() for r in self.students],
            "summary": self.summary(),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2) + "\n"


def _evaluate(seed, role, gen, curve, test_x, test_y, teacher_out, levels):
    out = _forward_stack(gen, test_x)
    n = out.shape[0]
    bands = canonical_bands(levels)
    gen_imgs = out[..., np.newaxis]
    vs_teacher = band_distance(gen_imgs, teacher_out[..., np.newaxis], levels)
    vs_truth = band_distance(gen_imgs, test_y[..., np.newaxis], levels)
    return RunResult(
        seed=seed,
        role=role,
        kernel_size=gen.size,
        final_task_l1=float(np.sum(np.abs(out - test_y))) / n,
        high_to_teacher=vs_teacher.group_normalized(bands[1:]),
        low_to_teacher=vs_teacher.group_normalized(bands[:1]),
        high_to_truth=vs_truth.group_normalized(bands[1:]),
        low_to_truth=vs_truth.group_normalized(bands[:1]),
        loss_curve=tuple(curve),
    )


def run_experiment(config: ExperimentConfig | None = None) -> ExperimentReport:
    config = config or ExperimentConfig()
    levels = config.distill.levels
    teachers, students = [], []
    for seed in config.seeds:
        x, y = synth_dataset(seed, config)
        x, y = x[..., 0], y[..., 0]
        tr = slice(0, config.train_count)
        te = slice(config.train_count, None)

        teacher_cfg = replace(config, objectives=("task_only",))
        teacher, curve = train(ToyGenerator.identity(config.teacher_K), TrainBatch(x[tr], y[tr]), "task_only", teacher_cfg)
        t_train = _forward_stack(teacher, x[tr])
        t_test = _forward_stack(teacher, x[te])
        teachers.append(_evaluate(seed, "teacher", teacher, curve, x[te], y[te], t_test, levels))

        batch = TrainBatch(x[tr], y[tr], t_train)
        for obj in config.objectives:
            student, curve = train(ToyGenerator.identity(config.student_K), batch, obj, config)
            students.append(_evaluate(seed, obj, student, curve, x[te], y[te], t_test, levels))
    return ExperimentReport(config, tuple(teachers), tuple(students))
