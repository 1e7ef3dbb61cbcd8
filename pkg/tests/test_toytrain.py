import json
from dataclasses import replace

import numpy as np
import pytest

from oracles import brute_correlate, brute_pyramid_channels
from wavekd.distill import DistillConfig
from wavekd.errors import InvalidArgumentError, TrainingDivergedError
from wavekd.toytrain import (
    OBJECTIVES,
    ExperimentConfig,
    ToyGenerator,
    TrainBatch,
    forward,
    objective_gradients,
    run_experiment,
    smooth_noise,
    synth_dataset,
    train_step,
    unsharp_target,
)

SMALL = ExperimentConfig(image_size=8, train_count=3, test_count=2, seeds=(1,), steps=20)


def test_synth_deterministic_and_bounded():
    a = synth_dataset(3, SMALL)
    b = synth_dataset(3, SMALL)
    assert np.array_equal(a[0], b[0]) and np.array_equal(a[1], b[1])
    assert a[0].shape == (5, 8, 8, 1)
    for arr in a:
        assert arr.min() >= 0.0 and arr.max() <= 1.0
    assert not np.array_equal(a[0], synth_dataset(4, SMALL)[0])


def test_inputs_are_rescaled_to_unit_range():
    x, _ = synth_dataset(0, ExperimentConfig())
    assert np.allclose(x.min(axis=(1, 2, 3)), 0.0)
    assert np.allclose(x.max(axis=(1, 2, 3)), 1.0)


def test_constant_input_is_a_fixed_point():
    flat = smooth_noise(np.full((2, 8, 8), 0.3))
    assert np.all(flat == 0.3)
    assert np.array_equal(unsharp_target(flat), flat)


def test_unsharp_matches_definition():
    x = np.random.default_rng(0).random((1, 6, 6))
    box = brute_correlate(x[0], np.full((3, 3), 1 / 9))
    expect = np.clip(x[0] + 1.5 * (x[0] - box), 0, 1)
    np.testing.assert_allclose(unsharp_target(x)[0], expect, atol=1e-14)


def test_forward_identity_and_constant():
    x = np.random.default_rng(1).random((6, 7, 1))
    np.testing.assert_array_equal(forward(ToyGenerator.identity(3), x), x)
    out = forward(ToyGenerator(np.zeros((5, 5)), 0.7), x)
    assert out.shape == x.shape
    assert np.all(out == 0.7)


def test_forward_average_on_impulse():
    k = ToyGenerator(np.full((3, 3), 1 / 9))
    x = np.zeros((6, 6, 1))
    x[2, 3, 0] = 1.0
    out = forward(k, x)[:, :, 0]
    expect = np.zeros((6, 6))
    expect[1:4, 2:5] = 1 / 9
    np.testing.assert_allclose(out, expect, atol=1e-15)
    corner = np.zeros((6, 6, 1))
    corner[0, 0, 0] = 1.0
    np.testing.assert_allclose(forward(k, corner)[:, :, 0], brute_correlate(corner[:, :, 0], k.kernel), atol=1e-15)


@pytest.mark.parametrize("size", [3, 5, 7])
def test_forward_matches_brute_force(size):
    rng = np.random.default_rng(size)
    g = ToyGenerator(rng.normal(size=(size, size)), 0.1)
    x = rng.random((9, 8, 1))
    np.testing.assert_allclose(forward(g, x)[:, :, 0], brute_correlate(x[:, :, 0], g.kernel, 0.1), atol=1e-12)


def test_forward_rejects_multichannel():
    with pytest.raises(InvalidArgumentError):
        forward(ToyGenerator.identity(3), np.zeros((4, 4, 3)))


def test_generator_validation():
    with pytest.raises(InvalidArgumentError):
        ToyGenerator(np.zeros((2, 2)))
    with pytest.raises(InvalidArgumentError):
        ToyGenerator(np.zeros((3, 3)), float("nan"))


def test_config_validation():
    with pytest.raises(InvalidArgumentError):
        ExperimentConfig(image_size=12)
    with pytest.raises(InvalidArgumentError):
        ExperimentConfig(steps=0)
    with pytest.raises(InvalidArgumentError):
        ExperimentConfig(seeds=())
    with pytest.raises(InvalidArgumentError):
        ExperimentConfig(objectives=("task+gan",))
    with pytest.raises(InvalidArgumentError):
        ExperimentConfig(student_K=4)


def _batch(seed=0, n=2, size=8, teacher_kernel=None):
    cfg = replace(SMALL, image_size=size, train_count=n, test_count=1)
    x, y = synth_dataset(seed, cfg)
    x, y = x[:n, :, :, 0], y[:n, :, :, 0]
    teacher = None
    if teacher_kernel is not None:
        teacher = forward_stack(teacher_kernel, x)
    return TrainBatch(x, y, teacher)


def forward_stack(gen, x):
    return np.stack([forward(gen, xi[:, :, None])[:, :, 0] for xi in x])


def test_zero_learning_rate_keeps_generator():
    g = ToyGenerator.identity(3)
    cfg = replace(SMALL, learning_rate=0.0)
    g2, losses = train_step(g, _batch(), "task_only", cfg)
    assert np.array_equal(g2.kernel, g.kernel) and g2.bias == g.bias
    assert losses["total"] == losses["task"] > 0


def test_objective_must_be_enabled():
    cfg = replace(SMALL, objectives=("task_only",))
    with pytest.raises(InvalidArgumentError):
        train_step(ToyGenerator.identity(3), _batch(), "task+wkd_high", cfg)


def test_distill_objective_needs_teacher():
    with pytest.raises(InvalidArgumentError):
        train_step(ToyGenerator.identity(3), _batch(), "task+naive_kd", SMALL)


def test_single_pixel_kernel_gradient():
    rng = np.random.default_rng(2)
    x = rng.random((1, 2, 2))
    y = rng.random((1, 2, 2))
    batch = TrainBatch(x, y)
    g = ToyGenerator(np.array([[0.3]]), 0.05)
    _, gk, gb = objective_gradients(g, batch, "task_only", SMALL)

    def loss(k, b):
        return np.abs(k * x + b - y).sum()

    h = 1e-6
    fd_k = (loss(0.3 + h, 0.05) - loss(0.3 - h, 0.05)) / (2 * h)
    fd_b = (loss(0.3, 0.05 + h) - loss(0.3, 0.05 - h)) / (2 * h)
    assert gk[0, 0] == pytest.approx(fd_k, abs=1e-6)
    assert gb == pytest.approx(fd_b, abs=1e-6)


def test_gradient_vanishes_at_optimum():
    teacher = ToyGenerator(np.random.default_rng(3).normal(size=(3, 3)), 0.2)
    b = _batch(teacher_kernel=teacher)
    at_opt = TrainBatch(b.inputs, b.teacher, b.teacher)
    _, gk, gb = objective_gradients(teacher, at_opt, "task_only", SMALL)
    assert np.sqrt(np.sum(gk**2) + gb**2) < 1e-8


def kink_margin(gen, batch, direction, objective, cfg):
    """Smallest |residual| / |residual change per unit step| over every L1 term."""
    dk, db = direction
    x = batch.inputs
    y = forward_stack(gen, x)
    dy = forward_stack(ToyGenerator(dk, db), x) - forward_stack(ToyGenerator(np.zeros_like(dk), 0.0), x)
    terms = [(y - batch.targets, dy)]
    if objective == "task+naive_kd":
        terms.append((y - batch.teacher, dy))
    if objective in ("task+wkd_high", "task+wkd_low"):
        for i in range(len(x)):
            pr = brute_pyramid_channels(y[i] - batch.teacher[i], cfg.distill.levels)
            pd = brute_pyramid_channels(dy[i], cfg.distill.levels)
            for k in pr:
                terms.append((pr[k], pd[k]))
    margin = np.inf
    for r, d in terms:
        with np.errstate(divide="ignore"):
            margin = min(margin, float(np.min(np.abs(r) / np.abs(d))))
    return margin


def total_loss(gen, batch, objective, cfg):
    return objective_gradients(gen, batch, objective, cfg)[0]["total"]


def check_parameter_gradient(rng, objective, cfg, h=1e-6):
    """Directional finite-difference check at a random state away from kinks."""
    teacher = ToyGenerator(ToyGenerator.identity(5).kernel + 0.2 * rng.normal(size=(5, 5)), 0.1 * rng.normal())
    batch = _batch(int(rng.integers(1 << 30)), teacher_kernel=teacher)
    while True:
        gen = ToyGenerator(ToyGenerator.identity(3).kernel + 0.3 * rng.normal(size=(3, 3)), 0.1 * rng.normal())
        dk = rng.normal(size=(3, 3))
        db = float(rng.normal())
        norm = np.sqrt(np.sum(dk**2) + db**2)
        dk, db = dk / norm, db / norm
        if kink_margin(gen, batch, (dk, db), objective, cfg) > 10 * h:
            break
    _, gk, gb = objective_gradients(gen, batch, objective, cfg)
    an = float(np.sum(gk * dk) + gb * db)
    plus = total_loss(ToyGenerator(gen.kernel + h * dk, gen.bias + h * db), batch, objective, cfg)
    minus = total_loss(ToyGenerator(gen.kernel - h * dk, gen.bias - h * db), batch, objective, cfg)
    fd = (plus - minus) / (2 * h)
    return an, fd


@pytest.mark.parametrize("objective", OBJECTIVES)
def test_parameter_gradients_finite_difference(objective):
    rng = np.random.default_rng(sum(map(ord, objective)))
    cfg = replace(SMALL, distill=DistillConfig(alpha=0.7))
    for _ in range(5):
        an, fd = check_parameter_gradient(rng, objective, cfg)
        assert an == pytest.approx(fd, rel=1e-5)


def test_divergence_is_reported_with_step():
    g = ToyGenerator(np.full((3, 3), 1e308), 0.0)
    with np.errstate(all="ignore"):
        with pytest.raises(TrainingDivergedError) as e:
            train_step(g, _batch(), "task_only", SMALL, step=17)
    assert e.value.step == 17


def test_same_kernel_size_reproduces_teacher():
    cfg = ExperimentConfig(
        image_size=16, train_count=6, test_count=3, seeds=(3,), steps=40, teacher_K=5, student_K=5, objectives=("task_only",)
    )
    r = run_experiment(cfg)
    assert r.students[0].final_task_l1 == pytest.approx(r.teachers[0].final_task_l1, abs=1e-9)
    assert r.students[0].loss_curve == r.teachers[0].loss_curve


def test_report_shape_and_sanity():
    cfg = ExperimentConfig(image_size=16, train_count=6, test_count=3, seeds=(0, 1), steps=60)
    r = run_experiment(cfg)
    assert [(s.seed, s.role) for s in r.students] == [(sd, o) for sd in (0, 1) for o in OBJECTIVES]
    for run in r.students + r.teachers:
        assert len(run.loss_curve) == 60
        assert run.loss_curve[-1] <= run.loss_curve[0]
        vals = [run.final_task_l1, run.high_to_teacher, run.low_to_teacher, run.high_to_truth, run.low_to_truth]
        assert all(np.isfinite(v) for v in vals + list(run.loss_curve))
    d = json.loads(r.to_json())
    assert set(d) == {"config", "notes", "teachers", "students", "summary"}
    assert set(d["summary"]) == set(OBJECTIVES)


def test_run_is_deterministic():
    cfg = ExperimentConfig(seeds=(7,), steps=100)
    assert run_experiment(cfg).to_json() == run_experiment(cfg).to_json()
