import numpy as np
import pytest

from s2c.gaussians import (
    GaussianSet,
    Image,
    LearningRates,
    evaluation_loss,
    loss_gradients,
    optimize,
    render,
)
from s2c.geometry import Camera, Intrinsics, Pose

BIG_SCALE = np.log([900.0, 900.0, 900.0])


def make_camera(width=32, height=32):
    intr = Intrinsics(fx=24.0, fy=24.0, cx=width / 2.0, cy=height / 2.0,
                      width=width, height=height, near=0.1, far=10.0)
    return Camera(Pose.identity(), intr)


def random_set(rng, n=5):
    return GaussianSet(
        position=rng.uniform(-0.6, 0.6, (n, 3)) + np.array([0, 0, 2.5]),
        log_scale=rng.uniform(np.log(0.1), np.log(0.4), (n, 3)),
        rotation=(lambda q: q / np.linalg.norm(q, axis=1)[:, None])(rng.normal(size=(n, 4))),
        opacity_logit=rng.uniform(-0.5, 1.5, n),
        color=rng.uniform(0.1, 0.9, (n, 3)),
    )


def finite_difference_report(gset, views, grads, h=1e-4):
    """Central differences for every parameter, excluding those whose
    truncation/clip support changes between the two evaluations."""
    rel_errors = []
    excluded = 0
    params = [("position", gset.position), ("log_scale", gset.log_scale),
              ("rotation", gset.rotation), ("opacity_logit", gset.opacity_logit),
              ("color", gset.color)]
    for name, arr in params:
        it = np.nditer(arr, flags=["multi_index"])
        for _ in it:
            idx = it.multi_index
            orig = arr[idx]
            arr[idx] = orig + h
            lp, sp = evaluation_loss(gset, views, return_support=True)
            arr[idx] = orig - h
            lm, sm = evaluation_loss(gset, views, return_support=True)
            arr[idx] = orig
            if sp != sm:
                excluded += 1
                continue
            fd = (lp - lm) / (2 * h)
            an = grads[name][idx]
            rel_errors.append(abs(fd - an) / max(abs(fd), abs(an), 1e-8))
    return np.array(rel_errors), excluded


def test_gradients_match_finite_differences():
    rng = np.random.default_rng(3)
    gset = random_set(rng, n=5)
    target = Image(rng.uniform(0, 1, (32, 32, 3)).astype(np.float32))
    views = [(make_camera(), target)]
    _, grads = loss_gradients(gset, views)
    rel, excluded = finite_difference_report(gset, views, grads)
    total = rel.size + excluded
    assert rel.size >= 0.9 * total
    assert np.mean(rel < 1e-3) >= 0.99


def test_gradients_multi_view_accumulation():
    rng = np.random.default_rng(4)
    gset = random_set(rng, n=3)
    cams = [make_camera(), Camera(Pose.from_unnormalized([1, 0.05, 0, 0], [0.2, 0, 0]),
                                  make_camera().intrinsics)]
    views = [(c, Image(rng.uniform(0, 1, (32, 32, 3)).astype(np.float32))) for c in cams]
    loss, grads = loss_gradients(gset, views)
    per_view = [loss_gradients(gset, [v]) for v in views]
    assert abs(loss - np.mean([l for l, _ in per_view])) <= 1e-12
    for key in grads:
        want = (per_view[0][1][key] + per_view[1][1][key]) / 2
        assert np.allclose(grads[key], want, atol=1e-12)


def test_optimize_fixed_point_at_own_rendering():
    rng = np.random.default_rng(5)
    gset = random_set(rng, n=4)
    cam = make_camera()
    target = render(gset, cam).color
    before = {p: getattr(gset, p).copy() for p in
              ("position", "log_scale", "rotation", "opacity_logit", "color")}
    out = optimize(gset, [(cam, target)], steps=10)
    for p, arr in before.items():
        assert np.abs(getattr(out, p) - arr).max() < 1e-6


def test_optimize_color_convergence():
    # single splat; only its color differs from the target rendering
    cam = make_camera()
    src = GaussianSet([[0, 0, 2.0]], [BIG_SCALE], [[1, 0, 0, 0]], [40.0], [[0.9, 0.1, 0.4]])
    tgt_set = GaussianSet([[0, 0, 2.0]], [BIG_SCALE], [[1, 0, 0, 0]], [40.0], [[0.0, 1.0, 0.0]])
    target = render(tgt_set, cam).color
    out = optimize(src, [(cam, target)], steps=500)
    assert np.abs(out.color[0] - np.array([0.0, 1.0, 0.0])).max() <= 0.02


def test_optimize_loss_non_increasing_start_to_end():
    rng = np.random.default_rng(6)
    gset = random_set(rng, n=8)
    cam = make_camera()
    perturbed = gset.copy()
    perturbed.position += rng.normal(0, 0.05, perturbed.position.shape)
    perturbed.color = np.clip(perturbed.color + rng.normal(0, 0.1, (8, 3)), 0, 1)
    target = render(gset, cam).color
    views = [(cam, target)]
    start = evaluation_loss(perturbed, views)
    out = optimize(perturbed, views, steps=40)
    end = evaluation_loss(out, views)
    assert end <= start


def test_optimize_restores_quaternion_norm():
    rng = np.random.default_rng(7)
    gset = random_set(rng, n=4)
    cam = make_camera()
    target = Image(rng.uniform(0, 1, (32, 32, 3)).astype(np.float32))
    out = optimize(gset, [(cam, target)], steps=5)
    assert np.allclose(np.linalg.norm(out.rotation, axis=1), 1.0, atol=1e-12)
    assert out.color.min() >= 0.0 and out.color.max() <= 1.0


def test_optimize_validates_arguments():
    rng = np.random.default_rng(8)
    gset = random_set(rng)
    with pytest.raises(ValueError):
        optimize(gset, [], steps=5)
    with pytest.raises(ValueError):
        optimize(gset, [(make_camera(), Image.zeros(32, 32))], steps=0)


def test_learning_rates_override():
    rng = np.random.default_rng(9)
    gset = random_set(rng, n=3)
    cam = make_camera()
    target = Image(rng.uniform(0, 1, (32, 32, 3)).astype(np.float32))
    frozen = LearningRates(position=0.0, log_scale=0.0, rotation=0.0,
                           opacity_logit=0.0, color=0.0)
    out = optimize(gset, [(cam, target)], steps=3, lr=frozen)
    assert np.array_equal(out.position, gset.position)
    assert np.array_equal(out.color, gset.color)
