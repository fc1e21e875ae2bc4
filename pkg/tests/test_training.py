import numpy as np
import pytest

from gramedit.errors import InputError, TrainingDivergedError
from gramedit.geometry import AnalyticShape, SamplingSpec, sample
from gramedit.model import init_model
from gramedit.training import TrainConfig, loss_and_grads, train


def fd_check(model, X, Y, step=1e-4, rtol=1e-4):
    """Central-difference oracle for every parameter tensor."""
    _, backbone_grads, head_grads = loss_and_grads(model, X, Y)

    def loss_of():
        return loss_and_grads(model, X, Y)[0]

    def check(arr, analytic):
        fd = np.zeros_like(arr)
        it = np.nditer(arr, flags=["multi_index"])
        for _ in it:
            idx = it.multi_index
            old = arr[idx]
            arr[idx] = old + step
            up = loss_of()
            arr[idx] = old - step
            down = loss_of()
            arr[idx] = old
            fd[idx] = (up - down) / (2 * step)
        denom = max(np.linalg.norm(fd), 1e-12)
        assert np.linalg.norm(analytic - fd) <= rtol * denom

    for (W, b), (dW, db) in zip(model.backbone, backbone_grads):
        check(W, dW)
        check(b, db)
    for head, (dw, dbias) in zip(model.heads, head_grads):
        check(head.weights, dw)
        bias_arr = np.array([head.bias])

        def bias_loss(v):
            head.bias = float(v)
            return loss_of()

        old = bias_arr[0]
        fd = (bias_loss(old + step) - bias_loss(old - step)) / (2 * step)
        head.bias = float(old)
        assert abs(dbias - fd) <= rtol * max(abs(fd), 1e-12)


def test_gradients_match_finite_differences():
    rng = np.random.default_rng(11)
    model = init_model(3, 8, 2, 30.0, 2, seed=11)
    X = rng.uniform(-1, 1, (16, 3))
    Y = rng.normal(size=(16, 2))
    fd_check(model, X, Y)


def test_training_deterministic():
    rng = np.random.default_rng(0)
    X = rng.uniform(-1, 1, (128, 3))
    Y = rng.normal(size=(128, 1))
    cfg = TrainConfig(epochs=10, batch_size=32, learning_rate=1e-3, seed=5)
    runs = []
    for _ in range(2):
        m = init_model(3, 8, 2, 30.0, 1, seed=3)
        trained, history = train(m, (X, Y), cfg)
        runs.append((trained, history))
    (a, ha), (b, hb) = runs
    assert ha == hb
    for (Wa, ba_), (Wb, bb_) in zip(a.backbone, b.backbone):
        assert np.array_equal(Wa, Wb)
        assert np.array_equal(ba_, bb_)
    assert np.array_equal(a.heads[0].weights, b.heads[0].weights)
    assert a.heads[0].bias == b.heads[0].bias


def test_symmetric_targets_give_matching_heads():
    shape = AnalyticShape("sphere")
    X = sample(SamplingSpec("volume", 1500, seed=2))
    base = shape.sdf(X)
    Y = np.stack([base, base], axis=1)
    m = init_model(3, 24, 2, 10.0, 2, seed=2)
    trained, history = train(
        m, (X, Y), TrainConfig(epochs=150, batch_size=512, learning_rate=2e-3, seed=4)
    )
    grid = sample(SamplingSpec("volume", 800, seed=9))
    f0 = trained.forward(0, grid)
    f1 = trained.forward(1, grid)
    # both heads see identical supervision; fields agree within training tolerance
    tol = 5 * np.sqrt(history[-1])
    assert np.sqrt(np.mean((f0 - f1) ** 2)) <= tol


def test_divergence_reports_epoch():
    rng = np.random.default_rng(0)
    m = init_model(3, 8, 2, 30.0, 1, seed=0)
    X = rng.uniform(-1, 1, (64, 3))
    Y = rng.normal(size=(64, 1))
    with np.errstate(all="ignore"):
        with pytest.raises(TrainingDivergedError) as err:
            train(m, (X, Y), TrainConfig(epochs=5, batch_size=64, learning_rate=1e200, seed=0))
    assert 0 <= err.value.epoch < 5


def test_nan_targets_diverge_at_epoch_zero():
    m = init_model(3, 8, 2, 30.0, 1, seed=0)
    X = np.zeros((4, 3))
    Y = np.full((4, 1), np.nan)
    with pytest.raises(TrainingDivergedError) as err:
        train(m, (X, Y), TrainConfig(epochs=3, batch_size=4, learning_rate=1e-3, seed=0))
    assert err.value.epoch == 0


def test_dataset_validation():
    m = init_model(3, 8, 2, 30.0, 2, seed=0)
    X = np.zeros((4, 3))
    with pytest.raises(InputError):
        train(m, (X, np.zeros((4, 1))), TrainConfig(epochs=1))  # 1 target, 2 heads
    with pytest.raises(InputError):
        train(m, (X, np.zeros((5, 2))), TrainConfig(epochs=1))  # row mismatch


def test_dataset_row_list_form():
    m = init_model(3, 4, 1, 10.0, 1, seed=0)
    rows = [(np.array([0.1, 0.2, 0.3]), 0.5), (np.array([0.0, 0.0, 0.0]), -0.5)]
    trained, history = train(
        m, rows, TrainConfig(epochs=2, batch_size=2, learning_rate=1e-3, seed=1)
    )
    assert len(history) == 2


def test_sphere_fit_reaches_heldout_mse(sphere_model):
    # desk-scale run: single-head sphere fit reaches held-out MSE <= 1e-5
    shape = AnalyticShape("sphere")
    held_out = sample(SamplingSpec("volume", 4000, seed=99))
    mse = float(np.mean((sphere_model.forward(0, held_out) - shape.sdf(held_out)) ** 2))
    assert mse <= 1e-5


def test_trained_sphere_center_value(sphere_model_w30):
    # the SDF cone apex at the origin is rounded by any smooth network; at
    # desk scale the omega0=30 fit lands within ~0.02 of the true -r there
    # (paper-scale budgets are needed to push this to 0.01)
    assert abs(sphere_model_w30.forward(0, np.zeros(3)) - (-0.5)) <= 0.03
