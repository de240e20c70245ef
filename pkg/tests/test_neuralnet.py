#!/usr/bin/env python3
"""
Tests for the dense MLP engine: forward pass, losses, Adam, gradients and checkpoints
"""
import json
import math
import sys
from decimal import Decimal, getcontext
from pathlib import Path

import numpy as np
import pytest

sys.path.append(str(Path(__file__).parent.parent))

from src.exceptions import DomainError, FormatError, ShapeError, TrainingError
from src.neuralnet.checkpoint import checkpoint_bytes, load_checkpoint, models_from_bytes, save_checkpoint
from src.neuralnet.gradcheck import gradient_check
from src.neuralnet.losses import LossKind, loss_ce, loss_mse, output_gradient
from src.neuralnet.mlp import Activation, DenseLayer, MlpModel
from src.neuralnet.optimizer import AdamState
from src.neuralnet.training import backward_and_step, evaluate_loss


def naive_forward(model, x):
    """Loop-based reference forward pass"""
    out = []
    for row in x:
        a = [float(v) for v in row]
        for layer in model.layers:
            z = []
            for j in range(layer.fan_out):
                total = float(layer.bias[j])
                for i in range(layer.fan_in):
                    total += a[i] * float(layer.weight[i, j])
                z.append(total)
            if layer.activation == Activation.RELU:
                a = [max(v, 0.0) for v in z]
            elif layer.activation == Activation.TANH:
                a = [math.tanh(v) for v in z]
            elif layer.activation == Activation.SOFTMAX:
                top = max(z)
                exps = [math.exp(v - top) for v in z]
                a = [e / sum(exps) for e in exps]
            else:
                a = z
        out.append(a)
    return np.array(out)


class TestForward:
    """Test the forward pass"""

    def test_identity_layer(self):
        """W = I, b = 0 with identity activation returns the input"""
        model = MlpModel([DenseLayer(np.eye(3), np.zeros(3), Activation.IDENTITY)])
        x = np.array([[1.0, -2.0, 3.5], [0.0, 0.25, -7.0]])
        np.testing.assert_array_equal(model.forward(x), x)

    def test_softmax_of_equal_logits(self):
        """Softmax over logits [0, 0] is [0.5, 0.5]"""
        model = MlpModel([DenseLayer(np.zeros((2, 2)), np.zeros(2), Activation.SOFTMAX)])
        np.testing.assert_allclose(model.forward(np.array([[3.0, -1.0]])), [[0.5, 0.5]])

    def test_matches_naive_oracle(self):
        """Random two-layer model agrees with an explicit loop implementation"""
        rng = np.random.default_rng(0)
        model = MlpModel.create([4, 7, 3], [Activation.RELU, Activation.TANH], rng, dtype=np.float64)
        model.layers[0].bias[:] = rng.normal(size=7)
        x = rng.normal(size=(5, 4))
        np.testing.assert_allclose(model.forward(x), naive_forward(model, x), atol=1e-12)

    def test_softmax_rows_sum_to_one(self):
        """Softmax outputs are distributions"""
        rng = np.random.default_rng(1)
        model = MlpModel.create([3, 8, 2], [Activation.RELU, Activation.SOFTMAX], rng)
        probs = model.forward(rng.normal(size=(20, 3)) * 50)
        np.testing.assert_allclose(probs.sum(axis=1), 1.0, atol=1e-6)
        assert np.all(np.isfinite(probs))

    def test_width_mismatch(self):
        """Inputs of the wrong width raise a shape error"""
        model = MlpModel.create([4, 2], Activation.IDENTITY, np.random.default_rng(0))
        with pytest.raises(ShapeError):
            model.forward(np.zeros((2, 5)))

    def test_softmax_only_last(self):
        """Softmax on a hidden layer is rejected"""
        with pytest.raises(ShapeError):
            MlpModel.create([2, 3, 2], [Activation.SOFTMAX, Activation.IDENTITY], np.random.default_rng(0))

    def test_broken_chain(self):
        """Consecutive layer widths must agree"""
        with pytest.raises(ShapeError):
            MlpModel([
                DenseLayer(np.zeros((2, 3)), np.zeros(3), Activation.RELU),
                DenseLayer(np.zeros((4, 1)), np.zeros(1), Activation.IDENTITY),
            ])

    def test_glorot_bounds(self):
        """Initial weights lie within the Glorot-uniform limit and biases are zero"""
        model = MlpModel.create([10, 256, 6], Activation.RELU, np.random.default_rng(3))
        limit = math.sqrt(6.0 / (10 + 256))
        assert np.abs(model.layers[0].weight).max() <= limit
        assert not np.any(model.layers[0].bias)
        assert model.dtype == np.float32
        assert model.n_parameters() == 10 * 256 + 256 + 256 * 6 + 6


class TestLosses:
    """Test the loss functions"""

    def test_ce_uniform(self):
        """p = [0.5, 0.5] costs ln 2"""
        assert loss_ce(np.array([[0.5, 0.5]]), np.array([1])) == pytest.approx(math.log(2), abs=1e-15)

    def test_ce_certain(self):
        """A certain correct prediction costs nothing"""
        assert loss_ce(np.array([[1.0, 0.0]]), np.array([0])) == 0.0

    def test_ce_floor(self):
        """A certain wrong prediction is capped by the probability floor"""
        assert loss_ce(np.array([[1.0, 0.0]]), np.array([1])) == pytest.approx(-math.log(1e-12))

    def test_ce_high_precision_oracle(self):
        """Random batch agrees with a 40-digit evaluation"""
        getcontext().prec = 40
        rng = np.random.default_rng(4)
        p = rng.uniform(0.01, 0.99, size=12)
        pred = np.stack([p, 1 - p], axis=1)
        target = rng.integers(0, 2, size=12)
        oracle = sum(-Decimal(float(pred[i, target[i]])).ln() for i in range(12)) / 12
        assert loss_ce(pred, target) == pytest.approx(float(oracle), abs=1e-14)

    def test_ce_bad_target(self):
        """Class indices must be in range"""
        with pytest.raises(DomainError):
            loss_ce(np.array([[0.5, 0.5]]), np.array([2]))

    def test_mse_zero(self):
        """Equal prediction and target"""
        x = np.arange(6.0).reshape(2, 3)
        assert loss_mse(x, x) == 0.0

    def test_mse_unit_offset(self):
        """Unit error everywhere costs 1"""
        x = np.arange(6.0).reshape(2, 3)
        assert loss_mse(x + 1.0, x) == 1.0

    def test_mse_oracle(self):
        """Random case agrees with a plain sum"""
        rng = np.random.default_rng(5)
        a, b = rng.normal(size=(4, 3)), rng.normal(size=(4, 3))
        oracle = sum((float(x) - float(y)) ** 2 for x, y in zip(a.ravel(), b.ravel())) / 12
        assert loss_mse(a, b) == pytest.approx(oracle, abs=1e-14)

    def test_mse_shape_mismatch(self):
        """Predictions and targets must match"""
        with pytest.raises(ShapeError):
            loss_mse(np.zeros((2, 3)), np.zeros((3, 2)))

    def test_ce_needs_softmax(self):
        """The fused CE gradient requires a Softmax output"""
        with pytest.raises(ShapeError):
            output_gradient(LossKind.CE, Activation.IDENTITY, np.array([[0.5, 0.5]]), np.array([0]))


class TestAdam:
    """Test the optimizer"""

    @pytest.mark.parametrize("g", [3.0, -0.02, 1e-3])
    def test_first_step_moves_by_lr(self, g):
        """The bias-corrected first step has magnitude lr"""
        w = np.zeros(1)
        adam = AdamState.for_parameters([w], lr=0.01)
        adam.step([w], [np.array([g])])
        assert abs(w[0]) == pytest.approx(0.01, rel=1e-4)
        assert np.sign(w[0]) == -np.sign(g)
        assert adam.t == 1

    def test_moments_match_shapes(self):
        """Moments mirror the parameter arrays"""
        model = MlpModel.create([3, 4, 2], Activation.TANH, np.random.default_rng(0))
        adam = AdamState.for_parameters(model.parameters())
        assert [m.shape for m in adam.m] == [p.shape for p in model.parameters()]

    def test_invalid_lr(self):
        """Learning rates must be positive"""
        with pytest.raises(DomainError):
            AdamState.for_parameters([np.zeros(2)], lr=0.0)

    def test_count_mismatch(self):
        """Gradients must align with tracked parameters"""
        adam = AdamState.for_parameters([np.zeros(2)])
        with pytest.raises(ShapeError):
            adam.step([np.zeros(2), np.zeros(1)], [np.zeros(2), np.zeros(1)])


class TestGradients:
    """Analytic against central finite-difference gradients in float64"""

    def test_ce_gradients(self):
        """Softmax + CE through a three-layer model"""
        rng = np.random.default_rng(6)
        model = MlpModel.create([4, 6, 5, 2], [Activation.TANH, Activation.RELU, Activation.SOFTMAX], rng)
        x = rng.normal(size=(8, 4))
        y = rng.integers(0, 2, size=8)
        errors = gradient_check(model, x, y, LossKind.CE)
        assert len(errors) == 6
        assert max(errors) < 1e-4

    def test_mse_gradients(self):
        """Tanh output + MSE through a three-layer model"""
        rng = np.random.default_rng(7)
        model = MlpModel.create([5, 6, 4, 3], [Activation.RELU, Activation.TANH, Activation.TANH], rng)
        x = rng.normal(size=(7, 5))
        y = rng.uniform(-0.9, 0.9, size=(7, 3))
        assert max(gradient_check(model, x, y, LossKind.MSE)) < 1e-4

    def test_identity_output_gradients(self):
        """Linear output + MSE"""
        rng = np.random.default_rng(8)
        model = MlpModel.create([3, 5, 5, 2], [Activation.TANH, Activation.TANH, Activation.IDENTITY], rng)
        assert max(gradient_check(model, rng.normal(size=(6, 3)), rng.normal(size=(6, 2)), LossKind.MSE)) < 1e-4

    def test_check_leaves_model_untouched(self):
        """Gradient checking probes a copy"""
        rng = np.random.default_rng(9)
        model = MlpModel.create([2, 3, 2], [Activation.TANH, Activation.SOFTMAX], rng)
        before = model.copy()
        gradient_check(model, rng.normal(size=(4, 2)), np.array([0, 1, 1, 0]), LossKind.CE)
        assert model.equals(before)


class TestTrainingStep:
    """Test backward_and_step"""

    def test_separable_toy_converges(self):
        """200 full-batch steps fit a linearly separable problem"""
        rng = np.random.default_rng(10)
        x = rng.uniform(-1, 1, size=(400, 2))
        x = x[np.abs(x.sum(axis=1)) > 0.2][:256]
        y = (x.sum(axis=1) > 0).astype(np.int64)

        model = MlpModel.create([2, 16, 2], [Activation.RELU, Activation.SOFTMAX], rng)
        adam = AdamState.for_parameters(model.parameters(), lr=0.05)
        for _ in range(200):
            model, _ = backward_and_step(model, adam, x, y, LossKind.CE)
        assert evaluate_loss(model, x, y, LossKind.CE) < 0.1

    def test_returns_pre_update_loss(self):
        """The reported loss is the loss before the update"""
        rng = np.random.default_rng(11)
        model = MlpModel.create([3, 2], Activation.IDENTITY, rng)
        x, y = rng.normal(size=(4, 3)), rng.normal(size=(4, 2))
        before = evaluate_loss(model, x, y, LossKind.MSE)
        adam = AdamState.for_parameters(model.parameters())
        _, loss = backward_and_step(model, adam, x, y, LossKind.MSE)
        assert loss == pytest.approx(before, rel=1e-6)
        assert evaluate_loss(model, x, y, LossKind.MSE) < before

    def test_non_finite_loss_surfaces(self):
        """Overflowing targets raise a training error"""
        model = MlpModel.create([2, 2], Activation.IDENTITY, np.random.default_rng(0), dtype=np.float64)
        adam = AdamState.for_parameters(model.parameters())
        with pytest.raises(TrainingError):
            backward_and_step(model, adam, np.ones((2, 2)), np.full((2, 2), 1e300), LossKind.MSE)


class TestCheckpoint:
    """Test the checkpoint file format"""

    @pytest.fixture
    def models(self):
        rng = np.random.default_rng(12)
        return {
            "encoder": MlpModel.create([4, 8, 3], Activation.RELU, rng),
            "head": MlpModel.create([3, 2], Activation.SOFTMAX, rng),
        }

    def test_round_trip(self, models, tmp_path):
        """Weights, architecture and metadata survive a save/load cycle"""
        path = save_checkpoint(tmp_path / "m.ckpt", models, {"note": "x", "scale": [1.0, 2.0]})
        loaded, metadata = load_checkpoint(path)
        assert list(loaded) == ["encoder", "head"]
        assert all(loaded[name].equals(models[name]) for name in models)
        assert metadata == {"note": "x", "scale": [1.0, 2.0]}

    def test_bytes_deterministic(self, models):
        """Equal models give equal bytes"""
        assert checkpoint_bytes(models, {"b": 1, "a": 2}) == checkpoint_bytes(models, {"a": 2, "b": 1})

    def test_bad_magic(self, models):
        """Foreign files are rejected by magic"""
        data = b"NOPE" + checkpoint_bytes(models)[4:]
        with pytest.raises(FormatError) as exc:
            models_from_bytes(data)
        assert exc.value.field == "magic"

    def test_bad_version(self, models):
        """Unknown header versions are rejected"""
        data = checkpoint_bytes(models)
        header_len = int.from_bytes(data[4:8], "little")
        header = json.loads(data[8:8 + header_len])
        header["version"] = 2
        new_header = json.dumps(header, sort_keys=True).encode()
        patched = b"OPLM" + len(new_header).to_bytes(4, "little") + new_header + data[8 + header_len:]
        with pytest.raises(FormatError) as exc:
            models_from_bytes(patched)
        assert exc.value.field == "version"

    def test_truncated(self, models):
        """A short parameter blob is reported"""
        with pytest.raises(FormatError) as exc:
            models_from_bytes(checkpoint_bytes(models)[:-4])
        assert exc.value.field == "file_size"

    def test_trailing_bytes(self, models):
        """Extra bytes after the blob are reported"""
        with pytest.raises(FormatError) as exc:
            models_from_bytes(checkpoint_bytes(models) + b"\x00\x00\x00\x00")
        assert exc.value.field == "file_size"

    def test_missing(self, tmp_path):
        """Missing checkpoints raise FileNotFoundError"""
        with pytest.raises(FileNotFoundError):
            load_checkpoint(tmp_path / "absent.ckpt")
