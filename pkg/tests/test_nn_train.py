import math

import numpy as np
import pytest

from ssc import nn
from ssc.nn import Adam, CheckpointError, ModelCheckpoint, ParamSet, ParamSpec
from ssc.nn.checkpoint import MAGIC


def simple_params(values):
    params = ParamSet()
    for name, arr in values.items():
        params.add(name, np.array(arr, dtype=np.float64))
    return params


class TestAdam:
    def test_zero_gradient_leaves_params_unchanged(self):
        params = simple_params({"w": [1.0, -2.0]})
        opt = Adam(params)
        params["w"].grad = np.zeros(2)
        opt.step()
        assert np.array_equal(params["w"].data, [1.0, -2.0])

    def test_first_step_is_lr_times_sign(self):
        # Bias-corrected first step: delta = -lr * g / (|g| + eps-ish).
        params = simple_params({"w": [0.5, -0.5, 2.0]})
        grads = np.array([0.3, -0.01, 4.0])
        opt = Adam(params, lr=1e-3)
        params["w"].grad = grads.copy()
        before = params["w"].data.copy()
        opt.step()
        delta = params["w"].data - before
        assert np.allclose(delta, -1e-3 * np.sign(grads), atol=1e-6)

    def test_deterministic(self):
        runs = []
        for _ in range(2):
            params = simple_params({"w": [1.0, 2.0, 3.0]})
            opt = Adam(params, lr=0.01)
            for step in range(5):
                params["w"].grad = np.sin(np.arange(3) + step)
                opt.step()
            runs.append(params["w"].data.copy())
        assert np.array_equal(runs[0], runs[1])

    def test_missing_grad_treated_as_zero(self):
        params = simple_params({"w": [1.0], "frozen": [5.0]})
        opt = Adam(params)
        params["w"].grad = np.array([1.0])
        opt.step()
        assert params["frozen"].data[0] == 5.0
        assert params["w"].data[0] != 1.0


class TestInit:
    def test_same_seed_identical(self):
        specs = [ParamSpec("w", (4, 3)), ParamSpec("b", (3,), init="zeros"),
                 ParamSpec("e", (5, 2), init="embedding")]
        a = nn.init_params(specs, seed=42, dtype=np.float64)
        b = nn.init_params(specs, seed=42, dtype=np.float64)
        for name in a.names():
            assert np.array_equal(a[name].data, b[name].data)

    def test_different_seed_differs(self):
        specs = [ParamSpec("w", (4, 3))]
        a = nn.init_params(specs, seed=1, dtype=np.float64)
        b = nn.init_params(specs, seed=2, dtype=np.float64)
        assert not np.array_equal(a["w"].data, b["w"].data)

    def test_glorot_bound_10x10(self):
        bound = math.sqrt(6.0 / 20.0)
        assert np.isclose(nn.glorot_bound(10, 10), bound)
        params = nn.init_params([ParamSpec("w", (10, 10))], seed=0, dtype=np.float64)
        w = params["w"].data
        assert np.abs(w).max() <= bound and np.abs(w).max() > 0.5 * bound

    def test_conv_kernel_fans(self):
        # (k, C, F) kernels use fan_in = k*C, fan_out = k*F.
        params = nn.init_params([ParamSpec("k", (3, 8, 4))], seed=0, dtype=np.float64)
        assert np.abs(params["k"].data).max() <= nn.glorot_bound(24, 12)

    def test_biases_zero(self):
        params = nn.init_params([ParamSpec("b", (7,), init="zeros")], seed=0)
        assert not params["b"].data.any()

    def test_embedding_range(self):
        params = nn.init_params([ParamSpec("e", (50, 8), init="embedding")],
                                seed=3, dtype=np.float64)
        e = params["e"].data
        assert np.abs(e).max() <= 0.05


class TestPrecisionMode:
    def test_env_var_selects_default_dtype(self):
        import subprocess
        import sys
        code = ("import ssc.nn as nn, numpy as np; "
                "assert nn.default_dtype() == np.float64")
        result = subprocess.run([sys.executable, "-c", code],
                                env={"SSC_PRECISION": "64", "PATH": "/usr/bin:/bin"},
                                capture_output=True)
        assert result.returncode == 0, result.stderr

    def test_set_precision(self):
        from ssc.nn import default_dtype, set_precision
        before = default_dtype()
        try:
            set_precision(64)
            assert default_dtype() == np.float64
            t = nn.Tensor([1.0, 2.0])
            assert t.data.dtype == np.float64
        finally:
            set_precision(64 if before == np.float64 else 32)

    def test_invalid_precision(self):
        with pytest.raises(ValueError):
            nn.set_precision(16)


class TestParamSet:
    def test_state_dict_round_trip(self):
        params = simple_params({"a": [1.0, 2.0], "b": [[3.0, 4.0]]})
        state = params.state_dict()
        params["a"].data[:] = 0
        params.load_state_dict(state)
        assert np.array_equal(params["a"].data, [1.0, 2.0])

    def test_load_rejects_wrong_names(self):
        params = simple_params({"a": [1.0]})
        with pytest.raises(ValueError, match="names"):
            params.load_state_dict({"b": np.zeros(1)})

    def test_load_rejects_wrong_shape(self):
        params = simple_params({"a": [1.0, 2.0]})
        with pytest.raises(ValueError, match="shape"):
            params.load_state_dict({"a": np.zeros(3)})

    def test_duplicate_name_rejected(self):
        params = simple_params({"a": [1.0]})
        with pytest.raises(ValueError):
            params.add("a", np.zeros(2))


class TestCheckpoint:
    def arrays(self):
        local = np.random.default_rng(12)
        return {
            "conv_w": local.normal(size=(3, 4, 2)).astype(np.float32),
            "bias": local.normal(size=(2,)).astype(np.float32),
            "table": local.normal(size=(5, 3)).astype(np.float32),
        }

    def test_round_trip_bit_identical(self, tmp_path):
        arrays = self.arrays()
        cp = ModelCheckpoint(epoch=4, arrays=arrays,
                             metrics={"f1_p": 0.75, "accuracy": 0.8125},
                             metadata={"kind": "word_aux", "config_digest": "abc"})
        path = tmp_path / "model.ckpt"
        nn.save_checkpoint(cp, path)
        loaded = nn.load_checkpoint(path)
        assert loaded.epoch == 4
        assert loaded.metadata["kind"] == "word_aux"
        assert loaded.metrics == cp.metrics
        for name, arr in arrays.items():
            assert loaded.arrays[name].tobytes() == arr.tobytes()
            assert loaded.arrays[name].shape == arr.shape

    def test_magic_bytes_on_disk(self, tmp_path):
        path = tmp_path / "m.ckpt"
        nn.save_checkpoint(ModelCheckpoint(0, self.arrays()), path)
        assert path.read_bytes()[:5] == MAGIC

    def test_corrupted_magic_rejected(self, tmp_path):
        path = tmp_path / "m.ckpt"
        nn.save_checkpoint(ModelCheckpoint(0, self.arrays()), path)
        raw = bytearray(path.read_bytes())
        raw[0] ^= 0xFF
        path.write_bytes(bytes(raw))
        with pytest.raises(CheckpointError, match="magic"):
            nn.load_checkpoint(path)

    def test_truncated_file_rejected(self, tmp_path):
        path = tmp_path / "m.ckpt"
        nn.save_checkpoint(ModelCheckpoint(0, self.arrays()), path)
        raw = path.read_bytes()
        path.write_bytes(raw[:len(raw) // 2])
        with pytest.raises(CheckpointError, match="truncated"):
            nn.load_checkpoint(path)

    def test_corrupt_shape_table_rejected(self, tmp_path):
        path = tmp_path / "m.ckpt"
        nn.save_checkpoint(ModelCheckpoint(0, self.arrays()), path)
        raw = bytearray(path.read_bytes())
        raw[5:9] = (0xFFFFFFFF).to_bytes(4, "little")  # array count
        path.write_bytes(bytes(raw))
        with pytest.raises(CheckpointError):
            nn.load_checkpoint(path)

    def test_trailing_garbage_rejected(self, tmp_path):
        path = tmp_path / "m.ckpt"
        nn.save_checkpoint(ModelCheckpoint(0, self.arrays()), path)
        path.write_bytes(path.read_bytes() + b"junk")
        with pytest.raises(CheckpointError, match="trailing"):
            nn.load_checkpoint(path)

    def test_scalar_and_empty_metadata(self, tmp_path):
        path = tmp_path / "m.ckpt"
        cp = ModelCheckpoint(1, {"x": np.float32(2.5).reshape(())})
        nn.save_checkpoint(cp, path)
        loaded = nn.load_checkpoint(path)
        assert loaded.arrays["x"].shape == ()
        assert float(loaded.arrays["x"]) == 2.5
