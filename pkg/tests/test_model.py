"""Toy transformer: tokenizer, forward pass, gradients, checkpoints."""

import numpy as np
import pytest

from prodedit.errors import ProdEditError
from prodedit.model import (
    ByteTokenizer,
    ForwardResult,
    Injection,
    ModelConfig,
    TinyTransformer,
    _gelu,
    _gelu_grad,
    _layer_norm,
)


class TestTokenizer:
    def test_ascii_round_trip(self):
        tok = ByteTokenizer()
        text = "One feature of Frying Pan is"
        assert tok.decode(tok.encode(text)) == text

    def test_utf8_round_trip(self):
        tok = ByteTokenizer()
        text = "café ☕ 28 cm"
        ids = tok.encode(text)
        assert all(0 <= i < 256 for i in ids)
        assert tok.decode(ids) == text

    def test_multibyte_length(self):
        tok = ByteTokenizer()
        assert len(tok.encode("☕")) == 3


class TestActivations:
    def test_gelu_values(self):
        # GELU(0) = 0 and GELU(x) -> x for large positive x.
        assert _gelu(np.array([0.0]))[0] == 0.0
        assert _gelu(np.array([10.0]))[0] == pytest.approx(10.0, abs=1e-6)

    def test_gelu_grad_matches_fd(self):
        xs = np.linspace(-3, 3, 31)
        eps = 1e-6
        fd = (_gelu(xs + eps) - _gelu(xs - eps)) / (2 * eps)
        np.testing.assert_allclose(_gelu_grad(xs), fd, atol=1e-8)

    def test_layer_norm_statistics(self):
        rng = np.random.default_rng(0)
        x = rng.normal(3.0, 5.0, size=(7, 16))
        y, _ = _layer_norm(x)
        np.testing.assert_allclose(y.mean(axis=-1), 0.0, atol=1e-12)
        np.testing.assert_allclose(y.var(axis=-1), 1.0, atol=1e-6)


class TestForward:
    def test_shapes(self, small_model):
        ids = small_model.tokenizer.encode("hello world")
        result = small_model.forward(ids)
        assert isinstance(result, ForwardResult)
        assert result.logits.shape == (len(ids), small_model.config.vocab_size)

    def test_deterministic(self, small_model):
        ids = small_model.tokenizer.encode("hello world")
        a = small_model.forward(ids).logits
        b = small_model.forward(ids).logits
        np.testing.assert_array_equal(a, b)

    def test_seed_controls_weights(self):
        cfg = ModelConfig(n_layers=2, d_model=32, d_ff=64, n_heads=4)
        m1 = TinyTransformer(cfg)
        m2 = TinyTransformer(cfg)
        assert m1.checksum() == m2.checksum()
        m3 = TinyTransformer(ModelConfig(n_layers=2, d_model=32, d_ff=64, n_heads=4, seed=9))
        assert m3.checksum() != m1.checksum()

    def test_causality(self, small_model):
        """Changing a later token must not change earlier logits."""
        ids = small_model.tokenizer.encode("abcdef")
        base = small_model.forward(ids).logits
        ids2 = list(ids)
        ids2[-1] = (ids2[-1] + 1) % 256
        perturbed = small_model.forward(ids2).logits
        np.testing.assert_allclose(base[:-1], perturbed[:-1], atol=1e-12)
        assert not np.allclose(base[-1], perturbed[-1])

    def test_empty_sequence_rejected(self, small_model):
        with pytest.raises(ValueError):
            small_model.forward([])

    def test_too_long_rejected(self, small_model):
        ids = [0] * (small_model.config.max_seq_len + 1)
        with pytest.raises(ProdEditError):
            small_model.forward(ids)

    def test_heads_must_divide(self):
        with pytest.raises(ValueError):
            TinyTransformer(ModelConfig(d_model=30, n_heads=4))


class TestCaptureAndInject:
    def test_capture_shapes(self, small_model):
        ids = small_model.tokenizer.encode("capture me")
        result = small_model.forward(ids, capture_layers={0, 1})
        T = len(ids)
        assert result.mlp_inputs[0].shape == (T, small_model.config.d_ff)
        assert result.mlp_outputs[1].shape == (T, small_model.config.d_model)

    def test_injection_replaces_output(self, small_model):
        ids = small_model.tokenizer.encode("inject here")
        vec = np.linspace(-1, 1, small_model.config.d_model)
        inject = Injection(layer=0, position=3, vector=vec)
        result = small_model.forward(ids, capture_layers={0}, inject=inject)
        np.testing.assert_array_equal(result.mlp_outputs[0][3], vec)

    def test_injection_changes_downstream_logits(self, small_model):
        ids = small_model.tokenizer.encode("inject here")
        base = small_model.forward(ids).logits
        vec = np.full(small_model.config.d_model, 2.0)
        out = small_model.forward(ids, inject=Injection(0, 3, vec)).logits
        assert not np.allclose(base[-1], out[-1])
        # positions before the injection are untouched
        np.testing.assert_allclose(base[:3], out[:3], atol=1e-12)


class TestGradients:
    def test_w_proj_gradient_matches_fd(self, small_model):
        tok = small_model.tokenizer
        prompt = tok.encode("One feature of X is")
        target = tok.encode(" y")
        _, grads = small_model.target_nll(prompt, target, with_grads=True)
        layer = 1
        w = small_model.mlp_weight(layer)
        rng = np.random.default_rng(0)
        eps = 1e-6
        for _ in range(6):
            i = rng.integers(w.shape[0])
            j = rng.integers(w.shape[1])
            orig = w[i, j]
            w[i, j] = orig + eps
            hi = small_model.target_nll(prompt, target)
            w[i, j] = orig - eps
            lo = small_model.target_nll(prompt, target)
            w[i, j] = orig
            fd = (hi - lo) / (2 * eps)
            assert grads["d_w_proj"][layer][i, j] == pytest.approx(fd, rel=1e-5, abs=1e-9)

    def test_inject_gradient_matches_fd(self, small_model):
        tok = small_model.tokenizer
        prompt = tok.encode("One feature of X is")
        target = tok.encode(" y")
        vec = np.linspace(-0.5, 0.5, small_model.config.d_model)
        inject = Injection(layer=0, position=4, vector=vec.copy())
        _, grads = small_model.target_nll(prompt, target, inject=inject, with_grads=True)
        eps = 1e-6
        rng = np.random.default_rng(1)
        for _ in range(6):
            i = int(rng.integers(len(vec)))
            hi_vec = vec.copy()
            hi_vec[i] += eps
            hi = small_model.target_nll(prompt, target, inject=Injection(0, 4, hi_vec))
            lo_vec = vec.copy()
            lo_vec[i] -= eps
            lo = small_model.target_nll(prompt, target, inject=Injection(0, 4, lo_vec))
            fd = (hi - lo) / (2 * eps)
            assert grads["d_inject"][i] == pytest.approx(fd, rel=1e-5, abs=1e-9)

    def test_nll_is_positive(self, small_model):
        tok = small_model.tokenizer
        nll = small_model.target_nll(tok.encode("abc"), tok.encode("d"))
        assert nll > 0


class TestGreedy:
    def test_length_and_determinism(self, small_model):
        ids = small_model.tokenizer.encode("seed text")
        out1 = small_model.greedy_continue(ids, 10)
        out2 = small_model.greedy_continue(ids, 10)
        assert len(out1) == 10
        assert out1 == out2

    def test_horizon_zero(self, small_model):
        assert small_model.greedy_continue([1, 2, 3], 0) == []


class TestCheckpoint:
    def test_round_trip(self, small_model, tmp_path):
        path = tmp_path / "model.bin"
        small_model.save(path)
        loaded = TinyTransformer.load(path)
        assert loaded.checksum() == small_model.checksum()
        # dimensions round trip; init seed is irrelevant once weights are loaded
        assert loaded.config.n_layers == small_model.config.n_layers
        assert loaded.config.d_model == small_model.config.d_model
        assert loaded.config.d_ff == small_model.config.d_ff
        assert loaded.config.n_heads == small_model.config.n_heads
        assert loaded.config.max_seq_len == small_model.config.max_seq_len
        ids = small_model.tokenizer.encode("same logits")
        np.testing.assert_array_equal(
            loaded.forward(ids).logits, small_model.forward(ids).logits
        )

    def test_bad_magic(self, tmp_path):
        path = tmp_path / "model.bin"
        path.write_bytes(b"XXXX" + b"\x00" * 64)
        with pytest.raises(ProdEditError):
            TinyTransformer.load(path)

    def test_shipped_fixture_loads(self):
        from tests.conftest import FIXTURES

        model = TinyTransformer.load(FIXTURES / "toy_model.bin")
        expected = TinyTransformer(ModelConfig(seed=7))
        assert model.checksum() == expected.checksum()

    def test_checksum_sensitive_to_single_weight(self, small_model, tmp_path):
        path = tmp_path / "model.bin"
        small_model.save(path)
        loaded = TinyTransformer.load(path)
        w = loaded.mlp_weight(0).copy()
        w[0, 0] += 1e-9
        loaded.set_mlp_weight(0, w)
        assert loaded.checksum() != small_model.checksum()
        assert loaded.layer_checksum(0) != small_model.layer_checksum(0)
        assert loaded.layer_checksum(1) == small_model.layer_checksum(1)
