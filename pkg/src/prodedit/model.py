"""A small decoder-only transformer with explicit forward/backward in numpy.

The model exists to exercise weight-level editing at desk scale: it exposes
per-layer access to the MLP down-projection matrices, capture of the MLP
input activation (the "key" fed into the down-projection), injection of a
replacement MLP output at one position, and analytic gradients with respect
to both the injected vector and the down-projection weights.

Checkpoint binary layout (little-endian):
    magic  b"PEDT"
    u32    format version (1)
    u32 x6 n_layers, d_model, d_ff, n_heads, vocab_size, max_seq_len
    float64 row-major blocks, in order:
        tok_emb (V, d), pos_emb (T, d),
        per layer: wq, wk, wv, wo (d, d), w_fc (d_ff, d), b_fc (d_ff,),
                   w_proj (d, d_ff), b_proj (d,)
        w_out (V, d)
"""

from __future__ import annotations

import hashlib
import struct
from dataclasses import dataclass, field

import numpy as np
from scipy.special import erf

from .errors import ProdEditError

_MAGIC = b"PEDT"
_CHECKPOINT_VERSION = 1
_LN_EPS = 1e-5
_SQRT2 = np.sqrt(2.0)
_INV_SQRT_2PI = 1.0 / np.sqrt(2.0 * np.pi)


class ByteTokenizer:
    """UTF-8 byte-level tokenizer: every string tokenizes, vocab size 256."""

    vocab_size = 256

    def encode(self, text: str) -> list[int]:
        return list(text.encode("utf-8"))

    def decode(self, ids: list[int]) -> str:
        return bytes(int(i) for i in ids).decode("utf-8", errors="replace")


def _gelu(x: np.ndarray) -> np.ndarray:
    return 0.5 * x * (1.0 + erf(x / _SQRT2))


def _gelu_grad(x: np.ndarray) -> np.ndarray:
    phi = _INV_SQRT_2PI * np.exp(-0.5 * x * x)
    return 0.5 * (1.0 + erf(x / _SQRT2)) + x * phi


def _layer_norm(x: np.ndarray):
    mu = x.mean(axis=-1, keepdims=True)
    var = x.var(axis=-1, keepdims=True)
    inv_std = 1.0 / np.sqrt(var + _LN_EPS)
    y = (x - mu) * inv_std
    return y, inv_std


def _layer_norm_backward(dy: np.ndarray, y: np.ndarray, inv_std: np.ndarray):
    d = y.shape[-1]
    mean_dy = dy.mean(axis=-1, keepdims=True)
    mean_dy_y = (dy * y).mean(axis=-1, keepdims=True)
    return inv_std * (dy - mean_dy - y * mean_dy_y)


@dataclass
class ModelConfig:
    n_layers: int = 4
    d_model: int = 64
    d_ff: int = 128
    n_heads: int = 4
    vocab_size: int = 256
    max_seq_len: int = 512
    init_scale: float = 0.08
    seed: int = 0


@dataclass
class Injection:
    """Replace the MLP output at (layer, position) with a fixed vector."""

    layer: int
    position: int
    vector: np.ndarray


@dataclass
class ForwardResult:
    logits: np.ndarray  # (T, V)
    caches: list | None = None
    final_cache: tuple | None = None
    mlp_inputs: dict[int, np.ndarray] = field(default_factory=dict)  # layer -> (T, d_ff)
    mlp_outputs: dict[int, np.ndarray] = field(default_factory=dict)  # layer -> (T, d)


class TinyTransformer:
    """Pre-LN causal transformer over byte tokens, float64 throughout."""

    def __init__(self, config: ModelConfig):
        if config.d_model % config.n_heads != 0:
            raise ValueError("n_heads must divide d_model")
        self.config = config
        self.tokenizer = ByteTokenizer()
        self.n_layers = config.n_layers
        rng = np.random.default_rng(config.seed)
        s = config.init_scale
        d, f, v, t = config.d_model, config.d_ff, config.vocab_size, config.max_seq_len

        def init(*shape):
            return rng.normal(0.0, s, size=shape)

        self.tok_emb = init(v, d)
        self.pos_emb = init(t, d)
        self.layers = []
        for _ in range(config.n_layers):
            self.layers.append(
                {
                    "wq": init(d, d),
                    "wk": init(d, d),
                    "wv": init(d, d),
                    "wo": init(d, d),
                    "w_fc": init(f, d),
                    "b_fc": np.zeros(f),
                    "w_proj": init(d, f),
                    "b_proj": np.zeros(d),
                }
            )
        self.w_out = init(v, d)

    # -- weight access ----------------------------------------------------

    def mlp_weight(self, layer: int) -> np.ndarray:
        """Down-projection matrix at a layer, shape (d_model, d_ff)."""
        return self.layers[layer]["w_proj"]

    def set_mlp_weight(self, layer: int, w: np.ndarray) -> None:
        expected = self.layers[layer]["w_proj"].shape
        if w.shape != expected:
            raise ValueError(f"weight shape {w.shape} != {expected}")
        self.layers[layer]["w_proj"] = np.array(w, dtype=np.float64)

    def _weight_blocks(self):
        yield self.tok_emb
        yield self.pos_emb
        for layer in self.layers:
            for name in ("wq", "wk", "wv", "wo", "w_fc", "b_fc", "w_proj", "b_proj"):
                yield layer[name]
        yield self.w_out

    def checksum(self) -> str:
        h = hashlib.sha256()
        for block in self._weight_blocks():
            h.update(np.ascontiguousarray(block).tobytes())
        return h.hexdigest()

    def layer_checksum(self, layer: int) -> str:
        h = hashlib.sha256()
        for name in ("wq", "wk", "wv", "wo", "w_fc", "b_fc", "w_proj", "b_proj"):
            h.update(np.ascontiguousarray(self.layers[layer][name]).tobytes())
        return h.hexdigest()

    # -- forward / backward ----------------------------------------------

    def forward(
        self,
        ids: list[int] | np.ndarray,
        capture_layers: set[int] | None = None,
        inject: Injection | None = None,
        keep_caches: bool = False,
    ) -> ForwardResult:
        ids = np.asarray(ids, dtype=np.int64)
        T = len(ids)
        if T == 0:
            raise ValueError("empty token sequence")
        if T > self.config.max_seq_len:
            raise ProdEditError(
                f"sequence length {T} exceeds max_seq_len {self.config.max_seq_len}"
            )
        H = self.config.n_heads
        dh = self.config.d_model // H
        capture_layers = capture_layers or set()

        x = self.tok_emb[ids] + self.pos_emb[:T]
        result = ForwardResult(logits=None)
        caches = [] if keep_caches else None
        mask = np.triu(np.ones((T, T), dtype=bool), k=1)

        for li, layer in enumerate(self.layers):
            y1, inv1 = _layer_norm(x)
            q = (y1 @ layer["wq"].T).reshape(T, H, dh).transpose(1, 0, 2)
            k = (y1 @ layer["wk"].T).reshape(T, H, dh).transpose(1, 0, 2)
            v = (y1 @ layer["wv"].T).reshape(T, H, dh).transpose(1, 0, 2)
            scores = q @ k.transpose(0, 2, 1) / np.sqrt(dh)
            scores = np.where(mask[None, :, :], -1e30, scores)
            scores -= scores.max(axis=-1, keepdims=True)
            p = np.exp(scores)
            p /= p.sum(axis=-1, keepdims=True)
            ctx = (p @ v).transpose(1, 0, 2).reshape(T, self.config.d_model)
            att = ctx @ layer["wo"].T
            a = x + att

            y2, inv2 = _layer_norm(a)
            pre = y2 @ layer["w_fc"].T + layer["b_fc"]
            kact = _gelu(pre)
            mlp = kact @ layer["w_proj"].T + layer["b_proj"]
            injected_here = inject is not None and inject.layer == li
            if injected_here:
                mlp = mlp.copy()
                mlp[inject.position] = inject.vector
            if li in capture_layers:
                result.mlp_inputs[li] = kact.copy()
                result.mlp_outputs[li] = mlp.copy()
            x_next = a + mlp
            if keep_caches:
                caches.append(
                    {
                        "x": x, "y1": y1, "inv1": inv1, "q": q, "k": k, "v": v,
                        "p": p, "ctx": ctx, "a": a, "y2": y2, "inv2": inv2,
                        "pre": pre, "kact": kact, "injected": injected_here,
                    }
                )
            x = x_next

        f_hat, inv_f = _layer_norm(x)
        result.logits = f_hat @ self.w_out.T
        result.caches = caches
        result.final_cache = (f_hat, inv_f) if keep_caches else None
        return result

    def backward(
        self,
        dlogits: np.ndarray,
        fwd: ForwardResult,
        inject: Injection | None = None,
    ) -> dict:
        """Reverse pass from a logits gradient.

        Returns a dict with per-layer gradients of the MLP output
        (``d_mlp_out``, list of (T, d) arrays), gradients of each
        down-projection (``d_w_proj``), and, when an injection is present,
        the gradient with respect to the injected vector (``d_inject``).
        """
        if fwd.caches is None:
            raise ValueError("forward must be run with keep_caches=True")
        H = self.config.n_heads
        d = self.config.d_model
        dh = d // H
        T = dlogits.shape[0]

        f_hat, inv_f = fwd.final_cache
        d_fhat = dlogits @ self.w_out
        dx = _layer_norm_backward(d_fhat, f_hat, inv_f)

        grads = {"d_mlp_out": [None] * self.n_layers, "d_w_proj": [None] * self.n_layers}
        for li in range(self.n_layers - 1, -1, -1):
            cache = self.layers[li], fwd.caches[li]
            layer, c = cache
            d_a = dx.copy()
            d_mlp = dx.copy()
            grads["d_mlp_out"][li] = d_mlp.copy()
            if inject is not None and inject.layer == li:
                grads["d_inject"] = d_mlp[inject.position].copy()
                d_mlp = d_mlp.copy()
                d_mlp[inject.position] = 0.0
            grads["d_w_proj"][li] = d_mlp.T @ c["kact"]
            d_kact = d_mlp @ layer["w_proj"]
            d_pre = d_kact * _gelu_grad(c["pre"])
            d_y2 = d_pre @ layer["w_fc"]
            d_a += _layer_norm_backward(d_y2, c["y2"], c["inv2"])

            # attention
            d_x = d_a.copy()
            d_att = d_a
            d_ctx = (d_att @ layer["wo"]).reshape(T, H, dh).transpose(1, 0, 2)
            d_p = d_ctx @ c["v"].transpose(0, 2, 1)
            d_v = c["p"].transpose(0, 2, 1) @ d_ctx
            d_scores = c["p"] * (d_p - (d_p * c["p"]).sum(axis=-1, keepdims=True))
            d_scores /= np.sqrt(dh)
            d_q = d_scores @ c["k"]
            d_k = d_scores.transpose(0, 2, 1) @ c["q"]
            d_q = d_q.transpose(1, 0, 2).reshape(T, d)
            d_k = d_k.transpose(1, 0, 2).reshape(T, d)
            d_v = d_v.transpose(1, 0, 2).reshape(T, d)
            d_y1 = d_q @ layer["wq"] + d_k @ layer["wk"] + d_v @ layer["wv"]
            d_x += _layer_norm_backward(d_y1, c["y1"], c["inv1"])
            dx = d_x
        return grads

    # -- losses and decoding ----------------------------------------------

    def target_nll(
        self,
        prompt_ids: list[int],
        target_ids: list[int],
        inject: Injection | None = None,
        with_grads: bool = False,
        grad_layers: set[int] | None = None,
    ):
        """Mean NLL of the target tokens given the prompt, teacher-forced.

        With ``with_grads`` the analytic gradients from :meth:`backward` are
        returned alongside the loss.
        """
        if not target_ids:
            raise ValueError("target must tokenize to at least one token")
        ids = list(prompt_ids) + list(target_ids)
        fwd = self.forward(
            ids,
            inject=inject,
            keep_caches=with_grads,
            capture_layers=grad_layers or set(),
        )
        T = len(ids)
        positions = np.arange(len(prompt_ids) - 1, T - 1)
        targets = np.asarray(target_ids, dtype=np.int64)
        logits = fwd.logits[positions]
        shifted = logits - logits.max(axis=-1, keepdims=True)
        logsumexp = np.log(np.exp(shifted).sum(axis=-1)) + logits.max(axis=-1)
        nll = float((logsumexp - logits[np.arange(len(targets)), targets]).mean())
        if not with_grads:
            return nll
        probs = np.exp(shifted)
        probs /= probs.sum(axis=-1, keepdims=True)
        dlogits = np.zeros_like(fwd.logits)
        dlogits[positions] = probs
        dlogits[positions, targets] -= 1.0
        dlogits[positions] /= len(targets)
        grads = self.backward(dlogits, fwd, inject=inject)
        return nll, grads

    def greedy_continue(self, ids: list[int], horizon: int) -> list[int]:
        """Greedy argmax decoding for ``horizon`` steps."""
        out = list(ids)
        for _ in range(horizon):
            if len(out) >= self.config.max_seq_len:
                break
            logits = self.forward(out).logits
            out.append(int(np.argmax(logits[-1])))
        return out[len(ids):]

    # -- checkpoint I/O ----------------------------------------------------

    def save(self, path) -> None:
        cfg = self.config
        with open(path, "wb") as fh:
            fh.write(_MAGIC)
            fh.write(
                struct.pack(
                    "<7I",
                    _CHECKPOINT_VERSION,
                    cfg.n_layers,
                    cfg.d_model,
                    cfg.d_ff,
                    cfg.n_heads,
                    cfg.vocab_size,
                    cfg.max_seq_len,
                )
            )
            for block in self._weight_blocks():
                fh.write(np.ascontiguousarray(block, dtype=np.float64).tobytes())

    @classmethod
    def load(cls, path) -> "TinyTransformer":
        with open(path, "rb") as fh:
            magic = fh.read(4)
            if magic != _MAGIC:
                raise ProdEditError(f"not a model checkpoint: bad magic {magic!r}")
            version, n_layers, d_model, d_ff, n_heads, vocab, max_len = struct.unpack(
                "<7I", fh.read(28)
            )
            if version != _CHECKPOINT_VERSION:
                raise ProdEditError(f"unsupported checkpoint version {version}")
            config = ModelConfig(
                n_layers=n_layers,
                d_model=d_model,
                d_ff=d_ff,
                n_heads=n_heads,
                vocab_size=vocab,
                max_seq_len=max_len,
            )
            model = cls(config)

            def read_block(shape):
                n = int(np.prod(shape))
                data = np.frombuffer(fh.read(n * 8), dtype=np.float64)
                return data.reshape(shape).copy()

            model.tok_emb = read_block((vocab, d_model))
            model.pos_emb = read_block((max_len, d_model))
            for layer in model.layers:
                layer["wq"] = read_block((d_model, d_model))
                layer["wk"] = read_block((d_model, d_model))
                layer["wv"] = read_block((d_model, d_model))
                layer["wo"] = read_block((d_model, d_model))
                layer["w_fc"] = read_block((d_ff, d_model))
                layer["b_fc"] = read_block((d_ff,))
                layer["w_proj"] = read_block((d_model, d_ff))
                layer["b_proj"] = read_block((d_model,))
            model.w_out = read_block((vocab, d_model))
        return model
