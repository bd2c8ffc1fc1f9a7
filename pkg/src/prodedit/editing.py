"""Weight-editing methods over the toy transformer: FT, LoRA, ROME, MEMIT.

All methods return a reversible :class:`WeightDelta` holding exact snapshots
of every touched matrix; none of them leaves the model mutated. Application
and reversal are explicit, so the evaluation harness can run the
edit -> evaluate -> revert protocol bit-safely.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    AlignmentError,
    ConditioningError,
    DeltaStateError,
    OptimizationError,
)
from .model import Injection, TinyTransformer

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class EditRequest:
    subject: str
    prompt: str
    target: str

    def __post_init__(self):
        if self.subject not in self.prompt:
            raise ValueError("prompt must contain the subject")
        if not self.target:
            raise ValueError("target must be nonempty")


@dataclass
class CovStats:
    """Second moment E[k k^T] of MLP-input activations at one layer."""

    layer: int
    C: np.ndarray
    n_samples: int
    damping: float

    @property
    def regularized(self) -> np.ndarray:
        return self.C + self.damping * np.eye(self.C.shape[0])


@dataclass
class OptimizerConfig:
    steps: int = 25
    step_size: float = 0.5
    clamp_factor: float = 4.0


@dataclass
class EditConfig:
    layer: int = 2
    layers: tuple[int, ...] = ()  # MEMIT spread layers; default middle third
    n_prefixes: int = 0
    prefix_seed: int = 0
    optimizer: OptimizerConfig = field(default_factory=OptimizerConfig)
    ft_steps: int = 50
    ft_step_size: float = 5e-3
    lora_rank: int = 4
    lora_scale: float = 1.0
    lora_steps: int = 50
    lora_step_size: float = 5e-2
    lora_seed: int = 0

    def memit_layers(self, n_layers: int) -> tuple[int, ...]:
        if self.layers:
            return self.layers
        third = max(1, n_layers // 3)
        start = (n_layers - third) // 2
        return tuple(range(start, start + third))


@dataclass
class DeltaEntry:
    layer: int
    original: np.ndarray
    replacement: np.ndarray


@dataclass
class WeightDelta:
    method: str
    entries: list[DeltaEntry] = field(default_factory=list)
    metadata: dict = field(default_factory=dict)
    applied: bool = False


def default_damping(C: np.ndarray) -> float:
    """Diagonal damping scaled to the covariance magnitude."""
    d = C.shape[0]
    return max(1e-2 * float(np.trace(C)) / d, 1e-8)


def estimate_covariance(
    model: TinyTransformer, layer: int, corpus: list[str], n: int
) -> CovStats:
    """Accumulate E[k k^T] over at least ``n`` MLP-input vectors at a layer."""
    if not corpus:
        raise ValueError("corpus must be nonempty")
    d_ff = model.config.d_ff
    C = np.zeros((d_ff, d_ff))
    m = 0
    for text in corpus:
        ids = model.tokenizer.encode(text)
        if not ids:
            continue
        ids = ids[: model.config.max_seq_len]
        kact = model.forward(ids, capture_layers={layer}).mlp_inputs[layer]
        C += kact.T @ kact
        m += kact.shape[0]
        if m >= n:
            break
    if m == 0:
        raise ValueError("corpus yielded no activations")
    if m < n:
        logger.warning("covariance corpus yielded %d activations (< requested %d)", m, n)
    C /= m
    return CovStats(layer=layer, C=C, n_samples=m, damping=default_damping(C))


def subject_last_token_index(model: TinyTransformer, prompt: str, subject: str) -> int:
    """Token index of the subject's last token within the prompt."""
    idx = prompt.rfind(subject)
    if idx < 0:
        raise AlignmentError(f"subject {subject!r} not found in prompt")
    prefix_tokens = len(model.tokenizer.encode(prompt[: idx + len(subject)]))
    return prefix_tokens - 1


def _random_prefixes(model: TinyTransformer, n: int, seed: int) -> list[str]:
    rng = np.random.default_rng(seed)
    prefixes = []
    for _ in range(n):
        length = int(rng.integers(5, 20))
        chars = rng.integers(97, 123, size=length)  # lowercase ascii
        prefixes.append("".join(chr(c) for c in chars) + ". ")
    return prefixes


def compute_subject_key(
    model: TinyTransformer,
    layer: int,
    prompt: str,
    subject: str,
    n_prefixes: int = 0,
    seed: int = 0,
) -> np.ndarray:
    """Mean MLP-input activation at the subject's last token.

    Averages over the bare prompt and ``n_prefixes`` random context prefixes
    prepended to it.
    """
    keys = []
    for prefix in [""] + _random_prefixes(model, n_prefixes, seed):
        text = prefix + prompt
        pos = len(model.tokenizer.encode(prefix)) + subject_last_token_index(
            model, prompt, subject
        )
        ids = model.tokenizer.encode(text)
        kact = model.forward(ids, capture_layers={layer}).mlp_inputs[layer]
        keys.append(kact[pos])
    return np.mean(keys, axis=0)


def current_mlp_output(
    model: TinyTransformer, layer: int, prompt: str, subject: str
) -> np.ndarray:
    pos = subject_last_token_index(model, prompt, subject)
    ids = model.tokenizer.encode(prompt)
    return model.forward(ids, capture_layers={layer}).mlp_outputs[layer][pos]


def optimize_value(
    model: TinyTransformer,
    layer: int,
    prompt: str,
    subject: str,
    target: str,
    opt: OptimizerConfig,
) -> np.ndarray:
    """Gradient-descend a replacement MLP-output vector for the subject token.

    Minimizes the target NLL when the vector is injected at the subject's
    last token; steps that would increase the loss are retried with a smaller
    step size, so accepted losses are non-increasing.
    """
    pos = subject_last_token_index(model, prompt, subject)
    prompt_ids = model.tokenizer.encode(prompt)
    target_ids = model.tokenizer.encode(target)
    v0 = model.forward(prompt_ids, capture_layers={layer}).mlp_outputs[layer][pos]
    v = v0.copy()
    if opt.steps == 0:
        return v
    max_norm = opt.clamp_factor * float(np.linalg.norm(v0))
    step_size = opt.step_size

    def loss_of(vec, with_grads=False):
        return model.target_nll(
            prompt_ids, target_ids, inject=Injection(layer, pos, vec), with_grads=with_grads
        )

    loss = loss_of(v)
    if not np.isfinite(loss):
        raise OptimizationError("non-finite initial loss", step=0)
    for step in range(opt.steps):
        _, grads = loss_of(v, with_grads=True)
        g = grads["d_inject"]
        if not np.all(np.isfinite(g)):
            raise OptimizationError("non-finite gradient", step=step)
        accepted = False
        trial_size = step_size
        for _ in range(8):
            candidate = v - trial_size * g
            norm = np.linalg.norm(candidate)
            if norm > max_norm:
                candidate = candidate * (max_norm / norm)
            candidate_loss = loss_of(candidate)
            if not np.isfinite(candidate_loss):
                raise OptimizationError("non-finite loss", step=step)
            if candidate_loss <= loss:
                v, loss = candidate, candidate_loss
                step_size = trial_size
                accepted = True
                break
            trial_size /= 2.0
        if not accepted:
            break
    return v


def _solve_spd(A: np.ndarray, B: np.ndarray) -> np.ndarray:
    """Solve A X = B for symmetric positive definite A."""
    try:
        from scipy.linalg import cho_factor, cho_solve

        return cho_solve(cho_factor(A), B)
    except np.linalg.LinAlgError as exc:
        raise ConditioningError(f"covariance system is singular: {exc}") from exc
    except Exception as exc:  # scipy raises its own LinAlgError subtype
        raise ConditioningError(
            f"covariance system could not be factorized ({exc}); increase damping"
        ) from exc


def rome_update(
    model: TinyTransformer, request: EditRequest, cov: CovStats, cfg: EditConfig
) -> WeightDelta:
    """Rank-one replacement of one key -> value association at cfg.layer."""
    if cov.layer != cfg.layer:
        raise ValueError(f"covariance is for layer {cov.layer}, edit targets {cfg.layer}")
    layer = cfg.layer
    k_star = compute_subject_key(
        model, layer, request.prompt, request.subject, cfg.n_prefixes, cfg.prefix_seed
    )
    v_star = optimize_value(
        model, layer, request.prompt, request.subject, request.target, cfg.optimizer
    )
    # v* is a full MLP output (bias included); solve in the linear part.
    bias = model.layers[layer]["b_proj"]
    W = model.mlp_weight(layer)
    residual = (v_star - bias) - W @ k_star
    A = cov.regularized
    u0 = _solve_spd(A, k_star)
    denom = float(k_star @ u0)
    if not np.isfinite(denom) or abs(denom) < 1e-12:
        raise ConditioningError("k^T (C + lambda I)^-1 k is numerically zero; increase damping")
    u = u0 / denom
    W_hat = W + np.outer(residual, u)
    return WeightDelta(
        method="ROME",
        entries=[DeltaEntry(layer=layer, original=W.copy(), replacement=W_hat)],
        metadata={
            "layer": layer,
            "damping": cov.damping,
            "n_prefixes": cfg.n_prefixes,
            "optimizer_steps": cfg.optimizer.steps,
        },
    )


def memit_update(
    model: TinyTransformer,
    requests: list[EditRequest],
    covs: list[CovStats],
    cfg: EditConfig,
) -> WeightDelta:
    """Spread batched residuals across several layers via regularized least squares."""
    layers = cfg.memit_layers(model.n_layers)
    if not layers:
        raise ValueError("cfg must name at least one edit layer")
    if not requests:
        return WeightDelta(method="MEMIT", metadata={"layers": list(layers)})
    cov_by_layer = {c.layer: c for c in covs}
    missing = [l for l in layers if l not in cov_by_layer]
    if missing:
        raise ValueError(f"missing covariance stats for layers {missing}")
    top = layers[-1]

    targets = [
        optimize_value(model, top, r.prompt, r.subject, r.target, cfg.optimizer)
        for r in requests
    ]

    snapshots = {l: model.mlp_weight(l).copy() for l in layers}
    try:
        for idx, layer in enumerate(layers):
            remaining = len(layers) - idx
            keys, residuals = [], []
            for request, v_star in zip(requests, targets):
                k = compute_subject_key(
                    model, layer, request.prompt, request.subject,
                    cfg.n_prefixes, cfg.prefix_seed,
                )
                current = current_mlp_output(model, top, request.prompt, request.subject)
                keys.append(k)
                residuals.append((v_star - current) / remaining)
            K = np.stack(keys, axis=1)  # (d_ff, N)
            R = np.stack(residuals, axis=1)  # (d, N)
            A = cov_by_layer[layer].regularized + K @ K.T
            X = _solve_spd(A, K)  # (d_ff, N)
            delta = R @ X.T
            model.set_mlp_weight(layer, model.mlp_weight(layer) + delta)
        replacements = {l: model.mlp_weight(l).copy() for l in layers}
    finally:
        for l, snap in snapshots.items():
            model.set_mlp_weight(l, snap)

    return WeightDelta(
        method="MEMIT",
        entries=[
            DeltaEntry(layer=l, original=snapshots[l], replacement=replacements[l])
            for l in layers
        ],
        metadata={
            "layers": list(layers),
            "n_requests": len(requests),
            "optimizer_steps": cfg.optimizer.steps,
        },
    )


def ft_update(
    model: TinyTransformer, request: EditRequest, cfg: EditConfig
) -> WeightDelta:
    """Plain gradient descent on the target NLL, restricted to one down-projection."""
    layer = cfg.layer
    prompt_ids = model.tokenizer.encode(request.prompt)
    target_ids = model.tokenizer.encode(request.target)
    original = model.mlp_weight(layer).copy()
    try:
        for step in range(cfg.ft_steps):
            loss, grads = model.target_nll(prompt_ids, target_ids, with_grads=True)
            if not np.isfinite(loss):
                raise OptimizationError("non-finite loss", step=step)
            g = grads["d_w_proj"][layer]
            model.set_mlp_weight(layer, model.mlp_weight(layer) - cfg.ft_step_size * g)
        replacement = model.mlp_weight(layer).copy()
    finally:
        model.set_mlp_weight(layer, original)
    return WeightDelta(
        method="FT",
        entries=[DeltaEntry(layer=layer, original=original, replacement=replacement)],
        metadata={"layer": layer, "steps": cfg.ft_steps, "step_size": cfg.ft_step_size},
    )


def lora_update(
    model: TinyTransformer, request: EditRequest, cfg: EditConfig
) -> WeightDelta:
    """Low-rank adapter A @ B on one down-projection, merged into the delta."""
    layer = cfg.layer
    d, f = model.mlp_weight(layer).shape
    r = cfg.lora_rank
    rng = np.random.default_rng(cfg.lora_seed)
    A = rng.normal(0.0, 0.02, size=(d, r))
    B = np.zeros((r, f))
    prompt_ids = model.tokenizer.encode(request.prompt)
    target_ids = model.tokenizer.encode(request.target)
    original = model.mlp_weight(layer).copy()
    try:
        for step in range(cfg.lora_steps):
            model.set_mlp_weight(layer, original + cfg.lora_scale * A @ B)
            loss, grads = model.target_nll(prompt_ids, target_ids, with_grads=True)
            if not np.isfinite(loss):
                raise OptimizationError("non-finite loss", step=step)
            dW = grads["d_w_proj"][layer]
            dA = cfg.lora_scale * dW @ B.T
            dB = cfg.lora_scale * A.T @ dW
            A -= cfg.lora_step_size * dA
            B -= cfg.lora_step_size * dB
        replacement = original + cfg.lora_scale * A @ B
    finally:
        model.set_mlp_weight(layer, original)
    return WeightDelta(
        method="LoRA",
        entries=[DeltaEntry(layer=layer, original=original, replacement=replacement)],
        metadata={
            "layer": layer,
            "rank": r,
            "scale": cfg.lora_scale,
            "steps": cfg.lora_steps,
            "step_size": cfg.lora_step_size,
        },
    )


def apply_delta(model: TinyTransformer, delta: WeightDelta) -> None:
    if delta.applied:
        raise DeltaStateError("delta is already applied")
    for entry in delta.entries:
        model.set_mlp_weight(entry.layer, entry.replacement)
    delta.applied = True


def revert_delta(model: TinyTransformer, delta: WeightDelta) -> None:
    if not delta.applied:
        raise DeltaStateError("delta has not been applied")
    for entry in delta.entries:
        model.set_mlp_weight(entry.layer, entry.original)
    delta.applied = False
