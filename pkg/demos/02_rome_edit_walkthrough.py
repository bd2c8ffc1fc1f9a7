"""Anatomy of a single rank-one (ROME) weight edit on the toy transformer.

Shows the three ingredients (subject key, optimized value, covariance
statistics), applies the closed-form update, and verifies both the algebraic
exactness and the behavioral flip, then reverts bit-exactly.
"""

from pathlib import Path

import numpy as np

from prodedit.editing import (
    EditConfig,
    EditRequest,
    OptimizerConfig,
    apply_delta,
    compute_subject_key,
    estimate_covariance,
    optimize_value,
    revert_delta,
    rome_update,
)
from prodedit.evaluation import target_token_accuracy
from prodedit.model import TinyTransformer

FIXTURES = Path(__file__).parent.parent / "fixtures"

CORPUS = [
    "One feature of Frying Pan is durable ceramic",
    "The intention of buying Blender is to make smoothies",
    "The color of Night Lamp is warm white",
    "Product descriptions mention materials, sizes, and warranty terms",
]


def main():
    model = TinyTransformer.load(FIXTURES / "toy_model.bin")
    cfg = EditConfig(layer=2, optimizer=OptimizerConfig(40, 1.0, 8.0))

    # A subject-terminal prompt: the subject's last token is the last prompt
    # token, so the rewired MLP output directly feeds the next prediction.
    request = EditRequest(subject="qq", prompt="One feature of qq", target="z")
    print(f"Edit request: {request.prompt!r} -> {request.target!r}\n")

    before = target_token_accuracy(model, request.prompt, request.target)
    print(f"Pre-edit accuracy on the target token: {before:.2f}")

    print("\n1. Covariance of MLP-input activations at the edit layer")
    cov = estimate_covariance(model, cfg.layer, CORPUS, 400)
    print(f"   C is {cov.C.shape}, built from {cov.n_samples} activations, "
          f"damping lambda = {cov.damping:.3e}")

    print("\n2. Subject key k*: the MLP input at the subject's last token")
    k_star = compute_subject_key(model, cfg.layer, request.prompt, request.subject)
    print(f"   |k*| = {np.linalg.norm(k_star):.3f}")

    print("\n3. Value v*: gradient-optimized replacement MLP output")
    v_star = optimize_value(
        model, cfg.layer, request.prompt, request.subject, request.target, cfg.optimizer
    )
    print(f"   |v*| = {np.linalg.norm(v_star):.3f}")

    print("\nClosed-form rank-one update: W_hat = W + (v* - W k*) u^T")
    delta = rome_update(model, request, cov, cfg)
    W, W_hat = delta.entries[0].original, delta.entries[0].replacement
    exact = np.linalg.norm(W_hat @ k_star - v_star) / np.linalg.norm(v_star)
    sv = np.linalg.svd(W_hat - W, compute_uv=False)
    print(f"   exactness |W_hat k* - v*| / |v*| = {exact:.2e}")
    print(f"   rank of the update: {(sv > 1e-8).sum()} (top sv {sv[0]:.3e})")

    checksum = model.checksum()
    apply_delta(model, delta)
    after = target_token_accuracy(model, request.prompt, request.target)
    print(f"\nPost-edit accuracy on the target token: {after:.2f}")

    revert_delta(model, delta)
    print(f"Reverted; weights bit-identical: {model.checksum() == checksum}")


if __name__ == "__main__":
    main()
