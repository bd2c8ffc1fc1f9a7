"""Shared fixtures: toy models, scripted replay backends, catalog records."""

from __future__ import annotations

from pathlib import Path

import pytest

from prodedit.backends import BackendConfig, clear_transcript_cache, record_completion
from prodedit.catalog import Category, ProductRecord
from prodedit.model import ModelConfig, TinyTransformer

FIXTURES = Path(__file__).parent.parent / "fixtures"


@pytest.fixture(autouse=True)
def _fresh_transcript_cache():
    clear_transcript_cache()
    yield
    clear_transcript_cache()


@pytest.fixture
def small_model():
    return TinyTransformer(
        ModelConfig(n_layers=2, d_model=32, d_ff=64, n_heads=4, max_seq_len=128, seed=1)
    )


@pytest.fixture(scope="session")
def toy_model():
    return TinyTransformer(ModelConfig(seed=7))


@pytest.fixture
def product():
    return ProductRecord(
        product_id="B0TEST001",
        title="Vev Vigano Eco Ceramic Nonstick Frying Pan",
        category=Category.HOME_KITCHEN,
        description="Frying pan with an eco-friendly ceramic nonstick coating.",
        details={"Material": "Ceramic", "Diameter": "28 cm"},
    )


class ScriptedBackend:
    """Helper building a replay transcript and its BackendConfig in a tmp dir."""

    def __init__(self, tmp_path: Path, model_id: str, name: str = "transcript.jsonl"):
        self.path = tmp_path / name
        self.model_id = model_id
        self.config = BackendConfig(
            kind="replay", model_id=model_id, transcript_path=str(self.path)
        )

    def script(self, prompt: str, response: str, **kw) -> None:
        record_completion(self.path, self.model_id, prompt, response, **kw)


@pytest.fixture
def scripted(tmp_path):
    def make(model_id: str, name: str = "transcript.jsonl") -> ScriptedBackend:
        return ScriptedBackend(tmp_path, model_id, name)

    return make
