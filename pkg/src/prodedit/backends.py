"""Text-generation backends with a deterministic record/replay transcript layer.

Every LLM role in the pipeline (student, judge, corrector, plausibility
scorer) is reached through the same ``complete()`` surface. A transcript is a
JSON-lines file of ``{"hash", "request", "response"}`` records keyed by a
content hash of the request, which makes offline runs bit-reproducible.
"""

from __future__ import annotations

import hashlib
import json
import logging
import os
import threading
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

from .errors import BackendError, CacheMissError, ConfigError

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class GenRequest:
    prompt: str
    model_id: str
    max_tokens: int = 256
    temperature: float = 0.0
    image_uri: str | None = None

    def content_hash(self) -> str:
        payload = json.dumps(
            {
                "model_id": self.model_id,
                "prompt": self.prompt,
                "max_tokens": self.max_tokens,
                "temperature": self.temperature,
                "image_uri": self.image_uri,
            },
            sort_keys=True,
            ensure_ascii=False,
        )
        return hashlib.sha256(payload.encode("utf-8")).hexdigest()


@dataclass(frozen=True)
class GenResponse:
    text: str
    model_id: str
    usage: tuple[int, int] = (0, 0)  # (prompt tokens, completion tokens)


@dataclass
class BackendConfig:
    kind: str = "replay"  # "http_api" or "replay"
    model_id: str = ""
    endpoint: str | None = None
    credentials_env: str = ""
    transcript_path: str | None = None
    record: bool = False
    max_concurrency: int = 4
    max_retries: int = 2
    backoff_base: float = 0.5

    def __post_init__(self):
        if self.kind not in ("http_api", "replay"):
            raise ConfigError(f"unknown backend kind: {self.kind!r}")
        if self.kind == "http_api" and not self.endpoint:
            raise ConfigError("http_api backend requires an endpoint")
        if self.kind == "replay" and not self.transcript_path:
            raise ConfigError("replay backend requires a transcript path")


class Transcript:
    """Hash-keyed store of frozen completions, safe for concurrent reads."""

    def __init__(self, path: str | Path):
        self.path = Path(path)
        self._entries: dict[str, str] = {}
        self._lock = threading.Lock()
        if self.path.exists():
            with open(self.path, encoding="utf-8") as fh:
                for line in fh:
                    line = line.strip()
                    if not line:
                        continue
                    rec = json.loads(line)
                    self._entries[rec["hash"]] = rec["response"]

    def __len__(self) -> int:
        return len(self._entries)

    def lookup(self, request_hash: str) -> str | None:
        return self._entries.get(request_hash)

    def record(self, req: GenRequest, response_text: str) -> None:
        h = req.content_hash()
        with self._lock:
            if h in self._entries:
                return
            self._entries[h] = response_text
            with open(self.path, "a", encoding="utf-8") as fh:
                fh.write(
                    json.dumps(
                        {
                            "hash": h,
                            "request": {
                                "model_id": req.model_id,
                                "prompt": req.prompt,
                                "max_tokens": req.max_tokens,
                                "temperature": req.temperature,
                                "image_uri": req.image_uri,
                            },
                            "response": response_text,
                        },
                        ensure_ascii=False,
                    )
                    + "\n"
                )


_transcript_cache: dict[str, Transcript] = {}
_transcript_cache_lock = threading.Lock()


def _get_transcript(path: str) -> Transcript:
    key = str(Path(path).resolve())
    with _transcript_cache_lock:
        if key not in _transcript_cache:
            _transcript_cache[key] = Transcript(path)
        return _transcript_cache[key]


def clear_transcript_cache() -> None:
    with _transcript_cache_lock:
        _transcript_cache.clear()


def record_completion(
    path: str | Path,
    model_id: str,
    prompt: str,
    response: str,
    max_tokens: int = 256,
    temperature: float = 0.0,
    image_uri: str | None = None,
) -> None:
    """Author one transcript entry; used to script offline replay runs."""
    req = GenRequest(prompt, model_id, max_tokens, temperature, image_uri)
    _get_transcript(str(path)).record(req, response)


class CallCounter:
    """Thread-safe counters used by tests to probe backend traffic."""

    def __init__(self):
        self._lock = threading.Lock()
        self.calls = 0
        self.in_flight = 0
        self.max_in_flight = 0

    def enter(self):
        with self._lock:
            self.calls += 1
            self.in_flight += 1
            self.max_in_flight = max(self.max_in_flight, self.in_flight)

    def exit(self):
        with self._lock:
            self.in_flight -= 1


_counters: dict[int, CallCounter] = {}


def call_counter(cfg: BackendConfig) -> CallCounter:
    """Counter tied to one config object's identity."""
    return _counters.setdefault(id(cfg), CallCounter())


def _http_complete(req: GenRequest, cfg: BackendConfig) -> GenResponse:
    import requests

    headers = {"Content-Type": "application/json"}
    if cfg.credentials_env:
        key = os.environ.get(cfg.credentials_env)
        if key:
            headers["Authorization"] = f"Bearer {key}"
    body = {
        "model": req.model_id,
        "messages": [{"role": "user", "content": req.prompt}],
        "max_tokens": req.max_tokens,
        "temperature": req.temperature,
    }
    if req.image_uri:
        body["messages"][0]["content"] = [
            {"type": "text", "text": req.prompt},
            {"type": "image_url", "image_url": {"url": req.image_uri}},
        ]
    last_exc: Exception | None = None
    for attempt in range(cfg.max_retries + 1):
        try:
            resp = requests.post(cfg.endpoint, json=body, headers=headers, timeout=120)
            resp.raise_for_status()
            data = resp.json()
            text = data["choices"][0]["message"]["content"]
            usage = data.get("usage", {})
            return GenResponse(
                text=text,
                model_id=req.model_id,
                usage=(
                    int(usage.get("prompt_tokens", 0)),
                    int(usage.get("completion_tokens", 0)),
                ),
            )
        except Exception as exc:  # noqa: BLE001 - retried, then surfaced
            last_exc = exc
            if attempt < cfg.max_retries:
                delay = cfg.backoff_base * (2**attempt)
                logger.warning("backend attempt %d failed (%s); retrying", attempt + 1, exc)
                time.sleep(delay)
    raise BackendError(
        f"backend request failed after {cfg.max_retries + 1} attempts: {last_exc}",
        attempts=cfg.max_retries + 1,
    )


def complete(req: GenRequest, cfg: BackendConfig) -> GenResponse:
    """Run one completion against the configured backend."""
    if not req.prompt:
        raise ValueError("prompt must be nonempty")
    counter = call_counter(cfg)
    counter.enter()
    try:
        if cfg.kind == "replay":
            transcript = _get_transcript(cfg.transcript_path)
            text = transcript.lookup(req.content_hash())
            if text is None:
                raise CacheMissError(req.content_hash())
            return GenResponse(text=text, model_id=req.model_id)
        response = _http_complete(req, cfg)
        if cfg.record and cfg.transcript_path:
            _get_transcript(cfg.transcript_path).record(req, response.text)
        return response
    finally:
        counter.exit()


@dataclass
class BatchResult:
    """Per-item outcome of a batch call; exactly one of the two fields is set."""

    response: GenResponse | None = None
    error: Exception | None = None

    @property
    def ok(self) -> bool:
        return self.error is None


def batch_complete(reqs: list[GenRequest], cfg: BackendConfig) -> list[BatchResult]:
    """Complete many requests with at most ``max_concurrency`` in flight.

    Output order matches input order; per-item failures are embedded, never
    raised.
    """
    if not reqs:
        return []

    def run_one(req: GenRequest) -> BatchResult:
        try:
            return BatchResult(response=complete(req, cfg))
        except Exception as exc:  # noqa: BLE001 - embedded per contract
            return BatchResult(error=exc)

    with ThreadPoolExecutor(max_workers=cfg.max_concurrency) as pool:
        return list(pool.map(run_one, reqs))


def plausibility(statement: str, scorer: BackendConfig) -> float:
    """Score a declarative statement's commonsense plausibility in [0, 1]."""
    if not statement:
        raise ValueError("statement must be nonempty")
    response = complete(
        GenRequest(prompt=statement, model_id=scorer.model_id, max_tokens=8), scorer
    )
    try:
        score = float(response.text.strip())
    except ValueError as exc:
        raise BackendError(f"scorer returned a non-numeric score: {response.text!r}") from exc
    if not 0.0 <= score <= 1.0:
        raise BackendError(f"plausibility score out of range: {score}")
    return score
