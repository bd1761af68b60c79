"""Provider-agnostic LLM access.

One Gateway instance is bound to one model and wraps a provider with
bounded retries (3 attempts, exponential backoff from 1s), an in-memory
response cache keyed by the full request hash, and attempt logging. Two
providers ship here: an OpenAI-compatible HTTP provider with env-var
credentials and request throttling, and a fully deterministic mock that
first consults a fixtures directory (request-hash -> response text) and
otherwise synthesizes a seeded response, so mock pipelines run with zero
network.

The generation runner fans (prompt x repetition) cells through a bounded
thread pool, skips cells already present in the archive, and records
per-cell failures without aborting the batch.
"""

from __future__ import annotations

import hashlib
import json
import logging
import os
import random
import re
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import Callable, Protocol, Sequence

from .archive import Archive
from .config import JUDGE_PARSE_RETRY_NOTE, JUDGE_RUBRICS, derive_seed
from .promptgen import PromptSpec

logger = logging.getLogger(__name__)

MAX_ATTEMPTS = 3
BACKOFF_BASE_SECONDS = 1.0
JUDGE_PARSE_RETRIES = 3

FAILURE_LABELS = ("P1", "P2", "P3", "P4", "P5", "P6", "P7", "P8")

# Reply keys expected per judge rubric, mapped to verdict score names.
_RUBRIC_KEYS = {
    "functional": {"functional": "functional"},
    "performance": {"time": "time_complexity", "space": "space_complexity"},
    "reliability": {"reliability": "reliability"},
}


class GatewayError(Exception):
    pass


class AuthError(GatewayError):
    pass


class RateLimitError(GatewayError):
    pass


class NetworkError(GatewayError):
    pass


class ProviderError(GatewayError):
    """Terminal provider-side rejection (4xx)."""


class JudgeFailure(GatewayError):
    """Judge reply stayed unparseable after the retry budget."""


@dataclass(frozen=True)
class ModelId:
    provider: str
    name: str

    @staticmethod
    def parse(text: str) -> "ModelId":
        if ":" not in text:
            raise ValueError(f"model id {text!r} must look like provider:name")
        provider, name = text.split(":", 1)
        if not provider or not name:
            raise ValueError(f"model id {text!r} must look like provider:name")
        return ModelId(provider=provider, name=name)

    def __str__(self) -> str:
        return f"{self.provider}:{self.name}"


@dataclass
class ChatRequest:
    model: str
    messages: list[dict]
    temperature: float | None = None
    max_tokens: int | None = None
    # Distinguishes repetition cells and parse retries; real providers
    # never see it, but it enters the request hash.
    nonce: object = None


@dataclass
class ChatResponse:
    text: str
    prompt_tokens: int = 0
    completion_tokens: int = 0
    latency_ms: float = 0.0
    attempts: int = 1


def request_hash(request: ChatRequest) -> str:
    payload = {
        "model": request.model,
        "messages": request.messages,
        "temperature": request.temperature,
        "max_tokens": request.max_tokens,
        "nonce": request.nonce,
    }
    blob = json.dumps(payload, sort_keys=True, default=str).encode("utf-8")
    return hashlib.sha256(blob).hexdigest()


class Provider(Protocol):
    def complete(self, request: ChatRequest) -> ChatResponse: ...


# ---------------------------------------------------------------------------
# Providers
# ---------------------------------------------------------------------------

_CODE_TEMPLATES = (
    # clean, self-contained
    "def main():\n"
    "    # walk the records and keep the positive ones\n"
    "    records = [{n}, 2, 3]\n"
    "    kept = [r for r in records if r > 0]\n"
    "    print(sum(kept))\n"
    "\n"
    "\n"
    "if __name__ == '__main__':\n"
    "    main()\n",
    # clean, uses stdlib import correctly
    "import json\n"
    "\n"
    "\n"
    "def load(path):\n"
    "    # tolerate a missing file by returning an empty payload\n"
    "    try:\n"
    "        with open(path) as fh:\n"
    "            return json.load(fh)\n"
    "    except FileNotFoundError:\n"
    "        return {{}}\n"
    "\n"
    "\n"
    "print(load('data_{n}.json'))\n",
    # unused import, missing comments
    "import os\n"
    "\n"
    "values = list(range({n}))\n"
    "total = 0\n"
    "for v in values:\n"
    "    total += v * v\n"
    "print(total)\n",
    # stray bracket: fails syntax checking
    "def process(items):\n"
    "    out = []\n"
    "    for item in items:\n"
    "        out.append(item * {n}])\n"
    "    return out\n"
    "\n"
    "print(process([1, 2]))\n",
    # verbose with edge handling
    "def safe_div(a, b):\n"
    "    # guard the zero denominator before dividing\n"
    "    if b == 0:\n"
    "        raise ValueError('division by zero')\n"
    "    return a / b\n"
    "\n"
    "\n"
    "try:\n"
    "    print(safe_div({n}, 3))\n"
    "except ValueError as exc:\n"
    "    print('error:', exc)\n",
)


class MockProvider:
    """Deterministic offline provider.

    Resolution order: a fixture file named `<request hash>.txt` in the
    fixtures directory wins; otherwise the reply is synthesized from a
    seed derived from (provider seed, request hash), so identical
    requests always produce identical text and nothing touches the
    network.
    """

    def __init__(self, seed: int = 0, fixtures_dir: str | Path | None = None):
        self.seed = seed
        self.fixtures_dir = Path(fixtures_dir) if fixtures_dir else None

    def complete(self, request: ChatRequest) -> ChatResponse:
        key = request_hash(request)
        if self.fixtures_dir is not None:
            fixture = self.fixtures_dir / f"{key}.txt"
            if fixture.exists():
                return ChatResponse(text=fixture.read_text(encoding="utf-8"))
        return ChatResponse(text=self._synthesize(request, key))

    def _synthesize(self, request: ChatRequest, key: str) -> str:
        rng = random.Random(derive_seed(self.seed, key))
        text = "\n".join(m.get("content", "") for m in request.messages)

        if '"functional"' in text:
            return json.dumps(
                {"functional": 40 + rng.randrange(61), "rationale": "mock functional review"}
            )
        if '"time"' in text and '"space"' in text:
            return json.dumps(
                {
                    "time": 40 + rng.randrange(61),
                    "space": 40 + rng.randrange(61),
                    "rationale": "mock complexity estimate",
                }
            )
        if '"reliability"' in text:
            return json.dumps(
                {"reliability": 40 + rng.randrange(61), "rationale": "mock reliability review"}
            )
        if '"labels"' in text:
            labels = sorted(rng.sample(["P2", "P3", "P4", "P5", "P6"], rng.randrange(1, 3)))
            return json.dumps({"labels": labels, "rationale": "mock failure review"})
        if "Answer with exactly one word" in text:
            return "yes"
        if "Reply with a numbered list" in text:
            match = re.search(r"Write (\d+) distinct task descriptions", text)
            count = int(match.group(1)) if match else 5
            topic = rng.randrange(1000)
            return "\n".join(
                f"{i + 1}. Process input set {topic + i} and report a short summary "
                "of the records it contains."
                for i in range(count)
            )

        if rng.random() < 0.12:
            # occasional dud: fence with no code, like a refusal or cutoff
            return "I could not produce a complete script here.\n\n```python\n```"
        body = rng.choice(_CODE_TEMPLATES).format(n=rng.randrange(2, 9))
        return (
            "Here is a script for the task.\n\n"
            f"```python\n{body}```\n\n"
            "This covers the basic flow."
        )


class HttpProvider:
    """OpenAI-compatible chat-completions client.

    Credentials come from LIBREADY_<PROVIDER>_KEY; requests are throttled
    to at most one per `min_interval` seconds.
    """

    def __init__(
        self,
        provider_key: str,
        base_url: str,
        timeout: float = 60.0,
        min_interval: float = 0.0,
    ):
        self.provider_key = provider_key
        self.base_url = base_url.rstrip("/")
        self.timeout = timeout
        self.min_interval = min_interval
        self._last_call = 0.0
        import threading

        self._lock = threading.Lock()

    def _api_key(self) -> str:
        env = f"LIBREADY_{self.provider_key.upper()}_KEY"
        key = os.environ.get(env)
        if not key:
            raise AuthError(f"set {env} to use provider {self.provider_key!r}")
        return key

    def _throttle(self) -> None:
        if self.min_interval <= 0:
            return
        with self._lock:
            wait = self._last_call + self.min_interval - time.monotonic()
            if wait > 0:
                time.sleep(wait)
            self._last_call = time.monotonic()

    def complete(self, request: ChatRequest) -> ChatResponse:
        import httpx

        payload: dict = {"model": request.model, "messages": request.messages}
        if request.temperature is not None:
            payload["temperature"] = request.temperature
        if request.max_tokens is not None:
            payload["max_tokens"] = request.max_tokens

        self._throttle()
        try:
            resp = httpx.post(
                f"{self.base_url}/chat/completions",
                json=payload,
                headers={"Authorization": f"Bearer {self._api_key()}"},
                timeout=self.timeout,
            )
        except httpx.TransportError as exc:
            raise NetworkError(str(exc)) from exc

        if resp.status_code in (401, 403):
            raise AuthError(f"provider rejected credentials ({resp.status_code})")
        if resp.status_code == 429:
            raise RateLimitError("provider rate limit")
        if 400 <= resp.status_code < 500:
            raise ProviderError(f"provider error {resp.status_code}: {resp.text[:200]}")
        if resp.status_code >= 500:
            raise NetworkError(f"provider unavailable ({resp.status_code})")

        data = resp.json()
        usage = data.get("usage") or {}
        return ChatResponse(
            text=data["choices"][0]["message"]["content"] or "",
            prompt_tokens=int(usage.get("prompt_tokens", 0)),
            completion_tokens=int(usage.get("completion_tokens", 0)),
        )


# ---------------------------------------------------------------------------
# Gateway
# ---------------------------------------------------------------------------


class Gateway:
    """One model behind retries and a response cache."""

    def __init__(
        self,
        provider: Provider,
        model: ModelId,
        max_attempts: int = MAX_ATTEMPTS,
        backoff_base: float = BACKOFF_BASE_SECONDS,
        sleeper: Callable[[float], None] = time.sleep,
    ):
        self.provider = provider
        self.model = model
        self.max_attempts = max_attempts
        self.backoff_base = backoff_base
        self.sleeper = sleeper
        self._cache: dict[str, ChatResponse] = {}
        import threading

        self._cache_lock = threading.Lock()

    def complete(
        self,
        messages: Sequence[dict],
        nonce: object = None,
        temperature: float | None = None,
        max_tokens: int | None = None,
    ) -> ChatResponse:
        request = ChatRequest(
            model=self.model.name,
            messages=list(messages),
            temperature=temperature,
            max_tokens=max_tokens,
            nonce=nonce,
        )
        key = request_hash(request)
        with self._cache_lock:
            if key in self._cache:
                return self._cache[key]

        response = self._complete_with_retry(request)
        with self._cache_lock:
            self._cache.setdefault(key, response)
        return response

    def _complete_with_retry(self, request: ChatRequest) -> ChatResponse:
        last_error: GatewayError | None = None
        for attempt in range(1, self.max_attempts + 1):
            start = time.monotonic()
            try:
                response = self.provider.complete(request)
            except (RateLimitError, NetworkError) as exc:
                last_error = exc
                logger.warning(
                    "attempt %d/%d against %s failed: %s",
                    attempt,
                    self.max_attempts,
                    self.model,
                    exc,
                )
                if attempt < self.max_attempts:
                    self.sleeper(self.backoff_base * 2 ** (attempt - 1))
                continue
            response.latency_ms = (time.monotonic() - start) * 1000.0
            response.attempts = attempt
            return response
        raise last_error if last_error else GatewayError("no attempts made")

    def chat(self, messages: Sequence[dict], nonce: object = None) -> str:
        """Text-only convenience used by prompt generation/validation."""
        return self.complete(messages, nonce=nonce).text

    def cache_key(self, messages: Sequence[dict], nonce: object = None) -> str:
        return request_hash(
            ChatRequest(model=self.model.name, messages=list(messages), nonce=nonce)
        )


# ---------------------------------------------------------------------------
# Code extraction
# ---------------------------------------------------------------------------

_FENCE_RE = re.compile(r"```[ \t]*([^\n`]*)\n(.*?)```", re.DOTALL)
_PYTHON_TAGS = {"python", "py", "python3"}


def extract_code(raw_text: str) -> str:
    """Snippet inside a model reply.

    Largest python-tagged fenced block, else the largest fenced block of
    any tag, else the whole text. Fence markers are stripped.
    """
    blocks = [(tag.strip().lower(), body) for tag, body in _FENCE_RE.findall(raw_text)]
    python_blocks = [body for tag, body in blocks if tag in _PYTHON_TAGS]
    pool = python_blocks or [body for _, body in blocks]
    if pool:
        return max(pool, key=len).strip()
    return raw_text.strip()


# ---------------------------------------------------------------------------
# Generation runner
# ---------------------------------------------------------------------------


@dataclass
class RenderedPrompt:
    spec: PromptSpec
    messages: list[dict]


@dataclass
class GenerationRecord:
    prompt_id: str
    library_id: str
    scenario_id: str
    task_id: str
    strategy: str
    model: str
    rep_index: int
    raw_text: str
    extracted_code: str
    created_at: str
    cache_key: str
    status: str = "ok"
    error: str | None = None
    latency_ms: float = 0.0
    attempts: int = 1

    def to_dict(self) -> dict:
        return dict(self.__dict__)

    @staticmethod
    def from_dict(obj: dict) -> "GenerationRecord":
        return GenerationRecord(**{k: obj[k] for k in GenerationRecord.__dataclass_fields__})


def _utc_now() -> str:
    return datetime.now(timezone.utc).isoformat()


def run_generation(
    gw: Gateway,
    rendered: Sequence[RenderedPrompt],
    reps: int,
    archive: Archive,
    concurrency: int = 4,
) -> list[GenerationRecord]:
    """Collect |prompts| x reps generation records.

    Cells already present in the archive are reused without a provider
    call; a terminally failing cell becomes an error record and the batch
    carries on. Records are appended to the archive in deterministic
    (prompt, rep) order regardless of thread completion order.
    """
    if reps < 1:
        raise ValueError("reps must be >= 1")

    cells = [(rp, rep) for rp in rendered for rep in range(reps)]
    keys = [gw.cache_key(rp.messages, nonce=rep) for rp, rep in cells]

    pending = [i for i, key in enumerate(keys) if not archive.has(key)]
    results: dict[int, GenerationRecord] = {}

    def fetch(index: int) -> GenerationRecord:
        rp, rep = cells[index]
        spec = rp.spec
        try:
            response = gw.complete(rp.messages, nonce=rep)
            return GenerationRecord(
                prompt_id=spec.id,
                library_id=spec.library_id,
                scenario_id=spec.scenario_id,
                task_id=spec.task_id,
                strategy=spec.strategy,
                model=str(gw.model),
                rep_index=rep,
                raw_text=response.text,
                extracted_code=extract_code(response.text),
                created_at=_utc_now(),
                cache_key=keys[index],
                latency_ms=response.latency_ms,
                attempts=response.attempts,
            )
        except GatewayError as exc:
            logger.error("cell %s rep %d failed terminally: %s", spec.id, rep, exc)
            return GenerationRecord(
                prompt_id=spec.id,
                library_id=spec.library_id,
                scenario_id=spec.scenario_id,
                task_id=spec.task_id,
                strategy=spec.strategy,
                model=str(gw.model),
                rep_index=rep,
                raw_text="",
                extracted_code="",
                created_at=_utc_now(),
                cache_key=keys[index],
                status="error",
                error=str(exc),
            )

    if pending:
        with ThreadPoolExecutor(max_workers=max(1, concurrency)) as pool:
            for index, record in zip(pending, pool.map(fetch, pending)):
                results[index] = record

    out: list[GenerationRecord] = []
    for i, key in enumerate(keys):
        if archive.has(key):
            out.append(GenerationRecord.from_dict(archive.get(key)))
        else:
            record = results[i]
            archive.append(record.to_dict())
            out.append(record)
    return out


# ---------------------------------------------------------------------------
# Judging
# ---------------------------------------------------------------------------


@dataclass
class JudgeVerdict:
    rubric: str
    scores: dict[str, int] = field(default_factory=dict)
    rationale: str = ""
    parse_attempts: int = 0


def _strip_reply_fences(text: str) -> str:
    match = _FENCE_RE.search(text)
    return match.group(2).strip() if match else text.strip()


def _parse_json_reply(text: str) -> dict | None:
    candidate = _strip_reply_fences(text)
    if not candidate.startswith("{"):
        start, end = candidate.find("{"), candidate.rfind("}")
        if start == -1 or end <= start:
            return None
        candidate = candidate[start : end + 1]
    try:
        obj = json.loads(candidate)
    except json.JSONDecodeError:
        return None
    return obj if isinstance(obj, dict) else None


def _clamp_score(value: object) -> int | None:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        return None
    return max(0, min(100, int(round(value))))


def _judge_messages(rubric: str, snippet: str, task_text: str) -> list[dict]:
    return [
        {"role": "system", "content": JUDGE_RUBRICS[rubric]},
        {
            "role": "user",
            "content": f"Task:\n{task_text}\n\nSnippet:\n```python\n{snippet}\n```",
        },
    ]


def judge(gw: Gateway, snippet: str, task_text: str, rubric: str) -> JudgeVerdict:
    """Score one snippet under one rubric via the judge model.

    Empty snippets short-circuit to zero scores without a provider call.
    Replies must match the rubric's JSON schema; up to three parse
    retries, then JudgeFailure.
    """
    keys = _RUBRIC_KEYS[rubric]
    if not snippet.strip():
        return JudgeVerdict(
            rubric=rubric,
            scores={name: 0 for name in keys.values()},
            rationale="empty snippet",
        )

    messages = _judge_messages(rubric, snippet, task_text)
    for retry in range(JUDGE_PARSE_RETRIES + 1):
        attempt_messages = messages
        if retry:
            attempt_messages = messages + [
                {"role": "system", "content": JUDGE_PARSE_RETRY_NOTE}
            ]
        reply = gw.chat(attempt_messages, nonce=("judge", rubric, retry))
        obj = _parse_json_reply(reply)
        if obj is None:
            continue
        scores = {}
        for reply_key, score_name in keys.items():
            value = _clamp_score(obj.get(reply_key))
            if value is None:
                scores = None
                break
            scores[score_name] = value
        if scores is None:
            continue
        return JudgeVerdict(
            rubric=rubric,
            scores=scores,
            rationale=str(obj.get("rationale", "")),
            parse_attempts=retry,
        )
    raise JudgeFailure(f"judge reply unparseable after {JUDGE_PARSE_RETRIES} retries")


def judge_labels(gw: Gateway, snippet: str, task_text: str) -> tuple[list[str], str]:
    """Failure-pattern labels (subset of P1..P8) for a low-quality snippet."""
    messages = _judge_messages("failure_labels", snippet, task_text)
    for retry in range(JUDGE_PARSE_RETRIES + 1):
        attempt_messages = messages
        if retry:
            attempt_messages = messages + [
                {"role": "system", "content": JUDGE_PARSE_RETRY_NOTE}
            ]
        reply = gw.chat(attempt_messages, nonce=("labels", retry))
        obj = _parse_json_reply(reply)
        if obj is None or not isinstance(obj.get("labels"), list):
            continue
        labels = [str(l) for l in obj["labels"]]
        if all(l in FAILURE_LABELS for l in labels):
            return sorted(set(labels)), str(obj.get("rationale", ""))
    raise JudgeFailure(
        f"failure-label reply unparseable after {JUDGE_PARSE_RETRIES} retries"
    )
