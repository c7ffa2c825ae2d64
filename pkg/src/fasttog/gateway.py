"""Uniform text-generation interface.

Provides the remote chat-completion adapter, a deterministic scripted mock
for tests and offline runs, reply parsers, a per-tag call ledger, and the
inner-knowledge answer baselines (direct, step-by-step, and self-consistency
voting).

Every logical generation call increments exactly one ledger counter exactly
once; transport retries never inflate the counts.
"""

from __future__ import annotations

import importlib.resources
import json
import os
import re
import string
import threading
import time
from dataclasses import dataclass
from pathlib import Path

import requests

from .errors import (
    ProviderError,
    ReplyParseError,
    ScriptExhaustedError,
    TransportError,
)

TAGS = ("pruning", "reasoning", "baseline", "g2t")
PRUNING_TEMPERATURE = 0.4
REASONING_TEMPERATURE = 0.1
DEFAULT_MAX_OUTPUT_TOKENS = 1024


@dataclass(frozen=True)
class PromptBundle:
    """A composed prompt plus the generation knobs it should run with."""

    system_preamble: str
    body: str
    option_labels: tuple[str, ...] = ()
    option_texts: tuple[str, ...] = ()
    temperature: float = REASONING_TEMPERATURE
    max_output_tokens: int = DEFAULT_MAX_OUTPUT_TOKENS


@dataclass(frozen=True)
class GenerationRequest:
    prompt: PromptBundle
    temperature: float
    max_output_tokens: int
    tag: str

    def __post_init__(self):
        if self.tag not in TAGS:
            raise ValueError(f"unknown request tag: {self.tag!r}")
        if not (0.0 <= self.temperature <= 2.0):
            raise ValueError(f"temperature out of range: {self.temperature}")
        if self.max_output_tokens < 1:
            raise ValueError("max_output_tokens must be positive")

    @classmethod
    def from_bundle(cls, bundle: PromptBundle, tag: str) -> "GenerationRequest":
        return cls(
            prompt=bundle,
            temperature=bundle.temperature,
            max_output_tokens=bundle.max_output_tokens,
            tag=tag,
        )


@dataclass(frozen=True)
class GenerationResponse:
    text: str
    latency_ms: int
    provider: str
    attempt: int


@dataclass(frozen=True)
class ParsedVerdict:
    kind: str  # "answer" | "unknown"
    text: str | None = None


class CallLedger:
    """Thread-safe per-tag call counters."""

    def __init__(self):
        self._counts = {tag: 0 for tag in TAGS}
        self._lock = threading.Lock()

    def increment(self, tag: str) -> None:
        if tag not in TAGS:
            raise ValueError(f"unknown ledger tag: {tag!r}")
        with self._lock:
            self._counts[tag] += 1

    def counts(self) -> dict[str, int]:
        with self._lock:
            return dict(self._counts)

    def total(self) -> int:
        with self._lock:
            return sum(self._counts.values())

    @property
    def pruning_calls(self) -> int:
        return self.counts()["pruning"]

    @property
    def reasoning_calls(self) -> int:
        return self.counts()["reasoning"]

    @property
    def baseline_calls(self) -> int:
        return self.counts()["baseline"]

    @property
    def g2t_calls(self) -> int:
        return self.counts()["g2t"]


def load_template(name: str, templates_dir: str | Path | None = None) -> tuple[str, str]:
    """Load a prompt template: first line is the system preamble, rest the body.

    Body templates carry named placeholders such as ``{question}``,
    ``{premise}``, ``{selection}``, ``{context}``. A directory override lets
    callers swap the wording without touching code.
    """
    if templates_dir is not None:
        text = (Path(templates_dir) / f"{name}.txt").read_text(encoding="utf-8")
    else:
        text = (
            importlib.resources.files("fasttog")
            .joinpath("templates", f"{name}.txt")
            .read_text(encoding="utf-8")
        )
    preamble, _, body = text.partition("\n")
    return preamble.strip(), body.strip("\n")


class ScriptedGateway:
    """Deterministic mock: replies consumed in order, one per call.

    A line equal to ``FAIL`` injects one transient failure; the retry then
    consumes the next line. Exhausting the script raises ScriptExhaustedError.
    """

    provider = "scripted"

    def __init__(self, replies, retry_budget: int = 3):
        self._lines = list(replies)
        self._pos = 0
        self._lock = threading.Lock()
        self.retry_budget = retry_budget
        self.ledger = CallLedger()

    @classmethod
    def from_file(cls, path: str | Path, retry_budget: int = 3) -> "ScriptedGateway":
        lines = Path(path).read_text(encoding="utf-8").splitlines()
        return cls([ln for ln in lines if ln.strip() != ""], retry_budget)

    def _next_line(self) -> str:
        with self._lock:
            if self._pos >= len(self._lines):
                raise ScriptExhaustedError(
                    f"script exhausted after {len(self._lines)} replies"
                )
            line = self._lines[self._pos]
            self._pos += 1
            return line

    def generate(self, req: GenerationRequest) -> GenerationResponse:
        if not req.prompt.body.strip():
            raise ValueError("empty prompt body")
        self.ledger.increment(req.tag)
        attempt = 0
        while True:
            line = self._next_line()
            if line == "FAIL":
                attempt += 1
                if attempt > self.retry_budget:
                    raise TransportError(f"retry budget exhausted after {attempt} failures")
                continue
            return GenerationResponse(line, 0, self.provider, attempt)


class ChatEndpoint:
    """Minimal chat-completion client: POST, retry transient failures, parse text.

    Endpoint, key, and model default to the FASTTOG_ENDPOINT, FASTTOG_API_KEY,
    and FASTTOG_MODEL environment variables. Concurrent in-flight requests are
    bounded by a semaphore.
    """

    def __init__(
        self,
        url: str | None = None,
        api_key: str | None = None,
        model: str | None = None,
        retry_budget: int = 3,
        backoff_base: float = 0.5,
        timeout: float = 60.0,
        max_in_flight: int = 4,
    ):
        self.url = url or os.environ.get("FASTTOG_ENDPOINT")
        self.api_key = api_key or os.environ.get("FASTTOG_API_KEY")
        self.model = model or os.environ.get("FASTTOG_MODEL")
        if not self.url or not self.model:
            raise ProviderError("endpoint URL and model name must be configured")
        self.retry_budget = retry_budget
        self.backoff_base = backoff_base
        self.timeout = timeout
        self._slots = threading.Semaphore(max_in_flight)
        self.ledger = CallLedger()

    @property
    def provider(self) -> str:
        return self.model or "chat"

    def generate(self, req: GenerationRequest) -> GenerationResponse:
        if not req.prompt.body.strip():
            raise ValueError("empty prompt body")
        self.ledger.increment(req.tag)
        payload = {
            "model": self.model,
            "messages": [
                {"role": "system", "content": req.prompt.system_preamble},
                {"role": "user", "content": req.prompt.body},
            ],
            "temperature": req.temperature,
            "max_tokens": req.max_output_tokens,
        }
        headers = {"Content-Type": "application/json"}
        if self.api_key:
            headers["Authorization"] = f"Bearer {self.api_key}"
        attempt = 0
        while True:
            started = time.monotonic()
            try:
                with self._slots:
                    resp = requests.post(
                        self.url, json=payload, headers=headers, timeout=self.timeout
                    )
            except (requests.ConnectionError, requests.Timeout) as exc:
                failure = str(exc)
            else:
                if resp.status_code < 400:
                    try:
                        text = resp.json()["choices"][0]["message"]["content"]
                    except (KeyError, IndexError, json.JSONDecodeError, ValueError) as exc:
                        raise ProviderError(f"malformed provider response: {exc}")
                    latency = int((time.monotonic() - started) * 1000)
                    return GenerationResponse(text, latency, self.provider, attempt)
                if resp.status_code in (429,) or resp.status_code >= 500:
                    failure = f"HTTP {resp.status_code}"
                else:
                    raise ProviderError(f"HTTP {resp.status_code}: {resp.text[:500]}")
            attempt += 1
            if attempt > self.retry_budget:
                raise TransportError(f"retry budget exhausted: {failure}")
            time.sleep(self.backoff_base * (2 ** (attempt - 1)))


# -- reply parsing ------------------------------------------------------------

_NONE_RE = re.compile(r"\bnone\b|\bno\s+relevant\b|\bnot\s+relevant\b", re.IGNORECASE)
_LETTER_RE = re.compile(r"(?<![A-Za-z])([A-Za-z])(?![A-Za-z])")
_UNKNOWN_RE = re.compile(r"^[\s\W]*unknown\b", re.IGNORECASE)
_ANSWER_MARKER_RE = re.compile(r"answer\s*:", re.IGNORECASE)


def parse_choice(text: str, n_options: int, k: int) -> list[int] | None:
    """Extract up to ``k`` distinct option indices from a reply.

    Accepts bare letters in any common dressing ("B", "B.", "(B)", "Option B",
    case-insensitive). Replies declaring no option relevant return ``None``.
    Letters beyond ``n_options`` are ignored. A reply with neither a usable
    letter nor a none-phrase raises ReplyParseError.
    """
    if n_options < 1:
        raise ValueError("n_options must be >= 1")
    if not (1 <= k <= n_options):
        raise ValueError(f"k must be in [1, {n_options}], got {k}")
    if _NONE_RE.search(text):
        return None
    indices: list[int] = []
    for letter in _LETTER_RE.findall(text):
        idx = ord(letter.upper()) - ord("A")
        if 0 <= idx < n_options and idx not in indices:
            indices.append(idx)
            if len(indices) == k:
                break
    if not indices:
        raise ReplyParseError("no option letter or none-phrase found", text)
    return indices


def parse_verdict(text: str) -> ParsedVerdict:
    """Classify a reasoning reply as an answer or an insufficiency verdict.

    A reply that leads with "Unknown" (after punctuation) is the unknown
    verdict; anything else is an answer, taking the text after the last
    "Answer:" marker when present, else the whole reply.
    """
    if _UNKNOWN_RE.match(text):
        return ParsedVerdict("unknown")
    matches = list(_ANSWER_MARKER_RE.finditer(text))
    answer = text[matches[-1].end() :] if matches else text
    answer = answer.strip()
    if not answer:
        return ParsedVerdict("unknown")
    return ParsedVerdict("answer", answer)


_ARTICLES = ("a", "an", "the")
_PUNCT_TABLE = str.maketrans({ch: " " for ch in string.punctuation})


def normalize_answer(text: str) -> str:
    """Lowercase, strip punctuation, collapse whitespace, drop leading articles.

    Shared by self-consistency voting and exact-match scoring; idempotent.
    """
    tokens = text.lower().translate(_PUNCT_TABLE).split()
    while len(tokens) > 1 and tokens[0] in _ARTICLES:
        tokens.pop(0)
    return " ".join(tokens)


# -- inner-knowledge baselines -------------------------------------------------


def baseline_answer(
    question: str,
    mode: str,
    gateway,
    samples: int = 5,
    templates_dir: str | Path | None = None,
) -> ParsedVerdict:
    """Answer from the model's own knowledge: direct, step-by-step, or voted.

    ``cot_sc`` issues ``samples`` step-by-step calls and majority-votes the
    normalized answers; ties resolve to the earliest sampled answer.
    """
    if mode not in ("io", "cot", "cot_sc"):
        raise ValueError(f"unknown baseline mode: {mode!r}")
    template = "baseline_io" if mode == "io" else "baseline_cot"
    preamble, body_tpl = load_template(template, templates_dir)
    bundle = PromptBundle(
        system_preamble=preamble,
        body=body_tpl.format(question=question),
        temperature=REASONING_TEMPERATURE if mode != "cot_sc" else 0.7,
        max_output_tokens=DEFAULT_MAX_OUTPUT_TOKENS,
    )
    if mode in ("io", "cot"):
        resp = gateway.generate(GenerationRequest.from_bundle(bundle, "baseline"))
        return parse_verdict(resp.text)

    verdicts = []
    for _ in range(samples):
        resp = gateway.generate(GenerationRequest.from_bundle(bundle, "baseline"))
        verdicts.append(parse_verdict(resp.text))
    counts: dict[str, int] = {}
    first_seen: dict[str, int] = {}
    for i, v in enumerate(verdicts):
        key = normalize_answer(v.text) if v.kind == "answer" else "\x00unknown"
        counts[key] = counts.get(key, 0) + 1
        first_seen.setdefault(key, i)
    winner = min(counts, key=lambda key: (-counts[key], first_seen[key]))
    return verdicts[first_seen[winner]]
