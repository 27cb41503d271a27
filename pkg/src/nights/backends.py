"""Backend-agnostic chat-completion and text-to-image clients.

Three interchangeable backends:

* ``RemoteBackend`` speaks OpenAI-compatible chat completions over HTTP plus a
  single configurable image endpoint. Transient failures are retried (3
  attempts max, exponential backoff, 60 s total deadline per call).
* ``ScriptedBackend`` replays a canned list of chat replies in order; image
  requests always produce a seeded solid-color placeholder PNG. In non-strict
  mode an exhausted script falls back to a deterministic formulaic reply so
  long playthroughs stay runnable offline.
* ``PlaceholderBackend`` is a scripted backend with an empty script and
  strict=False: purely formulaic, no configuration needed.

No call site names a concrete vendor; backend choice is configuration only.
"""

from __future__ import annotations

import hashlib
import io
import json
import logging
import re
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Protocol, TypeVar

import httpx

from .clock import SystemClock
from .errors import BackendError, ContractError, ValidationError
from .util import split_sentences, truncate

logger = logging.getLogger(__name__)

CHAT = "chat"
IMAGE = "image"

DEFAULT_STYLE_SUFFIX = "ancient Middle-Eastern palace, oil painting, dramatic lighting"
SCENE_EXCERPT_LIMIT = 500
PLACEHOLDER_IMAGE_SIZE = 512

# Seven armory terms the formulaic fallback cycles through; mirrors the
# default lexicon's canonical entries so offline cards keep appearing.
FALLBACK_TERMS = ("sword", "shield", "dagger", "spear", "bow", "axe", "hammer")


@dataclass
class GenerationRequest:
    kind: str
    system: str = ""
    messages: list[dict] = field(default_factory=list)
    prompt: str = ""
    max_tokens: int = 800
    temperature: float = 0.8
    seed: int | None = None

    def validate(self) -> None:
        if self.kind not in (CHAT, IMAGE):
            raise ValidationError(f"unknown request kind {self.kind!r}")
        if not 0.0 <= self.temperature <= 2.0:
            raise ValidationError("temperature must be in [0, 2]")
        if self.kind == CHAT and not self.messages:
            raise ValidationError("chat request needs at least one message")
        if self.kind == IMAGE and not self.prompt:
            raise ValidationError("image request needs a prompt")


@dataclass
class SceneImageRef:
    id: str
    path_or_url: str
    prompt_used: str
    created_at: str

    def to_dict(self) -> dict:
        return {
            "id": self.id,
            "path_or_url": self.path_or_url,
            "prompt_used": self.prompt_used,
            "created_at": self.created_at,
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "SceneImageRef":
        return cls(
            id=doc["id"],
            path_or_url=doc["path_or_url"],
            prompt_used=doc["prompt_used"],
            created_at=doc["created_at"],
        )


@dataclass
class GenerationResult:
    kind: str
    text: str = ""
    image: SceneImageRef | None = None
    latency_ms: int = 0
    backend_id: str = ""


class Backend(Protocol):
    id: str

    def generate(self, request: GenerationRequest) -> GenerationResult: ...


def _placeholder_color(prompt: str) -> tuple[int, int, int]:
    digest = hashlib.sha256(prompt.encode("utf-8")).digest()
    return digest[0], digest[1], digest[2]


def _image_id(prompt: str) -> str:
    return hashlib.sha256(prompt.encode("utf-8")).hexdigest()[:32]


def render_placeholder_png(prompt: str) -> bytes:
    """512x512 solid-color PNG whose color derives from hash(prompt)."""
    from PIL import Image

    img = Image.new("RGB", (PLACEHOLDER_IMAGE_SIZE, PLACEHOLDER_IMAGE_SIZE), _placeholder_color(prompt))
    buf = io.BytesIO()
    img.save(buf, format="PNG")
    return buf.getvalue()


def _store_image(data_dir: Path | None, image_id: str, png: bytes) -> str:
    """Write the PNG under <data_dir>/images and return its relative path.

    Paths are stored relative to the data dir so replayed sessions serialize
    identically regardless of where the data dir lives.
    """
    rel = f"images/{image_id}.png"
    if data_dir is not None:
        target = Path(data_dir) / rel
        target.parent.mkdir(parents=True, exist_ok=True)
        target.write_bytes(png)
    return rel


def _last_user_sentence(request: GenerationRequest) -> str:
    for message in reversed(request.messages):
        if message.get("role") == "user" and message.get("content"):
            sentences = [s.strip() for s in split_sentences(message["content"]) if s.strip()]
            if sentences:
                return truncate(sentences[-1], 160)
    return "the tale went on"


_CATEGORY_LINE = re.compile(r"Weapon category:\s*(\w+)", re.IGNORECASE)


class ScriptedBackend:
    """Replays canned chat outputs in order; deterministic by construction.

    ``strict`` controls exhaustion: True raises BackendError(script_exhausted),
    False switches to a seed-derived formulaic reply shaped to whichever JSON
    contract the system prompt asks for.
    """

    def __init__(
        self,
        script: list[str] | None = None,
        *,
        strict: bool = True,
        seed: int = 0,
        data_dir: str | Path | None = None,
        clock=None,
        backend_id: str = "scripted",
    ):
        self.id = backend_id
        self._script = list(script or [])
        self._cursor = 0
        self._strict = strict
        self._seed = seed
        self._fallback_count = 0
        self._data_dir = Path(data_dir) if data_dir is not None else None
        self._clock = clock or SystemClock()

    @property
    def calls_remaining(self) -> int:
        return len(self._script) - self._cursor

    def generate(self, request: GenerationRequest) -> GenerationResult:
        request.validate()
        if request.kind == IMAGE:
            return self._generate_image(request)
        if self._cursor < len(self._script):
            text = self._script[self._cursor]
            self._cursor += 1
            return GenerationResult(kind=CHAT, text=text, backend_id=self.id)
        if self._strict:
            raise BackendError("script_exhausted", f"script of {len(self._script)} steps exhausted")
        return GenerationResult(kind=CHAT, text=self._formulaic_reply(request), backend_id=self.id)

    def _generate_image(self, request: GenerationRequest) -> GenerationResult:
        image_id = _image_id(request.prompt)
        rel = _store_image(self._data_dir, image_id, render_placeholder_png(request.prompt))
        ref = SceneImageRef(
            id=image_id,
            path_or_url=rel,
            prompt_used=request.prompt,
            created_at=self._clock.now(),
        )
        return GenerationResult(kind=IMAGE, image=ref, backend_id=self.id)

    def _formulaic_reply(self, request: GenerationRequest) -> str:
        index = self._fallback_count
        self._fallback_count += 1
        term = FALLBACK_TERMS[(self._seed + index) % len(FALLBACK_TERMS)]
        echo = _last_user_sentence(request)
        continuation = (
            f'The King pondered the words, stroking his beard. "{echo}" he repeated slowly, '
            f"tasting each word. Then his eyes gleamed, and he spoke of a {term} "
            "waiting in the shadowed armory of the tale."
        )
        system = request.system
        if '"mood_delta"' in system:
            return json.dumps(
                {
                    "kind": "continue",
                    "comment": "Acceptable. The night is long; continue.",
                    "continuation": continuation,
                    "mood_delta": 2,
                },
                ensure_ascii=False,
            )
        if '"power"' in system:
            match = _CATEGORY_LINE.search(self._last_user_content(request))
            category = match.group(1).lower() if match else "relic"
            power = 10 + ((self._seed + index) % 31)
            return json.dumps(
                {
                    "name": f"The {category.title()} of the {index + 1} Vigils",
                    "description": f"A {category} remembered from the night's telling, plain but true of edge.",
                    "power": power,
                    "effect_description": f"The {category} flares with the story's own light.",
                    "player_line": f"By this {category}, my tale holds true!",
                    "king_line": "So the telling bites back at its listener!",
                },
                ensure_ascii=False,
            )
        if '"downfall"' in system:
            return json.dumps(
                {
                    "actions": [
                        "With the first weapon the storyteller opened the duel.",
                        "With the second she turned the King's fury aside.",
                        "With the third she pressed him across the marble floor.",
                        "With the fourth she ended the long night.",
                    ],
                    "downfall": "The King sank to one knee as dawn crept over the sill.",
                    "title": "Keeper of the Thousand Vigils",
                    "narration": (
                        "Sing of the teller who out-waited a king: word upon word she built her arsenal, "
                        "and at dawn the palace itself repeated her story."
                    ),
                },
                ensure_ascii=False,
            )
        return continuation

    @staticmethod
    def _last_user_content(request: GenerationRequest) -> str:
        for message in reversed(request.messages):
            if message.get("role") == "user":
                return message.get("content", "")
        return ""


def placeholder_backend(
    *, seed: int = 0, data_dir: str | Path | None = None, clock=None
) -> ScriptedBackend:
    """Fully offline backend: formulaic chat, seeded placeholder images."""
    return ScriptedBackend(
        [], strict=False, seed=seed, data_dir=data_dir, clock=clock, backend_id="placeholder"
    )


class RemoteBackend:
    """OpenAI-compatible chat endpoint plus a one-POST image endpoint.

    Every call is bounded: at most ``attempts`` tries and ``deadline_s``
    seconds overall. Retried failures: transport errors, timeouts, HTTP 429,
    and HTTP 5xx. Other statuses and malformed payloads fail immediately.
    """

    def __init__(
        self,
        *,
        chat_base_url: str,
        chat_model: str,
        api_key: str = "",
        image_base_url: str = "",
        data_dir: str | Path | None = None,
        clock=None,
        attempts: int = 3,
        backoff_base_s: float = 0.5,
        deadline_s: float = 60.0,
        client: httpx.Client | None = None,
    ):
        self.id = "remote"
        self._chat_base_url = chat_base_url.rstrip("/")
        self._chat_model = chat_model
        self._api_key = api_key
        self._image_base_url = image_base_url
        self._data_dir = Path(data_dir) if data_dir is not None else None
        self._clock = clock or SystemClock()
        self._attempts = attempts
        self._backoff_base_s = backoff_base_s
        self._deadline_s = deadline_s
        self._client = client or httpx.Client()

    def generate(self, request: GenerationRequest) -> GenerationResult:
        request.validate()
        started = time.monotonic()
        if request.kind == CHAT:
            text = self._with_retries(lambda timeout: self._chat_once(request, timeout), started)
            latency = int((time.monotonic() - started) * 1000)
            return GenerationResult(kind=CHAT, text=text, latency_ms=latency, backend_id=self.id)
        png = self._with_retries(lambda timeout: self._image_once(request, timeout), started)
        image_id = _image_id(f"{request.prompt}\x1f{request.seed}")
        rel = _store_image(self._data_dir, image_id, png)
        ref = SceneImageRef(
            id=image_id, path_or_url=rel, prompt_used=request.prompt, created_at=self._clock.now()
        )
        latency = int((time.monotonic() - started) * 1000)
        return GenerationResult(kind=IMAGE, image=ref, latency_ms=latency, backend_id=self.id)

    def _with_retries(self, call: Callable[[float], object], started: float):
        last: BackendError | None = None
        for attempt in range(self._attempts):
            remaining = self._deadline_s - (time.monotonic() - started)
            if remaining <= 0:
                break
            try:
                return call(remaining)
            except BackendError as err:
                last = err
                if err.kind not in ("transport", "timeout", "quota", "http_status"):
                    raise
                if err.kind == "http_status" and not getattr(err, "retryable_status", False):
                    raise
            delay = self._backoff_base_s * (2**attempt)
            if attempt + 1 < self._attempts and time.monotonic() - started + delay < self._deadline_s:
                time.sleep(delay)
        assert last is not None
        raise last

    def _headers(self) -> dict:
        headers = {"Content-Type": "application/json"}
        if self._api_key:
            headers["Authorization"] = f"Bearer {self._api_key}"
        return headers

    def _chat_once(self, request: GenerationRequest, timeout: float) -> str:
        messages = []
        if request.system:
            messages.append({"role": "system", "content": request.system})
        messages.extend(request.messages)
        payload: dict = {
            "model": self._chat_model,
            "messages": messages,
            "max_tokens": request.max_tokens,
            "temperature": request.temperature,
        }
        if request.seed is not None:
            payload["seed"] = request.seed
        response = self._post(f"{self._chat_base_url}/v1/chat/completions", payload, timeout)
        try:
            body = response.json()
            text = body["choices"][0]["message"]["content"]
            if not isinstance(text, str):
                raise TypeError
            return text
        except (ValueError, KeyError, IndexError, TypeError):
            raise self._status_error(502, "malformed chat completion payload", retryable=True) from None

    def _image_once(self, request: GenerationRequest, timeout: float) -> bytes:
        if not self._image_base_url:
            raise BackendError("protocol", "no image endpoint configured")
        payload = {"prompt": request.prompt, "seed": request.seed or 0}
        response = self._post(self._image_base_url, payload, timeout)
        if not response.content:
            raise self._status_error(502, "empty image payload", retryable=True)
        return response.content

    def _post(self, url: str, payload: dict, timeout: float) -> httpx.Response:
        try:
            response = self._client.post(
                url, json=payload, headers=self._headers(), timeout=min(timeout, self._deadline_s)
            )
        except httpx.TimeoutException as err:
            raise BackendError("timeout", str(err))
        except httpx.HTTPError as err:
            raise BackendError("transport", str(err))
        if response.status_code == 429:
            raise BackendError("quota", "rate limited (HTTP 429)")
        if response.status_code >= 500:
            raise self._status_error(response.status_code, "server error", retryable=True)
        if response.status_code >= 400:
            raise self._status_error(response.status_code, "client error", retryable=False)
        return response

    @staticmethod
    def _status_error(status: int, message: str, *, retryable: bool) -> BackendError:
        err = BackendError("http_status", f"HTTP {status}: {message}")
        err.retryable_status = retryable  # type: ignore[attr-defined]
        return err


T = TypeVar("T")


def generate_with_repair(
    backend: Backend,
    *,
    system: str,
    user_text: str,
    parse: Callable[[str], T],
    temperature: float = 0.8,
    max_tokens: int = 800,
    seed: int | None = None,
) -> T:
    """One chat call plus one automatic repair retry on contract failure.

    The repair prompt re-sends the original request with the validation error
    appended, then the second failure propagates as ContractError.
    """
    request = GenerationRequest(
        kind=CHAT,
        system=system,
        messages=[{"role": "user", "content": user_text}],
        temperature=temperature,
        max_tokens=max_tokens,
        seed=seed,
    )
    result = backend.generate(request)
    try:
        return parse(result.text)
    except ContractError as err:
        repair = GenerationRequest(
            kind=CHAT,
            system=system,
            messages=[
                {
                    "role": "user",
                    "content": (
                        f"{user_text}\n\nYour previous reply was rejected: {err}. "
                        "Reply again with exactly one valid JSON object and nothing else."
                    ),
                }
            ],
            temperature=temperature,
            max_tokens=max_tokens,
            seed=seed,
        )
        result = backend.generate(repair)
        return parse(result.text)


def paint_scene(
    backend: Backend,
    story_excerpt: str,
    style_suffix: str = DEFAULT_STYLE_SUFFIX,
    *,
    seed: int | None = None,
) -> SceneImageRef:
    """Render a backdrop from the latest King continuation.

    The prompt is the excerpt (truncated to 500 chars) plus the style suffix.
    BackendError propagates; callers keep the previous backdrop on failure.
    """
    if not story_excerpt:
        raise ValidationError("story excerpt must be non-empty")
    prompt = f"{truncate(story_excerpt, SCENE_EXCERPT_LIMIT)}, {style_suffix}"
    result = backend.generate(GenerationRequest(kind=IMAGE, prompt=prompt, seed=seed))
    assert result.image is not None
    return result.image
