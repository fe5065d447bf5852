"""OpenAI-compatible chat-completions client for VLM annotation, with a disk cache.

Every response body is persisted under ``cache_dir`` keyed by the image
locator and the prompt text.  In offline mode the cache is the only source and
no request is ever built.
"""

from __future__ import annotations

import base64
import hashlib
import json
import logging
import mimetypes
import os
import threading
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, fields, replace
from pathlib import Path
from typing import Iterable, Optional

import httpx

from .parse import SchemaError, annotation_from_dict, validate_annotation
from .schema import RawAnnotation

logger = logging.getLogger(__name__)

RETRYABLE_STATUS = frozenset({408, 409, 429, 500, 502, 503, 504})


class AnnotatorError(RuntimeError):
    pass


class CacheMiss(AnnotatorError):
    pass


@dataclass(frozen=True)
class PromptTemplate:
    name: str
    text: str

    @property
    def digest(self) -> str:
        return hashlib.sha256(self.text.encode("utf-8")).hexdigest()[:16]

    @classmethod
    def from_file(cls, path) -> "PromptTemplate":
        path = Path(path)
        return cls(name=path.stem, text=path.read_text(encoding="utf-8"))


@dataclass(frozen=True)
class AnnotatorConfig:
    endpoint: str = "http://localhost:8000/v1"
    model: str = "Qwen/Qwen3-VL-8B-Instruct"
    timeout: float = 60.0
    max_retries: int = 3
    max_concurrency: int = 4
    backoff: float = 1.0
    api_key_env: str = "OPENAI_API_KEY"
    offline: bool = False
    cache_dir: Optional[str] = None
    source: str = "annotator_a"

    ENV_PREFIX = "NSDVQA_ANNOTATOR_"

    @classmethod
    def from_mapping(cls, data: dict, environ=None) -> "AnnotatorConfig":
        """Build from a config mapping; ``NSDVQA_ANNOTATOR_<FIELD>`` variables override it."""
        names = {f.name: f for f in fields(cls)}
        unknown = set(data) - set(names)
        if unknown:
            raise ValueError(f"unknown annotator config keys: {sorted(unknown)}")
        cfg = cls(**data)
        environ = os.environ if environ is None else environ
        overrides = {}
        for name, f in names.items():
            raw = environ.get(cls.ENV_PREFIX + name.upper())
            if raw is None:
                continue
            default = getattr(cfg, name)
            if isinstance(default, bool):
                overrides[name] = raw.strip().lower() in {"1", "true", "yes", "on"}
            elif isinstance(default, int):
                overrides[name] = int(raw)
            elif isinstance(default, float):
                overrides[name] = float(raw)
            else:
                overrides[name] = raw
        cfg = replace(cfg, **overrides)
        if cfg.max_retries < 0 or cfg.max_concurrency < 1 or cfg.timeout <= 0:
            raise ValueError("annotator config: max_retries ≥ 0, max_concurrency ≥ 1, timeout > 0")
        if cfg.offline and not cfg.cache_dir:
            raise ValueError("annotator config: offline mode requires cache_dir")
        return cfg


def cache_key(image_ref: str, prompt: PromptTemplate) -> str:
    return hashlib.sha256(image_ref.encode("utf-8")).hexdigest() + "-" + prompt.digest


def image_id_for(image_ref: str) -> str:
    return Path(image_ref.split("?")[0]).stem or image_ref


def classify_response(image_id: str, body: str, attempts: int = 1) -> RawAnnotation:
    """Mark a response body ``ok`` only if it is already a schema-valid record."""
    status = "malformed"
    try:
        record = json.loads(body)
        if isinstance(record, dict):
            record.setdefault("image_id", image_id)
            ann = annotation_from_dict(record)
            if not any(i.severity == "error" for i in validate_annotation(ann)):
                status = "ok"
    except (json.JSONDecodeError, SchemaError):
        pass
    return RawAnnotation(image_id=image_id, raw_text=body, parse_status=status, attempts=attempts)


class ResponseCache:
    def __init__(self, directory):
        self.directory = Path(directory)
        self._locks: dict[str, threading.Lock] = {}
        self._guard = threading.Lock()

    def _lock(self, key: str) -> threading.Lock:
        with self._guard:
            return self._locks.setdefault(key, threading.Lock())

    def path(self, key: str) -> Path:
        return self.directory / f"{key}.json"

    def get(self, key: str) -> Optional[dict]:
        p = self.path(key)
        if not p.exists():
            return None
        with open(p, encoding="utf-8") as fh:
            return json.load(fh)

    def put(self, key: str, entry: dict) -> None:
        with self._lock(key):
            self.directory.mkdir(parents=True, exist_ok=True)
            tmp = self.path(key).with_suffix(f".tmp{threading.get_ident()}")
            with open(tmp, "w", encoding="utf-8") as fh:
                json.dump(entry, fh, sort_keys=True, ensure_ascii=False)
            os.replace(tmp, self.path(key))


class AnnotatorClient:
    """Chat-completions annotator.

    ``transport`` is handed to :class:`httpx.Client`; tests pass an
    ``httpx.MockTransport`` to count or script requests.
    """

    def __init__(self, config: AnnotatorConfig, transport: Optional[httpx.BaseTransport] = None,
                 sleep=time.sleep):
        self.config = config
        self.cache = ResponseCache(config.cache_dir) if config.cache_dir else None
        self._transport = transport
        self._sleep = sleep
        self._http: Optional[httpx.Client] = None
        self.network_calls = 0

    def _client(self) -> httpx.Client:
        if self._http is None:
            headers = {}
            key = os.environ.get(self.config.api_key_env)
            if key:
                headers["Authorization"] = f"Bearer {key}"
            self._http = httpx.Client(
                timeout=self.config.timeout, transport=self._transport, headers=headers
            )
        return self._http

    def close(self):
        if self._http is not None:
            self._http.close()
            self._http = None

    def build_payload(self, image_ref: str, prompt: PromptTemplate) -> dict:
        if os.path.exists(image_ref):
            mime = mimetypes.guess_type(image_ref)[0] or "application/octet-stream"
            with open(image_ref, "rb") as fh:
                url = f"data:{mime};base64," + base64.b64encode(fh.read()).decode("ascii")
        else:
            url = image_ref
        return {
            "model": self.config.model,
            "temperature": 0,
            "messages": [
                {
                    "role": "user",
                    "content": [
                        {"type": "text", "text": prompt.text},
                        {"type": "image_url", "image_url": {"url": url}},
                    ],
                }
            ],
        }

    def _post(self, payload: dict) -> tuple[str, int]:
        url = self.config.endpoint.rstrip("/") + "/chat/completions"
        last_error = None
        for attempt in range(1, self.config.max_retries + 2):
            self.network_calls += 1
            try:
                resp = self._client().post(url, json=payload)
            except httpx.TransportError as exc:
                last_error = f"transport error: {exc}"
            else:
                if 200 <= resp.status_code < 300:
                    try:
                        body = resp.json()["choices"][0]["message"]["content"]
                    except (ValueError, KeyError, IndexError, TypeError) as exc:
                        raise AnnotatorError(f"unexpected response shape: {exc}") from exc
                    return body, attempt
                last_error = f"HTTP {resp.status_code}"
                if resp.status_code not in RETRYABLE_STATUS:
                    raise AnnotatorError(last_error)
            if attempt <= self.config.max_retries:
                logger.warning("annotator attempt %d failed (%s); retrying", attempt, last_error)
                self._sleep(self.config.backoff * 2 ** (attempt - 1))
        raise AnnotatorError(f"giving up after {self.config.max_retries + 1} attempts: {last_error}")

    def request(self, image_ref: str, prompt: PromptTemplate) -> RawAnnotation:
        image_id = image_id_for(image_ref)
        key = cache_key(image_ref, prompt)
        if self.config.offline:
            entry = self.cache.get(key)
            if entry is None:
                raise CacheMiss(f"no cached response for {image_ref!r} (key {key})")
            return classify_response(image_id, entry["raw_text"], entry.get("attempts", 1))
        body, attempts = self._post(self.build_payload(image_ref, prompt))
        if self.cache is not None:
            self.cache.put(
                key,
                {"image_ref": image_ref, "prompt": prompt.digest, "raw_text": body,
                 "attempts": attempts},
            )
        return classify_response(image_id, body, attempts)


def request_annotation(client: AnnotatorClient, image_ref: str, prompt: PromptTemplate) -> RawAnnotation:
    return client.request(image_ref, prompt)


def request_many(client: AnnotatorClient, image_refs: Iterable[str], prompt: PromptTemplate,
                 jobs: Optional[int] = None) -> list:
    """Annotate many images; returns RawAnnotation or the raised exception per ref, in input order."""
    refs = list(image_refs)
    jobs = jobs or client.config.max_concurrency

    def one(ref):
        try:
            return client.request(ref, prompt)
        except AnnotatorError as exc:
            return exc

    if jobs <= 1:
        return [one(r) for r in refs]
    with ThreadPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(one, refs))
