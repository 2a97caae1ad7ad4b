"""Pluggable clients for embedding and translation backends.

Every network-facing operation goes through one of these small interfaces so
tests and offline runs can swap in deterministic local implementations.
"""

import hashlib
import math
import struct
import time
from typing import Protocol, Sequence

import httpx


class ProviderError(RuntimeError):
    """An embedding provider failed; callers may retry."""


class TranslationError(RuntimeError):
    """A translation client failed; callers may retry."""


class EmbeddingProvider(Protocol):
    def embed(self, texts: Sequence[str]) -> list[tuple[float, ...]]: ...


class TranslationClient(Protocol):
    def translate(self, text: str) -> str: ...


class TableEmbeddingProvider:
    """Vectors from an in-memory table; unknown text is a hard error."""

    def __init__(self, table):
        self.table = {k: tuple(float(x) for x in v) for k, v in table.items()}

    def embed(self, texts):
        out = []
        for t in texts:
            if t not in self.table:
                raise ProviderError(f"no vector for text {t!r}")
            out.append(self.table[t])
        return out


class VectorFileProvider(TableEmbeddingProvider):
    """Vectors from a file: a ``dim N`` header, then ``key<TAB>v1 v2 ...`` lines."""

    def __init__(self, path):
        super().__init__(load_vector_file(path))


def load_vector_file(path):
    table = {}
    with open(path, encoding="utf-8") as fh:
        header = fh.readline().split()
        if len(header) != 2 or header[0] != "dim":
            raise ProviderError(f"{path}: expected 'dim N' header, got {header!r}")
        dim = int(header[1])
        for line_no, raw in enumerate(fh, start=2):
            line = raw.rstrip("\n")
            if not line:
                continue
            key, _, rest = line.partition("\t")
            values = tuple(float(x) for x in rest.split())
            if len(values) != dim:
                raise ProviderError(f"{path}:{line_no}: expected {dim} values, got {len(values)}")
            table[key] = values
    return table


def save_vector_file(table, path):
    dims = {len(v) for v in table.values()}
    if len(dims) > 1:
        raise ProviderError(f"mixed vector dimensions {sorted(dims)}")
    dim = dims.pop() if dims else 0
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"dim {dim}\n")
        for key, values in table.items():
            fh.write(key + "\t" + " ".join(repr(float(x)) for x in values) + "\n")


class HashingEmbeddingProvider:
    """Deterministic pseudo-random unit vectors derived from the text itself.

    Equal texts embed identically, so exact-match linking scores 1.0 without
    any model in the loop.
    """

    def __init__(self, dim: int = 16):
        if dim < 2:
            raise ValueError("dim must be at least 2")
        self.dim = dim

    def _vector(self, text):
        values = []
        counter = 0
        while len(values) < self.dim:
            digest = hashlib.sha256(f"{counter}\x00{text}".encode("utf-8")).digest()
            for i in range(0, len(digest) - 7, 8):
                (raw,) = struct.unpack_from(">q", digest, i)
                values.append(raw / float(2**63))
                if len(values) == self.dim:
                    break
            counter += 1
        norm = math.sqrt(sum(v * v for v in values)) or 1.0
        return tuple(v / norm for v in values)

    def embed(self, texts):
        return [self._vector(t) for t in texts]


class HttpEmbeddingProvider:
    """POST {"texts": [...]} to an endpoint answering {"vectors": [[...], ...]}."""

    def __init__(self, endpoint, token=None, timeout=30.0, retries=2, backoff=0.5):
        self.endpoint = endpoint
        self.token = token
        self.timeout = timeout
        self.retries = retries
        self.backoff = backoff

    def embed(self, texts):
        payload = {"texts": list(texts)}
        data = _post_json(self.endpoint, payload, self.token, self.timeout,
                          self.retries, self.backoff, ProviderError)
        vectors = data.get("vectors")
        if not isinstance(vectors, list) or len(vectors) != len(texts):
            raise ProviderError(f"{self.endpoint}: malformed vectors response")
        return [tuple(float(x) for x in v) for v in vectors]


class IdentityTranslationClient:
    """Returns its input unchanged; useful offline and in round-trip tests."""

    def translate(self, text):
        return text


class TableTranslationClient:
    """Translations from a fixed mapping, defaulting to identity."""

    def __init__(self, table):
        self.table = dict(table)

    def translate(self, text):
        return self.table.get(text, text)


class HttpTranslationClient:
    """POST {"text": ...} to an endpoint answering {"translation": ...}."""

    def __init__(self, endpoint, token=None, timeout=30.0, retries=2, backoff=0.5):
        self.endpoint = endpoint
        self.token = token
        self.timeout = timeout
        self.retries = retries
        self.backoff = backoff

    def translate(self, text):
        data = _post_json(self.endpoint, {"text": text}, self.token, self.timeout,
                          self.retries, self.backoff, TranslationError)
        translation = data.get("translation")
        if not isinstance(translation, str):
            raise TranslationError(f"{self.endpoint}: malformed translation response")
        return translation


def _post_json(endpoint, payload, token, timeout, retries, backoff, error_cls):
    headers = {}
    if token:
        headers["Authorization"] = f"Bearer {token}"
    last = None
    for attempt in range(retries + 1):
        try:
            resp = httpx.post(endpoint, json=payload, headers=headers, timeout=timeout)
            resp.raise_for_status()
            return resp.json()
        except (httpx.HTTPError, ValueError) as exc:
            last = exc
            if attempt < retries:
                time.sleep(backoff * (attempt + 1))
    raise error_cls(f"request to {endpoint} failed: {last}") from last
