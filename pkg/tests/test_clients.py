import math

import httpx
import pytest
from hypothesis import given, strategies as st

import convkg.clients as clients
from convkg.clients import (HashingEmbeddingProvider, HttpEmbeddingProvider,
                            HttpTranslationClient, IdentityTranslationClient,
                            ProviderError, TableEmbeddingProvider,
                            TableTranslationClient, TranslationError,
                            VectorFileProvider, load_vector_file,
                            save_vector_file)


class TestTableProvider:
    def test_lookup(self):
        p = TableEmbeddingProvider({"a": (1, 0), "b": (0, 1)})
        assert p.embed(["b", "a"]) == [(0.0, 1.0), (1.0, 0.0)]

    def test_unknown_text_is_an_error(self):
        p = TableEmbeddingProvider({"a": (1, 0)})
        with pytest.raises(ProviderError, match="no vector"):
            p.embed(["missing"])


class TestVectorFile:
    def test_round_trip(self, tmp_path):
        path = tmp_path / "vec.tsv"
        table = {"打篮球": (0.5, -0.25, 1.0), "喝水": (0.0, 1.0, 0.0)}
        save_vector_file(table, path)
        assert load_vector_file(path) == table
        provider = VectorFileProvider(path)
        assert provider.embed(["喝水"]) == [(0.0, 1.0, 0.0)]

    def test_header_required(self, tmp_path):
        path = tmp_path / "vec.tsv"
        path.write_text("a\t1 2\n", encoding="utf-8")
        with pytest.raises(ProviderError, match="dim N"):
            load_vector_file(path)

    def test_dimension_enforced_per_line(self, tmp_path):
        path = tmp_path / "vec.tsv"
        path.write_text("dim 3\na\t1 2\n", encoding="utf-8")
        with pytest.raises(ProviderError, match="expected 3 values"):
            load_vector_file(path)

    def test_mixed_dims_not_saveable(self, tmp_path):
        with pytest.raises(ProviderError, match="mixed"):
            save_vector_file({"a": (1,), "b": (1, 2)}, tmp_path / "vec.tsv")


class TestHashingProvider:
    def test_deterministic_and_unit_norm(self):
        p = HashingEmbeddingProvider(dim=16)
        v1, v2 = p.embed(["进了大学", "进了大学"])
        assert v1 == v2
        assert math.isclose(sum(x * x for x in v1), 1.0, rel_tol=1e-9)

    def test_distinct_texts_distinct_vectors(self):
        p = HashingEmbeddingProvider(dim=16)
        v1, v2 = p.embed(["a", "b"])
        assert v1 != v2

    def test_requested_dimension(self):
        assert len(HashingEmbeddingProvider(dim=7).embed(["x"])[0]) == 7

    def test_tiny_dim_rejected(self):
        with pytest.raises(ValueError):
            HashingEmbeddingProvider(dim=1)

    @given(st.text(max_size=20), st.integers(min_value=2, max_value=64))
    def test_always_unit_norm(self, text, dim):
        (v,) = HashingEmbeddingProvider(dim=dim).embed([text])
        assert math.isclose(sum(x * x for x in v), 1.0, rel_tol=1e-9)


class TestTranslationClients:
    def test_identity(self):
        assert IdentityTranslationClient().translate("进了大学") == "进了大学"

    def test_table_with_identity_default(self):
        client = TableTranslationClient({"你好": "hello"})
        assert client.translate("你好") == "hello"
        assert client.translate("未知") == "未知"


class _FakeResponse:
    def __init__(self, data, fail=False):
        self._data = data
        self._fail = fail

    def raise_for_status(self):
        if self._fail:
            raise httpx.HTTPError("status 500")

    def json(self):
        return self._data


class TestHttpClients:
    def test_embedding_request_shape_and_auth(self, monkeypatch):
        calls = []

        def fake_post(endpoint, json=None, headers=None, timeout=None):
            calls.append((endpoint, json, headers))
            return _FakeResponse({"vectors": [[1.0, 0.0]] * len(json["texts"])})

        monkeypatch.setattr(clients.httpx, "post", fake_post)
        provider = HttpEmbeddingProvider("http://emb.local", token="sekrit")
        out = provider.embed(["a", "b"])
        assert out == [(1.0, 0.0), (1.0, 0.0)]
        endpoint, payload, headers = calls[0]
        assert endpoint == "http://emb.local"
        assert payload == {"texts": ["a", "b"]}
        assert headers["Authorization"] == "Bearer sekrit"

    def test_embedding_retries_then_succeeds(self, monkeypatch):
        attempts = []

        def fake_post(endpoint, json=None, headers=None, timeout=None):
            attempts.append(1)
            if len(attempts) == 1:
                raise httpx.ConnectError("down")
            return _FakeResponse({"vectors": [[0.0, 1.0]]})

        monkeypatch.setattr(clients.httpx, "post", fake_post)
        provider = HttpEmbeddingProvider("http://emb.local", retries=1, backoff=0)
        assert provider.embed(["a"]) == [(0.0, 1.0)]
        assert len(attempts) == 2

    def test_embedding_exhausted_retries_raise(self, monkeypatch):
        def fake_post(endpoint, json=None, headers=None, timeout=None):
            raise httpx.ConnectError("down")

        monkeypatch.setattr(clients.httpx, "post", fake_post)
        provider = HttpEmbeddingProvider("http://emb.local", retries=1, backoff=0)
        with pytest.raises(ProviderError, match="failed"):
            provider.embed(["a"])

    def test_embedding_count_mismatch_rejected(self, monkeypatch):
        monkeypatch.setattr(clients.httpx, "post",
                            lambda *a, **k: _FakeResponse({"vectors": [[1.0]]}))
        provider = HttpEmbeddingProvider("http://emb.local", retries=0, backoff=0)
        with pytest.raises(ProviderError, match="malformed"):
            provider.embed(["a", "b"])

    def test_translation_request_and_response(self, monkeypatch):
        def fake_post(endpoint, json=None, headers=None, timeout=None):
            return _FakeResponse({"translation": json["text"].upper()})

        monkeypatch.setattr(clients.httpx, "post", fake_post)
        client = HttpTranslationClient("http://mt.local")
        assert client.translate("hello") == "HELLO"

    def test_translation_http_error_raises(self, monkeypatch):
        monkeypatch.setattr(clients.httpx, "post",
                            lambda *a, **k: _FakeResponse({}, fail=True))
        client = HttpTranslationClient("http://mt.local", retries=0, backoff=0)
        with pytest.raises(TranslationError):
            client.translate("hello")

    def test_translation_malformed_response(self, monkeypatch):
        monkeypatch.setattr(clients.httpx, "post",
                            lambda *a, **k: _FakeResponse({"translation": 42}))
        client = HttpTranslationClient("http://mt.local", retries=0, backoff=0)
        with pytest.raises(TranslationError, match="malformed"):
            client.translate("hello")
