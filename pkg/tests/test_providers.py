import threading
import time

import pytest

from helpers import png_bytes
from transcreval.errors import ConfigError, DecodeError, ProviderError, RateLimitExhausted
from transcreval.providers import (
    ChatRequest,
    ChatResponse,
    Decoding,
    FlakyChatProvider,
    ImagePart,
    MockChatProvider,
    MockEmbeddingProvider,
    ParallelismLimiter,
    TableEmbeddingProvider,
    TextPart,
    build_providers,
    chat_cache_key,
    embed_cache_key,
    rule_responder,
    substring_responder,
    synthetic_chat_responder,
    unit_normalize,
    with_retries,
)


def _req(text="hello", image=None):
    parts = [TextPart(text)]
    if image is not None:
        parts.append(ImagePart(image))
    return ChatRequest(model_id="m", parts=tuple(parts))


def test_image_part_validates_bytes():
    ImagePart(png_bytes())
    with pytest.raises(DecodeError):
        ImagePart(b"definitely not an image")


def test_chat_request_needs_parts():
    with pytest.raises(ValueError):
        ChatRequest(model_id="m", parts=())


def test_decoding_bounds():
    with pytest.raises(ValueError):
        Decoding(temperature=-0.1)
    with pytest.raises(ValueError):
        Decoding(max_output_tokens=0)


def test_text_content_joins_text_parts_only():
    req = _req("first", png_bytes())
    assert req.text_content() == "first"


def test_unit_normalize():
    vec = unit_normalize([3.0, 4.0], "m")
    assert vec.values == (0.6, 0.8)
    assert vec.dim == 2
    with pytest.raises(ProviderError):
        unit_normalize([0.0, 0.0], "m")
    with pytest.raises(ProviderError):
        unit_normalize([float("inf"), 1.0], "m")


def test_chat_cache_key_sensitivity():
    base = chat_cache_key("p", _req("a"))
    assert base == chat_cache_key("p", _req("a"))  # stable
    assert base != chat_cache_key("q", _req("a"))  # provider matters
    assert base != chat_cache_key("p", _req("b"))  # text matters
    assert base != chat_cache_key(
        "p", ChatRequest(model_id="m", parts=(TextPart("a"),), decoding=Decoding(temperature=1.0))
    )
    img1, img2 = png_bytes((1, 2, 3)), png_bytes((3, 2, 1))
    assert chat_cache_key("p", _req("a", img1)) != chat_cache_key("p", _req("a", img2))


def test_embed_cache_key_sensitivity():
    k = embed_cache_key("p", "m", "embed_text", b"x")
    assert k == embed_cache_key("p", "m", "embed_text", b"x")
    assert k != embed_cache_key("p", "m", "embed_image", b"x")
    assert k != embed_cache_key("p", "n", "embed_text", b"x")
    assert k != embed_cache_key("p", "m", "embed_text", b"y")


def test_substring_responder():
    provider = MockChatProvider(substring_responder({"weather": "sunny"}, default="n/a"))
    assert provider.chat(_req("what weather today")).text == "sunny"
    assert provider.chat(_req("unrelated")).text == "n/a"
    assert provider.calls == 2


def test_substring_responder_without_default_errors():
    provider = MockChatProvider(substring_responder({}))
    with pytest.raises(ProviderError):
        provider.chat(_req("anything"))


def test_rule_responder_outcomes():
    boom = ProviderError("backend down")
    responder = rule_responder(
        [
            (lambda r: "callable" in r.text_content(), lambda r: r.text_content().upper()),
            (lambda r: "fail" in r.text_content(), boom),
            (lambda r: True, "fallback"),
        ]
    )
    provider = MockChatProvider(responder)
    assert provider.chat(_req("callable path")).text == "CALLABLE PATH"
    assert provider.chat(_req("other")).text == "fallback"
    with pytest.raises(ProviderError):
        provider.chat(_req("fail now"))


def test_mock_chat_accepts_chat_response_return():
    provider = MockChatProvider(lambda req: ChatResponse(text="typed", provider_meta={"k": 1}))
    resp = provider.chat(_req())
    assert resp.text == "typed" and resp.provider_meta == {"k": 1}


def test_synthetic_responder_is_deterministic():
    r1 = synthetic_chat_responder(seed=5)
    r2 = synthetic_chat_responder(seed=5)
    req = _req("give a comma-separated list of entities", png_bytes())
    assert r1(req) == r2(req)
    assert synthetic_chat_responder(seed=6)(req) != r1(req)


def test_synthetic_responder_detection_output_parses():
    responder = synthetic_chat_responder(seed=0)
    text = responder(_req("The output format is a comma-separated list of entities.", png_bytes()))
    names = [n.strip() for n in text.split(",")]
    assert 1 <= len(names) <= 5
    assert all(names)


def test_mock_embedding_determinism_and_unit_norm():
    p1 = MockEmbeddingProvider(seed=3, dim=16)
    p2 = MockEmbeddingProvider(seed=3, dim=16)
    v1 = p1.embed_image(png_bytes())
    v2 = p2.embed_image(png_bytes())
    assert v1.values == v2.values
    assert abs(sum(v * v for v in v1.values) - 1.0) < 1e-9
    # seed, payload, and kind all separate the distributions
    assert p1.embed_image(png_bytes((9, 9, 9))).values != v1.values
    assert p1.embed_text("x").values != p1.embed_text("y").values
    assert MockEmbeddingProvider(seed=4, dim=16).embed_image(png_bytes()).values != v1.values


def test_mock_embedding_rejects_tiny_dim():
    with pytest.raises(ValueError):
        MockEmbeddingProvider(dim=1)


def test_table_embedding_provider():
    provider = TableEmbeddingProvider(
        text_vectors={"hello": (1.0, 0.0)}, image_vectors={b"img": (0.0, 2.0)}
    )
    assert provider.embed_text("hello").values == (1.0, 0.0)
    assert provider.embed_image(b"img").values == (0.0, 1.0)  # normalized
    with pytest.raises(ProviderError):
        provider.embed_text("unknown")


def test_with_retries_succeeds_after_transient_failures():
    inner = MockChatProvider(lambda req: "ok")
    flaky = FlakyChatProvider(inner, fail_first=2)
    sleeps = []
    resp = with_retries(
        lambda: flaky.chat(_req()), attempts=5, sleep=sleeps.append
    )
    assert resp.text == "ok"
    assert flaky.calls == 3
    assert len(sleeps) == 2
    assert all(s > 0 for s in sleeps)


def test_with_retries_gives_up():
    flaky = FlakyChatProvider(MockChatProvider(lambda req: "ok"), fail_first=99)
    with pytest.raises(RateLimitExhausted) as err:
        with_retries(lambda: flaky.chat(_req()), attempts=3, sleep=lambda s: None)
    assert err.value.status == 429
    assert flaky.calls == 3


def test_with_retries_passes_hard_errors_through():
    def fn():
        raise ProviderError("bad request", status=400)

    with pytest.raises(ProviderError) as err:
        with_retries(fn, attempts=5, sleep=lambda s: None)
    assert not isinstance(err.value, RateLimitExhausted)


def test_backoff_delays_grow_and_cap():
    flaky = FlakyChatProvider(MockChatProvider(lambda req: "ok"), fail_first=6)

    class FixedRandom:
        def random(self):
            return 0.5  # jitter factor becomes exactly 1.0

    sleeps = []
    resp = with_retries(
        lambda: flaky.chat(_req()),
        attempts=7,
        base_delay=1.0,
        max_delay=8.0,
        rng=FixedRandom(),
        sleep=sleeps.append,
    )
    assert resp.text == "ok"
    assert sleeps == [1.0, 2.0, 4.0, 8.0, 8.0, 8.0]


def test_parallelism_limiter_bounds_concurrency():
    limiter = ParallelismLimiter(max_in_flight=2)
    active = 0
    peak = 0
    lock = threading.Lock()

    def work():
        nonlocal active, peak
        with limiter:
            with lock:
                active += 1
                peak = max(peak, active)
            time.sleep(0.01)
            with lock:
                active -= 1

    threads = [threading.Thread(target=work) for _ in range(8)]
    for t in threads:
        t.start()
    for t in threads:
        t.join()
    assert peak <= 2


def test_build_providers_bundle():
    bundle = build_providers(
        {
            "chat": {"type": "synthetic-chat", "seed": 1},
            "embed": {"type": "mock-embed", "seed": 1, "dim": 8},
        }
    )
    assert set(bundle.by_name) == {"chat", "embed"}
    assert bundle.provider_calls() == 0
    assert bundle.shim_urls() == []
    bundle.by_name["chat"].chat(_req("give a comma-separated list of entities", png_bytes()))
    assert bundle.provider_calls() == 1


def test_build_providers_unknown_type():
    with pytest.raises(ConfigError):
        build_providers({"chat": {"type": "quantum-chat"}})
    with pytest.raises(ConfigError):
        build_providers({"chat": "not-a-dict"})


def test_build_providers_http_requires_endpoint():
    with pytest.raises(ConfigError):
        build_providers({"chat": {"type": "http-chat"}})
    with pytest.raises(ConfigError):
        build_providers({"chat": {"type": "shim-chat"}})
