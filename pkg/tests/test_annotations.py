import io
import json
import threading
from http.server import BaseHTTPRequestHandler, HTTPServer

import httpx
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from nsdvqa.annotations import (
    POSITIONS,
    SEMANTIC_CATEGORIES,
    AnnotatorClient,
    AnnotatorConfig,
    AnnotatorError,
    CacheMiss,
    ImageAnnotation,
    Interaction,
    ObjectEntry,
    PersonEntry,
    PromptTemplate,
    SceneEntry,
    annotation_from_dict,
    dumps_annotation,
    parse_annotations,
    request_annotation,
    request_many,
    validate_annotation,
)

PROMPT = PromptTemplate("t", "Describe the image as JSON.")
GOOD = {"objects": [{"label": "dog", "count": 1, "semantic_category": "animal"}],
        "persons": [], "scene": {"setting": "outdoor", "location": "park"}}


def rec(image_id, **kw):
    d = {"image_id": image_id, "objects": [], "persons": []}
    d.update(kw)
    return json.dumps(d)


class TestParse:
    def test_empty(self):
        res = parse_annotations(io.StringIO(""))
        assert res.annotations == [] and res.rejects == []

    def test_three_valid_one_malformed(self):
        lines = [rec("a"), rec("b"), "{not json", rec("c")]
        res = parse_annotations(lines)
        assert [a.image_id for a in res.annotations] == ["a", "b", "c"]
        assert [r.line_no for r in res.rejects] == [3]

    def test_duplicate_label_aggregates(self):
        line = rec("a", objects=[{"label": "dog", "count": 1}, {"label": "Dog", "count": 1}])
        (a,) = parse_annotations([line]).annotations
        assert a.objects == (ObjectEntry("dog", 2),)

    def test_negative_count_rejected(self):
        res = parse_annotations([rec("a", objects=[{"label": "dog", "count": -1}])])
        assert not res.annotations and "count ≥ 0" in res.rejects[0].reason

    def test_duplicate_image_id_rejected(self):
        res = parse_annotations([rec("a"), rec("a")])
        assert len(res.annotations) == 1 and res.rejects[0].line_no == 2

    def test_unknown_keys_and_categories(self):
        assert parse_annotations([rec("a", extra=1)]).rejects
        (a,) = parse_annotations([rec("a", objects=[{"label": "x", "count": 1,
                                                      "semantic_category": "gizmo"}])]).annotations
        assert a.objects[0].semantic_category == "other"

    def test_file_source(self, tmp_path):
        p = tmp_path / "a.jsonl"
        p.write_text(rec("a") + "\n\n" + rec("b") + "\n", encoding="utf-8")
        assert len(parse_annotations(p).annotations) == 2
        with pytest.raises(OSError):
            parse_annotations(tmp_path / "missing.jsonl")


class TestValidate:
    def test_valid(self):
        a = annotation_from_dict({"image_id": "x", **GOOD})
        assert validate_annotation(a) == []

    def test_forced_negative_count(self):
        a = ImageAnnotation("x", (ObjectEntry("dog", -1),), ())
        (issue,) = validate_annotation(a)
        assert issue.field == "objects[0].count" and issue.rule == "count ≥ 0"

    def test_unresolved_interaction(self):
        a = ImageAnnotation("x", (ObjectEntry("dog", 1),),
                            (PersonEntry("surfing", Interaction("riding", "surfboard")),))
        (issue,) = validate_annotation(a)
        assert issue.rule == "unresolved interaction target"
        assert validate_annotation(a) == validate_annotation(a)

    def test_bad_position(self):
        a = ImageAnnotation("x", (ObjectEntry("dog", 1, position="left"),), ())
        assert [i.rule for i in validate_annotation(a)] == [f"position in {POSITIONS}"]


tokens = st.text(alphabet="abcdefghij ", min_size=1, max_size=8).map(lambda s: " ".join(s.split())).filter(bool)


@st.composite
def annotations(draw):
    labels = draw(st.lists(tokens, max_size=5, unique=True))
    objects = tuple(ObjectEntry(l, draw(st.integers(0, 9)), draw(st.sampled_from(SEMANTIC_CATEGORIES)),
                                draw(st.none() | tokens), draw(st.sampled_from(POSITIONS)))
                    for l in labels)
    persons = tuple(PersonEntry(draw(st.none() | tokens),
                                draw(st.none() | st.builds(Interaction, tokens, tokens)),
                                draw(st.none() | tokens))
                    for _ in range(draw(st.integers(0, 2))))
    scene = draw(st.none() | st.builds(SceneEntry, st.sampled_from(["indoor", "outdoor"]), st.none() | tokens))
    return ImageAnnotation(draw(tokens), objects, persons, scene,
                           draw(st.sampled_from(["annotator_a", "annotator_b", "merged"])))


@settings(max_examples=200, deadline=None)
@given(annotations())
def test_round_trip(a):
    res = parse_annotations([dumps_annotation(a)])
    assert res.annotations == [a]


def chat_body(content):
    return {"choices": [{"message": {"role": "assistant", "content": content}}]}


class TestClient:
    def cfg(self, tmp_path, **kw):
        base = dict(endpoint="http://annotator.test/v1", cache_dir=str(tmp_path / "cache"), backoff=0.0)
        base.update(kw)
        return AnnotatorConfig.from_mapping(base, environ={})

    def test_live_then_offline(self, tmp_path):
        calls = []

        def handler(request):
            calls.append(json.loads(request.content))
            return httpx.Response(200, json=chat_body(json.dumps(GOOD)))

        live = AnnotatorClient(self.cfg(tmp_path), transport=httpx.MockTransport(handler))
        r = request_annotation(live, "http://img/0001.jpg", PROMPT)
        assert r.parse_status == "ok" and r.image_id == "0001" and len(calls) == 1
        assert calls[0]["messages"][0]["content"][1]["image_url"]["url"] == "http://img/0001.jpg"

        def forbidden(request):
            raise AssertionError("network used in offline mode")

        off = AnnotatorClient(self.cfg(tmp_path, offline=True), transport=httpx.MockTransport(forbidden))
        again = off.request("http://img/0001.jpg", PROMPT)
        assert again == r and off.network_calls == 0
        with pytest.raises(CacheMiss):
            off.request("http://img/0002.jpg", PROMPT)
        # a different prompt is a different cache key
        with pytest.raises(CacheMiss):
            off.request("http://img/0001.jpg", PromptTemplate("t", "other"))

    def test_malformed_is_not_repaired(self, tmp_path):
        transport = httpx.MockTransport(lambda r: httpx.Response(200, json=chat_body("```json\n{}```")))
        c = AnnotatorClient(self.cfg(tmp_path), transport=transport)
        assert c.request("x.jpg", PROMPT).parse_status == "malformed"

    def test_non_retryable_status(self, tmp_path):
        c = AnnotatorClient(self.cfg(tmp_path), transport=httpx.MockTransport(lambda r: httpx.Response(401)))
        with pytest.raises(AnnotatorError):
            c.request("x.jpg", PROMPT)
        assert c.network_calls == 1

    def test_retry_budget_exhausted(self, tmp_path):
        c = AnnotatorClient(self.cfg(tmp_path, max_retries=2),
                            transport=httpx.MockTransport(lambda r: httpx.Response(503)))
        with pytest.raises(AnnotatorError):
            c.request("x.jpg", PROMPT)
        assert c.network_calls == 3

    def test_request_many_ordered(self, tmp_path):
        def handler(request):
            url = json.loads(request.content)["messages"][0]["content"][1]["image_url"]["url"]
            if "bad" in url:
                return httpx.Response(400)
            return httpx.Response(200, json=chat_body(json.dumps(GOOD)))

        c = AnnotatorClient(self.cfg(tmp_path), transport=httpx.MockTransport(handler))
        refs = [f"http://img/{i}.jpg" for i in range(8)] + ["http://img/bad.jpg"]
        out = request_many(c, refs, PROMPT, jobs=4)
        assert [o.image_id for o in out[:-1]] == [str(i) for i in range(8)]
        assert isinstance(out[-1], AnnotatorError)

    def test_local_file_as_data_url(self, tmp_path):
        img = tmp_path / "pic.png"
        img.write_bytes(b"\x89PNG")
        payload = AnnotatorClient(self.cfg(tmp_path)).build_payload(str(img), PROMPT)
        assert payload["messages"][0]["content"][1]["image_url"]["url"].startswith("data:image/png;base64,")

    def test_env_override(self, tmp_path):
        cfg = AnnotatorConfig.from_mapping({"model": "m1"}, environ={"NSDVQA_ANNOTATOR_MODEL": "m2",
                                                                     "NSDVQA_ANNOTATOR_MAX_RETRIES": "5"})
        assert cfg.model == "m2" and cfg.max_retries == 5
        with pytest.raises(ValueError):
            AnnotatorConfig.from_mapping({"offline": True}, environ={})


class _Flaky(BaseHTTPRequestHandler):
    statuses: list = []
    hits = 0

    def do_POST(self):
        type(self).hits += 1
        self.rfile.read(int(self.headers["Content-Length"]))
        status = self.statuses.pop(0) if self.statuses else 200
        body = json.dumps(chat_body(json.dumps(GOOD)) if status == 200 else {"error": "boom"}).encode()
        self.send_response(status)
        self.send_header("Content-Type", "application/json")
        self.send_header("Content-Length", str(len(body)))
        self.end_headers()
        self.wfile.write(body)

    def log_message(self, *args):
        pass


def test_stub_server_500_then_200(tmp_path):
    _Flaky.statuses = [500, 200]
    _Flaky.hits = 0
    server = HTTPServer(("127.0.0.1", 0), _Flaky)
    thread = threading.Thread(target=server.serve_forever, daemon=True)
    thread.start()
    try:
        cfg = AnnotatorConfig.from_mapping(
            {"endpoint": f"http://127.0.0.1:{server.server_port}/v1", "max_retries": 2,
             "backoff": 0.0, "cache_dir": str(tmp_path)}, environ={})
        client = AnnotatorClient(cfg)
        r = client.request("http://img/42.jpg", PROMPT)
        client.close()
    finally:
        server.shutdown()
    assert r.parse_status == "ok"
    assert r.attempts == 2 and _Flaky.hits == 2
