#include <doctest.h>

#include "helpers.hpp"
#include "scaffoldsim/scripted_backend.hpp"

using namespace scaffoldsim;

namespace {

GenerationRequest speech_request() {
    GenerationRequest r;
    r.system_prompt = "You are a student.";
    r.messages = {{"user", "Speak now."}};
    r.seed = 11;
    r.hints = {{"phase", "student_speak"}, {"name", "Li Si"}, {"role", "Leader"}, {"action", "present_viewpoint"},
               {"condition", "direct_speak"}, {"turn_index", "0"}, {"focus_keywords", "half-dead roots"},
               {"vocabulary", "wind|spring|jade"}};
    return r;
}

}  // namespace

TEST_CASE("scripted backend is a pure function of seed and request") {
    BackendConfig cfg;
    cfg.global_seed = 5;
    ScriptedBackend a(cfg), b(cfg);
    const auto req = speech_request();
    CHECK(a.generate(req).text == b.generate(req).text);
    CHECK(a.request_key(req) == b.request_key(req));

    auto hotter = req;
    hotter.temperature = 1.3;
    CHECK(a.request_key(hotter) == a.request_key(req));

    auto other = req;
    other.hints["turn_index"] = "1";
    CHECK(a.request_key(other) != a.request_key(req));

    cfg.global_seed = 6;
    ScriptedBackend c(cfg);
    CHECK(c.request_key(req) != a.request_key(req));
    CHECK(a.request_count() == 1);
}

TEST_CASE("scripted backend answers structured requests") {
    ScriptedBackend backend{BackendConfig{}};
    GenerationRequest req;
    req.system_prompt = "Code this.";
    req.messages = {{"user", "text"}};
    req.expected_schema = {"label", "rationale"};
    req.hints = {{"choices.label", "D1|D2"}};
    const auto r = backend.generate_structured(req);
    REQUIRE(r.structured);
    const auto& label = r.structured->at("label");
    CHECK((label == "D1" || label == "D2"));
    CHECK_FALSE(r.structured->at("rationale").empty());
    CHECK(r.attempts == 1);
}

TEST_CASE("parse_structured") {
    const std::vector<std::string> schema{"a", "b"};
    auto ok = parse_structured("noise {\"a\": \"x\", \"b\": [1, \"y\"]} trailing", schema);
    REQUIRE(ok);
    CHECK(ok->at("a") == "x");
    CHECK(ok->at("b") == "1,y");
    CHECK_FALSE(parse_structured("{\"a\": \"x\"}", schema));
    CHECK_FALSE(parse_structured("{\"a\": \"x\", \"b\": \"  \"}", schema));
    CHECK_FALSE(parse_structured("{\"a\": \"x\", \"b\": null}", schema));
    CHECK_FALSE(parse_structured("no json here", schema));
    CHECK_FALSE(parse_structured("{broken", schema));
}

TEST_CASE("repair loop re-prompts until the schema is met") {
    testing::QueueBackend backend({"not json", "{\"a\": \"x\"}", "{\"a\": \"x\", \"b\": \"y\"}"});
    GenerationRequest req;
    req.system_prompt = "s";
    req.messages = {{"user", "m"}};
    req.expected_schema = {"a", "b"};
    const auto r = backend.generate_structured(req);
    CHECK(r.attempts == 3);
    CHECK(r.structured->at("b") == "y");
    REQUIRE(backend.seen.size() == 3);
    CHECK(backend.seen[2].messages.size() == 5);
    CHECK(backend.seen[2].messages[1].speaker_tag == "assistant");
    CHECK(backend.seen[0].system_prompt.find("\"a\"") != std::string::npos);
}

TEST_CASE("repair exhaustion raises with the raw text") {
    testing::QueueBackend backend({"one", "two", "three"});
    backend.set_max_repair_attempts(2);
    GenerationRequest req;
    req.system_prompt = "s";
    req.expected_schema = {"a"};
    try {
        backend.generate_structured(req);
        FAIL("expected StructuredOutputError");
    } catch (const StructuredOutputError& e) {
        CHECK(e.attempts() == 2);
        CHECK(e.raw_text() == "two");
        CHECK(e.kind() == ErrorKind::structured_output);
    }
}

TEST_CASE("request preconditions") {
    testing::QueueBackend backend({"x"});
    GenerationRequest empty;
    CHECK_THROWS_AS(backend.generate(empty), Error);
    GenerationRequest zero;
    zero.system_prompt = "s";
    zero.max_units = 0;
    CHECK_THROWS_AS(backend.generate(zero), Error);
    GenerationRequest no_schema;
    no_schema.system_prompt = "s";
    CHECK_THROWS_AS(backend.generate_structured(no_schema), Error);

    testing::QueueBackend blank({"   "});
    GenerationRequest ok;
    ok.system_prompt = "s";
    try {
        blank.generate(ok);
        FAIL("expected generation error");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::generation);
    }
}

TEST_CASE("backend configuration checks") {
    BackendConfig cfg;
    CHECK_NOTHROW(validate_backend_config(cfg));
    cfg.max_repair_attempts = 0;
    CHECK_THROWS_AS(validate_backend_config(cfg), Error);
    cfg = {};
    cfg.kind = BackendKind::http;
    CHECK_THROWS_AS(validate_backend_config(cfg), Error);
    cfg.endpoint = "http://127.0.0.1:9";
    cfg.model_name = "m";
    cfg.api_key_env = "SCAFFOLDSIM_TEST_UNSET_KEY";
    ::unsetenv("SCAFFOLDSIM_TEST_UNSET_KEY");
    try {
        make_backend(cfg);
        FAIL("expected missing-credential error");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::invalid_argument);
        CHECK(std::string(e.what()).find("SCAFFOLDSIM_TEST_UNSET_KEY") != std::string::npos);
    }
    CHECK(make_backend(BackendConfig{})->name() == "scripted");
    CHECK(parse_backend_kind("http") == BackendKind::http);
    CHECK_THROWS_AS(parse_backend_kind("gpt"), Error);
}
