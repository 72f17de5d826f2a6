#include <doctest.h>

#include "helpers.hpp"
#include "scaffoldsim/coding.hpp"
#include "scaffoldsim/orchestrator.hpp"
#include "scaffoldsim/scripted_backend.hpp"

using namespace scaffoldsim;

namespace {

struct Scene {
    const PoetryTask& task = testing::shipped_tasks().front();
    Roster roster = default_roster(task);
    std::vector<Utterance> history;

    Utterance& say(int speaker, std::string content) {
        Utterance u;
        u.session_id = "t1-deep_think-r0";
        u.seq = static_cast<int>(history.size());
        u.round = 1;
        u.speaker_id = speaker;
        u.speaker_kind = speaker == 0 ? SpeakerKind::teacher : SpeakerKind::student;
        if (speaker != 0) u.role = roster.find_student(speaker)->assigned_role;
        u.content = std::move(content);
        history.push_back(std::move(u));
        return history.back();
    }

    CodingDecision code_last(Coder& coder) {
        CodingItem item{task, roster, std::span<const Utterance>(history.data(), history.size() - 1),
                        history.back()};
        return coder.code(item);
    }
};

std::string label_of(const std::string& content, int speaker = 1) {
    Scene s;
    s.say(speaker, content);
    RuleBasedCoder coder;
    return *s.code_last(coder).behavior;
}

// Answers every coding request; behavior requests for one seq always get an out-of-set label.
class InjectingBackend : public Backend {
public:
    explicit InjectingBackend(std::string poisoned_seq) : poisoned_(std::move(poisoned_seq)) {}
    std::string name() const override { return "inject"; }

protected:
    GenerationResponse do_generate(const GenerationRequest& r) override {
        if (r.hints.at("phase") == "code_behavior") {
            if (r.hints.at("seq") == poisoned_) return {R"({"label": "Z9", "rationale": "bad"})", {}, 1};
            const auto first = text::split(r.hints.at("choices.label"), '|').front();
            return {R"({"label": ")" + first + R"(", "rationale": "first allowed"})", {}, 1};
        }
        std::string body = R"({"fluency": 1, "repetitiveness": 0, "contradiction": 0, "relevance": 1, )";
        if (std::find(r.expected_schema.begin(), r.expected_schema.end(), "diversity") != r.expected_schema.end())
            body += R"("diversity": 0, )";
        return {body + R"("rationale": "ok"})", {}, 1};
    }

private:
    std::string poisoned_;
};

}  // namespace

TEST_CASE("rule-based behavior cues") {
    CHECK(label_of("I disagree with Wang Mei about the roots.") == "D4");
    CHECK(label_of("I think the reading so far is one-sided, because of the frost.") == "D4");
    CHECK(label_of("I have some questions about the jade. Could someone explain?") == "D3");
    CHECK(label_of("I agree with Li Si, because the roots matter.") == "D2");
    CHECK(label_of("Regarding the issue of the frost, the answer is in line two.") == "D5");
    CHECK(label_of("Let's start the discussion with the first line.") == "B1");
    CHECK(label_of("We covered the roots, and we can move on to the jade.") == "B2");
    CHECK(label_of("To sum up, the plum stands for endurance.") == "C1");
    CHECK(label_of("I think the plum blossoms stand for hope, because of spring.") == "D1");
    CHECK(label_of("Sorry, I lost my place for a moment.") == "A1");

    CHECK(label_of("Let me summarize. Thank you all.", 0) == "T_C1");
    CHECK(label_of("Let's focus on the frost. Please look closely.", 0) == "T_B1");
    CHECK(label_of("Well done, Li Si: keep building on that insight.", 0) == "T_A1");
}

TEST_CASE("rule-based quality codes") {
    Scene s;
    RuleBasedCoder coder;
    s.say(1, "I think the half-dead roots show tenacious life in the poem.");
    auto first = s.code_last(coder);
    REQUIRE(first.quality);
    CHECK(first.quality->fluency == 1);
    CHECK(first.quality->relevance == 1);
    CHECK(first.quality->repetitiveness == 0);
    CHECK(first.quality->diversity == 1);
    CHECK(first.coder == "rule_based");

    s.say(2, "I think the half-dead roots show tenacious life in the poem.");
    auto repeat = s.code_last(coder);
    CHECK(repeat.quality->repetitiveness == 1);
    CHECK(repeat.quality->diversity == 0);

    s.say(3, "My weekend was fun. On second thought, I no longer believe weekends matter here.");
    auto contra = s.code_last(coder);
    CHECK(contra.quality->contradiction == 1);
    CHECK(contra.quality->relevance == 0);

    s.say(0, "Well done, everyone.");
    auto teacher = s.code_last(coder);
    CHECK_FALSE(teacher.quality->diversity);
    CHECK(teacher.rationale.find("quality:") != std::string::npos);
    CHECK(teacher.rationale.find("behavior:") != std::string::npos);
}

TEST_CASE("model coder repairs and rejects") {
    Scene s;
    s.say(1, "I think the roots endure.");

    testing::QueueBackend good({R"({"fluency": "1", "repetitiveness": 0, "contradiction": 0, "relevance": 1,
        "diversity": 1, "rationale": "fine"})",
                                R"({"label": "D1", "rationale": "states a view"})"});
    ModelCoder coder(good, "stub");
    auto d = s.code_last(coder);
    CHECK(d.coder == "model:stub");
    CHECK(d.quality->diversity == 1);
    CHECK(d.behavior == "D1");

    testing::QueueBackend nonbinary({R"({"fluency": 2, "repetitiveness": 0, "contradiction": 0, "relevance": 1,
        "diversity": 1, "rationale": "x"})",
                                     R"({"fluency": 1, "repetitiveness": 0, "contradiction": 0, "relevance": 1,
        "diversity": 0, "rationale": "fixed"})"});
    ModelCoder repaired(nonbinary, "stub");
    auto q = repaired.code_quality({s.task, s.roster, {}, s.history.back()});
    CHECK(q.quality->fluency == 1);
    CHECK(nonbinary.seen.size() == 2);

    testing::QueueBackend stubborn({R"({"fluency": 5, "repetitiveness": 0, "contradiction": 0, "relevance": 1,
        "diversity": 1, "rationale": "x"})",
                                    R"({"fluency": 5, "repetitiveness": 0, "contradiction": 0, "relevance": 1,
        "diversity": 1, "rationale": "x"})"});
    ModelCoder failing(stubborn, "stub");
    CHECK_THROWS_AS(failing.code_quality({s.task, s.roster, {}, s.history.back()}), Error);

    testing::QueueBackend labels({R"({"label": "D9", "rationale": "x"})", R"({"label": "T_A1", "rationale": "x"})"});
    ModelCoder wrong(labels, "stub");
    CHECK_THROWS_AS(wrong.code_behavior({s.task, s.roster, {}, s.history.back()}), Error);

    s.say(0, "Good work.");
    testing::QueueBackend teacher_div({R"({"fluency": 1, "repetitiveness": 0, "contradiction": 0, "relevance": 1,
        "diversity": 1, "rationale": "x"})"});
    ModelCoder strict(teacher_div, "stub");
    CHECK_THROWS_AS(strict.code_quality({s.task, s.roster, {}, s.history.back()}), Error);
}

TEST_CASE("a failing utterance is flagged and the rest are coded") {
    const auto& task = testing::shipped_tasks().front();
    ScriptedBackend backend{BackendConfig{}};
    SessionConfig cfg;
    const auto run = run_session(task, default_roster(task), cfg, backend, "t1-deep_think-r0");
    InjectingBackend inject("2");
    ModelCoder coder(inject, "inject");
    const auto decisions = code_corpus({run.transcript}, {task}, coder);
    REQUIRE(decisions.size() == run.transcript.utterances.size());
    int failed = 0;
    for (const auto& d : decisions) {
        if (d.failed) {
            ++failed;
            CHECK(d.ref.seq == 2);
            CHECK(d.rationale.find("coding failed") != std::string::npos);
        } else {
            CHECK(d.quality);
            CHECK(d.behavior);
        }
    }
    CHECK(failed == 1);

    const auto csv = write_codes(decisions);
    const auto back = parse_codes(csv);
    CHECK(back.diagnostics.empty());
    REQUIRE(back.decisions.size() == decisions.size());
    CHECK(back.decisions[2].failed);
    CHECK(write_codes(back.decisions) == csv);
}

TEST_CASE("codes files: header, diagnostics, duplicates") {
    const auto human = ingest_human_codes(testing::data_path("fixtures/human_codes.csv"));
    CHECK(human.diagnostics.empty());
    REQUIRE(human.decisions.size() == 3);
    CHECK(human.decisions[0].behavior == "T_B1");
    CHECK_FALSE(human.decisions[0].quality->diversity);
    CHECK(human.decisions[1].coder == "human:rater1");

    const auto bad = load_codes(testing::data_path("fixtures/human_codes_bad.csv"));
    REQUIRE(bad.diagnostics.size() == 1);
    CHECK(bad.diagnostics[0].find("unknown behavior label 'D9'") != std::string::npos);
    CHECK(bad.decisions.size() == 2);
    REQUIRE(bad.warnings.size() == 1);
    CHECK(bad.decisions.back().quality->repetitiveness == 1);

    CHECK_THROWS_AS(parse_codes("id,seq\n"), Error);
    const std::string header = std::string(kCodesHeader) + "\n";
    CHECK(parse_codes(header).decisions.empty());
    CHECK(parse_codes("\xEF\xBB\xBF" + header).decisions.empty());
    auto odd = parse_codes(header + "s,1,robot,1,0,0,1,1,D1,x\ns,x,rule_based,1,0,0,1,1,D1,x\n");
    CHECK(odd.diagnostics.size() == 2);
    auto teacher_div = parse_codes(header + "s,1,rule_based,1,0,0,1,1,T_A1,x\n");
    CHECK(teacher_div.diagnostics.size() == 1);

    CHECK_NOTHROW(validate_coder_id("model:gpt"));
    CHECK_THROWS_AS(validate_coder_id("gpt"), Error);
    CHECK_THROWS_AS(ingest_human_codes(testing::data_path("fixtures/kappa_a.csv").replace_filename("nope.csv")), Error);
}

TEST_CASE("cohen kappa on hand-computed confusion matrices") {
    auto rep = [](int n, const char* v) { return std::vector<std::string>(static_cast<std::size_t>(n), v); };
    auto cat = [](std::vector<std::string> a, const std::vector<std::string>& b) {
        a.insert(a.end(), b.begin(), b.end());
        return a;
    };
    // 40 yes/yes, 40 no/no, 10 yes/no, 10 no/yes: p_o = .8, p_e = .5.
    const auto a = cat(cat(cat(rep(40, "1"), rep(40, "0")), rep(10, "1")), rep(10, "0"));
    const auto b = cat(cat(cat(rep(40, "1"), rep(40, "0")), rep(10, "0")), rep(10, "1"));
    const auto r = cohen_kappa(a, b);
    CHECK(r.n == 100);
    CHECK(r.p_o == doctest::Approx(0.8).epsilon(1e-12));
    CHECK(r.kappa == doctest::Approx(0.6).epsilon(1e-12));

    CHECK(cohen_kappa(a, a).kappa == doctest::Approx(1.0));
    // One rater always says yes: p_o = .5 = p_e.
    CHECK(cohen_kappa(rep(100, "1"), cat(rep(50, "1"), rep(50, "0"))).kappa == doctest::Approx(0.0));
    // Systematic disagreement.
    CHECK(cohen_kappa({"1", "0", "1", "0"}, {"0", "1", "0", "1"}).kappa == doctest::Approx(-1.0));
    // Degenerate: both raters constant and equal.
    const auto same = cohen_kappa(rep(5, "1"), rep(5, "1"));
    CHECK(same.p_e == doctest::Approx(1.0));
    CHECK(same.kappa == doctest::Approx(1.0));
    CHECK_THROWS_AS(cohen_kappa({"1"}, {"1", "0"}), Error);
    CHECK_THROWS_AS(cohen_kappa({}, {}), Error);
}

TEST_CASE("validation sample is stratified, exact and seeded") {
    std::vector<SampleItem> items;
    for (int i = 0; i < 100; ++i) items.push_back({{"s", i}, "student/deep_think"});
    for (int i = 100; i < 125; ++i) items.push_back({{"s", i}, "teacher/deep_think"});
    const auto a = sample_for_validation(items, 0.2, 7);
    const auto b = sample_for_validation(items, 0.2, 7);
    const auto c = sample_for_validation(items, 0.2, 8);
    CHECK(a.size() == 25);
    CHECK(a == b);
    CHECK(a != c);
    CHECK(std::count_if(a.begin(), a.end(), [](const UtteranceRef& r) { return r.seq >= 100; }) == 5);
    CHECK(std::is_sorted(a.begin(), a.end()));
    CHECK(sample_for_validation(items, 1.0, 1).size() == 125);
    CHECK_THROWS_AS(sample_for_validation(items, 0.0, 1), Error);
    CHECK_THROWS_AS(sample_for_validation(items, 1.5, 1), Error);
}

TEST_CASE("compare codings over the shared items") {
    const auto a = load_codes(testing::data_path("fixtures/kappa_a.csv"));
    const auto b = load_codes(testing::data_path("fixtures/kappa_b.csv"));
    const auto s = compare_codings(a.decisions, b.decisions);
    CHECK(s.overlap == 100);
    for (const auto& q : s.quality) {
        if (q.dimension == "relevance")
            CHECK(q.kappa == doctest::Approx(0.6).epsilon(1e-12));
        else
            CHECK(q.kappa == doctest::Approx(1.0));
    }
    CHECK(s.quality_mean == doctest::Approx((4.0 + 0.6) / 5.0));
    REQUIRE_FALSE(s.behavior.empty());
    CHECK(s.behavior[0].kappa == doctest::Approx(1.0));

    std::vector<UtteranceRef> subset{{"t1-deep_think-r0", 0}, {"t1-direct_speak-r0", 1}};
    CHECK(compare_codings(a.decisions, b.decisions, &subset).overlap == 2);
}
