#include <doctest.h>

#include "helpers.hpp"
#include "scaffoldsim/orchestrator.hpp"
#include "scaffoldsim/scripted_backend.hpp"

using namespace scaffoldsim;

namespace {

SessionRun scripted_session(const PoetryTask& task, Condition c, std::uint64_t seed, int max_rounds = 12) {
    BackendConfig bc;
    bc.global_seed = seed;
    ScriptedBackend backend(bc);
    SessionConfig cfg;
    cfg.condition = c;
    cfg.seed = seed;
    cfg.max_rounds = max_rounds;
    return run_session(task, default_roster(task), cfg, backend, "sess");
}

// Scripted replies with one phrase scrubbed, so the criteria that need it can never be met.
class ScrubbingBackend : public Backend {
public:
    ScrubbingBackend(const BackendConfig& c, std::string phrase) : inner_(c), phrase_(std::move(phrase)) {}
    CoverageMode coverage_mode() const noexcept override { return CoverageMode::keywords; }
    std::string name() const override { return "scrubbing"; }

protected:
    GenerationResponse do_generate(const GenerationRequest& r) override {
        auto out = inner_.generate(r);
        for (auto pos = out.text.find(phrase_); pos != std::string::npos; pos = out.text.find(phrase_))
            out.text.replace(pos, phrase_.size(), "that image");
        return out;
    }

private:
    ScriptedBackend inner_;
    std::string phrase_;
};

}  // namespace

TEST_CASE("scripted sessions satisfy the transcript invariants") {
    for (Condition c : kAllConditions) {
        for (const auto& task : testing::shipped_tasks()) {
            const auto run = scripted_session(task, c, 21);
            const auto& t = run.transcript;
            CAPTURE(task.task_id);
            CHECK(check_transcript(t).empty());
            CHECK(t.status == SessionStatus::complete);
            CHECK(t.termination == Termination::all_points_covered);
            CHECK(t.discussion_rounds() <= 12);
            CHECK(t.utterances.front().declared_behavior == "initiate");
            CHECK(t.utterances.back().declared_behavior == "final_feedback");
        }
    }
}

TEST_CASE("sessions are reproducible") {
    const auto& task = testing::shipped_tasks()[4];
    const auto a = scripted_session(task, Condition::deep_think, 8);
    const auto b = scripted_session(task, Condition::deep_think, 8);
    const auto c = scripted_session(task, Condition::deep_think, 9);
    CHECK(write_transcript(a.transcript) == write_transcript(b.transcript));
    CHECK(write_transcript(a.transcript) != write_transcript(c.transcript));
}

TEST_CASE("unreachable points end at the round cap") {
    PoetryTask task = testing::shipped_tasks().front();
    for (auto& set : *task.keyword_sets) set = {"qqzx"};
    ScrubbingBackend backend(BackendConfig{}, "qqzx");
    SessionConfig cfg;
    cfg.condition = Condition::direct_speak;
    cfg.max_rounds = 3;
    const auto run = run_session(task, default_roster(task), cfg, backend, "capped");
    const auto& t = run.transcript;
    CHECK(t.termination == Termination::round_cap);
    CHECK(t.status == SessionStatus::complete);
    CHECK(t.discussion_rounds() == 3);
    CHECK(check_transcript(t).empty());
    // Every assessment after an empty round is guidance, and the conclusion still happens.
    CHECK(t.utterances.back().declared_behavior == "final_feedback");
}

TEST_CASE("backend failure aborts the session but keeps the partial history") {
    const auto& task = testing::shipped_tasks().front();
    testing::QueueBackend backend({"Welcome, please begin."});
    SessionConfig cfg;
    cfg.condition = Condition::direct_speak;
    const auto run = run_session(task, default_roster(task), cfg, backend, "broken");
    CHECK(run.transcript.status == SessionStatus::invalid);
    CHECK(run.transcript.termination == Termination::aborted);
    CHECK_FALSE(run.transcript.error.empty());
    CHECK(run.transcript.utterances.size() == 1);
}

TEST_CASE("invalid inputs are rejected up front") {
    const auto& task = testing::shipped_tasks().front();
    ScriptedBackend backend{BackendConfig{}};
    SessionConfig cfg;
    cfg.max_rounds = 0;
    CHECK_THROWS_AS(run_session(task, default_roster(task), cfg, backend), Error);
    cfg = {};
    auto roster = default_roster(task);
    roster.students.pop_back();
    CHECK_THROWS_AS(run_session(task, roster, cfg, backend), Error);
}

TEST_CASE("directives are checked against the state") {
    SessionState s;
    s.phase = Phase::discussion;
    s.round = 1;
    s.remaining = {0, 1, 2, 3, 4};
    s.order = {1, 2, 3, 4, 5};
    TeacherDirective d;
    d.action = TeacherAction::comment_and_reorder;
    d.covered_now = {0, 2};
    d.next_order = {2, 1, 3, 4, 5};
    apply_directive(s, d, 12);
    CHECK(s.remaining == std::set<int>{1, 3, 4});
    REQUIRE(s.coverage_log.size() == 1);
    CHECK(s.coverage_log[0] == std::set<int>{0, 2});
    CHECK(s.phase == Phase::discussion);

    TeacherDirective stale = d;
    stale.covered_now = {0};
    CHECK_THROWS_AS(apply_directive(s, stale, 12), Error);
    TeacherDirective bad_order = d;
    bad_order.covered_now = {};
    bad_order.next_order = {1, 2};
    CHECK_THROWS_AS(apply_directive(s, bad_order, 12), Error);

    TeacherDirective rest = d;
    rest.covered_now = {1, 3, 4};
    s.round = 2;
    apply_directive(s, rest, 12);
    CHECK(s.phase == Phase::conclusion);
    CHECK(s.coverage_log.back() == std::set<int>{0, 1, 2, 3, 4});
}

TEST_CASE("experiment order, seeds and parallelism") {
    const auto& tasks = testing::shipped_tasks();
    std::vector<PoetryTask> three(tasks.begin(), tasks.begin() + 3);
    ExperimentConfig cfg;
    cfg.replicates = 2;
    cfg.session.seed = 4;
    BackendConfig bc;
    bc.global_seed = 4;
    ScriptedBackend b1(bc), b2(bc);
    cfg.parallel = 1;
    const auto serial = run_experiment(three, cfg, b1);
    cfg.parallel = 6;
    const auto parallel = run_experiment(three, cfg, b2);
    REQUIRE(serial.transcripts.size() == 12);
    REQUIRE(parallel.transcripts.size() == 12);
    CHECK(serial.records[0].session_id == "t1-deep_think-r0");
    CHECK(serial.records[1].session_id == "t1-deep_think-r1");
    CHECK(serial.records[2].session_id == "t1-direct_speak-r0");
    std::set<std::uint64_t> seeds;
    for (std::size_t i = 0; i < 12; ++i) {
        CHECK(write_transcript(serial.transcripts[i]) == write_transcript(parallel.transcripts[i]));
        seeds.insert(serial.records[i].seed);
    }
    CHECK(seeds.size() == 12);
    CHECK(serial.failures() == 0);
    CHECK(derive_session_seed(4, 1, Condition::deep_think, 0) == serial.records[0].seed);
    CHECK(make_session_id(10, Condition::direct_speak, 3) == "t10-direct_speak-r3");

    std::vector<PoetryTask> dup{tasks[0], tasks[0]};
    CHECK_THROWS_AS(run_experiment(dup, cfg, b1), Error);
    CHECK_THROWS_AS(run_experiment({}, cfg, b1), Error);
}
