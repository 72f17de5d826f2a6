#include <doctest.h>

#include <functional>

#include "helpers.hpp"
#include "scaffoldsim/error.hpp"

using namespace scaffoldsim;

namespace {

ErrorKind kind_of(const std::function<void()>& f) {
    try {
        f();
    } catch (const Error& e) {
        return e.kind();
    }
    FAIL("expected an Error");
    return ErrorKind::internal;
}

std::string message_of(const std::function<void()>& f) {
    try {
        f();
    } catch (const Error& e) {
        return e.what();
    }
    return {};
}

SessionTranscript tiny_transcript() {
    const auto& task = testing::shipped_tasks().front();
    SessionTranscript t;
    t.session_id = "s1";
    t.task_id = task.task_id;
    t.condition = Condition::deep_think;
    t.roster = default_roster(task);
    Utterance open{"s1", 0, 0, 0, SpeakerKind::teacher, std::nullopt, Condition::deep_think, "Welcome.", {}, "initiate"};
    Utterance student{"s1", 1, 1, 1, SpeakerKind::student, Role::leader, Condition::deep_think, "I think so.",
                      Reflection{"u", "r", "c", "i"}, "present_viewpoint"};
    Utterance assess{"s1", 1, 2, 0, SpeakerKind::teacher, std::nullopt, Condition::deep_think, "Good.", {}, {}};
    Utterance close{"s1", 2, 3, 0, SpeakerKind::teacher, std::nullopt, Condition::deep_think, "Thanks.", {},
                    "final_feedback"};
    t.utterances = {open, student, assess, close};
    t.coverage_log = {{0, 1, 2, 3, 4}};
    t.termination = Termination::all_points_covered;
    return t;
}

}  // namespace

TEST_CASE("shipped task set loads in file order") {
    const auto& tasks = testing::shipped_tasks();
    REQUIRE(tasks.size() == 10);
    for (std::size_t i = 0; i < tasks.size(); ++i) {
        CHECK(tasks[i].task_id == static_cast<int>(i) + 1);
        CHECK(tasks[i].scoring_criteria.size() == kCriteriaPerTask);
        REQUIRE(tasks[i].keyword_sets);
        CHECK(tasks[i].keyword_sets->size() == kCriteriaPerTask);
        CHECK(validate_task(tasks[i]).empty());
    }
    CHECK(tasks[0].criterion_title(0) == "Tenacious life");
    CHECK(tasks[0].source == "reference example");
}

TEST_CASE("task with four criteria is rejected naming its id") {
    const auto path = testing::data_path("fixtures/four_criteria.json");
    CHECK(kind_of([&] { load_task_set(path); }) == ErrorKind::validation);
    const auto msg = message_of([&] { load_task_set(path); });
    CHECK(msg.find("task_id 42") != std::string::npos);
    CHECK(msg.find("scoring_criteria") != std::string::npos);
}

TEST_CASE("task set format and validation errors") {
    CHECK(kind_of([] { parse_task_set("{not json"); }) == ErrorKind::format);
    CHECK(kind_of([] { parse_task_set("{}"); }) == ErrorKind::format);
    CHECK(kind_of([] { parse_task_set(R"([{"task_id": 1, "poem": "p"}])"); }) == ErrorKind::format);

    const std::string dup = R"([
      {"task_id": 3, "poem": "p", "task_prompt": "q", "scoring_criteria": ["a","b","c","d","e"]},
      {"task_id": 3, "poem": "p", "task_prompt": "q", "scoring_criteria": ["a","b","c","d","e"]}])";
    CHECK(message_of([&] { parse_task_set(dup); }).find("duplicate task_id") != std::string::npos);

    const std::string blank = R"([{"task_id": 9, "poem": " ", "task_prompt": "q", "scoring_criteria": ["a","b","c","d","e"]}])";
    CHECK(message_of([&] { parse_task_set(blank); }).find("poem") != std::string::npos);

    const std::string kw = R"([{"task_id": 5, "poem": "p", "task_prompt": "q", "scoring_criteria": ["a","b","c","d","e"],
      "keyword_sets": [["x"],["y"]]}])";
    CHECK(message_of([&] { parse_task_set(kw); }).find("keyword_sets") != std::string::npos);

    CHECK(kind_of([] { load_task_set("/nonexistent/tasks.json"); }) == ErrorKind::io);
}

TEST_CASE("task set round trips through its canonical form") {
    const auto& tasks = testing::shipped_tasks();
    const auto text = write_task_set(tasks);
    const auto again = parse_task_set(text);
    REQUIRE(again.size() == tasks.size());
    CHECK(write_task_set(again) == text);
    CHECK(again[3].keyword_sets == tasks[3].keyword_sets);
}

TEST_CASE("default roster has one student per role") {
    const auto roster = default_roster(testing::shipped_tasks().front());
    CHECK_NOTHROW(validate_roster(roster));
    for (Role r : kAllRoles) CHECK(roster.find_role(r) != nullptr);
    CHECK(roster.name_of(0) == "Ms. Zhao");
    CHECK(roster.student_ids() == std::vector<int>{1, 2, 3, 4, 5});
    CHECK(roster.teacher.learning_goal.find("Tenacious life") != std::string::npos);

    auto bad = roster;
    bad.students.pop_back();
    CHECK(kind_of([&] { validate_roster(bad); }) == ErrorKind::invalid_argument);
    bad = roster;
    bad.students[4].assigned_role = Role::leader;
    CHECK_THROWS_AS(validate_roster(bad), Error);
    bad = roster;
    bad.students[2].id = 1;
    CHECK_THROWS_AS(validate_roster(bad), Error);
}

TEST_CASE("enum names parse back") {
    for (Role r : kAllRoles) CHECK(parse_role(to_string(r)) == r);
    for (Condition c : kAllConditions) CHECK(parse_condition(to_string(c)) == c);
    CHECK(parse_termination("round_cap") == Termination::round_cap);
    CHECK(kind_of([] { parse_condition("deep"); }) == ErrorKind::invalid_argument);
}

TEST_CASE("transcript round trip and checks") {
    const auto t = tiny_transcript();
    CHECK(check_transcript(t).empty());
    const auto text = write_transcript(t);
    const auto back = parse_transcript(text);
    CHECK(write_transcript(back) == text);
    CHECK(back.utterances.size() == 4);
    CHECK(back.utterances[1].reflection == t.utterances[1].reflection);
    CHECK(back.discussion_rounds() == 1);

    testing::TempDir dir;
    save_transcript(dir / "nested/s1.jsonl", t);
    CHECK(write_transcript(load_transcript(dir / "nested/s1.jsonl")) == text);

    auto missing = t;
    missing.utterances[1].reflection.reset();
    CHECK_FALSE(check_transcript(missing).empty());

    auto direct = t;
    direct.condition = Condition::direct_speak;
    for (auto& u : direct.utterances) u.condition = Condition::direct_speak;
    CHECK_FALSE(check_transcript(direct).empty());

    auto shrink = t;
    shrink.coverage_log = {{0, 1}, {0}};
    CHECK_FALSE(check_transcript(shrink).empty());

    auto gap = t;
    gap.utterances[2].seq = 7;
    CHECK_FALSE(check_transcript(gap).empty());

    CHECK(kind_of([] { parse_transcript("{\"type\":\"utterance\"}\n"); }) == ErrorKind::format);
}

TEST_CASE("sha256 matches the standard test vector") {
    CHECK(sha256_hex("abc") == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
    CHECK(sha256_hex("") == "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
}
