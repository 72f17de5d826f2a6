#include <doctest.h>

#include <json.hpp>

#include "helpers.hpp"
#include "scaffoldsim/pipeline.hpp"

using namespace scaffoldsim;
namespace fs = std::filesystem;

namespace {

RunOptions small_run(const fs::path& out) {
    RunOptions o;
    o.tasks = testing::data_path("tasks.json");
    o.out = out;
    o.seed = 11;
    return o;
}

std::map<std::string, std::string> tree(const fs::path& dir) {
    std::map<std::string, std::string> files;
    for (const auto& e : fs::recursive_directory_iterator(dir))
        if (e.is_regular_file()) files[fs::relative(e.path(), dir).generic_string()] = testing::read_file(e.path());
    return files;
}

}  // namespace

TEST_CASE("run, code, analyze and replay from the manifest") {
    testing::TempDir tmp;
    const auto run = cmd_run(small_run(tmp / "corpus"));
    CHECK(run.sessions == 20);
    CHECK(run.failures == 0);
    CHECK(run.exit_code == exit_ok);
    const auto manifest = nlohmann::json::parse(testing::read_file(run.manifest));
    CHECK(manifest["summary"]["complete"] == 20);
    CHECK(manifest["sessions"].size() == 20);
    CHECK(manifest["experiment_id"].get<std::string>().rfind("exp-", 0) == 0);
    CHECK(manifest["config"]["seed"] == 11);

    const auto code = cmd_code({tmp / "corpus", tmp / "codes.csv"});
    CHECK(code.failures == 0);
    CHECK(code.exit_code == exit_ok);
    CHECK(code.items > 100);

    AnalyzeOptions ao;
    ao.codes = {tmp / "codes.csv"};
    ao.corpus = tmp / "corpus";
    ao.out = tmp / "report";
    cmd_analyze(ao);
    for (const char* f : {"report.md", "student_quality.csv", "teacher_behavior.csv", "utterance_length.csv",
                          "transitions_deep_think.svg", "role_proportions_direct_speak.csv"})
        CHECK(fs::exists(tmp / "report" / f));

    // Replay from the manifest: same transcripts, same analysis.
    const auto replay = cmd_run(options_from_manifest(run.manifest, tmp / "replay"));
    CHECK(replay.exit_code == exit_ok);
    const auto original = tree(tmp / "corpus");
    CHECK(tree(tmp / "replay") == original);
    cmd_code({tmp / "replay", tmp / "codes2.csv"});
    CHECK(testing::read_file(tmp / "codes2.csv") == testing::read_file(tmp / "codes.csv"));
    ao.codes = {tmp / "codes2.csv"};
    ao.corpus = tmp / "replay";
    ao.out = tmp / "report2";
    cmd_analyze(ao);
    CHECK(tree(tmp / "report2") == tree(tmp / "report"));

    // A manifest whose tasks were edited is refused.
    fs::create_directories(tmp / "edited");
    fs::copy_file(run.manifest, tmp / "edited" / "manifest.json");
    auto tasks = testing::read_file(tmp / "corpus" / "tasks.json");
    tasks.replace(tasks.find("plum"), 4, "pear");
    std::ofstream(tmp / "edited" / "tasks.json") << tasks;
    try {
        options_from_manifest(tmp / "edited" / "manifest.json", tmp / "x");
        FAIL("expected a validation error");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::validation);
    }

    KappaOptions ko;
    ko.a = tmp / "codes.csv";
    ko.b = tmp / "codes2.csv";
    ko.sample_fraction = 0.2;
    ko.seed = 5;
    const auto k = cmd_kappa(ko);
    CHECK(k.summary.quality_mean == doctest::Approx(1.0));
    CHECK(k.sampled == static_cast<std::size_t>(std::lround(0.2 * static_cast<double>(code.items))));
}

TEST_CASE("empty corpora and zero replicates") {
    testing::TempDir tmp;
    auto o = small_run(tmp / "corpus");
    o.replicates = 0;
    const auto run = cmd_run(o);
    CHECK(run.sessions == 0);
    CHECK(run.exit_code == exit_ok);
    const auto code = cmd_code({tmp / "corpus", tmp / "codes.csv"});
    CHECK(code.items == 0);
    CHECK(testing::read_file(tmp / "codes.csv") == std::string(kCodesHeader) + "\n");
}

TEST_CASE("config files are strict") {
    RunOptions o;
    apply_config(o, R"({"replicates": 3, "session": {"max_rounds": 5, "length": {"unit": "words"}},
                        "backend": {"kind": "scripted", "global_seed": 9}})");
    CHECK(o.replicates == 3);
    CHECK(o.session.max_rounds == 5);
    CHECK(o.seed == 9);
    auto kind = [&](std::string_view text) {
        try {
            RunOptions x;
            apply_config(x, text);
        } catch (const Error& e) {
            return e.kind();
        }
        return ErrorKind::internal;
    };
    CHECK(kind(R"({"replicatez": 3})") == ErrorKind::format);
    CHECK(kind(R"({"session": {"rounds": 3}})") == ErrorKind::format);
    CHECK(kind(R"({"replicates": "three"})") == ErrorKind::format);
    CHECK(kind("not json") == ErrorKind::format);
}

TEST_CASE("exit codes") {
    CHECK(exit_code_for(0, 0) == exit_ok);
    CHECK(exit_code_for(0, 5) == exit_ok);
    CHECK(exit_code_for(2, 5) == exit_partial);
    CHECK(exit_code_for(5, 5) == exit_failure);
    CHECK(exit_code_for(Error(ErrorKind::invalid_argument, "x")) == exit_usage);
    CHECK(exit_code_for(Error(ErrorKind::io, "x")) == exit_usage);
    CHECK(exit_code_for(Error(ErrorKind::network, "x")) == exit_failure);
    CHECK(exit_code_for(std::runtime_error("x")) == exit_failure);

    testing::TempDir tmp;
    auto o = small_run(tmp / "out");
    o.conditions.clear();
    CHECK_THROWS_AS(cmd_run(o), Error);
    o = small_run(tmp / "out");
    o.tasks = tmp / "missing.json";
    try {
        cmd_run(o);
        FAIL("expected io error");
    } catch (const Error& e) {
        CHECK(exit_code_for(e) == exit_usage);
    }
    CHECK_THROWS_AS(load_corpus(tmp / "nope"), Error);
}
