// Exercises the shared library through its C header only.
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstring>
#include <filesystem>
#include <memory>
#include <string>

#include <unistd.h>

#include "scaffoldsim/scaffoldsim.h"

namespace fs = std::filesystem;

namespace {

struct Ctx {
    ss_context* p = ss_context_create();
    ~Ctx() { ss_context_destroy(p); }
    operator ss_context*() const { return p; }
};

std::string data(const char* rel) { return (fs::path(SCAFFOLDSIM_DATA_DIR) / rel).string(); }

fs::path scratch(const char* name) {
    auto p = fs::temp_directory_path() / ("scaffoldsim-capi-" + std::to_string(::getpid()) + "-" + name);
    fs::remove_all(p);
    return p;
}

}  // namespace

TEST_CASE("context basics") {
    Ctx ctx;
    REQUIRE(ctx.p);
    CHECK(std::strlen(ss_version()) > 0);
    CHECK(std::string(ss_status_name(SS_ERR_FORMAT)) == "format");
    CHECK(std::string(ss_last_error(ctx)).empty());
    ss_string_free(nullptr);
}

TEST_CASE("statistics entry points") {
    Ctx ctx;
    double p = 0;
    REQUIRE(ss_t_two_sided_p(ctx, 1.0, 1.0, &p) == SS_OK);
    CHECK(p == doctest::Approx(0.5));

    ss_group_summary a{10, 9.9, 3.071}, b{10, 16.3, 5.165};
    ss_t_test t{};
    REQUIRE(ss_pooled_t_test(ctx, &a, &b, &t) == SS_OK);
    CHECK(t.df == 18);
    CHECK(t.t == doctest::Approx(-3.36804).epsilon(1e-5));
    CHECK(t.defined == 1);
    double d = 0;
    int defined = 0;
    REQUIRE(ss_cohens_d(ctx, &a, &b, &d, &defined) == SS_OK);
    CHECK(defined == 1);
    CHECK(d > 1.5);

    ss_group_summary tiny{1, 1, 0};
    CHECK(ss_pooled_t_test(ctx, &tiny, &b, &t) == SS_ERR_INVALID_ARGUMENT);
    CHECK(std::strlen(ss_last_error(ctx)) > 0);
    CHECK(ss_last_exit_code(ctx) == 1);
    CHECK(ss_pooled_t_test(ctx, nullptr, &b, &t) == SS_ERR_INVALID_ARGUMENT);

    const double raw[] = {0.020, 0.005, 0.714, 0.5};
    const int mask[] = {1, 1, 1, 0};
    double adj[4];
    REQUIRE(ss_bh_adjust(ctx, raw, mask, 4, adj) == SS_OK);
    CHECK(adj[0] == doctest::Approx(0.030));
    CHECK(adj[1] == doctest::Approx(0.015));
    CHECK(adj[2] == doctest::Approx(0.714));
    CHECK(std::isnan(adj[3]));
    const double bad[] = {1.5};
    CHECK(ss_bh_adjust(ctx, bad, nullptr, 1, adj) == SS_ERR_INVALID_ARGUMENT);

    const char* ra[] = {"1", "0", "1", "0"};
    const char* rb[] = {"0", "1", "0", "1"};
    ss_agreement k{};
    REQUIRE(ss_cohen_kappa(ctx, ra, rb, 4, &k) == SS_OK);
    CHECK(k.kappa == doctest::Approx(-1.0));
    CHECK(ss_cohen_kappa(ctx, ra, rb, 0, &k) == SS_ERR_INVALID_ARGUMENT);
}

TEST_CASE("task sets") {
    Ctx ctx;
    ss_task_set* set = nullptr;
    REQUIRE(ss_task_set_load(ctx, data("tasks.json").c_str(), &set) == SS_OK);
    CHECK(ss_task_set_size(set) == 10);
    CHECK(ss_task_set_task_id(set, 0) == 1);
    char* json = nullptr;
    REQUIRE(ss_task_set_to_json(ctx, set, &json) == SS_OK);
    CHECK(std::string(json).find("\"task_id\"") != std::string::npos);
    ss_string_free(json);
    ss_task_set_destroy(set);

    CHECK(ss_task_set_load(ctx, data("fixtures/four_criteria.json").c_str(), &set) == SS_ERR_VALIDATION);
    CHECK(std::string(ss_last_error(ctx)).find("42") != std::string::npos);
    CHECK(ss_task_set_load(ctx, "/nonexistent/tasks.json", &set) == SS_ERR_IO);

    char* report = nullptr;
    REQUIRE(ss_validate_tasks(ctx, data("tasks.json").c_str(), &report) == SS_OK);
    CHECK(std::string(report).find("10 task(s) valid") != std::string::npos);
    ss_string_free(report);
}

TEST_CASE("run, code, kappa and analyze through the C API") {
    Ctx ctx;
    const auto root = scratch("pipeline");
    const std::string corpus = (root / "corpus").string();
    const std::string codes = (root / "codes.csv").string();

    ss_run_options ro;
    ss_run_options_init(&ro);
    const std::string tasks = data("tasks.json");
    ro.tasks = tasks.c_str();
    ro.out = corpus.c_str();
    ro.condition = "both";
    ro.has_seed = 1;
    ro.seed = 3;
    ro.parallel = 4;
    ss_run_result rr{};
    REQUIRE(ss_run_experiment(ctx, &ro, &rr) == SS_OK);
    CHECK(rr.sessions == 20);
    CHECK(rr.failures == 0);
    CHECK(rr.exit_code == 0);

    ss_code_options co;
    ss_code_options_init(&co);
    co.corpus = corpus.c_str();
    co.out = codes.c_str();
    ss_code_result cr{};
    REQUIRE(ss_code_corpus(ctx, &co, &cr) == SS_OK);
    CHECK(cr.items > 0);
    CHECK(cr.failures == 0);

    ss_kappa_result kr{};
    REQUIRE(ss_kappa_files(ctx, codes.c_str(), codes.c_str(), 0.5, 1, nullptr, &kr) == SS_OK);
    CHECK(kr.quality_mean_kappa == doctest::Approx(1.0));
    CHECK(kr.sampled == (cr.items + 1) / 2);
    CHECK(std::string(kr.report).find("kappa") != std::string::npos);
    ss_string_free(kr.report);

    const char* files[] = {codes.c_str()};
    const std::string out = (root / "report").string();
    ss_analyze_options ao{files, 1, corpus.c_str(), nullptr, nullptr, nullptr, out.c_str()};
    ss_analyze_result ar{};
    REQUIRE(ss_analyze(ctx, &ao, &ar) == SS_OK);
    CHECK(ar.exit_code == 0);
    CHECK(fs::exists(root / "report" / "report.md"));

    // Replay reproduces every transcript byte for byte.
    const std::string manifest = (root / "corpus" / "manifest.json").string();
    const std::string replay = (root / "replay").string();
    ss_run_options rp;
    ss_run_options_init(&rp);
    rp.manifest = manifest.c_str();
    rp.out = replay.c_str();
    REQUIRE(ss_run_experiment(ctx, &rp, &rr) == SS_OK);
    for (const auto& e : fs::directory_iterator(root / "corpus" / "transcripts")) {
        const auto twin = root / "replay" / "transcripts" / e.path().filename();
        REQUIRE(fs::exists(twin));
        CHECK(fs::file_size(twin) == fs::file_size(e.path()));
    }

    ro.condition = "sideways";
    CHECK(ss_run_experiment(ctx, &ro, &rr) == SS_ERR_INVALID_ARGUMENT);
    CHECK(ss_last_exit_code(ctx) == 1);
    fs::remove_all(root);
}

TEST_CASE("templates are written") {
    Ctx ctx;
    const auto dir = scratch("templates");
    REQUIRE(ss_write_templates(ctx, dir.string().c_str()) == SS_OK);
    std::size_t n = 0;
    for (const auto& e : fs::directory_iterator(dir)) n += e.path().extension() == ".txt";
    CHECK(n > 3);
    fs::remove_all(dir);
}
