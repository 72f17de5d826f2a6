// Runs the scaffoldsim binary and checks exit codes and outputs.
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <sys/wait.h>
#include <unistd.h>

namespace fs = std::filesystem;

namespace {

const fs::path kRoot = fs::temp_directory_path() / ("scaffoldsim-cli-" + std::to_string(::getpid()));

int cli(const std::string& args) {
    const std::string cmd = std::string("\"") + SCAFFOLDSIM_CLI + "\" " + args + " > \"" +
                            (kRoot / "stdout.txt").string() + "\" 2> \"" + (kRoot / "stderr.txt").string() + "\"";
    const int raw = std::system(cmd.c_str());
    REQUIRE(WIFEXITED(raw));
    return WEXITSTATUS(raw);
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::string q(const fs::path& p) { return "\"" + p.string() + "\""; }

const std::string kTasks = q(fs::path(SCAFFOLDSIM_DATA_DIR) / "tasks.json");

struct Scratch {
    Scratch() {
        fs::remove_all(kRoot);
        fs::create_directories(kRoot);
    }
    ~Scratch() { fs::remove_all(kRoot); }
};

}  // namespace

TEST_CASE("usage errors exit 1 and write nothing") {
    Scratch s;
    CHECK(cli("run --tasks " + kTasks + " --condition sideways --out " + q(kRoot / "bad")) == 1);
    CHECK_FALSE(fs::exists(kRoot / "bad"));
    CHECK(cli("run --tasks " + q(kRoot / "missing.json") + " --out " + q(kRoot / "bad")) == 1);
    CHECK_FALSE(fs::exists(kRoot / "bad"));
    CHECK(cli("") == 1);
    CHECK(cli("frobnicate") == 1);
    CHECK(cli("validate --tasks " + q(fs::path(SCAFFOLDSIM_DATA_DIR) / "fixtures/four_criteria.json")) == 1);
    CHECK(slurp(kRoot / "stderr.txt").find("42") != std::string::npos);
}

TEST_CASE("help and version exit 0") {
    Scratch s;
    CHECK(cli("--help") == 0);
    CHECK(slurp(kRoot / "stdout.txt").find("run") != std::string::npos);
    CHECK(cli("--version") == 0);
    CHECK(slurp(kRoot / "stdout.txt").find("scaffoldsim") != std::string::npos);
}

TEST_CASE("end-to-end pipeline through the binary") {
    Scratch s;
    const auto corpus = kRoot / "corpus";
    REQUIRE(cli("run --tasks " + kTasks + " --seed 5 --parallel 4 --out " + q(corpus)) == 0);
    CHECK(fs::exists(corpus / "manifest.json"));
    CHECK(fs::exists(corpus / "transcripts" / "t1-deep_think-r0.jsonl"));

    REQUIRE(cli("code --in " + q(corpus) + " --out " + q(kRoot / "codes.csv")) == 0);
    REQUIRE(cli("kappa --a " + q(kRoot / "codes.csv") + " --b " + q(kRoot / "codes.csv") +
                " --sample-fraction 0.2 --seed 3 --out " + q(kRoot / "kappa.md")) == 0);
    CHECK(slurp(kRoot / "kappa.md").find("1.000") != std::string::npos);
    REQUIRE(cli("analyze --corpus " + q(corpus) + " --codes " + q(kRoot / "codes.csv") + " --out " +
                q(kRoot / "report")) == 0);
    CHECK(fs::exists(kRoot / "report" / "report.md"));
    CHECK(fs::exists(kRoot / "report" / "transitions_deep_think.svg"));

    REQUIRE(cli("run --manifest " + q(corpus / "manifest.json") + " --out " + q(kRoot / "replay")) == 0);
    CHECK(slurp(kRoot / "replay" / "manifest.json") == slurp(corpus / "manifest.json"));

    REQUIRE(cli("analyze --summary " + q(fs::path(SCAFFOLDSIM_DATA_DIR) / "fixtures/reported_pvalues.json") +
                " --out " + q(kRoot / "summary")) == 0);
    CHECK(fs::exists(kRoot / "summary" / "summary_report.md"));

    REQUIRE(cli("templates --out " + q(kRoot / "templates")) == 0);
    CHECK(cli("validate --tasks " + kTasks) == 0);
    CHECK(slurp(kRoot / "stdout.txt").find("10 task(s) valid") != std::string::npos);
}

TEST_CASE("an unreachable endpoint is a total failure") {
    Scratch s;
    ::setenv("SCAFFOLDSIM_CLI_KEY", "sk-unused", 1);
    // Port 9 on loopback refuses connections.
    const int code = cli("run --tasks " + kTasks + " --condition deep_think --backend http --endpoint "
                         "http://127.0.0.1:9 --model none --api-key-env SCAFFOLDSIM_CLI_KEY --timeout 1 --out " +
                         q(kRoot / "http"));
    CHECK(code == 3);
    CHECK(fs::exists(kRoot / "http" / "manifest.json"));
}
