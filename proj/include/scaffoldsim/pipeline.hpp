#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "scaffoldsim/backend.hpp"
#include "scaffoldsim/coding.hpp"
#include "scaffoldsim/orchestrator.hpp"

namespace scaffoldsim {

/// Stable process exit codes shared by every command.
enum ExitCode : int { exit_ok = 0, exit_usage = 1, exit_partial = 2, exit_failure = 3 };

/// Success, partial failure or total failure for `failed` out of `total` units of work.
int exit_code_for(std::size_t failed, std::size_t total) noexcept;

/// Exit code for an exception escaping a command: usage/config problems map to 1, the rest to 3.
int exit_code_for(const std::exception& e) noexcept;

struct RunOptions {
    std::filesystem::path tasks;
    std::filesystem::path out;
    std::string experiment_id;
    std::vector<Condition> conditions{Condition::deep_think, Condition::direct_speak};
    int replicates = 1;
    std::uint64_t seed = 0;
    int parallel = 1;
    SessionConfig session;
    BackendConfig backend;
    /// Overrides for individual prompt templates; empty for the built-ins.
    std::filesystem::path template_dir;
    /// Hash of the task file the run originally read; set on replay so the manifest matches.
    std::string source_tasks_sha256;
};

/// Merges a JSON config file ({"backend": {...}, "session": {...}, ...}) into `options`.
void apply_config(RunOptions& options, std::string_view json);

/// Rebuilds the options recorded in a manifest; tasks come from the tasks.json next to it.
RunOptions options_from_manifest(const std::filesystem::path& manifest, const std::filesystem::path& out);

struct RunOutcome {
    std::size_t sessions = 0;
    std::size_t failures = 0;
    int exit_code = exit_ok;
    std::filesystem::path manifest;
};

/// Runs the experiment and writes tasks.json, transcripts/<session>.jsonl and manifest.json
/// under options.out.
RunOutcome cmd_run(const RunOptions& options);

/// Canonical manifest text; depends only on options and results (no clock, no parallelism).
std::string manifest_json(const RunOptions& options, const std::string& tasks_text, const std::string& source_sha,
                          const ExperimentResult& result);

/// Corpus directory written by cmd_run: tasks plus transcripts in file-name order.
struct Corpus {
    std::vector<PoetryTask> tasks;
    std::vector<SessionTranscript> transcripts;
};

Corpus load_corpus(const std::filesystem::path& dir);

struct CodeOptions {
    std::filesystem::path corpus;
    std::filesystem::path out;
    /// "rule_based" or "model".
    std::string coder = "rule_based";
    BackendConfig backend;
    std::filesystem::path template_dir;
};

struct CodeOutcome {
    std::size_t items = 0;
    std::size_t failures = 0;
    int exit_code = exit_ok;
};

CodeOutcome cmd_code(const CodeOptions& options);

struct KappaOptions {
    std::filesystem::path a;
    std::filesystem::path b;
    double sample_fraction = 1.0;
    std::uint64_t seed = 0;
    /// Optional report file (markdown).
    std::filesystem::path out;
};

struct KappaOutcome {
    AgreementSummary summary;
    std::size_t sampled = 0;
    std::string rendered;
};

KappaOutcome cmd_kappa(const KappaOptions& options);

struct AnalyzeOptions {
    std::vector<std::filesystem::path> codes;
    std::filesystem::path corpus;
    /// Summary-input mode: a JSON file of printed summaries instead of a corpus.
    std::filesystem::path summary;
    /// Two codes files to report agreement between.
    std::vector<std::filesystem::path> agreement;
    std::filesystem::path out;
};

struct AnalyzeOutcome {
    std::size_t warnings = 0;
    int exit_code = exit_ok;
};

AnalyzeOutcome cmd_analyze(const AnalyzeOptions& options);

}  // namespace scaffoldsim
