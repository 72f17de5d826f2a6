#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "scaffoldsim/agents.hpp"

namespace scaffoldsim {

struct SessionConfig {
    Condition condition = Condition::deep_think;
    int max_rounds = 12;
    LengthPolicy length;
    std::uint64_t seed = 0;
    bool allow_silence = true;
    /// Name students who stayed silent two rounds running as the next to contribute.
    bool balance_monitoring = true;

    void validate() const;
};

enum class Phase { initiation, discussion, conclusion, done };

const char* to_string(Phase phase) noexcept;

struct SessionState {
    Phase phase = Phase::initiation;
    int round = 0;
    std::set<int> remaining;
    std::vector<int> order;
    std::vector<Utterance> history;
    std::vector<std::set<int>> coverage_log;
    /// Consecutive silent rounds per student id.
    std::map<int, int> silent_streak;
    std::optional<ActionKind> last_action;
    std::vector<std::string> warnings;
};

/// Runs the initiation phase: records the opening utterance and the first speaking order.
SessionState start_session(const AgentContext& ctx);

/// Folds a teacher directive into the state: remaining shrinks by covered_now, the order is
/// replaced and the cumulative coverage is logged. Moves to conclusion when nothing remains
/// or the round cap is reached.
void apply_directive(SessionState& state, const TeacherDirective& directive, int max_rounds);

/// One discussion round: every student in order (silences allowed), then the teacher's assessment.
void step_round(SessionState& state, const AgentContext& ctx, bool balance_monitoring = true);

/// Closing phase; requires phase == conclusion.
void finish_session(SessionState& state, const AgentContext& ctx);

struct SessionRun {
    SessionTranscript transcript;
    std::vector<std::string> warnings;
};

/// Full session. Invalid inputs throw Error(invalid_argument); failures during the run yield a
/// partial transcript with status invalid and termination aborted.
SessionRun run_session(const PoetryTask& task, const Roster& roster, const SessionConfig& config, Backend& backend,
                       const std::string& session_id = {},
                       const PromptLibrary& prompts = PromptLibrary::builtin());

std::uint64_t derive_session_seed(std::uint64_t seed, int task_id, Condition condition, int replicate) noexcept;

std::string make_session_id(int task_id, Condition condition, int replicate);

struct ExperimentConfig {
    std::vector<Condition> conditions{Condition::deep_think, Condition::direct_speak};
    int replicates = 1;
    /// Template for every session; its condition and seed are overridden per session.
    SessionConfig session;
    int parallel = 1;
};

struct SessionRecord {
    std::string session_id;
    int task_id = 0;
    Condition condition = Condition::deep_think;
    int replicate = 0;
    std::uint64_t seed = 0;
    SessionStatus status = SessionStatus::complete;
    Termination termination = Termination::round_cap;
    std::string error;
    std::vector<std::string> warnings;
};

struct ExperimentResult {
    /// Ordered by task (file order), then condition, then replicate, independent of parallelism.
    std::vector<SessionTranscript> transcripts;
    std::vector<SessionRecord> records;

    std::size_t failures() const noexcept;
};

ExperimentResult run_experiment(const std::vector<PoetryTask>& tasks, const ExperimentConfig& config,
                                Backend& backend, const PromptLibrary& prompts = PromptLibrary::builtin());

}  // namespace scaffoldsim
