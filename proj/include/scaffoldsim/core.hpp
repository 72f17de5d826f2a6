#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

namespace scaffoldsim {

inline constexpr std::size_t kCriteriaPerTask = 5;
inline constexpr std::size_t kStudentsPerSession = 5;

enum class Role { leader, supporter, expounder, rebutter, summarizer };
enum class Condition { deep_think, direct_speak };
enum class SpeakerKind { teacher, student };
enum class Termination { all_points_covered, round_cap, aborted };
enum class SessionStatus { complete, invalid };

inline constexpr Role kAllRoles[] = {Role::leader, Role::supporter, Role::expounder, Role::rebutter,
                                     Role::summarizer};
inline constexpr Condition kAllConditions[] = {Condition::deep_think, Condition::direct_speak};

const char* to_string(Role role) noexcept;
const char* to_string(Condition condition) noexcept;
const char* to_string(SpeakerKind kind) noexcept;
const char* to_string(Termination termination) noexcept;
const char* to_string(SessionStatus status) noexcept;

/// Accepts canonical names plus the aliases Explainer (Expounder) and Refuter/Critic (Rebutter).
Role parse_role(std::string_view name);
Condition parse_condition(std::string_view name);
SpeakerKind parse_speaker_kind(std::string_view name);
Termination parse_termination(std::string_view name);

struct TeacherIdentity {
    int id = 0;
    std::string name;
    std::string base_definition;
    std::string learning_goal;
};

struct StudentIdentity {
    int id = 0;
    std::string name;
    std::string base_definition;
    Role assigned_role = Role::leader;
};

struct Roster {
    TeacherIdentity teacher;
    std::vector<StudentIdentity> students;

    const StudentIdentity* find_student(int id) const noexcept;
    const StudentIdentity* find_role(Role role) const noexcept;
    /// Display name for any roster member; empty if unknown.
    std::string name_of(int id) const;
    std::vector<int> student_ids() const;
};

struct PoetryTask {
    int task_id = 0;
    std::string poem;
    std::string task_prompt;
    std::vector<std::string> scoring_criteria;
    /// Per-criterion match phrases, used only for offline coverage judgement.
    std::optional<std::vector<std::vector<std::string>>> keyword_sets;
    /// Free-form provenance label ("published example", "synthetic").
    std::optional<std::string> source;

    /// Short heading of criterion `index` (its first sentence).
    std::string criterion_title(std::size_t index) const;
};

struct Diagnostic {
    std::string field;
    std::string rule;
    std::string message;
};

/// Empty iff the task satisfies every invariant.
std::vector<Diagnostic> validate_task(const PoetryTask& task);

/// Throws Error(format) with line/field on malformed input and Error(validation) naming the
/// offending task_id otherwise.
std::vector<PoetryTask> parse_task_set(std::string_view json);
std::vector<PoetryTask> load_task_set(const std::filesystem::path& path);
std::string write_task_set(const std::vector<PoetryTask>& tasks);

/// Throws Error(invalid_argument) unless the roster has one teacher and exactly five students,
/// one per role, with unique ids.
void validate_roster(const Roster& roster);

/// Fixed five-student roster whose teacher carries the task and its criteria as learning goal.
Roster default_roster(const PoetryTask& task);

struct Reflection {
    std::string understanding;
    std::string reaction;
    std::string contribution;
    std::string inner_thoughts;

    bool complete() const noexcept;
    friend bool operator==(const Reflection&, const Reflection&) = default;
};

struct Utterance {
    std::string session_id;
    int round = 0;
    int seq = 0;
    int speaker_id = 0;
    SpeakerKind speaker_kind = SpeakerKind::student;
    std::optional<Role> role;
    Condition condition = Condition::direct_speak;
    std::string content;
    std::optional<Reflection> reflection;
    std::optional<std::string> declared_behavior;
};

struct SessionTranscript {
    std::string session_id;
    int task_id = 0;
    Condition condition = Condition::direct_speak;
    Roster roster;
    std::vector<Utterance> utterances;
    /// Cumulative covered criterion indices after each discussion round.
    std::vector<std::set<int>> coverage_log;
    Termination termination = Termination::round_cap;
    SessionStatus status = SessionStatus::complete;
    std::string error;

    int discussion_rounds() const noexcept { return static_cast<int>(coverage_log.size()); }
};

/// JSON Lines: a session header followed by one utterance per line.
std::string write_transcript(const SessionTranscript& transcript);
SessionTranscript parse_transcript(std::string_view jsonl);
SessionTranscript load_transcript(const std::filesystem::path& path);
void save_transcript(const std::filesystem::path& path, const SessionTranscript& transcript);

/// Structural invariants of a finished transcript; empty when all hold.
std::vector<std::string> check_transcript(const SessionTranscript& transcript);

std::string read_text_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, std::string_view content);
std::string sha256_hex(std::string_view bytes);

}  // namespace scaffoldsim
