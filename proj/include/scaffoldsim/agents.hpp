#pragma once

#include <cstdint>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "scaffoldsim/backend.hpp"
#include "scaffoldsim/core.hpp"
#include "scaffoldsim/prompts.hpp"
#include "scaffoldsim/text.hpp"

namespace scaffoldsim {

struct LengthPolicy {
    std::size_t teacher_limit = 150;
    std::size_t student_limit = 80;
    text::LengthUnit unit = text::LengthUnit::automatic;
    double hard_cap_factor = 1.5;

    std::size_t limit(SpeakerKind kind) const noexcept {
        return kind == SpeakerKind::teacher ? teacher_limit : student_limit;
    }
    std::size_t hard_cap(SpeakerKind kind) const noexcept;
    void validate() const;
};

enum class ActionKind { present_viewpoint, question, raise_issue, summarize, silent };

const char* to_string(ActionKind kind) noexcept;
ActionKind parse_action_kind(std::string_view name);

struct StudentAction {
    ActionKind kind = ActionKind::present_viewpoint;
};

enum class TeacherAction { comment_and_reorder, encourage_or_guide, final_feedback };

const char* to_string(TeacherAction action) noexcept;
TeacherAction parse_teacher_action(std::string_view name);

struct TeacherDirective {
    TeacherAction action = TeacherAction::encourage_or_guide;
    std::string comment;
    std::vector<int> next_order;
    std::set<int> covered_now;
    std::vector<std::string> warnings;
};

/// Everything an agent pipeline needs to know about the running session.
struct AgentContext {
    const PoetryTask& task;
    const Roster& roster;
    Condition condition;
    LengthPolicy length;
    const PromptLibrary& prompts;
    Backend& backend;
    std::string session_id;
    std::uint64_t session_seed = 0;
    int max_rounds = 12;
    bool allow_silence = true;
};

/// Where a student turn sits in the discussion.
struct TurnInfo {
    int round = 1;
    /// Number of students who have already spoken (not stayed silent) this round.
    int turn_index = 0;
    std::set<int> remaining;
    std::string latest_instruction;
};

struct ActionContext {
    int round = 1;
    bool final_round = false;
    std::optional<ActionKind> previous_action;
    bool has_new_material = true;
    int seq = 0;
};

struct Initiation {
    Utterance utterance;
    std::vector<int> order;
    std::vector<std::string> warnings;
};

struct Speech {
    Utterance utterance;
    std::vector<std::string> warnings;
};

Initiation teacher_initiate(const AgentContext& ctx);

/// Judges this round's coverage and produces the teacher's comment and next order.
/// `quiet_students` are ids the participation monitor wants to hear from next.
TeacherDirective teacher_assess(const AgentContext& ctx, std::span<const Utterance> history, int round,
                                const std::set<int>& remaining, const std::vector<int>& current_order,
                                const std::vector<int>& quiet_students = {});

/// Closing feedback. Throws Error(protocol) unless coverage is complete or the round cap is hit.
Speech teacher_conclude(const AgentContext& ctx, std::span<const Utterance> history,
                           const std::set<int>& remaining, int rounds_done);

/// Private four-part reflection. Throws Error(protocol) outside the deep_think condition.
Reflection student_think(const AgentContext& ctx, std::span<const Utterance> history,
                         const StudentIdentity& student, const TurnInfo& turn);

/// Role-biased seeded policy; pure in (session seed, student, action context).
StudentAction student_choose_action(const AgentContext& ctx, const StudentIdentity& student,
                                    const ActionContext& action_ctx);

/// Throws Error(invalid_argument) for the silent action, which produces no utterance.
Speech student_speak(const AgentContext& ctx, std::span<const Utterance> history, const StudentIdentity& student,
                     StudentAction action, const Reflection* reflection, const TurnInfo& turn);

/// Public dialogue as other agents see it: speaker name, role and words. Never reflections.
std::string render_history(std::span<const Utterance> history, const Roster& roster);

/// Match phrases of criterion `index`: its keyword set, or its title when the task has none.
std::vector<std::string> criterion_keywords(const PoetryTask& task, std::size_t index);

/// Criteria in `remaining` with at least one keyword occurring (case-insensitively) in a
/// student utterance of `utterances`.
std::set<int> keyword_coverage(const PoetryTask& task, std::span<const Utterance> utterances,
                               const std::set<int>& remaining);

/// Content words of the poem, task and criterion keywords; the relevance vocabulary.
std::set<std::string> task_vocabulary(const PoetryTask& task);

/// Poem content words that belong to no criterion keyword; safe for citation without
/// touching coverage.
std::vector<std::string> image_vocabulary(const PoetryTask& task);

std::vector<int> rotate_order(const std::vector<int>& order);

/// Parses "3, 1, 2, 5, 4"; nullopt unless the result is a permutation of `ids`.
std::optional<std::vector<int>> parse_order(const std::string& s, const std::vector<int>& ids);

/// Applies the hard cap for `kind`, recording a warning on truncation.
std::string enforce_length(const std::string& content, SpeakerKind kind, const LengthPolicy& policy,
                           std::vector<std::string>& warnings);

}  // namespace scaffoldsim
