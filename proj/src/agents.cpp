#include "scaffoldsim/agents.hpp"

#include <algorithm>
#include <cmath>

#include "scaffoldsim/error.hpp"
#include "scaffoldsim/rng.hpp"

namespace scaffoldsim {

namespace {

constexpr const char* kThinkFields[] = {"Understanding of the Poem", "Reaction to Others' Comments",
                                        "Possible Contributions", "Inner Thoughts"};

const char* role_function(Role role) {
    switch (role) {
        case Role::leader:
            return "Open the discussion on a topic, propose directions and keep the group moving toward the task.";
        case Role::supporter:
            return "Back up classmates' views with further evidence from the poem and its background.";
        case Role::expounder:
            return "Explain difficult lines and answer the questions classmates raise.";
        case Role::rebutter:
            return "Probe claims with questions and challenge readings that seem weak or one-sided.";
        case Role::summarizer:
            return "Pull together what the group has established and state how far the task has progressed.";
    }
    return "";
}

const char* action_phrase(ActionKind kind) {
    switch (kind) {
        case ActionKind::present_viewpoint: return "present your viewpoint";
        case ActionKind::question: return "ask a question";
        case ActionKind::raise_issue: return "raise an issue with what has been said";
        case ActionKind::summarize: return "summarize the discussion so far";
        case ActionKind::silent: return "stay silent";
    }
    return "";
}

std::string unit_word(const AgentContext& ctx) {
    return text::resolve_unit(ctx.length.unit, ctx.task.poem) == text::LengthUnit::characters ? "characters"
                                                                                               : "words";
}

const Utterance* last_student(std::span<const Utterance> history, int exclude_id) {
    for (auto it = history.rbegin(); it != history.rend(); ++it)
        if (it->speaker_kind == SpeakerKind::student && it->speaker_id != exclude_id) return &*it;
    return nullptr;
}

std::string titles(const PoetryTask& task, const std::set<int>& indices) {
    std::vector<std::string> out;
    for (int i : indices) out.push_back(task.criterion_title(static_cast<std::size_t>(i)));
    return text::join(out, "|");
}

std::set<int> all_criteria(const PoetryTask& task) {
    std::set<int> all;
    for (std::size_t i = 0; i < task.scoring_criteria.size(); ++i) all.insert(static_cast<int>(i));
    return all;
}

std::string names_of(const Roster& roster, const std::vector<int>& ids, std::string_view sep) {
    std::vector<std::string> out;
    for (int id : ids) out.push_back(roster.name_of(id));
    return text::join(out, sep);
}

std::string student_directory(const Roster& roster) {
    std::vector<std::string> out;
    for (const auto& s : roster.students) out.push_back(s.name + ":" + to_string(s.assigned_role));
    return text::join(out, "|");
}

std::map<std::string, std::string> base_hints(const AgentContext& ctx, std::string phase, int speaker_id,
                                              int round, std::size_t seq) {
    return {{"phase", std::move(phase)},
            {"session_id", ctx.session_id},
            {"session_seed", std::to_string(ctx.session_seed)},
            {"condition", to_string(ctx.condition)},
            {"speaker_id", std::to_string(speaker_id)},
            {"name", ctx.roster.name_of(speaker_id)},
            {"round", std::to_string(round)},
            {"seq", std::to_string(seq)},
            {"task_prompt", ctx.task.task_prompt},
            {"student_names", student_directory(ctx.roster)}};
}

GenerationRequest make_request(const AgentContext& ctx, std::string system, std::string user, SpeakerKind kind,
                               std::size_t seq) {
    GenerationRequest req;
    req.system_prompt = std::move(system);
    req.messages.push_back({"user", std::move(user)});
    req.max_units = static_cast<int>(ctx.length.limit(kind));
    req.temperature = 0.7;
    req.seed = hash_combine(ctx.session_seed, seq);
    return req;
}

std::string teacher_system(const AgentContext& ctx) {
    const auto& t = ctx.roster.teacher;
    return ctx.prompts.render("teacher_system", {{"name", t.name},
                                                 {"base_definition", t.base_definition},
                                                 {"learning_goal", t.learning_goal}});
}

std::string student_system(const AgentContext& ctx, const StudentIdentity& s) {
    return ctx.prompts.render("student_identity", {{"name", s.name},
                                                   {"base_definition", s.base_definition},
                                                   {"role", to_string(s.assigned_role)},
                                                   {"role_function", role_function(s.assigned_role)}});
}

int focus_of(const std::set<int>& remaining) { return remaining.empty() ? -1 : *remaining.begin(); }

/// Image words nobody has used yet in the public dialogue.
std::vector<std::string> fresh_words(const PoetryTask& task, std::span<const Utterance> history) {
    std::set<std::string> seen;
    for (const auto& u : history)
        for (auto& tok : text::tokenize(u.content)) seen.insert(std::move(tok));
    std::vector<std::string> out;
    for (auto& w : image_vocabulary(task))
        if (!seen.count(w)) out.push_back(std::move(w));
    return out;
}

void add_student_hints(std::map<std::string, std::string>& h, const AgentContext& ctx,
                       std::span<const Utterance> history, const StudentIdentity& s, const TurnInfo& turn) {
    h["role"] = to_string(s.assigned_role);
    h["turn_index"] = std::to_string(turn.turn_index);
    const int focus = focus_of(turn.remaining);
    if (focus >= 0) {
        h["focus_title"] = ctx.task.criterion_title(static_cast<std::size_t>(focus));
        h["focus_keywords"] = text::join(criterion_keywords(ctx.task, static_cast<std::size_t>(focus)), "|");
    }
    std::set<int> covered;
    for (int i : all_criteria(ctx.task))
        if (!turn.remaining.count(i)) covered.insert(i);
    h["covered_titles"] = titles(ctx.task, covered);
    h["vocabulary"] = text::join(image_vocabulary(ctx.task), "|");
    h["fresh_vocabulary"] = text::join(fresh_words(ctx.task, history), "|");
    if (const Utterance* peer = last_student(history, s.id)) {
        h["peer"] = ctx.roster.name_of(peer->speaker_id);
        h["peer_action"] = peer->declared_behavior.value_or("");
        h["echo"] = peer->content;
    }
}

}  // namespace

// ---------------------------------------------------------------------------

std::size_t LengthPolicy::hard_cap(SpeakerKind kind) const noexcept {
    return static_cast<std::size_t>(std::floor(static_cast<double>(limit(kind)) * hard_cap_factor + 1e-9));
}

void LengthPolicy::validate() const {
    if (teacher_limit == 0 || student_limit == 0) fail(ErrorKind::invalid_argument, "length limits must be positive");
    if (!(hard_cap_factor >= 1.0)) fail(ErrorKind::invalid_argument, "hard_cap_factor must be >= 1");
}

const char* to_string(ActionKind kind) noexcept {
    switch (kind) {
        case ActionKind::present_viewpoint: return "present_viewpoint";
        case ActionKind::question: return "question";
        case ActionKind::raise_issue: return "raise_issue";
        case ActionKind::summarize: return "summarize";
        case ActionKind::silent: return "silent";
    }
    return "silent";
}

ActionKind parse_action_kind(std::string_view name) {
    for (auto k : {ActionKind::present_viewpoint, ActionKind::question, ActionKind::raise_issue,
                   ActionKind::summarize, ActionKind::silent})
        if (name == to_string(k)) return k;
    fail(ErrorKind::invalid_argument, "unknown student action '" + std::string(name) + "'");
}

const char* to_string(TeacherAction action) noexcept {
    switch (action) {
        case TeacherAction::comment_and_reorder: return "comment_and_reorder";
        case TeacherAction::encourage_or_guide: return "encourage_or_guide";
        case TeacherAction::final_feedback: return "final_feedback";
    }
    return "final_feedback";
}

TeacherAction parse_teacher_action(std::string_view name) {
    const std::string n = text::to_lower_ascii(text::trim(name));
    for (auto a : {TeacherAction::comment_and_reorder, TeacherAction::encourage_or_guide,
                   TeacherAction::final_feedback})
        if (n == to_string(a)) return a;
    fail(ErrorKind::invalid_argument, "unknown teacher action '" + std::string(name) + "'");
}

// ---------------------------------------------------------------------------
// Shared helpers

std::string render_history(std::span<const Utterance> history, const Roster& roster) {
    if (history.empty()) return "(no discussion yet)";
    std::string out;
    for (const auto& u : history) {
        if (!out.empty()) out += '\n';
        out += roster.name_of(u.speaker_id);
        out += u.role ? std::string(" (") + to_string(*u.role) + ")" : std::string(" (Teacher)");
        out += ": " + u.content;
    }
    return out;
}

std::vector<std::string> criterion_keywords(const PoetryTask& task, std::size_t index) {
    if (task.keyword_sets && index < task.keyword_sets->size()) return (*task.keyword_sets)[index];
    return {text::to_lower_ascii(task.criterion_title(index))};
}

std::set<int> keyword_coverage(const PoetryTask& task, std::span<const Utterance> utterances,
                               const std::set<int>& remaining) {
    std::set<int> covered;
    for (int i : remaining) {
        for (const auto& kw : criterion_keywords(task, static_cast<std::size_t>(i))) {
            const bool hit = std::any_of(utterances.begin(), utterances.end(), [&](const Utterance& u) {
                return u.speaker_kind == SpeakerKind::student && text::contains_phrase(u.content, kw);
            });
            if (hit) {
                covered.insert(i);
                break;
            }
        }
    }
    return covered;
}

std::set<std::string> task_vocabulary(const PoetryTask& task) {
    std::set<std::string> vocab;
    auto add = [&](std::string_view s) {
        for (auto& w : text::content_words(s)) vocab.insert(std::move(w));
    };
    add(task.poem);
    add(task.task_prompt);
    for (std::size_t i = 0; i < task.scoring_criteria.size(); ++i) add(task.criterion_title(i));
    if (task.keyword_sets)
        for (const auto& set : *task.keyword_sets)
            for (const auto& kw : set) add(kw);
    return vocab;
}

std::vector<std::string> image_vocabulary(const PoetryTask& task) {
    std::vector<std::string> keywords;
    for (std::size_t i = 0; i < task.scoring_criteria.size(); ++i)
        for (const auto& kw : criterion_keywords(task, i)) keywords.push_back(text::to_lower_ascii(kw));
    std::vector<std::string> out;
    std::set<std::string> seen;
    for (auto& w : text::content_words(task.poem)) {
        const bool clashes = std::any_of(keywords.begin(), keywords.end(), [&](const std::string& kw) {
            return w.find(kw) != std::string::npos || kw.find(w) != std::string::npos;
        });
        if (!clashes && seen.insert(w).second) out.push_back(std::move(w));
    }
    return out;
}

std::vector<int> rotate_order(const std::vector<int>& order) {
    if (order.size() < 2) return order;
    std::vector<int> out(order.begin() + 1, order.end());
    out.push_back(order.front());
    return out;
}

std::optional<std::vector<int>> parse_order(const std::string& s, const std::vector<int>& ids) {
    std::vector<int> out;
    std::string cleaned = s;
    for (char& c : cleaned)
        if (c == '[' || c == ']' || c == ';' || c == ' ') c = ',';
    for (const auto& part : text::split(cleaned, ',')) {
        const std::string p = text::trim(part);
        if (p.empty()) continue;
        try {
            std::size_t used = 0;
            int v = std::stoi(p, &used);
            if (used != p.size()) return std::nullopt;
            out.push_back(v);
        } catch (const std::exception&) {
            return std::nullopt;
        }
    }
    std::vector<int> a = out, b = ids;
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    if (a != b) return std::nullopt;
    return out;
}

std::string enforce_length(const std::string& content, SpeakerKind kind, const LengthPolicy& policy,
                           std::vector<std::string>& warnings) {
    const auto unit = text::resolve_unit(policy.unit, content);
    const std::size_t cap = policy.hard_cap(kind);
    const std::size_t n = text::count_units(content, unit);
    if (n <= cap) return content;
    auto cut = text::truncate_to_units(content, cap, unit);
    warnings.push_back(std::string(to_string(kind)) + " utterance truncated from " + std::to_string(n) + " to " +
                       std::to_string(text::count_units(cut.text, unit)) + " " + text::to_string(unit) +
                       " (hard cap " + std::to_string(cap) + ")");
    return cut.text;
}

// ---------------------------------------------------------------------------
// Teacher

Initiation teacher_initiate(const AgentContext& ctx) {
    validate_roster(ctx.roster);
    Initiation out;
    out.order = ctx.roster.student_ids();
    const std::size_t seq = 0;

    std::string user = ctx.prompts.render(
        "teacher_initiate", {{"poem", ctx.task.poem},
                             {"task_prompt", ctx.task.task_prompt},
                             {"order", names_of(ctx.roster, out.order, ", ")},
                             {"limit", std::to_string(ctx.length.teacher_limit)},
                             {"unit", unit_word(ctx)}});
    auto req = make_request(ctx, teacher_system(ctx), std::move(user), SpeakerKind::teacher, seq);
    req.hints = base_hints(ctx, "teacher_initiate", ctx.roster.teacher.id, 0, seq);
    req.hints["criteria_titles"] = titles(ctx.task, all_criteria(ctx.task));
    req.hints["order"] = names_of(ctx.roster, out.order, "|");

    auto resp = ctx.backend.generate(req);
    Utterance& u = out.utterance;
    u.session_id = ctx.session_id;
    u.round = 0;
    u.seq = 0;
    u.speaker_id = ctx.roster.teacher.id;
    u.speaker_kind = SpeakerKind::teacher;
    u.condition = ctx.condition;
    u.content = enforce_length(text::trim(resp.text), SpeakerKind::teacher, ctx.length, out.warnings);
    u.declared_behavior = "initiate";
    return out;
}

TeacherDirective teacher_assess(const AgentContext& ctx, std::span<const Utterance> history, int round,
                                const std::set<int>& remaining, const std::vector<int>& current_order,
                                const std::vector<int>& quiet_students) {
    if (round < 1) fail(ErrorKind::protocol, "teacher_assess requires a discussion round >= 1");
    if (remaining.empty()) fail(ErrorKind::protocol, "teacher_assess called with every point already covered");

    std::vector<Utterance> this_round;
    for (const auto& u : history)
        if (u.round == round && u.speaker_kind == SpeakerKind::student) this_round.push_back(u);

    const std::vector<int> ids = ctx.roster.student_ids();
    auto put_quiet_first = [&](std::vector<int> order) {
        std::stable_partition(order.begin(), order.end(), [&](int id) {
            return std::find(quiet_students.begin(), quiet_students.end(), id) != quiet_students.end();
        });
        return order;
    };

    std::vector<std::string> remaining_lines;
    for (int i : remaining)
        remaining_lines.push_back(std::to_string(i) + ": " + ctx.task.scoring_criteria[static_cast<std::size_t>(i)]);
    std::vector<std::string> order_ids;
    for (int id : current_order) order_ids.push_back(std::to_string(id));
    std::vector<std::string> students;
    for (const auto& s : ctx.roster.students)
        students.push_back(std::to_string(s.id) + " = " + s.name + " (" + to_string(s.assigned_role) + ")");
    std::string balance;
    if (!quiet_students.empty())
        balance = "Participation note: " + names_of(ctx.roster, quiet_students, ", ") +
                  " stayed silent for two consecutive rounds; name them as the next to contribute.";

    const std::size_t seq = history.size();
    std::string user = ctx.prompts.render(
        "teacher_assess", {{"poem", ctx.task.poem},
                           {"context", render_history(history, ctx.roster)},
                           {"round", std::to_string(round)},
                           {"remaining", text::join(remaining_lines, "\n")},
                           {"order", text::join(order_ids, ", ")},
                           {"students", text::join(students, "; ")},
                           {"balance", balance},
                           {"limit", std::to_string(ctx.length.teacher_limit)},
                           {"unit", unit_word(ctx)}});
    auto req = make_request(ctx, teacher_system(ctx), std::move(user), SpeakerKind::teacher, seq);
    req.hints = base_hints(ctx, "teacher_assess", ctx.roster.teacher.id, round, seq);
    req.hints["remaining_titles"] = titles(ctx.task, remaining);
    req.hints["quiet"] = names_of(ctx.roster, quiet_students, "|");

    TeacherDirective d;
    if (ctx.backend.coverage_mode() == CoverageMode::keywords) {
        d.covered_now = keyword_coverage(ctx.task, this_round, remaining);
        d.action = d.covered_now.empty() ? TeacherAction::encourage_or_guide : TeacherAction::comment_and_reorder;
        d.next_order = put_quiet_first(rotate_order(current_order));

        std::set<int> left;
        std::set_difference(remaining.begin(), remaining.end(), d.covered_now.begin(), d.covered_now.end(),
                            std::inserter(left, left.end()));
        std::vector<int> praised;
        for (const auto& u : this_round)
            if (!keyword_coverage(ctx.task, std::span<const Utterance>(&u, 1), remaining).empty() &&
                std::find(praised.begin(), praised.end(), u.speaker_id) == praised.end())
                praised.push_back(u.speaker_id);
        req.hints["action"] = to_string(d.action);
        req.hints["covered_titles"] = titles(ctx.task, d.covered_now);
        req.hints["praised"] = names_of(ctx.roster, praised, "|");
        const int focus = focus_of(left.empty() ? remaining : left);
        req.hints["focus_title"] = ctx.task.criterion_title(static_cast<std::size_t>(focus));
        req.hints["order"] = names_of(ctx.roster, d.next_order, "|");
        d.comment = text::trim(ctx.backend.generate(req).text);
    } else {
        req.expected_schema = {"action", "comment", "next_order", "covered_now"};
        auto resp = ctx.backend.generate_structured(req);
        const auto& f = *resp.structured;

        std::string cleaned = f.at("covered_now");
        for (char& c : cleaned)
            if (c == '[' || c == ']' || c == ';' || c == ' ') c = ',';
        for (const auto& part : text::split(cleaned, ',')) {
            const std::string p = text::to_lower_ascii(text::trim(part));
            if (p.empty() || p == "none") continue;
            int idx = -1;
            try {
                std::size_t used = 0;
                idx = std::stoi(p, &used);
                if (used != p.size()) idx = -1;
            } catch (const std::exception&) {
                idx = -1;
            }
            if (idx < 0) {
                d.warnings.push_back("ignored unparseable coverage entry '" + p + "'");
            } else if (!remaining.count(idx)) {
                d.warnings.push_back("clipped coverage index " + std::to_string(idx) + " outside remaining points");
            } else {
                d.covered_now.insert(idx);
            }
        }

        try {
            d.action = parse_teacher_action(f.at("action"));
        } catch (const Error&) {
            d.warnings.push_back("unknown teacher action '" + f.at("action") + "'");
            d.action = TeacherAction::comment_and_reorder;
        }
        if (d.action == TeacherAction::final_feedback) d.action = TeacherAction::comment_and_reorder;
        if (d.covered_now.empty() && d.action != TeacherAction::encourage_or_guide) {
            d.warnings.push_back("no point covered this round; action set to encourage_or_guide");
            d.action = TeacherAction::encourage_or_guide;
        }

        if (auto order = parse_order(f.at("next_order"), ids)) {
            d.next_order = put_quiet_first(*order);
        } else {
            d.warnings.push_back("proposed order '" + f.at("next_order") +
                                 "' is not a permutation of the students; rotating the previous order");
            d.next_order = put_quiet_first(rotate_order(current_order));
        }

        d.comment = text::trim(f.at("comment"));
        std::vector<std::string> unnamed;
        for (int id : quiet_students)
            if (!text::contains_phrase(d.comment, ctx.roster.name_of(id))) unnamed.push_back(ctx.roster.name_of(id));
        if (!unnamed.empty())
            d.comment += " " + text::join(unnamed, " and ") + ", we would like to hear from you next.";
    }
    d.comment = enforce_length(d.comment, SpeakerKind::teacher, ctx.length, d.warnings);
    return d;
}

Speech teacher_conclude(const AgentContext& ctx, std::span<const Utterance> history, const std::set<int>& remaining,
                        int rounds_done) {
    const bool covered = remaining.empty();
    if (!covered && rounds_done < ctx.max_rounds)
        fail(ErrorKind::protocol, "teacher_conclude called before termination (round " +
                                      std::to_string(rounds_done) + " of " + std::to_string(ctx.max_rounds) +
                                      ", " + std::to_string(remaining.size()) + " points open)");
    const auto termination = covered ? Termination::all_points_covered : Termination::round_cap;
    std::set<int> done;
    for (int i : all_criteria(ctx.task))
        if (!remaining.count(i)) done.insert(i);
    std::vector<std::string> covered_titles;
    for (int i : done) covered_titles.push_back(ctx.task.criterion_title(static_cast<std::size_t>(i)));
    std::vector<std::string> students;
    for (const auto& s : ctx.roster.students) students.push_back(s.name + " (" + to_string(s.assigned_role) + ")");

    const std::size_t seq = history.size();
    const int round = rounds_done + 1;
    std::string user = ctx.prompts.render(
        "teacher_conclude", {{"poem", ctx.task.poem},
                             {"context", render_history(history, ctx.roster)},
                             {"termination", to_string(termination)},
                             {"covered", covered_titles.empty() ? "none" : text::join(covered_titles, "; ")},
                             {"students", text::join(students, ", ")},
                             {"limit", std::to_string(ctx.length.teacher_limit)},
                             {"unit", unit_word(ctx)}});
    auto req = make_request(ctx, teacher_system(ctx), std::move(user), SpeakerKind::teacher, seq);
    req.hints = base_hints(ctx, "teacher_conclude", ctx.roster.teacher.id, round, seq);
    req.hints["termination"] = to_string(termination);
    req.hints["covered_titles"] = text::join(covered_titles, "|");
    std::vector<std::string> spoke;
    for (const auto& s : ctx.roster.students) {
        int n = 0;
        std::string last;
        for (const auto& u : history)
            if (u.speaker_id == s.id && u.speaker_kind == SpeakerKind::student) {
                ++n;
                last = u.declared_behavior.value_or("");
            }
        spoke.push_back(std::to_string(n) + ":" + last);
    }
    req.hints["participation"] = text::join(spoke, "|");

    Speech out;
    auto resp = ctx.backend.generate(req);
    Utterance& u = out.utterance;
    u.session_id = ctx.session_id;
    u.round = round;
    u.seq = static_cast<int>(seq);
    u.speaker_id = ctx.roster.teacher.id;
    u.speaker_kind = SpeakerKind::teacher;
    u.condition = ctx.condition;
    u.content = enforce_length(text::trim(resp.text), SpeakerKind::teacher, ctx.length, out.warnings);
    u.declared_behavior = to_string(TeacherAction::final_feedback);
    return out;
}

// ---------------------------------------------------------------------------
// Students

Reflection student_think(const AgentContext& ctx, std::span<const Utterance> history, const StudentIdentity& student,
                         const TurnInfo& turn) {
    if (ctx.condition != Condition::deep_think)
        fail(ErrorKind::protocol, "student_think is only available in the deep_think condition");
    const std::size_t seq = history.size();
    std::string user = ctx.prompts.render("student_think", {{"poem", ctx.task.poem},
                                                            {"context", render_history(history, ctx.roster)},
                                                            {"latest_instruction", turn.latest_instruction},
                                                            {"name", student.name}});
    auto req = make_request(ctx, student_system(ctx, student), std::move(user), SpeakerKind::student, seq);
    req.max_units = static_cast<int>(2 * ctx.length.student_limit);
    req.expected_schema.assign(std::begin(kThinkFields), std::end(kThinkFields));
    req.hints = base_hints(ctx, "student_think", student.id, turn.round, seq);
    add_student_hints(req.hints, ctx, history, student, turn);

    auto resp = ctx.backend.generate_structured(req);
    const auto& f = *resp.structured;
    Reflection r{text::trim(f.at(kThinkFields[0])), text::trim(f.at(kThinkFields[1])),
                 text::trim(f.at(kThinkFields[2])), text::trim(f.at(kThinkFields[3]))};
    if (!r.complete()) fail(ErrorKind::structured_output, "reflection has an empty field");
    return r;
}

StudentAction student_choose_action(const AgentContext& ctx, const StudentIdentity& student,
                                    const ActionContext& a) {
    if (ctx.allow_silence && !a.has_new_material) return {ActionKind::silent};
    if (student.assigned_role == Role::summarizer && a.final_round) return {ActionKind::summarize};
    if (student.assigned_role == Role::rebutter && a.previous_action == ActionKind::present_viewpoint)
        return {ActionKind::raise_issue};

    // present, question, raise, summarize
    std::vector<double> w;
    switch (student.assigned_role) {
        case Role::leader: w = {0.55, 0.10, 0.05, 0.30}; break;
        case Role::supporter: w = {0.75, 0.10, 0.05, 0.10}; break;
        case Role::expounder: w = {0.80, 0.10, 0.05, 0.05}; break;
        case Role::rebutter: w = {0.15, 0.35, 0.45, 0.05}; break;
        case Role::summarizer: w = {0.15, 0.05, 0.05, 0.75}; break;
    }
    double silent = 0.03;
    if (ctx.condition == Condition::direct_speak) {
        static constexpr double kFlat[] = {0.65, 0.15, 0.03, 0.10};
        for (std::size_t i = 0; i < w.size(); ++i) w[i] = 0.4 * w[i] + 0.6 * kFlat[i];
        silent = 0.07;
    }
    w.push_back(ctx.allow_silence ? silent : 0.0);

    SplitMix64 rng(hash_combine(hash_combine(hash_combine(ctx.session_seed, fnv1a64("action")),
                                             static_cast<std::uint64_t>(student.id)),
                                hash_combine(static_cast<std::uint64_t>(a.round), static_cast<std::uint64_t>(a.seq))));
    static constexpr ActionKind kKinds[] = {ActionKind::present_viewpoint, ActionKind::question,
                                            ActionKind::raise_issue, ActionKind::summarize, ActionKind::silent};
    const std::size_t pick = rng.weighted(w);
    return {pick < w.size() ? kKinds[pick] : ActionKind::present_viewpoint};
}

Speech student_speak(const AgentContext& ctx, std::span<const Utterance> history, const StudentIdentity& student,
                     StudentAction action, const Reflection* reflection, const TurnInfo& turn) {
    if (action.kind == ActionKind::silent)
        fail(ErrorKind::invalid_argument, "a silent turn produces no utterance");
    const bool deep = ctx.condition == Condition::deep_think;
    if (deep && !reflection) fail(ErrorKind::protocol, "deep_think speech requires the speaker's reflection");
    if (!deep && reflection) fail(ErrorKind::protocol, "direct_speak speech cannot carry a reflection");

    const std::size_t seq = history.size();
    std::map<std::string, std::string> vars = {{"poem", ctx.task.poem},
                                               {"context", render_history(history, ctx.roster)},
                                               {"latest_instruction", turn.latest_instruction},
                                               {"action", action_phrase(action.kind)},
                                               {"limit", std::to_string(ctx.length.student_limit)},
                                               {"unit", unit_word(ctx)},
                                               {"name", student.name}};
    if (deep) {
        vars["reflection_understanding"] = reflection->understanding;
        vars["reflection_reaction"] = reflection->reaction;
        vars["reflection_contribution"] = reflection->contribution;
        vars["reflection_inner_thoughts"] = reflection->inner_thoughts;
    }
    std::string user = ctx.prompts.render(deep ? "student_speak_deep" : "student_speak_direct", vars);
    auto req = make_request(ctx, student_system(ctx, student), std::move(user), SpeakerKind::student, seq);
    req.hints = base_hints(ctx, "student_speak", student.id, turn.round, seq);
    add_student_hints(req.hints, ctx, history, student, turn);
    req.hints["action"] = to_string(action.kind);
    if (deep) req.hints["reflection_contribution"] = reflection->contribution;

    Speech out;
    auto resp = ctx.backend.generate(req);
    Utterance& u = out.utterance;
    u.session_id = ctx.session_id;
    u.round = turn.round;
    u.seq = static_cast<int>(seq);
    u.speaker_id = student.id;
    u.speaker_kind = SpeakerKind::student;
    u.role = student.assigned_role;
    u.condition = ctx.condition;
    u.content = enforce_length(text::trim(resp.text), SpeakerKind::student, ctx.length, out.warnings);
    if (deep) u.reflection = *reflection;
    u.declared_behavior = to_string(action.kind);
    return out;
}

}  // namespace scaffoldsim
