#include "scaffoldsim/core.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <fstream>
#include <map>
#include <sstream>

#include <json.hpp>

#include "scaffoldsim/error.hpp"
#include "scaffoldsim/text.hpp"

namespace scaffoldsim {

using ojson = nlohmann::ordered_json;

const char* to_string(ErrorKind kind) noexcept {
    switch (kind) {
        case ErrorKind::invalid_argument: return "invalid_argument";
        case ErrorKind::format: return "format";
        case ErrorKind::validation: return "validation";
        case ErrorKind::io: return "io";
        case ErrorKind::network: return "network";
        case ErrorKind::generation: return "generation";
        case ErrorKind::structured_output: return "structured_output";
        case ErrorKind::protocol: return "protocol";
        case ErrorKind::internal: return "internal";
    }
    return "internal";
}

const char* to_string(Role role) noexcept {
    switch (role) {
        case Role::leader: return "Leader";
        case Role::supporter: return "Supporter";
        case Role::expounder: return "Expounder";
        case Role::rebutter: return "Rebutter";
        case Role::summarizer: return "Summarizer";
    }
    return "Leader";
}

const char* to_string(Condition condition) noexcept {
    return condition == Condition::deep_think ? "deep_think" : "direct_speak";
}

const char* to_string(SpeakerKind kind) noexcept {
    return kind == SpeakerKind::teacher ? "teacher" : "student";
}

const char* to_string(Termination termination) noexcept {
    switch (termination) {
        case Termination::all_points_covered: return "all_points_covered";
        case Termination::round_cap: return "round_cap";
        case Termination::aborted: return "aborted";
    }
    return "aborted";
}

const char* to_string(SessionStatus status) noexcept {
    return status == SessionStatus::complete ? "complete" : "invalid";
}

Role parse_role(std::string_view name) {
    const std::string n = text::to_lower_ascii(text::trim(name));
    if (n == "leader") return Role::leader;
    if (n == "supporter") return Role::supporter;
    if (n == "expounder" || n == "explainer") return Role::expounder;
    if (n == "rebutter" || n == "refuter" || n == "critic") return Role::rebutter;
    if (n == "summarizer" || n == "summariser") return Role::summarizer;
    fail(ErrorKind::invalid_argument, "unknown student role '" + std::string(name) + "'");
}

Condition parse_condition(std::string_view name) {
    if (name == "deep_think") return Condition::deep_think;
    if (name == "direct_speak") return Condition::direct_speak;
    fail(ErrorKind::invalid_argument, "unknown condition '" + std::string(name) + "'");
}

SpeakerKind parse_speaker_kind(std::string_view name) {
    if (name == "teacher") return SpeakerKind::teacher;
    if (name == "student") return SpeakerKind::student;
    fail(ErrorKind::invalid_argument, "unknown speaker kind '" + std::string(name) + "'");
}

Termination parse_termination(std::string_view name) {
    if (name == "all_points_covered") return Termination::all_points_covered;
    if (name == "round_cap") return Termination::round_cap;
    if (name == "aborted") return Termination::aborted;
    fail(ErrorKind::invalid_argument, "unknown termination '" + std::string(name) + "'");
}

// ---------------------------------------------------------------------------
// Roster

const StudentIdentity* Roster::find_student(int id) const noexcept {
    for (const auto& s : students)
        if (s.id == id) return &s;
    return nullptr;
}

const StudentIdentity* Roster::find_role(Role role) const noexcept {
    for (const auto& s : students)
        if (s.assigned_role == role) return &s;
    return nullptr;
}

std::string Roster::name_of(int id) const {
    if (id == teacher.id) return teacher.name;
    if (const auto* s = find_student(id)) return s->name;
    return {};
}

std::vector<int> Roster::student_ids() const {
    std::vector<int> ids;
    for (const auto& s : students) ids.push_back(s.id);
    return ids;
}

void validate_roster(const Roster& roster) {
    if (roster.students.size() != kStudentsPerSession)
        fail(ErrorKind::invalid_argument, "roster must have exactly 5 students, got " +
                                              std::to_string(roster.students.size()));
    if (text::trim(roster.teacher.learning_goal).empty())
        fail(ErrorKind::invalid_argument, "teacher learning_goal must be non-empty");
    std::set<int> ids{roster.teacher.id};
    std::set<Role> roles;
    for (const auto& s : roster.students) {
        if (!ids.insert(s.id).second)
            fail(ErrorKind::invalid_argument, "duplicate roster id " + std::to_string(s.id));
        if (!roles.insert(s.assigned_role).second)
            fail(ErrorKind::invalid_argument,
                 std::string("role assigned twice: ") + to_string(s.assigned_role));
        if (text::trim(s.name).empty())
            fail(ErrorKind::invalid_argument, "student " + std::to_string(s.id) + " has no name");
    }
}

Roster default_roster(const PoetryTask& task) {
    Roster r;
    r.teacher.id = 0;
    r.teacher.name = "Ms. Zhao";
    r.teacher.base_definition =
        "Lecturer in classical Chinese literature with twelve years of experience teaching "
        "poetry appreciation seminars.";
    std::string goal = "Task: " + task.task_prompt + "\nScoring criteria:";
    for (std::size_t i = 0; i < task.scoring_criteria.size(); ++i)
        goal += "\n" + std::to_string(i + 1) + ". " + task.scoring_criteria[i];
    r.teacher.learning_goal = goal;

    struct Seed {
        const char* name;
        const char* background;
        Role role;
    };
    static constexpr Seed kStudents[] = {
        {"Li Si", "Third-year undergraduate, Chinese language and literature major.", Role::leader},
        {"Wang Mei", "Second-year undergraduate, history major with an interest in the Ming-Qing transition.",
         Role::supporter},
        {"Zhang Wei", "Third-year undergraduate, philosophy major who reads the classics closely.",
         Role::expounder},
        {"Chen Jing", "Second-year undergraduate, comparative literature major.", Role::rebutter},
        {"Liu Yang", "First-year graduate student, education major.", Role::summarizer},
    };
    int id = 1;
    for (const auto& s : kStudents) r.students.push_back({id++, s.name, s.background, s.role});
    return r;
}

// ---------------------------------------------------------------------------
// Tasks

std::string PoetryTask::criterion_title(std::size_t index) const {
    if (index >= scoring_criteria.size()) return {};
    return text::first_sentence(scoring_criteria[index], 60);
}

std::vector<Diagnostic> validate_task(const PoetryTask& task) {
    std::vector<Diagnostic> out;
    auto nonempty = [&](const std::string& field, const std::string& value) {
        if (text::trim(value).empty()) out.push_back({field, "non_empty", field + " must be non-empty"});
    };
    nonempty("poem", task.poem);
    nonempty("task_prompt", task.task_prompt);
    if (task.scoring_criteria.size() != kCriteriaPerTask) {
        out.push_back({"scoring_criteria", "count",
                       "expected exactly 5 scoring criteria, got " +
                           std::to_string(task.scoring_criteria.size())});
    }
    for (std::size_t i = 0; i < task.scoring_criteria.size(); ++i)
        nonempty("scoring_criteria[" + std::to_string(i) + "]", task.scoring_criteria[i]);
    if (task.keyword_sets) {
        if (task.keyword_sets->size() != kCriteriaPerTask) {
            out.push_back({"keyword_sets", "count",
                           "expected 5 keyword sets, got " + std::to_string(task.keyword_sets->size())});
        }
        for (std::size_t i = 0; i < task.keyword_sets->size(); ++i) {
            const auto& set = (*task.keyword_sets)[i];
            const std::string field = "keyword_sets[" + std::to_string(i) + "]";
            if (set.empty()) out.push_back({field, "non_empty", field + " must list at least one keyword"});
            for (std::size_t k = 0; k < set.size(); ++k)
                nonempty(field + "[" + std::to_string(k) + "]", set[k]);
        }
    }
    return out;
}

namespace {

std::size_t line_of_offset(std::string_view s, std::size_t offset) {
    offset = std::min(offset, s.size());
    return 1 + static_cast<std::size_t>(std::count(s.begin(), s.begin() + static_cast<long>(offset), '\n'));
}

[[noreturn]] void field_error(const std::string& where, const std::string& what) {
    fail(ErrorKind::format, where + ": " + what);
}

std::string get_string(const ojson& obj, const char* key, const std::string& where) {
    auto it = obj.find(key);
    if (it == obj.end()) field_error(where + "." + key, "missing field");
    if (!it->is_string()) field_error(where + "." + key, "expected string");
    return it->get<std::string>();
}

int get_int(const ojson& obj, const char* key, const std::string& where) {
    auto it = obj.find(key);
    if (it == obj.end()) field_error(where + "." + key, "missing field");
    if (!it->is_number_integer()) field_error(where + "." + key, "expected integer");
    return it->get<int>();
}

std::vector<std::string> get_string_array(const ojson& value, const std::string& where) {
    if (!value.is_array()) field_error(where, "expected array of strings");
    std::vector<std::string> out;
    for (std::size_t i = 0; i < value.size(); ++i) {
        if (!value[i].is_string()) field_error(where + "[" + std::to_string(i) + "]", "expected string");
        out.push_back(value[i].get<std::string>());
    }
    return out;
}

ojson parse_json(std::string_view input, std::size_t line_base = 0) {
    try {
        return ojson::parse(input.begin(), input.end());
    } catch (const nlohmann::json::parse_error& e) {
        const std::size_t line = line_base ? line_base : line_of_offset(input, e.byte ? e.byte - 1 : 0);
        fail(ErrorKind::format, "line " + std::to_string(line) + ": " + e.what());
    }
}

}  // namespace

std::vector<PoetryTask> parse_task_set(std::string_view json) try {
    const ojson doc = parse_json(json);
    if (!doc.is_array()) field_error("task set", "expected a JSON array of tasks");

    std::vector<PoetryTask> tasks;
    std::set<int> seen;
    std::string problems;
    for (std::size_t i = 0; i < doc.size(); ++i) {
        const std::string where = "tasks[" + std::to_string(i) + "]";
        const ojson& obj = doc[i];
        if (!obj.is_object()) field_error(where, "expected object");
        PoetryTask t;
        t.task_id = get_int(obj, "task_id", where);
        t.poem = get_string(obj, "poem", where);
        t.task_prompt = get_string(obj, "task_prompt", where);
        if (!obj.contains("scoring_criteria")) field_error(where + ".scoring_criteria", "missing field");
        t.scoring_criteria = get_string_array(obj["scoring_criteria"], where + ".scoring_criteria");
        if (auto it = obj.find("keyword_sets"); it != obj.end() && !it->is_null()) {
            if (!it->is_array()) field_error(where + ".keyword_sets", "expected array");
            std::vector<std::vector<std::string>> sets;
            for (std::size_t k = 0; k < it->size(); ++k)
                sets.push_back(get_string_array((*it)[k], where + ".keyword_sets[" + std::to_string(k) + "]"));
            t.keyword_sets = std::move(sets);
        }
        if (auto it = obj.find("source"); it != obj.end() && !it->is_null()) {
            if (!it->is_string()) field_error(where + ".source", "expected string");
            t.source = it->get<std::string>();
        }
        if (!seen.insert(t.task_id).second)
            problems += "\ntask_id " + std::to_string(t.task_id) + ": duplicate task_id";
        for (const auto& d : validate_task(t))
            problems += "\ntask_id " + std::to_string(t.task_id) + ": " + d.field + " [" + d.rule + "] " + d.message;
        tasks.push_back(std::move(t));
    }
    if (!problems.empty()) fail(ErrorKind::validation, "invalid task set:" + problems);
    return tasks;
} catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::format, std::string("task set: ") + e.what());
}

std::vector<PoetryTask> load_task_set(const std::filesystem::path& path) {
    return parse_task_set(read_text_file(path));
}

std::string write_task_set(const std::vector<PoetryTask>& tasks) {
    ojson doc = ojson::array();
    for (const auto& t : tasks) {
        ojson obj;
        obj["task_id"] = t.task_id;
        if (t.source) obj["source"] = *t.source;
        obj["poem"] = t.poem;
        obj["task_prompt"] = t.task_prompt;
        obj["scoring_criteria"] = t.scoring_criteria;
        if (t.keyword_sets) obj["keyword_sets"] = *t.keyword_sets;
        doc.push_back(std::move(obj));
    }
    return doc.dump(2) + "\n";
}

// ---------------------------------------------------------------------------
// Transcripts

bool Reflection::complete() const noexcept {
    return !text::trim(understanding).empty() && !text::trim(reaction).empty() &&
           !text::trim(contribution).empty() && !text::trim(inner_thoughts).empty();
}

namespace {

ojson roster_to_json(const Roster& r) {
    ojson teacher;
    teacher["id"] = r.teacher.id;
    teacher["name"] = r.teacher.name;
    teacher["base_definition"] = r.teacher.base_definition;
    teacher["learning_goal"] = r.teacher.learning_goal;
    ojson students = ojson::array();
    for (const auto& s : r.students) {
        ojson o;
        o["id"] = s.id;
        o["name"] = s.name;
        o["base_definition"] = s.base_definition;
        o["assigned_role"] = to_string(s.assigned_role);
        students.push_back(std::move(o));
    }
    ojson out;
    out["teacher"] = std::move(teacher);
    out["students"] = std::move(students);
    return out;
}

Roster roster_from_json(const ojson& o, const std::string& where) {
    Roster r;
    if (!o.is_object() || !o.contains("teacher") || !o.contains("students"))
        field_error(where, "expected {teacher, students}");
    const ojson& t = o["teacher"];
    r.teacher.id = get_int(t, "id", where + ".teacher");
    r.teacher.name = get_string(t, "name", where + ".teacher");
    r.teacher.base_definition = get_string(t, "base_definition", where + ".teacher");
    r.teacher.learning_goal = get_string(t, "learning_goal", where + ".teacher");
    if (!o["students"].is_array()) field_error(where + ".students", "expected array");
    for (const auto& s : o["students"]) {
        StudentIdentity id;
        id.id = get_int(s, "id", where + ".students");
        id.name = get_string(s, "name", where + ".students");
        id.base_definition = get_string(s, "base_definition", where + ".students");
        id.assigned_role = parse_role(get_string(s, "assigned_role", where + ".students"));
        r.students.push_back(std::move(id));
    }
    return r;
}

ojson utterance_to_json(const Utterance& u) {
    ojson o;
    o["type"] = "utterance";
    o["session_id"] = u.session_id;
    o["round"] = u.round;
    o["seq"] = u.seq;
    o["speaker_id"] = u.speaker_id;
    o["speaker_kind"] = to_string(u.speaker_kind);
    o["role"] = u.role ? ojson(to_string(*u.role)) : ojson(nullptr);
    o["condition"] = to_string(u.condition);
    o["content"] = u.content;
    if (u.reflection) {
        ojson r;
        r["understanding"] = u.reflection->understanding;
        r["reaction"] = u.reflection->reaction;
        r["contribution"] = u.reflection->contribution;
        r["inner_thoughts"] = u.reflection->inner_thoughts;
        o["reflection"] = std::move(r);
    } else {
        o["reflection"] = nullptr;
    }
    o["declared_behavior"] = u.declared_behavior ? ojson(*u.declared_behavior) : ojson(nullptr);
    return o;
}

Utterance utterance_from_json(const ojson& o, const std::string& where) {
    Utterance u;
    u.session_id = get_string(o, "session_id", where);
    u.round = get_int(o, "round", where);
    u.seq = get_int(o, "seq", where);
    u.speaker_id = get_int(o, "speaker_id", where);
    u.speaker_kind = parse_speaker_kind(get_string(o, "speaker_kind", where));
    if (auto it = o.find("role"); it != o.end() && !it->is_null()) u.role = parse_role(it->get<std::string>());
    u.condition = parse_condition(get_string(o, "condition", where));
    u.content = get_string(o, "content", where);
    if (auto it = o.find("reflection"); it != o.end() && !it->is_null()) {
        Reflection r;
        r.understanding = get_string(*it, "understanding", where + ".reflection");
        r.reaction = get_string(*it, "reaction", where + ".reflection");
        r.contribution = get_string(*it, "contribution", where + ".reflection");
        r.inner_thoughts = get_string(*it, "inner_thoughts", where + ".reflection");
        u.reflection = std::move(r);
    }
    if (auto it = o.find("declared_behavior"); it != o.end() && !it->is_null())
        u.declared_behavior = it->get<std::string>();
    return u;
}

}  // namespace

std::string write_transcript(const SessionTranscript& t) {
    ojson header;
    header["type"] = "session";
    header["session_id"] = t.session_id;
    header["task_id"] = t.task_id;
    header["condition"] = to_string(t.condition);
    header["roster"] = roster_to_json(t.roster);
    ojson log = ojson::array();
    for (const auto& s : t.coverage_log) log.push_back(std::vector<int>(s.begin(), s.end()));
    header["coverage_log"] = std::move(log);
    header["termination"] = to_string(t.termination);
    header["status"] = to_string(t.status);
    header["error"] = t.error;

    std::string out = header.dump() + "\n";
    for (const auto& u : t.utterances) out += utterance_to_json(u).dump() + "\n";
    return out;
}

SessionTranscript parse_transcript(std::string_view jsonl) try {
    SessionTranscript t;
    std::size_t line_no = 0;
    bool have_header = false;
    std::size_t start = 0;
    while (start < jsonl.size()) {
        auto end = jsonl.find('\n', start);
        if (end == std::string_view::npos) end = jsonl.size();
        std::string_view line = jsonl.substr(start, end - start);
        start = end + 1;
        ++line_no;
        if (text::trim(line).empty()) continue;
        const ojson o = parse_json(line, line_no);
        const std::string where = "line " + std::to_string(line_no);
        const std::string type = get_string(o, "type", where);
        if (!have_header) {
            if (type != "session") field_error(where, "first line must be the session header");
            t.session_id = get_string(o, "session_id", where);
            t.task_id = get_int(o, "task_id", where);
            t.condition = parse_condition(get_string(o, "condition", where));
            if (!o.contains("roster")) field_error(where + ".roster", "missing field");
            t.roster = roster_from_json(o["roster"], where + ".roster");
            if (!o.contains("coverage_log") || !o["coverage_log"].is_array())
                field_error(where + ".coverage_log", "expected array");
            for (const auto& round : o["coverage_log"]) {
                std::set<int> s;
                for (const auto& v : round) s.insert(v.get<int>());
                t.coverage_log.push_back(std::move(s));
            }
            t.termination = parse_termination(get_string(o, "termination", where));
            t.status = get_string(o, "status", where) == "complete" ? SessionStatus::complete
                                                                     : SessionStatus::invalid;
            if (auto it = o.find("error"); it != o.end() && it->is_string()) t.error = it->get<std::string>();
            have_header = true;
        } else {
            if (type != "utterance") field_error(where, "expected utterance record");
            t.utterances.push_back(utterance_from_json(o, where));
        }
    }
    if (!have_header) fail(ErrorKind::format, "transcript has no session header");
    return t;
} catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::format, std::string("transcript: ") + e.what());
}

SessionTranscript load_transcript(const std::filesystem::path& path) {
    try {
        return parse_transcript(read_text_file(path));
    } catch (const Error& e) {
        throw Error(e.kind(), path.string() + ": " + e.what());
    }
}

void save_transcript(const std::filesystem::path& path, const SessionTranscript& transcript) {
    write_text_file(path, write_transcript(transcript));
}

std::vector<std::string> check_transcript(const SessionTranscript& t) {
    std::vector<std::string> issues;
    for (std::size_t i = 0; i < t.utterances.size(); ++i) {
        const auto& u = t.utterances[i];
        if (u.seq != static_cast<int>(i))
            issues.push_back("seq gap at index " + std::to_string(i) + " (seq " + std::to_string(u.seq) + ")");
        if (u.session_id != t.session_id) issues.push_back("utterance " + std::to_string(i) + " has foreign session_id");
        if (u.condition != t.condition) issues.push_back("utterance " + std::to_string(i) + " has wrong condition");
        const bool may_reflect = u.speaker_kind == SpeakerKind::student && u.condition == Condition::deep_think;
        if (u.reflection && !may_reflect)
            issues.push_back("utterance " + std::to_string(i) + " carries a reflection it may not have");
        if (u.speaker_kind == SpeakerKind::student && t.condition == Condition::deep_think && !u.reflection)
            issues.push_back("deep_think student utterance " + std::to_string(i) + " lacks a reflection");
        if (i > 0 && u.round < t.utterances[i - 1].round)
            issues.push_back("round decreases at index " + std::to_string(i));
    }
    for (std::size_t r = 1; r < t.coverage_log.size(); ++r) {
        if (!std::includes(t.coverage_log[r].begin(), t.coverage_log[r].end(), t.coverage_log[r - 1].begin(),
                           t.coverage_log[r - 1].end()))
            issues.push_back("coverage shrinks at round " + std::to_string(r + 1));
    }
    if (t.termination == Termination::all_points_covered &&
        (t.coverage_log.empty() || t.coverage_log.back().size() != kCriteriaPerTask))
        issues.push_back("termination all_points_covered without full coverage");
    if (t.status == SessionStatus::complete) {
        if (t.utterances.empty()) {
            issues.push_back("complete transcript has no utterances");
        } else {
            const auto& first = t.utterances.front();
            const auto& last = t.utterances.back();
            if (first.round != 0 || first.speaker_kind != SpeakerKind::teacher)
                issues.push_back("transcript does not open with a round-0 teacher initiation");
            if (last.speaker_kind != SpeakerKind::teacher || last.round != t.discussion_rounds() + 1)
                issues.push_back("transcript does not close with a teacher conclusion");
        }
    }
    return issues;
}

// ---------------------------------------------------------------------------
// Files

std::string read_text_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail(ErrorKind::io, "cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_text_file(const std::filesystem::path& path, std::string_view content) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) fail(ErrorKind::io, "cannot write " + path.string());
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!out) fail(ErrorKind::io, "short write to " + path.string());
}

std::string sha256_hex(std::string_view bytes) {
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (EVP_Digest(bytes.data(), bytes.size(), digest, &len, EVP_sha256(), nullptr) != 1)
        fail(ErrorKind::internal, "sha256 failed");
    static constexpr char kHex[] = "0123456789abcdef";
    std::string out;
    for (unsigned int i = 0; i < len; ++i) {
        out += kHex[digest[i] >> 4];
        out += kHex[digest[i] & 0xF];
    }
    return out;
}

}  // namespace scaffoldsim
