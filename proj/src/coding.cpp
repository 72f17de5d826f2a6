#include "scaffoldsim/coding.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include <json.hpp>

#include "scaffoldsim/agents.hpp"
#include "scaffoldsim/csv.hpp"
#include "scaffoldsim/error.hpp"
#include "scaffoldsim/rng.hpp"
#include "scaffoldsim/text.hpp"

namespace scaffoldsim {

std::optional<int> quality_value(const QualityCode& c, std::string_view name) {
    if (name == "fluency") return c.fluency;
    if (name == "repetitiveness") return c.repetitiveness;
    if (name == "contradiction") return c.contradiction;
    if (name == "relevance") return c.relevance;
    if (name == "diversity") return c.diversity;
    fail(ErrorKind::invalid_argument, "unknown quality dimension '" + std::string(name) + "'");
}

void validate_quality(const QualityCode& c, SpeakerKind kind) {
    for (int v : {c.fluency, c.repetitiveness, c.contradiction, c.relevance})
        if (v != 0 && v != 1) fail(ErrorKind::validation, "quality values must be 0 or 1");
    if (kind == SpeakerKind::teacher && c.diversity)
        fail(ErrorKind::validation, "teacher utterances are not coded for diversity");
    if (kind == SpeakerKind::student) {
        if (!c.diversity) fail(ErrorKind::validation, "student utterances require a diversity code");
        if (*c.diversity != 0 && *c.diversity != 1) fail(ErrorKind::validation, "quality values must be 0 or 1");
    }
}

bool is_student_label(std::string_view label) noexcept {
    return std::find(std::begin(kStudentLabels), std::end(kStudentLabels), label) != std::end(kStudentLabels);
}

bool is_teacher_label(std::string_view label) noexcept {
    return std::find(std::begin(kTeacherLabels), std::end(kTeacherLabels), label) != std::end(kTeacherLabels);
}

bool is_label_for(std::string_view label, SpeakerKind kind) noexcept {
    return kind == SpeakerKind::teacher ? is_teacher_label(label) : is_student_label(label);
}

const char* label_name(std::string_view label) noexcept {
    static constexpr std::pair<std::string_view, const char*> kNames[] = {
        {"A1", "Ineffective"}, {"B1", "Plan"},    {"B2", "Monitor"},       {"C1", "Reflect"},
        {"D1", "Elaborate"},   {"D2", "Support"}, {"D3", "Question"},      {"D4", "Rebut"},
        {"D5", "Explain"},     {"T_A1", "Encouragement"}, {"T_B1", "Guidance"}, {"T_C1", "Summarization"},
    };
    for (const auto& [code, name] : kNames)
        if (code == label) return name;
    return "";
}

void validate_coder_id(std::string_view coder) {
    if (coder == "rule_based") return;
    for (std::string_view prefix : {"human:", "model:"})
        if (coder.substr(0, prefix.size()) == prefix && coder.size() > prefix.size()) return;
    fail(ErrorKind::invalid_argument, "coder must be rule_based, human:<name> or model:<name>, got '" +
                                          std::string(coder) + "'");
}

CodingDecision Coder::code(const CodingItem& item) {
    CodingDecision q = code_quality(item);
    CodingDecision b = code_behavior(item);
    q.behavior = std::move(b.behavior);
    q.rationale = "quality: " + q.rationale + " | behavior: " + b.rationale;
    return q;
}

// ---------------------------------------------------------------------------
// Rule-based coder

namespace {

std::string fmt2(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", v);
    return buf;
}

struct Cue {
    const char* phrase;
    const char* label;
};

// Priority order: the first matching cue wins.
constexpr Cue kStudentCues[] = {
    {"one-sided", "D4"},
    {"is incorrect", "D4"},
    {"i disagree", "D4"},
    {"i have some questions", "D3"},
    {"could someone explain", "D3"},
    {"i agree with", "D2"},
    {"regarding the issue of", "D5"},
    {"let's start the discussion", "B1"},
    {"what are everyone's thoughts", "B1"},
    {"we can move on to", "B2"},
    {"we covered", "C1"},
    {"to sum up", "C1"},
    {"i think", "D1"},
    {"because", "D1"},
};

constexpr Cue kTeacherCues[] = {
    {"let me summarize", "T_C1"}, {"in summary", "T_C1"},   {"to conclude", "T_C1"},
    {"move on to", "T_B1"},       {"let's focus", "T_B1"},  {"please", "T_B1"},
    {"look closely", "T_B1"},     {"speaking order", "T_B1"}, {"well done", "T_A1"},
    {"excellent", "T_A1"},        {"great", "T_A1"},        {"good work", "T_A1"},
    {"keep building", "T_A1"},    {"insight", "T_A1"},
};

template <std::size_t N>
const Cue* find_cue(const Cue (&cues)[N], std::string_view s) {
    for (const auto& cue : cues)
        if (text::contains_phrase(s, cue.phrase)) return &cue;
    return nullptr;
}

bool relevant(const std::string& content, const std::set<std::string>& vocab, std::vector<std::string>* shared) {
    bool any = false;
    for (const auto& tok : text::tokenize(content))
        if (vocab.count(tok)) {
            any = true;
            if (shared && std::find(shared->begin(), shared->end(), tok) == shared->end()) shared->push_back(tok);
        }
    return any;
}

}  // namespace

CodingDecision RuleBasedCoder::code_quality(const CodingItem& item) {
    const Utterance& u = item.target;
    CodingDecision d;
    d.ref = {u.session_id, u.seq};
    d.coder = id();
    QualityCode q;
    std::vector<std::string> why;

    q.fluency = text::trim(u.content).empty() ? 0 : 1;

    const auto target_tri = text::trigrams(text::tokenize(u.content));
    double best = 0.0;
    int best_seq = -1;
    for (const auto& h : item.history) {
        const double j = text::jaccard(target_tri, text::trigrams(text::tokenize(h.content)));
        if (j > best) {
            best = j;
            best_seq = h.seq;
        }
    }
    q.repetitiveness = best >= kRepetitionThreshold ? 1 : 0;
    why.push_back("max trigram overlap " + fmt2(best) +
                  (best_seq >= 0 ? " with seq " + std::to_string(best_seq) : std::string()));

    q.contradiction = text::contains_phrase(u.content, kContradictionMarker) ? 1 : 0;
    if (q.contradiction) why.push_back("self-retraction marker present");

    const auto vocab = task_vocabulary(item.task);
    std::vector<std::string> shared;
    q.relevance = relevant(u.content, vocab, &shared) ? 1 : 0;
    why.push_back(shared.empty() ? "no task words" : "task words: " + text::join(shared, " "));

    if (u.speaker_kind == SpeakerKind::student) {
        std::set<std::string> seen;
        for (const auto& h : item.history)
            for (auto& tok : text::tokenize(h.content)) seen.insert(std::move(tok));
        std::vector<std::string> fresh;
        for (const auto& tok : shared)
            if (!seen.count(tok)) fresh.push_back(tok);
        q.diversity = fresh.empty() ? 0 : 1;
        why.push_back(fresh.empty() ? "no new task words" : "new task words: " + text::join(fresh, " "));
    }
    d.quality = q;
    d.rationale = text::join(why, "; ");
    return d;
}

CodingDecision RuleBasedCoder::code_behavior(const CodingItem& item) {
    const Utterance& u = item.target;
    CodingDecision d;
    d.ref = {u.session_id, u.seq};
    d.coder = id();
    if (u.speaker_kind == SpeakerKind::teacher) {
        const Cue* cue = find_cue(kTeacherCues, u.content);
        d.behavior = cue ? cue->label : "T_B1";
        d.rationale = cue ? std::string("cue \"") + cue->phrase + "\"" : "no cue; guidance by default";
        return d;
    }
    const std::string opener = text::first_sentence(u.content, 1000);
    const Cue* cue = find_cue(kStudentCues, opener);
    if (!cue) cue = find_cue(kStudentCues, u.content);
    if (cue) {
        d.behavior = cue->label;
        d.rationale = std::string("cue \"") + cue->phrase + "\"";
    } else if (!relevant(u.content, task_vocabulary(item.task), nullptr)) {
        d.behavior = "A1";
        d.rationale = "no cue and no task words";
    } else {
        d.behavior = "D1";
        d.rationale = "no cue; on-task statement";
    }
    return d;
}

// ---------------------------------------------------------------------------
// Model coder

namespace {

std::optional<int> parse_binary(const std::string& s) {
    const std::string v = text::to_lower_ascii(text::trim(s));
    if (v == "1" || v == "yes" || v == "true") return 1;
    if (v == "0" || v == "no" || v == "false") return 0;
    return std::nullopt;
}

std::string speaker_line(const CodingItem& item) {
    const Utterance& u = item.target;
    std::string who = item.roster.name_of(u.speaker_id);
    return who + (u.role ? std::string(", ") + to_string(*u.role) : std::string(", Teacher"));
}

}  // namespace

ModelCoder::ModelCoder(Backend& backend, std::string model_name, const PromptLibrary& prompts)
    : backend_(backend), model_name_(std::move(model_name)), prompts_(prompts) {
    if (model_name_.empty()) fail(ErrorKind::invalid_argument, "model coder requires a model name");
}

CodingDecision ModelCoder::code_quality(const CodingItem& item) {
    const Utterance& u = item.target;
    const bool student = u.speaker_kind == SpeakerKind::student;
    GenerationRequest req;
    req.system_prompt = prompts_.render(
        "coder_quality",
        {{"task_prompt", item.task.task_prompt},
         {"poem", item.task.poem},
         {"diversity_rule", student ? "" : "The target is the teacher: do not code diversity."},
         {"context", render_history(item.history, item.roster)},
         {"speaker", speaker_line(item)},
         {"utterance", u.content}});
    req.messages.push_back({"user", "Code the target utterance."});
    req.max_units = 200;
    req.temperature = 0.0;
    req.expected_schema = {"fluency", "repetitiveness", "contradiction", "relevance"};
    if (student) req.expected_schema.push_back("diversity");
    req.expected_schema.push_back("rationale");
    req.hints = {{"phase", "code_quality"}, {"session_id", u.session_id}, {"seq", std::to_string(u.seq)}};
    for (const auto& f : req.expected_schema)
        if (f != "rationale") req.hints["choices." + f] = "0|1";

    auto attempt = [&](const GenerationRequest& r, GenerationResponse& resp) -> std::optional<QualityCode> {
        resp = backend_.generate_structured(r);
        const auto& f = *resp.structured;
        if (!student) {
            const auto open = resp.text.find('{');
            const auto close = resp.text.rfind('}');
            if (open != std::string::npos && close != std::string::npos && close > open) {
                auto j = nlohmann::json::parse(resp.text.substr(open, close - open + 1), nullptr, false);
                if (j.is_object() && j.contains("diversity") && !j["diversity"].is_null() &&
                    !(j["diversity"].is_string() && text::trim(j["diversity"].get<std::string>()).empty()))
                    fail(ErrorKind::validation, "model coded diversity for a teacher utterance");
            }
        }
        QualityCode q;
        int* slots[] = {&q.fluency, &q.repetitiveness, &q.contradiction, &q.relevance};
        const char* names[] = {"fluency", "repetitiveness", "contradiction", "relevance"};
        for (int i = 0; i < 4; ++i) {
            auto v = parse_binary(f.at(names[i]));
            if (!v) return std::nullopt;
            *slots[i] = *v;
        }
        if (student) {
            auto v = parse_binary(f.at("diversity"));
            if (!v) return std::nullopt;
            q.diversity = *v;
        }
        return q;
    };

    GenerationResponse resp;
    auto q = attempt(req, resp);
    if (!q) {
        GenerationRequest retry = req;
        retry.messages.push_back({"assistant", resp.text});
        retry.messages.push_back({"user", "Every code must be 0 or 1. " + repair_instruction(req.expected_schema)});
        q = attempt(retry, resp);
        if (!q) fail(ErrorKind::validation, "model returned non-binary quality codes twice");
    }
    CodingDecision d;
    d.ref = {u.session_id, u.seq};
    d.coder = id();
    d.quality = *q;
    d.rationale = text::trim(resp.structured->at("rationale"));
    return d;
}

CodingDecision ModelCoder::code_behavior(const CodingItem& item) {
    const Utterance& u = item.target;
    std::vector<std::string> labels;
    if (u.speaker_kind == SpeakerKind::teacher)
        labels.assign(std::begin(kTeacherLabels), std::end(kTeacherLabels));
    else
        labels.assign(std::begin(kStudentLabels), std::end(kStudentLabels));

    GenerationRequest req;
    req.system_prompt = prompts_.render("coder_behavior", {{"task_prompt", item.task.task_prompt},
                                                           {"labels", text::join(labels, ", ")},
                                                           {"context", render_history(item.history, item.roster)},
                                                           {"speaker", speaker_line(item)},
                                                           {"utterance", u.content}});
    req.messages.push_back({"user", "Code the target utterance."});
    req.max_units = 200;
    req.temperature = 0.0;
    req.expected_schema = {"label", "rationale"};
    req.hints = {{"phase", "code_behavior"},
                 {"session_id", u.session_id},
                 {"seq", std::to_string(u.seq)},
                 {"choices.label", text::join(labels, "|")}};

    auto resp = backend_.generate_structured(req);
    auto label = text::trim(resp.structured->at("label"));
    if (!is_label_for(label, u.speaker_kind)) {
        GenerationRequest retry = req;
        retry.messages.push_back({"assistant", resp.text});
        retry.messages.push_back({"user", "\"" + label + "\" is not an allowed label. Use exactly one of: " +
                                              text::join(labels, ", ") + ". " +
                                              repair_instruction(req.expected_schema)});
        resp = backend_.generate_structured(retry);
        label = text::trim(resp.structured->at("label"));
        if (!is_label_for(label, u.speaker_kind))
            fail(ErrorKind::validation, "model returned out-of-set label '" + label + "' after one repair");
    }
    CodingDecision d;
    d.ref = {u.session_id, u.seq};
    d.coder = id();
    d.behavior = label;
    d.rationale = text::trim(resp.structured->at("rationale"));
    return d;
}

std::vector<CodingDecision> code_corpus(const std::vector<SessionTranscript>& corpus,
                                        const std::vector<PoetryTask>& tasks, Coder& coder) {
    std::map<int, const PoetryTask*> by_id;
    for (const auto& t : tasks) by_id[t.task_id] = &t;
    std::vector<CodingDecision> out;
    for (const auto& t : corpus) {
        auto it = by_id.find(t.task_id);
        for (std::size_t i = 0; i < t.utterances.size(); ++i) {
            const Utterance& u = t.utterances[i];
            try {
                if (it == by_id.end())
                    fail(ErrorKind::invalid_argument, "task " + std::to_string(t.task_id) + " not in task set");
                CodingItem item{*it->second, t.roster, std::span<const Utterance>(t.utterances.data(), i), u};
                out.push_back(coder.code(item));
            } catch (const std::exception& e) {
                CodingDecision d;
                d.ref = {u.session_id, u.seq};
                d.coder = coder.id();
                d.failed = true;
                d.rationale = std::string("coding failed: ") + e.what();
                out.push_back(std::move(d));
            }
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// Codes files

std::string write_codes(const std::vector<CodingDecision>& decisions) {
    std::string out = std::string(kCodesHeader) + "\n";
    for (const auto& d : decisions) {
        std::vector<std::string> row{d.ref.session_id, std::to_string(d.ref.seq), d.coder};
        if (d.failed || !d.quality) {
            row.insert(row.end(), 5, "");
        } else {
            const auto& q = *d.quality;
            for (int v : {q.fluency, q.repetitiveness, q.contradiction, q.relevance}) row.push_back(std::to_string(v));
            row.push_back(q.diversity ? std::to_string(*q.diversity) : "");
        }
        row.push_back(d.failed ? "" : d.behavior.value_or(""));
        row.push_back(d.rationale);
        out += csv::format_row(row);
    }
    return out;
}

CodesFile parse_codes(std::string_view csv_text) {
    auto rows = csv::parse(csv_text);
    CodesFile out;
    if (rows.empty()) fail(ErrorKind::format, "codes file is empty (missing header)");
    {
        std::string header = text::join(rows.front().fields, ",");
        if (!header.empty() && static_cast<unsigned char>(header[0]) == 0xEF) header = header.substr(3);
        if (header != kCodesHeader)
            fail(ErrorKind::format, "codes header must be '" + std::string(kCodesHeader) + "'");
    }
    std::map<std::pair<std::string, UtteranceRef>, std::size_t> index;
    for (std::size_t r = 1; r < rows.size(); ++r) {
        const auto& row = rows[r];
        if (row.fields.size() == 1 && row.fields[0].empty()) continue;
        const std::string where = "row " + std::to_string(r) + " (line " + std::to_string(row.line) + ")";
        if (row.fields.size() != 10) {
            out.diagnostics.push_back(where + ": expected 10 fields, got " + std::to_string(row.fields.size()));
            continue;
        }
        const auto& f = row.fields;
        CodingDecision d;
        d.ref.session_id = text::trim(f[0]);
        if (d.ref.session_id.empty()) {
            out.diagnostics.push_back(where + ": missing session_id");
            continue;
        }
        try {
            std::size_t used = 0;
            d.ref.seq = std::stoi(f[1], &used);
            if (used != f[1].size() || d.ref.seq < 0) throw std::invalid_argument("seq");
        } catch (const std::exception&) {
            out.diagnostics.push_back(where + ": invalid seq '" + f[1] + "'");
            continue;
        }
        d.coder = text::trim(f[2]);
        try {
            validate_coder_id(d.coder);
        } catch (const Error& e) {
            out.diagnostics.push_back(where + ": " + e.what());
            continue;
        }
        d.rationale = f[9];

        bool bad = false;
        std::vector<std::optional<int>> vals;
        for (int i = 3; i <= 7; ++i) {
            const std::string cell = text::trim(f[static_cast<std::size_t>(i)]);
            if (cell.empty()) {
                vals.push_back(std::nullopt);
            } else if (cell == "0" || cell == "1") {
                vals.push_back(cell == "1" ? 1 : 0);
            } else {
                out.diagnostics.push_back(where + ": " + kQualityDimensions[i - 3] + " must be 0 or 1, got '" + cell +
                                          "'");
                bad = true;
            }
        }
        if (bad) continue;
        const std::string label = text::trim(f[8]);
        if (!label.empty() && !is_student_label(label) && !is_teacher_label(label)) {
            out.diagnostics.push_back(where + ": unknown behavior label '" + label + "'");
            continue;
        }
        if (!label.empty()) d.behavior = label;

        const bool core_empty = !vals[0] && !vals[1] && !vals[2] && !vals[3];
        const bool core_full = vals[0] && vals[1] && vals[2] && vals[3];
        if (core_empty && !vals[4]) {
            d.failed = !d.behavior;
        } else if (!core_full) {
            out.diagnostics.push_back(where + ": quality codes are partially filled");
            continue;
        } else {
            QualityCode q{*vals[0], *vals[1], *vals[2], *vals[3], vals[4]};
            if (q.diversity && d.behavior && is_teacher_label(*d.behavior)) {
                out.diagnostics.push_back(where + ": teacher row carries a diversity code");
                continue;
            }
            if (!q.diversity && d.behavior && is_student_label(*d.behavior)) {
                out.diagnostics.push_back(where + ": student row lacks a diversity code");
                continue;
            }
            d.quality = q;
        }

        auto key = std::make_pair(d.coder, d.ref);
        if (auto it = index.find(key); it != index.end()) {
            out.warnings.push_back(where + ": duplicate codes for " + d.ref.session_id + "#" +
                                   std::to_string(d.ref.seq) + " by " + d.coder + "; keeping the later row");
            out.decisions[it->second] = std::move(d);
        } else {
            index.emplace(key, out.decisions.size());
            out.decisions.push_back(std::move(d));
        }
    }
    return out;
}

CodesFile load_codes(const std::filesystem::path& path) { return parse_codes(read_text_file(path)); }

CodesFile ingest_human_codes(const std::filesystem::path& path) {
    CodesFile file = load_codes(path);
    std::vector<CodingDecision> kept;
    for (auto& d : file.decisions) {
        if (d.coder.rfind("human:", 0) != 0)
            file.diagnostics.push_back(d.ref.session_id + "#" + std::to_string(d.ref.seq) + ": coder '" + d.coder +
                                       "' is not a human coder");
        else
            kept.push_back(std::move(d));
    }
    file.decisions = std::move(kept);
    return file;
}

// ---------------------------------------------------------------------------
// Agreement

AgreementReport cohen_kappa(const std::vector<std::string>& a, const std::vector<std::string>& b,
                            std::string dimension) {
    if (a.size() != b.size())
        fail(ErrorKind::invalid_argument, "kappa needs paired codings: " + std::to_string(a.size()) + " vs " +
                                              std::to_string(b.size()) + " items");
    if (a.empty()) fail(ErrorKind::invalid_argument, "kappa over an empty item set");
    const double n = static_cast<double>(a.size());
    std::map<std::string, double> ma, mb;
    std::size_t agree = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        ma[a[i]] += 1.0;
        mb[b[i]] += 1.0;
        if (a[i] == b[i]) ++agree;
    }
    AgreementReport r;
    r.dimension = std::move(dimension);
    r.n = a.size();
    r.p_o = static_cast<double>(agree) / n;
    for (const auto& [label, count] : ma)
        if (auto it = mb.find(label); it != mb.end()) r.p_e += (count / n) * (it->second / n);
    r.kappa = r.p_e >= 1.0 ? 1.0 : (r.p_o - r.p_e) / (1.0 - r.p_e);
    return r;
}

std::vector<UtteranceRef> sample_for_validation(std::vector<SampleItem> items, double fraction, std::uint64_t seed) {
    if (!(fraction > 0.0 && fraction <= 1.0)) fail(ErrorKind::invalid_argument, "fraction must lie in (0, 1]");
    std::sort(items.begin(), items.end(), [](const SampleItem& x, const SampleItem& y) { return x.ref < y.ref; });
    items.erase(std::unique(items.begin(), items.end(),
                            [](const SampleItem& x, const SampleItem& y) { return x.ref == y.ref; }),
                items.end());
    const std::size_t n = items.size();
    const std::size_t k = std::min(n, static_cast<std::size_t>(std::llround(fraction * static_cast<double>(n))));

    std::map<std::string, std::vector<UtteranceRef>> strata;
    for (auto& it : items) strata[it.stratum].push_back(std::move(it.ref));

    struct Quota {
        std::string key;
        std::size_t take;
        double remainder;
    };
    std::vector<Quota> quotas;
    std::size_t assigned = 0;
    for (const auto& [key, refs] : strata) {
        const double exact = static_cast<double>(k) * static_cast<double>(refs.size()) / static_cast<double>(n);
        const auto base = static_cast<std::size_t>(std::floor(exact + 1e-12));
        quotas.push_back({key, base, exact - static_cast<double>(base)});
        assigned += base;
    }
    std::vector<std::size_t> by_remainder(quotas.size());
    for (std::size_t i = 0; i < quotas.size(); ++i) by_remainder[i] = i;
    std::stable_sort(by_remainder.begin(), by_remainder.end(),
                     [&](std::size_t x, std::size_t y) { return quotas[x].remainder > quotas[y].remainder; });
    for (std::size_t i = 0; assigned < k && i < by_remainder.size(); ++i) {
        auto& q = quotas[by_remainder[i]];
        if (q.take < strata[q.key].size()) {
            ++q.take;
            ++assigned;
        }
    }

    std::vector<UtteranceRef> out;
    for (const auto& q : quotas) {
        auto refs = strata[q.key];
        SplitMix64 rng(hash_combine(seed, fnv1a64(q.key)));
        rng.shuffle(refs);
        out.insert(out.end(), refs.begin(), refs.begin() + static_cast<long>(q.take));
    }
    std::sort(out.begin(), out.end());
    return out;
}

std::vector<SampleItem> corpus_items(const std::vector<SessionTranscript>& corpus) {
    std::vector<SampleItem> out;
    for (const auto& t : corpus)
        for (const auto& u : t.utterances)
            out.push_back({{u.session_id, u.seq}, std::string(to_string(u.speaker_kind)) + "/" + to_string(u.condition)});
    return out;
}

AgreementSummary compare_codings(const std::vector<CodingDecision>& a, const std::vector<CodingDecision>& b,
                                 const std::vector<UtteranceRef>* subset) {
    std::map<UtteranceRef, const CodingDecision*> ma, mb;
    for (const auto& d : a)
        if (!d.failed) ma[d.ref] = &d;
    for (const auto& d : b)
        if (!d.failed) mb[d.ref] = &d;
    std::set<UtteranceRef> wanted;
    if (subset) wanted.insert(subset->begin(), subset->end());

    AgreementSummary s;
    std::vector<std::pair<const CodingDecision*, const CodingDecision*>> pairs;
    for (const auto& [ref, da] : ma) {
        if (subset && !wanted.count(ref)) continue;
        if (auto it = mb.find(ref); it != mb.end())
            pairs.emplace_back(da, it->second);
        else
            ++s.only_a;
    }
    for (const auto& [ref, db] : mb)
        if ((!subset || wanted.count(ref)) && !ma.count(ref)) ++s.only_b;
    s.overlap = pairs.size();
    if (pairs.empty()) fail(ErrorKind::invalid_argument, "the two codings share no coded utterances");

    double sum = 0.0;
    int dims = 0;
    for (const char* dim : kQualityDimensions) {
        std::vector<std::string> xa, xb;
        for (const auto& [da, db] : pairs) {
            if (!da->quality || !db->quality) continue;
            auto va = quality_value(*da->quality, dim);
            auto vb = quality_value(*db->quality, dim);
            if (!va || !vb) continue;
            xa.push_back(std::to_string(*va));
            xb.push_back(std::to_string(*vb));
        }
        if (xa.empty()) continue;
        s.quality.push_back(cohen_kappa(xa, xb, dim));
        sum += s.quality.back().kappa;
        ++dims;
    }
    s.quality_mean = dims ? sum / dims : 0.0;

    auto behavior = [&](const char* name, int which) {
        std::vector<std::string> xa, xb;
        for (const auto& [da, db] : pairs) {
            if (!da->behavior || !db->behavior) continue;
            const bool teacher = is_teacher_label(*da->behavior);
            if ((which == 1 && teacher) || (which == 2 && !teacher)) continue;
            xa.push_back(*da->behavior);
            xb.push_back(*db->behavior);
        }
        if (!xa.empty()) s.behavior.push_back(cohen_kappa(xa, xb, name));
    };
    behavior("behavior", 0);
    behavior("behavior_student", 1);
    behavior("behavior_teacher", 2);
    return s;
}

}  // namespace scaffoldsim
