#include "scaffoldsim/pipeline.hpp"

#include <algorithm>
#include <memory>

#include <json.hpp>

#include "scaffoldsim/error.hpp"
#include "scaffoldsim/report.hpp"
#include "scaffoldsim/stats.hpp"

namespace scaffoldsim {

namespace fs = std::filesystem;
using ojson = nlohmann::ordered_json;

int exit_code_for(std::size_t failed, std::size_t total) noexcept {
    if (failed == 0) return exit_ok;
    return failed >= total ? exit_failure : exit_partial;
}

int exit_code_for(const std::exception& e) noexcept {
    if (const auto* err = dynamic_cast<const Error*>(&e)) {
        switch (err->kind()) {
            case ErrorKind::invalid_argument:
            case ErrorKind::format:
            case ErrorKind::validation:
            case ErrorKind::io: return exit_usage;
            default: return exit_failure;
        }
    }
    return exit_failure;
}

// ---------------------------------------------------------------------------
// Configuration

namespace {

template <class T>
void take(const nlohmann::json& obj, const char* key, T& into, const std::string& where) {
    if (!obj.contains(key) || obj[key].is_null()) return;
    try {
        into = obj[key].get<T>();
    } catch (const nlohmann::json::exception&) {
        fail(ErrorKind::format, where + "." + key + " has the wrong type");
    }
}

void reject_unknown(const nlohmann::json& obj, std::initializer_list<const char*> known, const std::string& where) {
    for (const auto& [key, _] : obj.items())
        if (std::none_of(known.begin(), known.end(), [&](const char* k) { return key == k; }))
            fail(ErrorKind::format, "unknown config key " + where + "." + key);
}

ojson config_to_json(const RunOptions& o) {
    ojson j;
    j["experiment_id"] = o.experiment_id;
    ojson conds = ojson::array();
    for (Condition c : o.conditions) conds.push_back(to_string(c));
    j["conditions"] = conds;
    j["replicates"] = o.replicates;
    j["seed"] = o.seed;
    j["template_dir"] = o.template_dir.empty() ? ojson(nullptr) : ojson(o.template_dir.generic_string());
    const auto& s = o.session;
    j["session"] = {{"max_rounds", s.max_rounds},
                    {"allow_silence", s.allow_silence},
                    {"balance_monitoring", s.balance_monitoring},
                    {"length",
                     {{"teacher_limit", s.length.teacher_limit},
                      {"student_limit", s.length.student_limit},
                      {"unit", text::to_string(s.length.unit)},
                      {"hard_cap_factor", s.length.hard_cap_factor}}}};
    const auto& b = o.backend;
    j["backend"] = {{"kind", to_string(b.kind)},
                    {"endpoint", b.endpoint},
                    {"model_name", b.model_name},
                    {"api_key_env", b.api_key_env},
                    {"request_timeout", b.request_timeout},
                    {"max_repair_attempts", b.max_repair_attempts},
                    {"max_transport_retries", b.max_transport_retries},
                    {"temperature", b.temperature},
                    {"scripted_contradiction_rate", b.scripted_contradiction_rate}};
    return j;
}

std::string default_experiment_id(const RunOptions& o, const std::string& tasks_sha) {
    std::string key = tasks_sha + "|" + std::to_string(o.seed) + "|" + std::to_string(o.replicates);
    for (Condition c : o.conditions) key += std::string("|") + to_string(c);
    return "exp-" + sha256_hex(key).substr(0, 12);
}

PromptLibrary prompts_for(const fs::path& dir) {
    return dir.empty() ? PromptLibrary::builtin() : PromptLibrary::load(dir);
}

}  // namespace

void apply_config(RunOptions& o, std::string_view text) try {
    auto j = nlohmann::json::parse(text);
    if (!j.is_object()) fail(ErrorKind::format, "config must be a JSON object");
    reject_unknown(j, {"experiment_id", "conditions", "replicates", "seed", "parallel", "template_dir", "session",
                       "backend"},
                   "config");
    take(j, "experiment_id", o.experiment_id, "config");
    take(j, "replicates", o.replicates, "config");
    take(j, "seed", o.seed, "config");
    take(j, "parallel", o.parallel, "config");
    if (j.contains("template_dir") && j["template_dir"].is_string())
        o.template_dir = j["template_dir"].get<std::string>();
    if (j.contains("conditions")) {
        o.conditions.clear();
        for (const auto& c : j["conditions"]) o.conditions.push_back(parse_condition(c.get<std::string>()));
    }
    if (j.contains("session")) {
        const auto& s = j["session"];
        reject_unknown(s, {"max_rounds", "allow_silence", "balance_monitoring", "length"}, "session");
        take(s, "max_rounds", o.session.max_rounds, "session");
        take(s, "allow_silence", o.session.allow_silence, "session");
        take(s, "balance_monitoring", o.session.balance_monitoring, "session");
        if (s.contains("length")) {
            const auto& l = s["length"];
            reject_unknown(l, {"teacher_limit", "student_limit", "unit", "hard_cap_factor"}, "session.length");
            take(l, "teacher_limit", o.session.length.teacher_limit, "session.length");
            take(l, "student_limit", o.session.length.student_limit, "session.length");
            take(l, "hard_cap_factor", o.session.length.hard_cap_factor, "session.length");
            if (l.contains("unit")) o.session.length.unit = text::parse_length_unit(l["unit"].get<std::string>());
        }
    }
    if (j.contains("backend")) {
        const auto& b = j["backend"];
        reject_unknown(b, {"kind", "endpoint", "model_name", "api_key_env", "request_timeout", "max_repair_attempts",
                           "max_transport_retries", "temperature", "global_seed", "scripted_contradiction_rate"},
                       "backend");
        if (b.contains("kind")) o.backend.kind = parse_backend_kind(b["kind"].get<std::string>());
        take(b, "endpoint", o.backend.endpoint, "backend");
        take(b, "model_name", o.backend.model_name, "backend");
        take(b, "api_key_env", o.backend.api_key_env, "backend");
        take(b, "request_timeout", o.backend.request_timeout, "backend");
        take(b, "max_repair_attempts", o.backend.max_repair_attempts, "backend");
        take(b, "max_transport_retries", o.backend.max_transport_retries, "backend");
        take(b, "temperature", o.backend.temperature, "backend");
        take(b, "scripted_contradiction_rate", o.backend.scripted_contradiction_rate, "backend");
        if (b.contains("global_seed")) take(b, "global_seed", o.seed, "backend");
    }
} catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::format, std::string("config: ") + e.what());
}

RunOptions options_from_manifest(const fs::path& manifest, const fs::path& out) try {
    auto j = nlohmann::json::parse(read_text_file(manifest));
    if (!j.is_object() || !j.contains("config") || !j.contains("tasks_sha256"))
        fail(ErrorKind::format, manifest.string() + " is not a run manifest");
    RunOptions o;
    apply_config(o, j["config"].dump());
    o.tasks = manifest.parent_path() / j.value("tasks_file", "tasks.json");
    const std::string recorded = j["tasks_sha256"].get<std::string>();
    if (sha256_hex(read_text_file(o.tasks)) != recorded)
        fail(ErrorKind::validation, "task file " + o.tasks.string() + " does not match the manifest hash");
    o.source_tasks_sha256 = j.value("source_tasks_sha256", "");
    o.out = out;
    return o;
} catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::format, manifest.string() + ": " + e.what());
}

std::string manifest_json(const RunOptions& o, const std::string& tasks_text, const std::string& source_sha,
                          const ExperimentResult& result) {
    ojson j;
    j["experiment_id"] = o.experiment_id;
    j["tool"] = {{"name", "scaffoldsim"}, {"version", SCAFFOLDSIM_VERSION}};
    j["tasks_file"] = "tasks.json";
    j["tasks_sha256"] = sha256_hex(tasks_text);
    j["source_tasks_sha256"] = source_sha;
    {
        const PromptLibrary prompts = prompts_for(o.template_dir);
        std::string all;
        for (const auto& name : prompts.names()) all += name + "\n" + prompts.get(name) + "\n";
        j["prompts_sha256"] = sha256_hex(all);
    }
    j["config"] = config_to_json(o);
    ojson sessions = ojson::array();
    for (std::size_t i = 0; i < result.records.size(); ++i) {
        const auto& r = result.records[i];
        ojson notes = ojson::array();
        for (const auto& w : r.warnings) notes.push_back(w);
        if (o.backend.kind == BackendKind::http && r.termination == Termination::all_points_covered)
            notes.push_back("coverage judged by the model teacher and accepted without audit");
        sessions.push_back({{"session_id", r.session_id},
                            {"task_id", r.task_id},
                            {"condition", to_string(r.condition)},
                            {"replicate", r.replicate},
                            {"seed", r.seed},
                            {"status", to_string(r.status)},
                            {"termination", to_string(r.termination)},
                            {"transcript", "transcripts/" + r.session_id + ".jsonl"},
                            {"transcript_sha256", sha256_hex(write_transcript(result.transcripts[i]))},
                            {"error", r.error.empty() ? ojson(nullptr) : ojson(r.error)},
                            {"notes", notes}});
    }
    j["sessions"] = sessions;
    j["summary"] = {{"sessions", result.records.size()},
                    {"complete", result.records.size() - result.failures()},
                    {"failed", result.failures()}};
    return j.dump(2) + "\n";
}

RunOutcome cmd_run(const RunOptions& options) {
    RunOptions o = options;
    if (o.out.empty()) fail(ErrorKind::invalid_argument, "--out is required");
    if (o.tasks.empty()) fail(ErrorKind::invalid_argument, "--tasks is required");
    if (o.replicates < 0) fail(ErrorKind::invalid_argument, "replicates must be >= 0");
    if (o.parallel < 1) fail(ErrorKind::invalid_argument, "parallel must be >= 1");
    if (o.conditions.empty()) fail(ErrorKind::invalid_argument, "no conditions selected");
    o.backend.global_seed = o.seed;
    o.session.seed = o.seed;
    o.session.validate();
    validate_backend_config(o.backend);

    const std::string source = read_text_file(o.tasks);
    const auto tasks = parse_task_set(source);
    if (tasks.empty()) fail(ErrorKind::validation, "task set " + o.tasks.string() + " is empty");
    const std::string tasks_text = write_task_set(tasks);
    if (o.experiment_id.empty()) o.experiment_id = default_experiment_id(o, sha256_hex(tasks_text));

    const PromptLibrary prompts = prompts_for(o.template_dir);
    auto backend = make_backend(o.backend);

    ExperimentConfig ec;
    ec.conditions = o.conditions;
    ec.replicates = o.replicates;
    ec.session = o.session;
    ec.parallel = o.parallel;
    const auto result = run_experiment(tasks, ec, *backend, prompts);

    const fs::path tdir = o.out / "transcripts";
    if (fs::exists(tdir))
        for (const auto& entry : fs::directory_iterator(tdir))
            if (entry.path().extension() == ".jsonl") fs::remove(entry.path());
    write_text_file(o.out / "tasks.json", tasks_text);
    for (const auto& t : result.transcripts) save_transcript(tdir / (t.session_id + ".jsonl"), t);

    RunOutcome outcome;
    outcome.sessions = result.records.size();
    outcome.failures = result.failures();
    outcome.exit_code = exit_code_for(outcome.failures, outcome.sessions);
    outcome.manifest = o.out / "manifest.json";
    write_text_file(outcome.manifest, manifest_json(o, tasks_text,
                                                     o.source_tasks_sha256.empty() ? sha256_hex(source)
                                                                                   : o.source_tasks_sha256,
                                                     result));
    return outcome;
}

// ---------------------------------------------------------------------------

Corpus load_corpus(const fs::path& dir) {
    if (!fs::is_directory(dir)) fail(ErrorKind::io, "corpus directory " + dir.string() + " does not exist");
    Corpus c;
    if (fs::exists(dir / "tasks.json")) c.tasks = load_task_set(dir / "tasks.json");
    const fs::path tdir = dir / "transcripts";
    if (!fs::is_directory(tdir)) return c;
    std::vector<fs::path> files;
    for (const auto& entry : fs::directory_iterator(tdir))
        if (entry.path().extension() == ".jsonl") files.push_back(entry.path());
    std::sort(files.begin(), files.end());
    for (const auto& f : files) c.transcripts.push_back(load_transcript(f));
    return c;
}

CodeOutcome cmd_code(const CodeOptions& o) {
    if (o.out.empty()) fail(ErrorKind::invalid_argument, "--out is required");
    if (o.coder != "rule_based" && o.coder != "model")
        fail(ErrorKind::invalid_argument, "coder must be rule_based or model");
    const Corpus corpus = load_corpus(o.corpus);
    if (!corpus.transcripts.empty() && corpus.tasks.empty())
        fail(ErrorKind::validation, "corpus " + o.corpus.string() + " has transcripts but no tasks.json");

    std::vector<CodingDecision> decisions;
    if (o.coder == "rule_based") {
        RuleBasedCoder coder;
        decisions = code_corpus(corpus.transcripts, corpus.tasks, coder);
    } else {
        auto backend = make_backend(o.backend);
        const PromptLibrary prompts = prompts_for(o.template_dir);
        ModelCoder coder(*backend, o.backend.model_name.empty() ? backend->name() : o.backend.model_name, prompts);
        decisions = code_corpus(corpus.transcripts, corpus.tasks, coder);
    }
    CodeOutcome out;
    out.items = decisions.size();
    out.failures = static_cast<std::size_t>(
        std::count_if(decisions.begin(), decisions.end(), [](const CodingDecision& d) { return d.failed; }));
    out.exit_code = exit_code_for(out.failures, out.items);
    write_text_file(o.out, write_codes(decisions));
    return out;
}

namespace {

std::string stratum_of(const CodingDecision& d) {
    const bool teacher = (d.behavior && is_teacher_label(*d.behavior)) ||
                         (!d.behavior && d.quality && !d.quality->diversity);
    std::string condition = "unknown";
    for (Condition c : kAllConditions)
        if (d.ref.session_id.find(to_string(c)) != std::string::npos) condition = to_string(c);
    return std::string(teacher ? "teacher" : "student") + "/" + condition;
}

}  // namespace

KappaOutcome cmd_kappa(const KappaOptions& o) {
    const CodesFile a = load_codes(o.a);
    const CodesFile b = load_codes(o.b);
    std::set<UtteranceRef> in_b;
    for (const auto& d : b.decisions)
        if (!d.failed) in_b.insert(d.ref);
    std::vector<SampleItem> items;
    for (const auto& d : a.decisions)
        if (!d.failed && in_b.count(d.ref)) items.push_back({d.ref, stratum_of(d)});
    if (items.empty()) fail(ErrorKind::invalid_argument, "the two codes files share no coded utterances");

    KappaOutcome out;
    const auto subset = sample_for_validation(items, o.sample_fraction, o.seed);
    out.sampled = subset.size();
    out.summary = compare_codings(a.decisions, b.decisions, &subset);

    std::string text = "# Coding agreement\n\nA: " + o.a.generic_string() + "\nB: " + o.b.generic_string() +
                       "\nSample: " + std::to_string(out.sampled) + " of " + std::to_string(items.size()) +
                       " shared items (fraction " + report::fixed(o.sample_fraction, 3) + ", seed " +
                       std::to_string(o.seed) + ")\n\n";
    for (const auto* f : {&a, &b})
        for (const auto& d : f->diagnostics) text += "> skipped: " + d + "\n";
    text += report::render_agreement(out.summary);
    out.rendered = text;
    if (!o.out.empty()) write_text_file(o.out, text);
    return out;
}

AnalyzeOutcome cmd_analyze(const AnalyzeOptions& o) {
    if (o.out.empty()) fail(ErrorKind::invalid_argument, "--out is required");
    AnalyzeOutcome out;
    if (!o.summary.empty()) {
        const auto tables = report::analyze_summaries(read_text_file(o.summary));
        write_text_file(o.out / "summary_report.md", report::render_summary_markdown(tables));
        for (const auto& t : tables) write_text_file(o.out / (t.name + ".csv"), report::summary_csv(t));
        return out;
    }
    if (o.corpus.empty()) fail(ErrorKind::invalid_argument, "--corpus is required unless --summary is given");
    if (o.codes.empty()) fail(ErrorKind::invalid_argument, "at least one codes file is required");
    if (!o.agreement.empty() && o.agreement.size() != 2)
        fail(ErrorKind::invalid_argument, "--agreement takes exactly two codes files");

    const Corpus corpus = load_corpus(o.corpus);
    stats::CodedCorpus coded;
    coded.transcripts = corpus.transcripts;
    std::vector<std::string> diagnostics;
    for (const auto& path : o.codes) {
        const CodesFile f = load_codes(path);
        for (const auto& d : f.diagnostics) diagnostics.push_back(path.filename().string() + ": " + d);
        coded.add_codes(f.decisions);
    }
    std::optional<AgreementSummary> agreement;
    if (o.agreement.size() == 2)
        agreement = compare_codings(load_codes(o.agreement[0]).decisions, load_codes(o.agreement[1]).decisions);

    auto r = report::build_report(coded, agreement);
    for (const auto& d : diagnostics) r.warnings.push_back("codes row skipped: " + d);
    report::write_report(r, o.out);
    out.warnings = r.warnings.size();
    return out;
}

}  // namespace scaffoldsim
