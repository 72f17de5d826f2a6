#include "scaffoldsim/scaffoldsim.h"

#include <cmath>
#include <cstdlib>
#include <cstring>
#include <string>
#include <vector>

#include "scaffoldsim/error.hpp"
#include "scaffoldsim/pipeline.hpp"
#include "scaffoldsim/prompts.hpp"
#include "scaffoldsim/stats.hpp"

struct ss_context {
    std::string error;
    int exit_code = 0;
};

struct ss_task_set {
    std::vector<scaffoldsim::PoetryTask> tasks;
};

namespace {

using namespace scaffoldsim;

ss_status status_of(ErrorKind kind) {
    switch (kind) {
        case ErrorKind::invalid_argument: return SS_ERR_INVALID_ARGUMENT;
        case ErrorKind::format: return SS_ERR_FORMAT;
        case ErrorKind::validation: return SS_ERR_VALIDATION;
        case ErrorKind::io: return SS_ERR_IO;
        case ErrorKind::network: return SS_ERR_NETWORK;
        case ErrorKind::generation: return SS_ERR_GENERATION;
        case ErrorKind::structured_output: return SS_ERR_STRUCTURED_OUTPUT;
        case ErrorKind::protocol: return SS_ERR_PROTOCOL;
        case ErrorKind::internal: return SS_ERR_INTERNAL;
    }
    return SS_ERR_INTERNAL;
}

template <class F>
ss_status guarded(ss_context* ctx, F&& body) noexcept {
    if (!ctx) return SS_ERR_INVALID_ARGUMENT;
    ctx->error.clear();
    ctx->exit_code = 0;
    try {
        body();
        return SS_OK;
    } catch (const Error& e) {
        ctx->error = e.what();
        ctx->exit_code = exit_code_for(e);
        return status_of(e.kind());
    } catch (const std::bad_alloc&) {
        ctx->error = "out of memory";
    } catch (const std::exception& e) {
        ctx->error = e.what();
    } catch (...) {
        ctx->error = "unknown error";
    }
    ctx->exit_code = exit_failure;
    return SS_ERR_INTERNAL;
}

void require(const void* p, const char* what) {
    if (!p) fail(ErrorKind::invalid_argument, std::string(what) + " is null");
}

char* dup_string(const std::string& s) {
    char* out = static_cast<char*>(std::malloc(s.size() + 1));
    if (!out) throw std::bad_alloc();
    std::memcpy(out, s.c_str(), s.size() + 1);
    return out;
}

stats::GroupSummary to_summary(const ss_group_summary& g) { return {g.n, g.mean, g.sd}; }

bool set(const char* s) { return s && *s; }

void apply_backend(BackendConfig& cfg, const ss_backend_options& b) {
    if (set(b.kind)) cfg.kind = parse_backend_kind(b.kind);
    if (set(b.endpoint)) cfg.endpoint = b.endpoint;
    if (set(b.model)) cfg.model_name = b.model;
    if (set(b.api_key_env)) cfg.api_key_env = b.api_key_env;
    if (b.timeout_seconds > 0) cfg.request_timeout = b.timeout_seconds;
}

std::vector<Condition> parse_conditions(const char* s) {
    const std::string name = s;
    if (name == "both") return {Condition::deep_think, Condition::direct_speak};
    return {parse_condition(name)};
}

void reset_backend_options(ss_backend_options& b) {
    b.kind = nullptr;
    b.endpoint = nullptr;
    b.model = nullptr;
    b.api_key_env = nullptr;
    b.timeout_seconds = -1;
}

}  // namespace

extern "C" {

const char* ss_version(void) { return SCAFFOLDSIM_VERSION; }

const char* ss_status_name(ss_status status) {
    switch (status) {
        case SS_OK: return "ok";
        case SS_ERR_INVALID_ARGUMENT: return "invalid_argument";
        case SS_ERR_FORMAT: return "format";
        case SS_ERR_VALIDATION: return "validation";
        case SS_ERR_IO: return "io";
        case SS_ERR_NETWORK: return "network";
        case SS_ERR_GENERATION: return "generation";
        case SS_ERR_STRUCTURED_OUTPUT: return "structured_output";
        case SS_ERR_PROTOCOL: return "protocol";
        case SS_ERR_INTERNAL: return "internal";
    }
    return "unknown";
}

ss_context* ss_context_create(void) { return new (std::nothrow) ss_context(); }

void ss_context_destroy(ss_context* ctx) { delete ctx; }

const char* ss_last_error(const ss_context* ctx) { return ctx ? ctx->error.c_str() : "null context"; }

int ss_last_exit_code(const ss_context* ctx) { return ctx ? ctx->exit_code : exit_failure; }

void ss_string_free(char* s) { std::free(s); }

ss_status ss_t_two_sided_p(ss_context* ctx, double t, double df, double* p_out) {
    return guarded(ctx, [&] {
        require(p_out, "p_out");
        *p_out = stats::t_two_sided_p(t, df);
    });
}

ss_status ss_pooled_t_test(ss_context* ctx, const ss_group_summary* a, const ss_group_summary* b, ss_t_test* out) {
    return guarded(ctx, [&] {
        require(a, "a");
        require(b, "b");
        require(out, "out");
        const auto r = stats::pooled_t_test(to_summary(*a), to_summary(*b));
        *out = {r.t, r.df, r.p, r.defined ? 1 : 0, r.infinite ? 1 : 0};
    });
}

ss_status ss_cohens_d(ss_context* ctx, const ss_group_summary* a, const ss_group_summary* b, double* d_out,
                      int* defined_out) {
    return guarded(ctx, [&] {
        require(a, "a");
        require(b, "b");
        require(d_out, "d_out");
        const auto d = stats::cohens_d(to_summary(*a), to_summary(*b));
        *d_out = d.value_or(NAN);
        if (defined_out) *defined_out = d ? 1 : 0;
    });
}

ss_status ss_bh_adjust(ss_context* ctx, const double* p, const int* defined, size_t n, double* adjusted_out) {
    return guarded(ctx, [&] {
        if (n == 0) return;
        require(p, "p");
        require(adjusted_out, "adjusted_out");
        std::vector<std::optional<double>> in(n);
        for (size_t i = 0; i < n; ++i)
            if (!defined || defined[i]) in[i] = p[i];
        const auto adj = stats::bh_adjust(in);
        for (size_t i = 0; i < n; ++i) adjusted_out[i] = adj[i].value_or(NAN);
    });
}

ss_status ss_cohen_kappa(ss_context* ctx, const char* const* a, const char* const* b, size_t n, ss_agreement* out) {
    return guarded(ctx, [&] {
        require(out, "out");
        if (n > 0) {
            require(a, "a");
            require(b, "b");
        }
        std::vector<std::string> va, vb;
        for (size_t i = 0; i < n; ++i) {
            require(a[i], "label");
            require(b[i], "label");
            va.emplace_back(a[i]);
            vb.emplace_back(b[i]);
        }
        const auto r = cohen_kappa(va, vb);
        *out = {r.n, r.p_o, r.p_e, r.kappa};
    });
}

ss_status ss_task_set_load(ss_context* ctx, const char* path, ss_task_set** out) {
    return guarded(ctx, [&] {
        require(path, "path");
        require(out, "out");
        *out = nullptr;
        auto set = std::make_unique<ss_task_set>();
        set->tasks = load_task_set(path);
        *out = set.release();
    });
}

size_t ss_task_set_size(const ss_task_set* tasks) { return tasks ? tasks->tasks.size() : 0; }

int ss_task_set_task_id(const ss_task_set* tasks, size_t index) {
    if (!tasks || index >= tasks->tasks.size()) return -1;
    return tasks->tasks[index].task_id;
}

void ss_task_set_destroy(ss_task_set* tasks) { delete tasks; }

ss_status ss_task_set_to_json(ss_context* ctx, const ss_task_set* tasks, char** json_out) {
    return guarded(ctx, [&] {
        require(tasks, "tasks");
        require(json_out, "json_out");
        *json_out = dup_string(write_task_set(tasks->tasks));
    });
}

void ss_run_options_init(ss_run_options* o) {
    if (!o) return;
    std::memset(o, 0, sizeof(*o));
    o->replicates = -1;
    o->parallel = -1;
    o->max_rounds = -1;
    o->allow_silence = -1;
    reset_backend_options(o->backend);
}

ss_status ss_run_experiment(ss_context* ctx, const ss_run_options* opts, ss_run_result* out) {
    return guarded(ctx, [&] {
        require(opts, "options");
        require(out, "out");
        if (!set(opts->out)) fail(ErrorKind::invalid_argument, "an output directory is required");
        RunOptions o;
        if (set(opts->manifest)) {
            o = options_from_manifest(opts->manifest, opts->out);
        } else {
            if (set(opts->config_file)) apply_config(o, read_text_file(opts->config_file));
            if (set(opts->tasks)) o.tasks = opts->tasks;
            o.out = opts->out;
            if (set(opts->condition)) o.conditions = parse_conditions(opts->condition);
            if (opts->replicates >= 0) o.replicates = opts->replicates;
            if (opts->has_seed) o.seed = opts->seed;
            if (opts->max_rounds >= 0) o.session.max_rounds = opts->max_rounds;
            if (opts->allow_silence >= 0) o.session.allow_silence = opts->allow_silence != 0;
            if (set(opts->experiment_id)) o.experiment_id = opts->experiment_id;
            if (set(opts->template_dir)) o.template_dir = opts->template_dir;
            apply_backend(o.backend, opts->backend);
        }
        if (opts->parallel >= 0) o.parallel = opts->parallel;
        const auto r = cmd_run(o);
        *out = {r.sessions, r.failures, r.exit_code};
        ctx->exit_code = r.exit_code;
    });
}

void ss_code_options_init(ss_code_options* o) {
    if (!o) return;
    std::memset(o, 0, sizeof(*o));
    reset_backend_options(o->backend);
}

ss_status ss_code_corpus(ss_context* ctx, const ss_code_options* opts, ss_code_result* out) {
    return guarded(ctx, [&] {
        require(opts, "options");
        require(out, "out");
        if (!set(opts->corpus) || !set(opts->out))
            fail(ErrorKind::invalid_argument, "corpus and output paths are required");
        CodeOptions o;
        o.corpus = opts->corpus;
        o.out = opts->out;
        if (set(opts->coder)) o.coder = opts->coder;
        if (set(opts->template_dir)) o.template_dir = opts->template_dir;
        if (set(opts->config_file)) {
            RunOptions holder;
            apply_config(holder, read_text_file(opts->config_file));
            o.backend = holder.backend;
            o.backend.global_seed = holder.seed;
        }
        apply_backend(o.backend, opts->backend);
        const auto r = cmd_code(o);
        *out = {r.items, r.failures, r.exit_code};
        ctx->exit_code = r.exit_code;
    });
}

ss_status ss_kappa_files(ss_context* ctx, const char* a, const char* b, double sample_fraction, uint64_t seed,
                         const char* out, ss_kappa_result* result) {
    return guarded(ctx, [&] {
        require(a, "a");
        require(b, "b");
        require(result, "result");
        KappaOptions o;
        o.a = a;
        o.b = b;
        o.sample_fraction = sample_fraction;
        o.seed = seed;
        if (set(out)) o.out = out;
        const auto r = cmd_kappa(o);
        result->overlap = r.summary.overlap;
        result->sampled = r.sampled;
        result->quality_mean_kappa = r.summary.quality_mean;
        result->behavior_kappa = NAN;
        for (const auto& rep : r.summary.behavior)
            if (rep.dimension == "behavior") result->behavior_kappa = rep.kappa;
        result->report = dup_string(r.rendered);
    });
}

ss_status ss_analyze(ss_context* ctx, const ss_analyze_options* opts, ss_analyze_result* out) {
    return guarded(ctx, [&] {
        require(opts, "options");
        require(out, "out");
        AnalyzeOptions o;
        for (size_t i = 0; i < opts->n_codes; ++i) {
            require(opts->codes[i], "codes path");
            o.codes.emplace_back(opts->codes[i]);
        }
        if (set(opts->corpus)) o.corpus = opts->corpus;
        if (set(opts->summary)) o.summary = opts->summary;
        if (set(opts->agreement_a) != set(opts->agreement_b))
            fail(ErrorKind::invalid_argument, "agreement needs two codes files");
        if (set(opts->agreement_a)) o.agreement = {opts->agreement_a, opts->agreement_b};
        if (set(opts->out)) o.out = opts->out;
        const auto r = cmd_analyze(o);
        *out = {r.warnings, r.exit_code};
        ctx->exit_code = r.exit_code;
    });
}

ss_status ss_write_templates(ss_context* ctx, const char* dir) {
    return guarded(ctx, [&] {
        if (!set(dir)) fail(ErrorKind::invalid_argument, "a directory is required");
        PromptLibrary::builtin().write_to(dir);
    });
}

ss_status ss_validate_tasks(ss_context* ctx, const char* path, char** report_out) {
    return guarded(ctx, [&] {
        require(path, "path");
        require(report_out, "report_out");
        *report_out = nullptr;
        const auto tasks = load_task_set(path);
        std::string text;
        for (const auto& t : tasks)
            text += "task " + std::to_string(t.task_id) + ": " + std::to_string(t.scoring_criteria.size()) +
                    " key points, ok\n";
        text += std::to_string(tasks.size()) + " task(s) valid\n";
        *report_out = dup_string(text);
    });
}

}  // extern "C"
