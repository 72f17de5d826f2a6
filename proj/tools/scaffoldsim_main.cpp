// Command-line front end. Talks to the library only through the C API.
#include <cstdio>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "scaffoldsim/scaffoldsim.h"

namespace {

struct Context {
    ss_context* ctx = ss_context_create();
    ~Context() { ss_context_destroy(ctx); }
};

const char* opt(const std::string& s) { return s.empty() ? nullptr : s.c_str(); }

int report_failure(const Context& c, const char* command) {
    std::fprintf(stderr, "scaffoldsim %s: %s\n", command, ss_last_error(c.ctx));
    return ss_last_exit_code(c.ctx);
}

struct BackendFlags {
    std::string kind, endpoint, model, api_key_env, config, templates;
    double timeout = -1;

    void add(CLI::App* cmd) {
        cmd->add_option("--backend", kind, "scripted or http")->check(CLI::IsMember({"scripted", "http"}));
        cmd->add_option("--endpoint", endpoint, "chat-completions base URL");
        cmd->add_option("--model", model, "model name sent to the endpoint");
        cmd->add_option("--api-key-env", api_key_env, "environment variable holding the API key");
        cmd->add_option("--timeout", timeout, "request timeout in seconds");
        cmd->add_option("--config", config, "JSON config file")->check(CLI::ExistingFile);
        cmd->add_option("--templates", templates, "directory of prompt template overrides")
            ->check(CLI::ExistingDirectory);
    }

    ss_backend_options get() const {
        return {opt(kind), opt(endpoint), opt(model), opt(api_key_env), timeout};
    }
};

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Multi-agent collaborative-learning simulator and analysis toolchain", "scaffoldsim"};
    app.set_version_flag("--version", std::string("scaffoldsim ") + ss_version());
    app.require_subcommand(1);

    // run
    auto* run = app.add_subcommand("run", "simulate discussion sessions and write a corpus");
    std::string tasks, out, condition = "both", experiment_id, manifest;
    int replicates = -1, parallel = -1, max_rounds = -1;
    std::uint64_t seed = 0;
    bool no_silence = false;
    BackendFlags run_backend;
    auto* tasks_opt = run->add_option("--tasks", tasks, "task set JSON")->check(CLI::ExistingFile);
    run->add_option("--condition", condition, "deep_think, direct_speak or both")
        ->check(CLI::IsMember({"deep_think", "direct_speak", "both"}));
    run->add_option("--replicates", replicates, "sessions per task and condition")->check(CLI::NonNegativeNumber);
    auto* seed_opt = run->add_option("--seed", seed, "global seed");
    run->add_option("--parallel", parallel, "concurrent sessions")->check(CLI::PositiveNumber);
    run->add_option("--max-rounds", max_rounds, "discussion round cap")->check(CLI::PositiveNumber);
    run->add_flag("--no-silence", no_silence, "students always speak");
    run->add_option("--experiment-id", experiment_id);
    auto* manifest_opt =
        run->add_option("--manifest", manifest, "replay the run recorded in this manifest")->check(CLI::ExistingFile);
    run->add_option("--out", out, "output directory")->required();
    run_backend.add(run);
    manifest_opt->excludes(tasks_opt);

    // code
    auto* code = app.add_subcommand("code", "assign quality and behavior codes to every utterance");
    std::string code_in, code_out, coder = "rule_based";
    BackendFlags code_backend;
    code->add_option("--in", code_in, "corpus directory written by run")->required()->check(CLI::ExistingDirectory);
    code->add_option("--coder", coder, "rule_based or model")->check(CLI::IsMember({"rule_based", "model"}));
    code->add_option("--out", code_out, "codes CSV")->required();
    code_backend.add(code);

    // kappa
    auto* kappa = app.add_subcommand("kappa", "agreement between two codings");
    std::string kappa_a, kappa_b, kappa_out;
    double fraction = 1.0;
    std::uint64_t kappa_seed = 0;
    kappa->add_option("--a", kappa_a)->required()->check(CLI::ExistingFile);
    kappa->add_option("--b", kappa_b)->required()->check(CLI::ExistingFile);
    kappa->add_option("--sample-fraction", fraction)->check(CLI::Range(0.0, 1.0));
    kappa->add_option("--seed", kappa_seed);
    kappa->add_option("--out", kappa_out, "markdown report file");

    // analyze
    auto* analyze = app.add_subcommand("analyze", "statistics, tables and heat maps");
    std::vector<std::string> codes, agreement;
    std::string corpus, summary, analyze_out;
    analyze->add_option("--codes", codes, "codes CSV files, merged in order")->check(CLI::ExistingFile);
    analyze->add_option("--corpus", corpus, "corpus directory")->check(CLI::ExistingDirectory);
    analyze->add_option("--summary", summary, "printed summaries JSON instead of a corpus")->check(CLI::ExistingFile);
    analyze->add_option("--agreement", agreement, "two codes files to compare")
        ->expected(2)
        ->check(CLI::ExistingFile);
    analyze->add_option("--out", analyze_out, "report directory")->required();

    // templates
    auto* templates = app.add_subcommand("templates", "write the built-in prompt templates");
    std::string templates_out;
    templates->add_option("--out", templates_out)->required();

    // validate
    auto* validate = app.add_subcommand("validate", "check a task set");
    std::string validate_tasks;
    validate->add_option("--tasks", validate_tasks)->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::Success& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 1;
    }

    Context c;
    if (!c.ctx) return 3;

    if (*run) {
        if (tasks.empty() && manifest.empty()) {
            std::fprintf(stderr, "scaffoldsim run: --tasks or --manifest is required\n");
            return 1;
        }
        ss_run_options o;
        ss_run_options_init(&o);
        o.tasks = opt(tasks);
        o.out = out.c_str();
        o.condition = condition.c_str();
        o.replicates = replicates;
        o.has_seed = seed_opt->count() > 0;
        o.seed = seed;
        o.parallel = parallel;
        o.max_rounds = max_rounds;
        o.allow_silence = no_silence ? 0 : -1;
        o.experiment_id = opt(experiment_id);
        o.config_file = opt(run_backend.config);
        o.manifest = opt(manifest);
        o.template_dir = opt(run_backend.templates);
        o.backend = run_backend.get();
        ss_run_result r{};
        if (ss_run_experiment(c.ctx, &o, &r) != SS_OK) return report_failure(c, "run");
        std::printf("%zu session(s), %zu failed; manifest at %s/manifest.json\n", r.sessions, r.failures,
                    out.c_str());
        return r.exit_code;
    }
    if (*code) {
        ss_code_options o;
        ss_code_options_init(&o);
        o.corpus = code_in.c_str();
        o.out = code_out.c_str();
        o.coder = coder.c_str();
        o.config_file = opt(code_backend.config);
        o.template_dir = opt(code_backend.templates);
        o.backend = code_backend.get();
        ss_code_result r{};
        if (ss_code_corpus(c.ctx, &o, &r) != SS_OK) return report_failure(c, "code");
        std::printf("%zu utterance(s) coded, %zu failed\n", r.items, r.failures);
        return r.exit_code;
    }
    if (*kappa) {
        ss_kappa_result r{};
        if (ss_kappa_files(c.ctx, kappa_a.c_str(), kappa_b.c_str(), fraction, kappa_seed, opt(kappa_out), &r) != SS_OK)
            return report_failure(c, "kappa");
        std::fputs(r.report, stdout);
        ss_string_free(r.report);
        return 0;
    }
    if (*analyze) {
        if (summary.empty() && (corpus.empty() || codes.empty())) {
            std::fprintf(stderr, "scaffoldsim analyze: give --codes and --corpus, or --summary\n");
            return 1;
        }
        std::vector<const char*> paths;
        for (const auto& p : codes) paths.push_back(p.c_str());
        ss_analyze_options o{};
        o.codes = paths.data();
        o.n_codes = paths.size();
        o.corpus = opt(corpus);
        o.summary = opt(summary);
        o.agreement_a = agreement.size() == 2 ? agreement[0].c_str() : nullptr;
        o.agreement_b = agreement.size() == 2 ? agreement[1].c_str() : nullptr;
        o.out = analyze_out.c_str();
        ss_analyze_result r{};
        if (ss_analyze(c.ctx, &o, &r) != SS_OK) return report_failure(c, "analyze");
        std::printf("report written to %s", analyze_out.c_str());
        if (r.warnings) std::printf(" with %zu warning(s)", r.warnings);
        std::printf("\n");
        return r.exit_code;
    }
    if (*templates) {
        if (ss_write_templates(c.ctx, templates_out.c_str()) != SS_OK) return report_failure(c, "templates");
        return 0;
    }
    if (*validate) {
        char* text = nullptr;
        if (ss_validate_tasks(c.ctx, validate_tasks.c_str(), &text) != SS_OK) return report_failure(c, "validate");
        std::fputs(text, stdout);
        ss_string_free(text);
        return 0;
    }
    return 1;
}
