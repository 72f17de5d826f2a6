#include "scaffoldsim/orchestrator.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <thread>

#include "scaffoldsim/error.hpp"
#include "scaffoldsim/rng.hpp"

namespace scaffoldsim {

void SessionConfig::validate() const {
    if (max_rounds < 1) fail(ErrorKind::invalid_argument, "max_rounds must be >= 1");
    length.validate();
}

const char* to_string(Phase phase) noexcept {
    switch (phase) {
        case Phase::initiation: return "initiation";
        case Phase::discussion: return "discussion";
        case Phase::conclusion: return "conclusion";
        case Phase::done: return "done";
    }
    return "done";
}

namespace {

void take_warnings(SessionState& state, std::vector<std::string>& w, const std::string& where) {
    for (auto& msg : w) state.warnings.push_back(where + ": " + msg);
    w.clear();
}

std::string latest_teacher(const std::vector<Utterance>& history) {
    for (auto it = history.rbegin(); it != history.rend(); ++it)
        if (it->speaker_kind == SpeakerKind::teacher) return it->content;
    return {};
}

}  // namespace

SessionState start_session(const AgentContext& ctx) {
    SessionState s;
    for (std::size_t i = 0; i < ctx.task.scoring_criteria.size(); ++i) s.remaining.insert(static_cast<int>(i));
    auto init = teacher_initiate(ctx);
    take_warnings(s, init.warnings, "round 0");
    s.history.push_back(std::move(init.utterance));
    s.order = std::move(init.order);
    for (int id : s.order) s.silent_streak[id] = 0;
    s.phase = Phase::discussion;
    return s;
}

void apply_directive(SessionState& state, const TeacherDirective& d, int max_rounds) {
    if (state.phase != Phase::discussion)
        fail(ErrorKind::protocol, std::string("cannot apply a directive in phase ") + to_string(state.phase));
    for (int i : d.covered_now) {
        if (!state.remaining.count(i))
            fail(ErrorKind::protocol, "directive covers point " + std::to_string(i) + " which is not remaining");
        state.remaining.erase(i);
    }
    {
        std::vector<int> a = d.next_order, b = state.order;
        std::sort(a.begin(), a.end());
        std::sort(b.begin(), b.end());
        if (a != b) fail(ErrorKind::protocol, "next speaking order is not a permutation of the students");
    }
    state.order = d.next_order;

    std::set<int> cumulative = state.coverage_log.empty() ? std::set<int>{} : state.coverage_log.back();
    cumulative.insert(d.covered_now.begin(), d.covered_now.end());
    state.coverage_log.push_back(std::move(cumulative));

    if (state.remaining.empty() || state.round >= max_rounds) state.phase = Phase::conclusion;
}

void step_round(SessionState& state, const AgentContext& ctx, bool balance_monitoring) {
    if (state.phase != Phase::discussion)
        fail(ErrorKind::protocol, std::string("step_round requires the discussion phase, not ") +
                                      to_string(state.phase));
    const int round = ++state.round;
    const std::string where = "round " + std::to_string(round);
    const std::string instruction = latest_teacher(state.history);
    const bool final_round = round == ctx.max_rounds || state.remaining.size() == 1;

    int spoken = 0;
    for (int id : state.order) {
        const StudentIdentity* student = ctx.roster.find_student(id);
        if (!student) fail(ErrorKind::protocol, "speaking order names unknown student " + std::to_string(id));

        TurnInfo turn{round, spoken, state.remaining, instruction};
        std::optional<Reflection> reflection;
        if (ctx.condition == Condition::deep_think) reflection = student_think(ctx, state.history, *student, turn);

        ActionContext actx;
        actx.round = round;
        actx.final_round = final_round;
        actx.previous_action = state.last_action;
        actx.has_new_material = !state.remaining.empty();
        actx.seq = static_cast<int>(state.history.size());
        const StudentAction action = student_choose_action(ctx, *student, actx);
        if (action.kind == ActionKind::silent) {
            ++state.silent_streak[id];
            continue;
        }
        auto speech = student_speak(ctx, state.history, *student, action,
                                    reflection ? &*reflection : nullptr, turn);
        take_warnings(state, speech.warnings, where);
        state.history.push_back(std::move(speech.utterance));
        state.silent_streak[id] = 0;
        state.last_action = action.kind;
        ++spoken;
    }

    std::vector<int> quiet;
    if (balance_monitoring)
        for (int id : state.order)
            if (state.silent_streak[id] >= 2) quiet.push_back(id);

    auto directive = teacher_assess(ctx, state.history, round, state.remaining, state.order, quiet);
    take_warnings(state, directive.warnings, where);

    Utterance u;
    u.session_id = ctx.session_id;
    u.round = round;
    u.seq = static_cast<int>(state.history.size());
    u.speaker_id = ctx.roster.teacher.id;
    u.speaker_kind = SpeakerKind::teacher;
    u.condition = ctx.condition;
    u.content = directive.comment;
    u.declared_behavior = to_string(directive.action);
    state.history.push_back(std::move(u));

    apply_directive(state, directive, ctx.max_rounds);
}

void finish_session(SessionState& state, const AgentContext& ctx) {
    if (state.phase != Phase::conclusion)
        fail(ErrorKind::protocol, std::string("conclusion requested in phase ") + to_string(state.phase));
    auto speech = teacher_conclude(ctx, state.history, state.remaining, state.round);
    take_warnings(state, speech.warnings, "conclusion");
    state.history.push_back(std::move(speech.utterance));
    state.phase = Phase::done;
}

SessionRun run_session(const PoetryTask& task, const Roster& roster, const SessionConfig& config, Backend& backend,
                       const std::string& session_id, const PromptLibrary& prompts) {
    config.validate();
    validate_roster(roster);
    if (auto diags = validate_task(task); !diags.empty())
        fail(ErrorKind::invalid_argument, "task " + std::to_string(task.task_id) + ": " + diags.front().message);

    const std::string id = session_id.empty()
                               ? "t" + std::to_string(task.task_id) + "-" + to_string(config.condition)
                               : session_id;
    AgentContext ctx{task,  roster,      config.condition,  config.length,       prompts,
                     backend, id, config.seed, config.max_rounds, config.allow_silence};

    SessionRun run;
    SessionTranscript& t = run.transcript;
    t.session_id = id;
    t.task_id = task.task_id;
    t.condition = config.condition;
    t.roster = roster;

    SessionState state;
    try {
        state = start_session(ctx);
        while (state.phase == Phase::discussion) step_round(state, ctx, config.balance_monitoring);
        finish_session(state, ctx);
        t.termination = state.remaining.empty() ? Termination::all_points_covered : Termination::round_cap;
        t.status = SessionStatus::complete;
    } catch (const std::exception& e) {
        t.termination = Termination::aborted;
        t.status = SessionStatus::invalid;
        t.error = e.what();
    }
    t.utterances = std::move(state.history);
    t.coverage_log = std::move(state.coverage_log);
    run.warnings = std::move(state.warnings);
    return run;
}

std::uint64_t derive_session_seed(std::uint64_t seed, int task_id, Condition condition, int replicate) noexcept {
    std::uint64_t h = hash_combine(seed, static_cast<std::uint64_t>(static_cast<std::int64_t>(task_id)));
    h = hash_combine(h, fnv1a64(to_string(condition)));
    return hash_combine(h, static_cast<std::uint64_t>(replicate));
}

std::string make_session_id(int task_id, Condition condition, int replicate) {
    return "t" + std::to_string(task_id) + "-" + to_string(condition) + "-r" + std::to_string(replicate);
}

std::size_t ExperimentResult::failures() const noexcept {
    return static_cast<std::size_t>(std::count_if(records.begin(), records.end(), [](const SessionRecord& r) {
        return r.status != SessionStatus::complete;
    }));
}

ExperimentResult run_experiment(const std::vector<PoetryTask>& tasks, const ExperimentConfig& config,
                                Backend& backend, const PromptLibrary& prompts) {
    if (tasks.empty()) fail(ErrorKind::invalid_argument, "task set is empty");
    if (config.replicates < 0) fail(ErrorKind::invalid_argument, "replicates must be >= 0");
    if (config.parallel < 1) fail(ErrorKind::invalid_argument, "parallel must be >= 1");
    if (config.conditions.empty()) fail(ErrorKind::invalid_argument, "no conditions selected");
    config.session.validate();
    {
        std::set<int> ids;
        for (const auto& t : tasks)
            if (!ids.insert(t.task_id).second)
                fail(ErrorKind::invalid_argument, "duplicate task_id " + std::to_string(t.task_id));
    }

    struct Job {
        const PoetryTask* task;
        Condition condition;
        int replicate;
    };
    std::vector<Job> jobs;
    for (const auto& task : tasks)
        for (Condition c : config.conditions)
            for (int r = 0; r < config.replicates; ++r) jobs.push_back({&task, c, r});

    ExperimentResult result;
    result.transcripts.resize(jobs.size());
    result.records.resize(jobs.size());

    auto run_job = [&](std::size_t i) {
        const Job& job = jobs[i];
        SessionConfig sc = config.session;
        sc.condition = job.condition;
        sc.seed = derive_session_seed(config.session.seed, job.task->task_id, job.condition, job.replicate);
        SessionRecord& rec = result.records[i];
        rec.session_id = make_session_id(job.task->task_id, job.condition, job.replicate);
        rec.task_id = job.task->task_id;
        rec.condition = job.condition;
        rec.replicate = job.replicate;
        rec.seed = sc.seed;
        try {
            auto run = run_session(*job.task, default_roster(*job.task), sc, backend, rec.session_id, prompts);
            rec.status = run.transcript.status;
            rec.termination = run.transcript.termination;
            rec.error = run.transcript.error;
            rec.warnings = std::move(run.warnings);
            result.transcripts[i] = std::move(run.transcript);
        } catch (const std::exception& e) {
            rec.status = SessionStatus::invalid;
            rec.termination = Termination::aborted;
            rec.error = e.what();
            SessionTranscript& t = result.transcripts[i];
            t.session_id = rec.session_id;
            t.task_id = rec.task_id;
            t.condition = rec.condition;
            t.roster = default_roster(*job.task);
            t.termination = Termination::aborted;
            t.status = SessionStatus::invalid;
            t.error = rec.error;
        }
    };

    const std::size_t workers = std::min<std::size_t>(static_cast<std::size_t>(config.parallel), jobs.size());
    if (workers <= 1) {
        for (std::size_t i = 0; i < jobs.size(); ++i) run_job(i);
    } else {
        std::atomic<std::size_t> next{0};
        std::vector<std::thread> pool;
        for (std::size_t w = 0; w < workers; ++w)
            pool.emplace_back([&] {
                for (std::size_t i = next++; i < jobs.size(); i = next++) run_job(i);
            });
        for (auto& th : pool) th.join();
    }
    return result;
}

}  // namespace scaffoldsim
