#include "scaffoldsim/stats.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "scaffoldsim/error.hpp"

namespace scaffoldsim::stats {

GroupSummary summarize(std::span<const double> values) {
    if (values.empty()) fail(ErrorKind::invalid_argument, "cannot summarize an empty sample");
    GroupSummary g;
    g.n = values.size();
    g.mean = std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(g.n);
    if (g.n > 1) {
        double ss = 0.0;
        for (double v : values) ss += (v - g.mean) * (v - g.mean);
        g.sd = std::sqrt(ss / static_cast<double>(g.n - 1));
    }
    return g;
}

namespace {

// Modified Lentz evaluation of the continued fraction for I_x(a, b).
double beta_cf(double a, double b, double x) {
    constexpr double kTiny = 1e-300;
    constexpr double kEps = 1e-16;
    const double qab = a + b, qap = a + 1.0, qam = a - 1.0;
    double c = 1.0;
    double d = 1.0 - qab * x / qap;
    if (std::fabs(d) < kTiny) d = kTiny;
    d = 1.0 / d;
    double h = d;
    for (int m = 1; m <= 100000; ++m) {
        const double m2 = 2.0 * m;
        double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if (std::fabs(d) < kTiny) d = kTiny;
        c = 1.0 + aa / c;
        if (std::fabs(c) < kTiny) c = kTiny;
        d = 1.0 / d;
        h *= d * c;
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if (std::fabs(d) < kTiny) d = kTiny;
        c = 1.0 + aa / c;
        if (std::fabs(c) < kTiny) c = kTiny;
        d = 1.0 / d;
        const double del = d * c;
        h *= del;
        if (std::fabs(del - 1.0) < kEps) return h;
    }
    fail(ErrorKind::internal, "incomplete beta continued fraction did not converge");
}

}  // namespace

double incomplete_beta(double a, double b, double x) {
    if (!(a > 0.0) || !(b > 0.0)) fail(ErrorKind::invalid_argument, "incomplete beta needs a, b > 0");
    if (!(x >= 0.0 && x <= 1.0)) fail(ErrorKind::invalid_argument, "incomplete beta needs x in [0, 1]");
    if (x == 0.0) return 0.0;
    if (x == 1.0) return 1.0;
    const double log_front =
        std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) + a * std::log(x) + b * std::log1p(-x);
    const double front = std::exp(log_front);
    if (x < (a + 1.0) / (a + b + 2.0)) return front * beta_cf(a, b, x) / a;
    return 1.0 - front * beta_cf(b, a, 1.0 - x) / b;
}

double t_two_sided_p(double t, double df) {
    if (!(df > 0.0)) fail(ErrorKind::invalid_argument, "degrees of freedom must be positive");
    if (std::isnan(t)) fail(ErrorKind::invalid_argument, "t is NaN");
    if (std::isinf(t)) return 0.0;
    const double p = incomplete_beta(df / 2.0, 0.5, df / (df + t * t));
    return std::clamp(p, 0.0, 1.0);
}

double pooled_sd(const GroupSummary& a, const GroupSummary& b) {
    const double na = static_cast<double>(a.n), nb = static_cast<double>(b.n);
    return std::sqrt(((na - 1.0) * a.sd * a.sd + (nb - 1.0) * b.sd * b.sd) / (na + nb - 2.0));
}

TTest pooled_t_test(const GroupSummary& a, const GroupSummary& b) {
    if (a.n < 2 || b.n < 2) fail(ErrorKind::invalid_argument, "t-test needs at least two observations per group");
    if (a.sd < 0.0 || b.sd < 0.0) fail(ErrorKind::invalid_argument, "standard deviations must be non-negative");
    TTest r;
    r.df = static_cast<int>(a.n + b.n - 2);
    const double s = pooled_sd(a, b);
    const double diff = a.mean - b.mean;
    if (s == 0.0) {
        if (diff == 0.0) {
            r.defined = false;
            r.t = 0.0;
            r.p = 1.0;
        } else {
            r.infinite = true;
            r.t = diff > 0 ? std::numeric_limits<double>::infinity() : -std::numeric_limits<double>::infinity();
            r.p = 0.0;
        }
        return r;
    }
    r.t = diff / (s * std::sqrt(1.0 / static_cast<double>(a.n) + 1.0 / static_cast<double>(b.n)));
    r.p = t_two_sided_p(r.t, r.df);
    return r;
}

std::optional<double> cohens_d(const GroupSummary& a, const GroupSummary& b) {
    if (a.n < 2 || b.n < 2) fail(ErrorKind::invalid_argument, "effect size needs at least two observations per group");
    const double s = pooled_sd(a, b);
    if (s == 0.0) return std::nullopt;
    return std::fabs(a.mean - b.mean) / s;
}

std::vector<std::optional<double>> bh_adjust(const std::vector<std::optional<double>>& pvals) {
    std::vector<std::size_t> idx;
    for (std::size_t i = 0; i < pvals.size(); ++i) {
        if (!pvals[i]) continue;
        const double p = *pvals[i];
        if (!(p >= 0.0 && p <= 1.0)) fail(ErrorKind::invalid_argument, "p-value outside [0, 1]");
        idx.push_back(i);
    }
    std::vector<std::optional<double>> out(pvals.size());
    const std::size_t m = idx.size();
    if (m == 0) return out;
    std::stable_sort(idx.begin(), idx.end(), [&](std::size_t x, std::size_t y) { return *pvals[x] < *pvals[y]; });
    double running = 1.0;
    for (std::size_t rank = m; rank >= 1; --rank) {
        const std::size_t i = idx[rank - 1];
        const double raw = *pvals[i] * static_cast<double>(m) / static_cast<double>(rank);
        running = std::min(running, raw);
        out[i] = std::min(running, 1.0);
    }
    return out;
}

TestResult compare(std::string dimension, const GroupSummary& a, const GroupSummary& b) {
    TestResult r;
    r.dimension = std::move(dimension);
    r.a = a;
    r.b = b;
    r.test = pooled_t_test(a, b);
    r.d = cohens_d(a, b);
    return r;
}

void adjust_family(std::vector<TestResult>& rows) {
    std::vector<std::optional<double>> p;
    for (const auto& r : rows) p.push_back(r.test.defined ? std::optional<double>(r.test.p) : std::nullopt);
    auto adj = bh_adjust(p);
    for (std::size_t i = 0; i < rows.size(); ++i) rows[i].p_adj = adj[i];
}

// ---------------------------------------------------------------------------

std::vector<double> utterance_lengths(const std::vector<SessionTranscript>& corpus, Condition condition,
                                      text::LengthUnit unit) {
    std::vector<double> out;
    for (const auto& t : corpus) {
        if (t.condition != condition || t.status != SessionStatus::complete) continue;
        for (const auto& u : t.utterances)
            out.push_back(static_cast<double>(text::count_units(u.content, text::resolve_unit(unit, u.content))));
    }
    return out;
}

Descriptives descriptives(const std::vector<SessionTranscript>& corpus, Condition condition, text::LengthUnit unit) {
    Descriptives d;
    d.condition = condition;
    std::vector<double> all, student, teacher;
    for (const auto& t : corpus) {
        if (t.condition != condition || t.status != SessionStatus::complete) continue;
        ++d.sessions;
        for (const auto& u : t.utterances) {
            const double len =
                static_cast<double>(text::count_units(u.content, text::resolve_unit(unit, u.content)));
            all.push_back(len);
            (u.speaker_kind == SpeakerKind::teacher ? teacher : student).push_back(len);
        }
    }
    d.teacher_count = teacher.size();
    d.student_count = student.size();
    if (d.teacher_count > 0)
        d.ratio = static_cast<double>(d.student_count) / static_cast<double>(d.teacher_count);
    if (!all.empty()) d.length = summarize(all);
    if (!student.empty()) d.student_length = summarize(student);
    if (!teacher.empty()) d.teacher_length = summarize(teacher);
    return d;
}

std::string format_ratio(const Descriptives& d) {
    if (!d.ratio) return "undefined";
    char buf[64];
    std::snprintf(buf, sizeof buf, "1:%.1f", *d.ratio);
    return buf;
}

void CodedCorpus::add_codes(const std::vector<CodingDecision>& decisions) {
    for (const auto& d : decisions)
        if (!d.failed) codes[d.ref] = d;
}

const CodingDecision* CodedCorpus::find(const Utterance& u) const {
    auto it = codes.find(UtteranceRef{u.session_id, u.seq});
    return it == codes.end() ? nullptr : &it->second;
}

std::size_t CodedCorpus::uncoded() const {
    std::size_t n = 0;
    for (const auto& t : transcripts) {
        if (t.status != SessionStatus::complete) continue;
        for (const auto& u : t.utterances) {
            const CodingDecision* d = find(u);
            if (!d || !d->quality || !d->behavior) ++n;
        }
    }
    return n;
}

namespace {

bool carries(const CodingDecision& d, const Measure& m) {
    if (m.kind == Measure::Kind::behavior) return d.behavior && *d.behavior == m.name;
    if (!d.quality) return false;
    auto v = quality_value(*d.quality, m.name);
    return v && *v == 1;
}

}  // namespace

std::vector<int> task_ids(const CodedCorpus& corpus, Condition condition) {
    std::set<int> ids;
    for (const auto& t : corpus.transcripts)
        if (t.condition == condition && t.status == SessionStatus::complete) ids.insert(t.task_id);
    return {ids.begin(), ids.end()};
}

std::vector<double> per_task_totals(const CodedCorpus& corpus, const std::vector<int>& tasks, Condition condition,
                                    SpeakerKind kind, const Measure& measure) {
    std::map<int, double> totals;
    for (int id : tasks) totals[id] = 0.0;
    for (const auto& t : corpus.transcripts) {
        if (t.condition != condition || t.status != SessionStatus::complete) continue;
        auto it = totals.find(t.task_id);
        if (it == totals.end()) continue;
        for (const auto& u : t.utterances) {
            if (u.speaker_kind != kind) continue;
            if (const CodingDecision* d = corpus.find(u); d && carries(*d, measure)) it->second += 1.0;
        }
    }
    std::vector<double> out;
    for (int id : tasks) out.push_back(totals[id]);
    return out;
}

std::size_t corpus_count(const CodedCorpus& corpus, Condition condition, SpeakerKind kind, const Measure& measure) {
    std::size_t n = 0;
    for (const auto& t : corpus.transcripts) {
        if (t.condition != condition || t.status != SessionStatus::complete) continue;
        for (const auto& u : t.utterances)
            if (u.speaker_kind == kind)
                if (const CodingDecision* d = corpus.find(u); d && carries(*d, measure)) ++n;
    }
    return n;
}

const char* to_string(Family family) noexcept {
    switch (family) {
        case Family::student_quality: return "student_quality";
        case Family::teacher_quality: return "teacher_quality";
        case Family::student_behavior: return "student_behavior";
        case Family::teacher_behavior: return "teacher_behavior";
    }
    return "student_quality";
}

SpeakerKind speaker_of(Family family) noexcept {
    return family == Family::teacher_quality || family == Family::teacher_behavior ? SpeakerKind::teacher
                                                                                    : SpeakerKind::student;
}

std::vector<Measure> measures_of(Family family) {
    std::vector<Measure> out;
    switch (family) {
        case Family::student_quality:
            for (const char* d : kQualityDimensions) out.push_back({Measure::Kind::quality, d});
            break;
        case Family::teacher_quality:
            for (const char* d : kQualityDimensions)
                if (std::string_view(d) != "diversity") out.push_back({Measure::Kind::quality, d});
            break;
        case Family::student_behavior:
            for (const char* l : kStudentLabels) out.push_back({Measure::Kind::behavior, l});
            break;
        case Family::teacher_behavior:
            for (const char* l : kTeacherLabels) out.push_back({Measure::Kind::behavior, l});
            break;
    }
    return out;
}

std::vector<TestResult> compare_conditions(const CodedCorpus& corpus, Family family) {
    const auto ta = task_ids(corpus, Condition::deep_think);
    const auto tb = task_ids(corpus, Condition::direct_speak);
    if (ta != tb) fail(ErrorKind::validation, "conditions do not cover the same task set");
    if (ta.size() < 2) fail(ErrorKind::invalid_argument, "per-task comparison needs at least two tasks per condition");
    std::vector<TestResult> rows;
    for (const auto& m : measures_of(family)) {
        auto a = per_task_totals(corpus, ta, Condition::deep_think, speaker_of(family), m);
        auto b = per_task_totals(corpus, tb, Condition::direct_speak, speaker_of(family), m);
        rows.push_back(compare(m.name, summarize(a), summarize(b)));
    }
    adjust_family(rows);
    return rows;
}

long TransitionMatrix::total() const noexcept {
    long n = 0;
    for (const auto& row : counts)
        for (long c : row) n += c;
    return n;
}

std::vector<std::string> student_alphabet() { return {std::begin(kStudentLabels), std::end(kStudentLabels)}; }

TransitionMatrix transition_matrix(const std::vector<std::vector<std::string>>& sequences,
                                   const std::vector<std::string>& labels) {
    TransitionMatrix m;
    m.labels = labels;
    const std::size_t k = labels.size();
    m.counts.assign(k, std::vector<long>(k, 0));
    m.probs.assign(k, std::vector<double>(k, 0.0));
    auto index = [&](const std::string& l) {
        auto it = std::find(labels.begin(), labels.end(), l);
        if (it == labels.end()) fail(ErrorKind::invalid_argument, "label '" + l + "' is outside the alphabet");
        return static_cast<std::size_t>(it - labels.begin());
    };
    for (const auto& seq : sequences) {
        for (const auto& l : seq) index(l);
        for (std::size_t i = 1; i < seq.size(); ++i) ++m.counts[index(seq[i - 1])][index(seq[i])];
    }
    for (std::size_t i = 0; i < k; ++i) {
        const long row = std::accumulate(m.counts[i].begin(), m.counts[i].end(), 0L);
        if (row == 0) continue;
        for (std::size_t j = 0; j < k; ++j)
            m.probs[i][j] = static_cast<double>(m.counts[i][j]) / static_cast<double>(row);
    }
    return m;
}

std::vector<std::vector<std::string>> behavior_sequences(const CodedCorpus& corpus, Condition condition) {
    std::vector<std::vector<std::string>> out;
    for (const auto& t : corpus.transcripts) {
        if (t.condition != condition || t.status != SessionStatus::complete) continue;
        std::vector<std::string> seq;
        for (const auto& u : t.utterances) {
            if (u.speaker_kind != SpeakerKind::student) continue;
            if (const CodingDecision* d = corpus.find(u); d && d->behavior && is_student_label(*d->behavior))
                seq.push_back(*d->behavior);
        }
        out.push_back(std::move(seq));
    }
    return out;
}

const ProportionRow* ProportionTable::find(Role role) const noexcept {
    for (const auto& r : rows)
        if (r.role == role) return &r;
    return nullptr;
}

double ProportionTable::at(Role role, const std::string& label) const {
    const ProportionRow* r = find(role);
    if (!r) fail(ErrorKind::invalid_argument, std::string("no proportions for role ") + scaffoldsim::to_string(role));
    auto it = std::find(labels.begin(), labels.end(), label);
    if (it == labels.end()) fail(ErrorKind::invalid_argument, "unknown label '" + label + "'");
    return r->proportions[static_cast<std::size_t>(it - labels.begin())];
}

ProportionTable role_behavior_proportions(const CodedCorpus& corpus, Condition condition) {
    ProportionTable table;
    table.labels = student_alphabet();
    std::map<Role, std::vector<std::size_t>> counts;
    for (Role r : kAllRoles) counts[r].assign(table.labels.size(), 0);
    for (const auto& t : corpus.transcripts) {
        if (t.condition != condition || t.status != SessionStatus::complete) continue;
        for (const auto& u : t.utterances) {
            if (u.speaker_kind != SpeakerKind::student || !u.role) continue;
            const CodingDecision* d = corpus.find(u);
            if (!d || !d->behavior) continue;
            auto it = std::find(table.labels.begin(), table.labels.end(), *d->behavior);
            if (it != table.labels.end()) ++counts[*u.role][static_cast<std::size_t>(it - table.labels.begin())];
        }
    }
    for (Role r : kAllRoles) {
        const auto& c = counts[r];
        const std::size_t total = std::accumulate(c.begin(), c.end(), std::size_t{0});
        if (total == 0) {
            table.warnings.push_back(std::string("role ") + scaffoldsim::to_string(r) +
                                     " has no coded utterances; row omitted");
            continue;
        }
        ProportionRow row;
        row.role = r;
        row.total = total;
        for (std::size_t v : c) row.proportions.push_back(static_cast<double>(v) / static_cast<double>(total));
        table.rows.push_back(std::move(row));
    }
    return table;
}

}  // namespace scaffoldsim::stats
