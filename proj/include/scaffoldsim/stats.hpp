#pragma once

#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "scaffoldsim/coding.hpp"
#include "scaffoldsim/core.hpp"
#include "scaffoldsim/text.hpp"

namespace scaffoldsim::stats {

struct GroupSummary {
    std::size_t n = 0;
    double mean = 0.0;
    /// Sample standard deviation (n - 1 denominator).
    double sd = 0.0;
};

/// Throws Error(invalid_argument) for an empty sample. A single value has sd 0.
GroupSummary summarize(std::span<const double> values);

/// Regularized incomplete beta I_x(a, b) by continued fraction; |error| well below 1e-10.
double incomplete_beta(double a, double b, double x);

/// Two-sided p of Student's t with `df` degrees of freedom: I_{df/(df+t^2)}(df/2, 1/2).
double t_two_sided_p(double t, double df);

struct TTest {
    double t = 0.0;
    int df = 0;
    double p = 1.0;
    /// False when both groups are constant with equal means (rendered N/A).
    bool defined = true;
    /// Pooled sd is zero but the means differ: t is reported as +/-inf and p as 0.
    bool infinite = false;
};

/// Pooled-variance Student's t. Throws Error(invalid_argument) unless both n >= 2.
TTest pooled_t_test(const GroupSummary& a, const GroupSummary& b);

double pooled_sd(const GroupSummary& a, const GroupSummary& b);

/// |mean_a - mean_b| / pooled sd; nullopt when the pooled sd is zero.
std::optional<double> cohens_d(const GroupSummary& a, const GroupSummary& b);

/// Benjamini-Hochberg step-up. Undefined entries pass through and do not count toward m.
/// Throws Error(invalid_argument) for a p outside [0, 1].
std::vector<std::optional<double>> bh_adjust(const std::vector<std::optional<double>>& pvals);

struct TestResult {
    std::string dimension;
    GroupSummary a;
    GroupSummary b;
    TTest test;
    std::optional<double> d;
    std::optional<double> p_adj;
};

TestResult compare(std::string dimension, const GroupSummary& a, const GroupSummary& b);

/// Fills p_adj over the defined rows of one table family.
void adjust_family(std::vector<TestResult>& rows);

// ---------------------------------------------------------------------------
// Corpus-level measures

struct Descriptives {
    Condition condition = Condition::deep_think;
    std::size_t sessions = 0;
    std::size_t teacher_count = 0;
    std::size_t student_count = 0;
    /// student_count / teacher_count; absent with zero teacher utterances.
    std::optional<double> ratio;
    GroupSummary length;
    GroupSummary student_length;
    GroupSummary teacher_length;
};

Descriptives descriptives(const std::vector<SessionTranscript>& corpus, Condition condition,
                          text::LengthUnit unit = text::LengthUnit::automatic);

/// "1:3.9", or "undefined" when the ratio is absent.
std::string format_ratio(const Descriptives& d);

/// Utterance lengths of every utterance in `condition`, in corpus order.
std::vector<double> utterance_lengths(const std::vector<SessionTranscript>& corpus, Condition condition,
                                      text::LengthUnit unit = text::LengthUnit::automatic);

struct CodedCorpus {
    std::vector<SessionTranscript> transcripts;
    std::map<UtteranceRef, CodingDecision> codes;

    /// Adds one coder's decisions; failed decisions are ignored.
    void add_codes(const std::vector<CodingDecision>& decisions);
    const CodingDecision* find(const Utterance& u) const;
    /// Utterances of complete sessions that lack usable codes.
    std::size_t uncoded() const;
};

/// What a per-task count tallies: a quality dimension equal to 1 or a behavior label.
struct Measure {
    enum class Kind { quality, behavior } kind = Kind::quality;
    std::string name;
};

/// Task ids present in `condition` among complete sessions, ascending.
std::vector<int> task_ids(const CodedCorpus& corpus, Condition condition);

/// One count per task id (summed over replicates) of `kind` utterances in `condition`
/// carrying the measure.
std::vector<double> per_task_totals(const CodedCorpus& corpus, const std::vector<int>& tasks,
                                    Condition condition, SpeakerKind kind, const Measure& measure);

/// Corpus-wide count of the same measure.
std::size_t corpus_count(const CodedCorpus& corpus, Condition condition, SpeakerKind kind, const Measure& measure);

enum class Family { student_quality, teacher_quality, student_behavior, teacher_behavior };

const char* to_string(Family family) noexcept;
SpeakerKind speaker_of(Family family) noexcept;
std::vector<Measure> measures_of(Family family);

/// Per-task comparison of deep_think (a) against direct_speak (b) over every measure of the
/// family, BH-adjusted within the family. Throws Error(validation) when the conditions do not
/// cover the same tasks.
std::vector<TestResult> compare_conditions(const CodedCorpus& corpus, Family family);

struct TransitionMatrix {
    std::vector<std::string> labels;
    std::vector<std::vector<long>> counts;
    std::vector<std::vector<double>> probs;

    long total() const noexcept;
};

std::vector<std::string> student_alphabet();

/// Adjacent-pair counts within each sequence, row-normalized. Labels outside the alphabet
/// throw Error(invalid_argument).
TransitionMatrix transition_matrix(const std::vector<std::vector<std::string>>& sequences,
                                   const std::vector<std::string>& labels = student_alphabet());

/// Chronological student behavior labels per complete session of `condition`.
std::vector<std::vector<std::string>> behavior_sequences(const CodedCorpus& corpus, Condition condition);

struct ProportionRow {
    Role role = Role::leader;
    std::size_t total = 0;
    std::vector<double> proportions;
};

struct ProportionTable {
    std::vector<std::string> labels;
    std::vector<ProportionRow> rows;
    std::vector<std::string> warnings;

    const ProportionRow* find(Role role) const noexcept;
    double at(Role role, const std::string& label) const;
};

ProportionTable role_behavior_proportions(const CodedCorpus& corpus, Condition condition);

}  // namespace scaffoldsim::stats
