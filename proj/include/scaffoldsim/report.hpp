#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "scaffoldsim/coding.hpp"
#include "scaffoldsim/stats.hpp"

namespace scaffoldsim::report {

/// Fixed-point rendering with `decimals` places; "inf"/"-inf" for infinities.
std::string fixed(double v, int decimals);

/// Heat map with preceding behavior on the vertical axis and subsequent behavior on the
/// horizontal one; darker cells mean higher probability. Byte-identical for equal input.
std::string render_heatmap(const stats::TransitionMatrix& matrix, std::string_view title = {});

/// Columns: dimension, mean_a, sd_a, mean_b, sd_b, t, p, p_adj, d, defined.
std::string results_csv(const std::vector<stats::TestResult>& rows);
std::string matrix_csv(const stats::TransitionMatrix& matrix, bool probabilities);
std::string proportions_csv(const stats::ProportionTable& table);

struct ConditionBlock {
    Condition condition = Condition::deep_think;
    stats::Descriptives descriptives;
    stats::TransitionMatrix transitions;
    stats::ProportionTable proportions;
};

struct Report {
    std::vector<ConditionBlock> conditions;
    /// Per-utterance length comparison (deep_think vs direct_speak), both conditions only.
    std::optional<stats::TestResult> length_test;
    std::map<stats::Family, std::vector<stats::TestResult>> tables;
    std::optional<AgreementSummary> agreement;
    std::vector<std::string> warnings;
    std::vector<std::string> notices;
};

/// Every number in the report comes from the stats layer; rendering only formats.
Report build_report(const stats::CodedCorpus& corpus, std::optional<AgreementSummary> agreement = std::nullopt);

std::string render_markdown(const Report& report);

/// report.md plus CSV and SVG artifacts under `dir`.
void write_report(const Report& report, const std::filesystem::path& dir);

std::string render_agreement(const AgreementSummary& summary);

// ---------------------------------------------------------------------------
// Summary-input mode: printed group summaries, t statistics or raw p-values instead of corpora.

struct SummaryRow {
    std::string dimension;
    std::optional<stats::GroupSummary> a;
    std::optional<stats::GroupSummary> b;
    std::optional<double> t;
    std::optional<int> df;
    std::optional<double> d;
    /// Absent for an undefined (N/A) row.
    std::optional<double> p;
    std::optional<double> p_adj;
};

struct SummaryTable {
    std::string name;
    std::vector<SummaryRow> rows;
};

/// Parses {"tables":[{"name":..., "rows":[{"dimension":..., "a":{n,mean,sd}, "b":{...}} |
/// {"dimension":..., "t":..., "df":...} | {"dimension":..., "p": number|null}]}]} and computes
/// t, p, d and BH-adjusted p per table.
std::vector<SummaryTable> analyze_summaries(std::string_view json);

std::string summary_csv(const SummaryTable& table);
std::string render_summary_markdown(const std::vector<SummaryTable>& tables);

}  // namespace scaffoldsim::report
