#include "scaffoldsim/report.hpp"

#include <algorithm>
#include <cmath>

#include <json.hpp>

#include "scaffoldsim/csv.hpp"
#include "scaffoldsim/error.hpp"

namespace scaffoldsim::report {

std::string fixed(double v, int decimals) {
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    if (std::isnan(v)) return "nan";
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", decimals, v);
    std::string s = buf;
    // Avoid "-0.000".
    if (s[0] == '-' && s.find_first_not_of("-0.") == std::string::npos) s.erase(0, 1);
    return s;
}

namespace {

std::string family_title(stats::Family f) {
    switch (f) {
        case stats::Family::student_quality: return "Discourse quality of student agents";
        case stats::Family::teacher_quality: return "Discourse quality of the teacher agent";
        case stats::Family::student_behavior: return "Discourse behavior of student agents";
        case stats::Family::teacher_behavior: return "Discourse behavior of the teacher agent";
    }
    return "";
}

std::string dimension_label(const std::string& d) {
    if (const char* name = label_name(d); *name) return d + " " + name;
    return d;
}

}  // namespace

// ---------------------------------------------------------------------------
// Heat map

std::string render_heatmap(const stats::TransitionMatrix& m, std::string_view title) {
    const int cell = 48, left = 96, top = 72, k = static_cast<int>(m.labels.size());
    const int width = left + k * cell + 24, height = top + k * cell + 56;
    char buf[512];
    std::string out;
    std::snprintf(buf, sizeof buf,
                  "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"%d\" height=\"%d\" viewBox=\"0 0 %d %d\" "
                  "font-family=\"sans-serif\" font-size=\"12\">\n",
                  width, height, width, height);
    out += buf;
    out += "<rect x=\"0\" y=\"0\" width=\"" + std::to_string(width) + "\" height=\"" + std::to_string(height) +
           "\" fill=\"#ffffff\"/>\n";
    if (!title.empty()) {
        std::snprintf(buf, sizeof buf, "<text x=\"%d\" y=\"20\" text-anchor=\"middle\" font-size=\"14\">", width / 2);
        out += buf;
        for (char c : title) {
            if (c == '<') out += "&lt;";
            else if (c == '&') out += "&amp;";
            else out += c;
        }
        out += "</text>\n";
    }
    std::snprintf(buf, sizeof buf, "<text x=\"%d\" y=\"44\" text-anchor=\"middle\">subsequent behavior</text>\n",
                  left + k * cell / 2);
    out += buf;
    std::snprintf(buf, sizeof buf,
                  "<text x=\"16\" y=\"%d\" text-anchor=\"middle\" transform=\"rotate(-90 16 %d)\">preceding "
                  "behavior</text>\n",
                  top + k * cell / 2, top + k * cell / 2);
    out += buf;
    for (int j = 0; j < k; ++j) {
        std::snprintf(buf, sizeof buf, "<text x=\"%d\" y=\"%d\" text-anchor=\"middle\">%s</text>\n",
                      left + j * cell + cell / 2, top - 8, m.labels[static_cast<std::size_t>(j)].c_str());
        out += buf;
    }
    for (int i = 0; i < k; ++i) {
        std::snprintf(buf, sizeof buf, "<text x=\"%d\" y=\"%d\" text-anchor=\"end\">%s</text>\n", left - 8,
                      top + i * cell + cell / 2 + 4, m.labels[static_cast<std::size_t>(i)].c_str());
        out += buf;
        for (int j = 0; j < k; ++j) {
            const double p = std::clamp(m.probs[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)], 0.0, 1.0);
            // White at 0, dark blue (#08306b) at 1.
            const int r = static_cast<int>(std::lround(255.0 + (8.0 - 255.0) * p));
            const int g = static_cast<int>(std::lround(255.0 + (48.0 - 255.0) * p));
            const int b = static_cast<int>(std::lround(255.0 + (107.0 - 255.0) * p));
            std::snprintf(buf, sizeof buf,
                          "<rect x=\"%d\" y=\"%d\" width=\"%d\" height=\"%d\" fill=\"#%02x%02x%02x\" "
                          "stroke=\"#cccccc\"/>\n",
                          left + j * cell, top + i * cell, cell, cell, r, g, b);
            out += buf;
            std::snprintf(buf, sizeof buf,
                          "<text x=\"%d\" y=\"%d\" text-anchor=\"middle\" font-size=\"10\" fill=\"%s\">%.2f</text>\n",
                          left + j * cell + cell / 2, top + i * cell + cell / 2 + 4, p > 0.5 ? "#ffffff" : "#000000",
                          p);
            out += buf;
        }
    }
    out += "</svg>\n";
    return out;
}

// ---------------------------------------------------------------------------
// CSV

std::string results_csv(const std::vector<stats::TestResult>& rows) {
    std::string out = csv::format_row({"dimension", "mean_a", "sd_a", "mean_b", "sd_b", "t", "p", "p_adj", "d", "defined"});
    for (const auto& r : rows) {
        const bool def = r.test.defined;
        out += csv::format_row({r.dimension, fixed(r.a.mean, 6), fixed(r.a.sd, 6), fixed(r.b.mean, 6),
                                fixed(r.b.sd, 6), def ? fixed(r.test.t, 6) : "", def ? fixed(r.test.p, 6) : "",
                                r.p_adj ? fixed(*r.p_adj, 6) : "", r.d ? fixed(*r.d, 6) : "",
                                def ? "true" : "false"});
    }
    return out;
}

std::string matrix_csv(const stats::TransitionMatrix& m, bool probabilities) {
    std::vector<std::string> header{"from"};
    header.insert(header.end(), m.labels.begin(), m.labels.end());
    std::string out = csv::format_row(header);
    for (std::size_t i = 0; i < m.labels.size(); ++i) {
        std::vector<std::string> row{m.labels[i]};
        for (std::size_t j = 0; j < m.labels.size(); ++j)
            row.push_back(probabilities ? fixed(m.probs[i][j], 6) : std::to_string(m.counts[i][j]));
        out += csv::format_row(row);
    }
    return out;
}

std::string proportions_csv(const stats::ProportionTable& t) {
    std::vector<std::string> header{"role", "n"};
    header.insert(header.end(), t.labels.begin(), t.labels.end());
    std::string out = csv::format_row(header);
    for (const auto& r : t.rows) {
        std::vector<std::string> row{to_string(r.role), std::to_string(r.total)};
        for (double p : r.proportions) row.push_back(fixed(p, 6));
        out += csv::format_row(row);
    }
    return out;
}

// ---------------------------------------------------------------------------
// Report assembly

Report build_report(const stats::CodedCorpus& corpus, std::optional<AgreementSummary> agreement) {
    Report r;
    r.agreement = std::move(agreement);

    std::size_t invalid = 0;
    for (const auto& t : corpus.transcripts)
        if (t.status != SessionStatus::complete) ++invalid;
    if (invalid)
        r.warnings.push_back(std::to_string(invalid) + " invalid session(s) excluded from every statistic");
    if (const std::size_t gaps = corpus.uncoded())
        r.warnings.push_back(std::to_string(gaps) +
                             " utterance(s) lack quality or behavior codes; statistics use the coded subset only");

    for (Condition c : kAllConditions) {
        if (stats::task_ids(corpus, c).empty()) continue;
        ConditionBlock b;
        b.condition = c;
        b.descriptives = stats::descriptives(corpus.transcripts, c);
        b.transitions = stats::transition_matrix(stats::behavior_sequences(corpus, c));
        b.proportions = stats::role_behavior_proportions(corpus, c);
        for (const auto& w : b.proportions.warnings) r.warnings.push_back(std::string(to_string(c)) + ": " + w);
        r.conditions.push_back(std::move(b));
    }
    if (r.conditions.empty()) {
        r.notices.push_back("no complete sessions in the corpus");
        return r;
    }
    if (r.conditions.size() < 2) {
        r.notices.push_back("only one condition present; comparison tables skipped");
        return r;
    }

    auto la = stats::utterance_lengths(corpus.transcripts, Condition::deep_think);
    auto lb = stats::utterance_lengths(corpus.transcripts, Condition::direct_speak);
    if (la.size() >= 2 && lb.size() >= 2)
        r.length_test = stats::compare("utterance_length", stats::summarize(la), stats::summarize(lb));

    try {
        for (auto f : {stats::Family::student_quality, stats::Family::teacher_quality, stats::Family::student_behavior,
                       stats::Family::teacher_behavior})
            r.tables[f] = stats::compare_conditions(corpus, f);
    } catch (const Error& e) {
        r.tables.clear();
        r.notices.push_back(std::string("comparison tables skipped: ") + e.what());
    }
    return r;
}

namespace {

std::string md_results(const std::vector<stats::TestResult>& rows) {
    std::string out = "| Dimension | deep_think M (SD) | direct_speak M (SD) | t | p | adj. p | d |\n"
                      "|---|---|---|---|---|---|---|\n";
    for (const auto& r : rows) {
        const bool def = r.test.defined;
        out += "| " + dimension_label(r.dimension) + " | " + fixed(r.a.mean, 3) + " (" + fixed(r.a.sd, 3) + ") | " +
               fixed(r.b.mean, 3) + " (" + fixed(r.b.sd, 3) + ") | " + (def ? fixed(r.test.t, 3) : "N/A") + " | " +
               (def ? fixed(r.test.p, 3) : "N/A") + " | " + (r.p_adj ? fixed(*r.p_adj, 3) : "N/A") + " | " +
               (r.d ? fixed(*r.d, 3) : "N/A") + " |\n";
    }
    return out;
}

std::string md_proportions(const stats::ProportionTable& t) {
    std::string out = "| Role | n |";
    for (const auto& l : t.labels) out += " " + l + " |";
    out += "\n|---|---|";
    for (std::size_t i = 0; i < t.labels.size(); ++i) out += "---|";
    out += "\n";
    for (const auto& r : t.rows) {
        out += std::string("| ") + to_string(r.role) + " | " + std::to_string(r.total) + " |";
        for (double p : r.proportions) out += " " + fixed(100.0 * p, 1) + "% |";
        out += "\n";
    }
    return out;
}

}  // namespace

std::string render_agreement(const AgreementSummary& s) {
    std::string out = "Items compared: " + std::to_string(s.overlap) + " (only in A: " + std::to_string(s.only_a) +
                      ", only in B: " + std::to_string(s.only_b) + ")\n\n";
    out += "| Scheme | n | p_o | p_e | kappa |\n|---|---|---|---|---|\n";
    for (const auto& r : s.quality)
        out += "| " + r.dimension + " | " + std::to_string(r.n) + " | " + fixed(r.p_o, 3) + " | " + fixed(r.p_e, 3) +
               " | " + fixed(r.kappa, 3) + " |\n";
    out += "| quality (mean of dimensions) | | | | " + fixed(s.quality_mean, 3) + " |\n";
    for (const auto& r : s.behavior)
        out += "| " + r.dimension + " | " + std::to_string(r.n) + " | " + fixed(r.p_o, 3) + " | " + fixed(r.p_e, 3) +
               " | " + fixed(r.kappa, 3) + " |\n";
    return out;
}

std::string render_markdown(const Report& r) {
    std::string out = "# Simulation analysis report\n\n";
    if (!r.warnings.empty()) {
        out += "## Warnings\n\n";
        for (const auto& w : r.warnings) out += "> **Warning:** " + w + "\n>\n";
        out += "\n";
    }
    for (const auto& n : r.notices) out += "_Notice: " + n + "._\n\n";

    out += "## Descriptives\n\n"
           "| Condition | Sessions | Teacher utterances | Student utterances | Ratio | Length M (SD) |\n"
           "|---|---|---|---|---|---|\n";
    for (const auto& b : r.conditions) {
        const auto& d = b.descriptives;
        out += std::string("| ") + to_string(b.condition) + " | " + std::to_string(d.sessions) + " | " +
               std::to_string(d.teacher_count) + " | " + std::to_string(d.student_count) + " | " +
               stats::format_ratio(d) + " | " + fixed(d.length.mean, 2) + " (" + fixed(d.length.sd, 2) + ") |\n";
    }
    out += "\n";

    if (r.length_test) {
        const auto& t = *r.length_test;
        out += "## Utterance length\n\n"
               "| Condition | N | Mean | SD |\n|---|---|---|---|\n"
               "| deep_think | " + std::to_string(t.a.n) + " | " + fixed(t.a.mean, 2) + " | " + fixed(t.a.sd, 2) +
               " |\n| direct_speak | " + std::to_string(t.b.n) + " | " + fixed(t.b.mean, 2) + " | " +
               fixed(t.b.sd, 2) + " |\n\n";
        out += "t(" + std::to_string(t.test.df) + ") = " + (t.test.defined ? fixed(t.test.t, 4) : "N/A") +
               ", p = " + (t.test.defined ? fixed(t.test.p, 3) : "N/A") +
               ", d = " + (t.d ? fixed(*t.d, 4) : "N/A") + "\n\n";
    }

    for (const auto& [family, rows] : r.tables) {
        out += "## " + family_title(family) + "\n\n";
        out += "Per-task totals (n = " + (rows.empty() ? std::string("0") : std::to_string(rows.front().a.n)) +
               " tasks per condition); p adjusted within this table by Benjamini-Hochberg.\n\n";
        out += md_results(rows) + "\nCSV: `" + std::string(stats::to_string(family)) + ".csv`\n\n";
    }

    if (!r.conditions.empty()) {
        out += "## Student behavior transitions\n\n";
        for (const auto& b : r.conditions) {
            const std::string c = to_string(b.condition);
            out += "- " + c + ": " + std::to_string(b.transitions.total()) + " transitions; heat map `transitions_" +
                   c + ".svg`, probabilities `transitions_" + c + ".csv`, counts `transition_counts_" + c + ".csv`\n";
        }
        out += "\n## Role-behavior proportions\n\n";
        for (const auto& b : r.conditions) {
            out += "### " + std::string(to_string(b.condition)) + "\n\n" + md_proportions(b.proportions) + "\n";
        }
    }

    if (r.agreement) out += "## Coding agreement\n\n" + render_agreement(*r.agreement) + "\n";
    return out;
}

void write_report(const Report& r, const std::filesystem::path& dir) {
    write_text_file(dir / "report.md", render_markdown(r));
    for (const auto& [family, rows] : r.tables)
        write_text_file(dir / (std::string(stats::to_string(family)) + ".csv"), results_csv(rows));
    if (r.length_test) write_text_file(dir / "utterance_length.csv", results_csv({*r.length_test}));
    {
        std::string d = csv::format_row(
            {"condition", "sessions", "teacher_utterances", "student_utterances", "ratio", "length_mean", "length_sd"});
        for (const auto& b : r.conditions) {
            const auto& x = b.descriptives;
            d += csv::format_row({to_string(b.condition), std::to_string(x.sessions), std::to_string(x.teacher_count),
                                  std::to_string(x.student_count), stats::format_ratio(x), fixed(x.length.mean, 6),
                                  fixed(x.length.sd, 6)});
        }
        write_text_file(dir / "descriptives.csv", d);
    }
    for (const auto& b : r.conditions) {
        const std::string c = to_string(b.condition);
        write_text_file(dir / ("transitions_" + c + ".csv"), matrix_csv(b.transitions, true));
        write_text_file(dir / ("transition_counts_" + c + ".csv"), matrix_csv(b.transitions, false));
        write_text_file(dir / ("transitions_" + c + ".svg"),
                        render_heatmap(b.transitions, "Student behavior transitions (" + c + ")"));
        write_text_file(dir / ("role_proportions_" + c + ".csv"), proportions_csv(b.proportions));
    }
    if (r.agreement) {
        std::string k = csv::format_row({"scheme", "n", "p_o", "p_e", "kappa"});
        for (const auto& x : r.agreement->quality)
            k += csv::format_row({x.dimension, std::to_string(x.n), fixed(x.p_o, 6), fixed(x.p_e, 6), fixed(x.kappa, 6)});
        k += csv::format_row({"quality_mean", "", "", "", fixed(r.agreement->quality_mean, 6)});
        for (const auto& x : r.agreement->behavior)
            k += csv::format_row({x.dimension, std::to_string(x.n), fixed(x.p_o, 6), fixed(x.p_e, 6), fixed(x.kappa, 6)});
        write_text_file(dir / "agreement.csv", k);
    }
}

// ---------------------------------------------------------------------------
// Summary-input mode

namespace {

stats::GroupSummary group_from_json(const nlohmann::json& j, const std::string& where) {
    if (!j.is_object() || !j.contains("n") || !j.contains("mean") || !j.contains("sd"))
        fail(ErrorKind::format, where + ": group summary needs n, mean and sd");
    stats::GroupSummary g;
    g.n = j.at("n").get<std::size_t>();
    g.mean = j.at("mean").get<double>();
    g.sd = j.at("sd").get<double>();
    return g;
}

}  // namespace

std::vector<SummaryTable> analyze_summaries(std::string_view json) try {
    auto doc = nlohmann::json::parse(json);
    if (!doc.is_object() || !doc.contains("tables") || !doc["tables"].is_array())
        fail(ErrorKind::format, "summary input must be an object with a \"tables\" array");
    std::vector<SummaryTable> out;
    for (const auto& jt : doc["tables"]) {
        SummaryTable table;
        table.name = jt.value("name", "table" + std::to_string(out.size() + 1));
        if (!jt.contains("rows") || !jt["rows"].is_array())
            fail(ErrorKind::format, "table '" + table.name + "' has no rows array");
        for (const auto& jr : jt["rows"]) {
            SummaryRow row;
            row.dimension = jr.value("dimension", "row" + std::to_string(table.rows.size() + 1));
            const std::string where = table.name + "/" + row.dimension;
            if (jr.contains("a") || jr.contains("b")) {
                row.a = group_from_json(jr.value("a", nlohmann::json()), where);
                row.b = group_from_json(jr.value("b", nlohmann::json()), where);
                auto t = stats::pooled_t_test(*row.a, *row.b);
                row.df = t.df;
                row.d = stats::cohens_d(*row.a, *row.b);
                if (t.defined) {
                    row.t = t.t;
                    row.p = t.p;
                }
            } else if (jr.contains("t")) {
                if (!jr.contains("df")) fail(ErrorKind::format, where + ": a t statistic needs df");
                row.t = jr["t"].get<double>();
                row.df = jr["df"].get<int>();
                row.p = stats::t_two_sided_p(*row.t, *row.df);
                if (jr.contains("d") && !jr["d"].is_null()) row.d = jr["d"].get<double>();
            } else if (jr.contains("p")) {
                if (!jr["p"].is_null()) row.p = jr["p"].get<double>();
            } else {
                fail(ErrorKind::format, where + ": row needs group summaries, t and df, or p");
            }
            table.rows.push_back(std::move(row));
        }
        std::vector<std::optional<double>> p;
        for (const auto& r : table.rows) p.push_back(r.p);
        auto adj = stats::bh_adjust(p);
        for (std::size_t i = 0; i < table.rows.size(); ++i) table.rows[i].p_adj = adj[i];
        out.push_back(std::move(table));
    }
    return out;
} catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::format, std::string("summary input: ") + e.what());
}

std::string summary_csv(const SummaryTable& table) {
    std::string out = csv::format_row({"dimension", "mean_a", "sd_a", "mean_b", "sd_b", "t", "p", "p_adj", "d", "defined"});
    for (const auto& r : table.rows) {
        out += csv::format_row({r.dimension, r.a ? fixed(r.a->mean, 6) : "", r.a ? fixed(r.a->sd, 6) : "",
                                r.b ? fixed(r.b->mean, 6) : "", r.b ? fixed(r.b->sd, 6) : "",
                                r.t ? fixed(*r.t, 6) : "", r.p ? fixed(*r.p, 6) : "",
                                r.p_adj ? fixed(*r.p_adj, 6) : "", r.d ? fixed(*r.d, 6) : "",
                                r.p ? "true" : "false"});
    }
    return out;
}

std::string render_summary_markdown(const std::vector<SummaryTable>& tables) {
    std::string out = "# Summary-input analysis\n\n";
    for (const auto& t : tables) {
        out += "## " + t.name + "\n\n| Dimension | t | df | p | adj. p | d |\n|---|---|---|---|---|---|\n";
        for (const auto& r : t.rows)
            out += "| " + r.dimension + " | " + (r.t ? fixed(*r.t, 3) : "N/A") + " | " +
                   (r.df ? std::to_string(*r.df) : "") + " | " + (r.p ? fixed(*r.p, 3) : "N/A") + " | " +
                   (r.p_adj ? fixed(*r.p_adj, 3) : "N/A") + " | " + (r.d ? fixed(*r.d, 3) : "N/A") + " |\n";
        out += "\n";
    }
    return out;
}

}  // namespace scaffoldsim::report
