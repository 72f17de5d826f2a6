#include <doctest.h>

#include <cmath>

#include "helpers.hpp"
#include "scaffoldsim/report.hpp"

using namespace scaffoldsim;

namespace {

std::size_t count(const std::string& hay, const std::string& needle) {
    std::size_t n = 0;
    for (auto pos = hay.find(needle); pos != std::string::npos; pos = hay.find(needle, pos + 1)) ++n;
    return n;
}

stats::TransitionMatrix square(std::size_t k, bool identity) {
    stats::TransitionMatrix m;
    for (std::size_t i = 0; i < k; ++i) m.labels.push_back("L" + std::to_string(i));
    m.counts.assign(k, std::vector<long>(k, 0));
    m.probs.assign(k, std::vector<double>(k, 0.0));
    if (identity)
        for (std::size_t i = 0; i < k; ++i) {
            m.counts[i][i] = 3;
            m.probs[i][i] = 1.0;
        }
    return m;
}

}  // namespace

TEST_CASE("heat maps are deterministic and shade by probability") {
    const auto zero = square(4, false);
    const auto svg = report::render_heatmap(zero, "zero");
    CHECK(svg == report::render_heatmap(zero, "zero"));
    CHECK(svg.rfind("<svg", 0) == 0);
    CHECK(count(svg, "fill=\"#ffffff\" stroke") == 16);

    const auto id = report::render_heatmap(square(4, true));
    CHECK(count(id, "fill=\"#08306b\"") == 4);
    CHECK(count(id, "fill=\"#ffffff\" stroke") == 12);
    CHECK(id.find("preceding behavior") != std::string::npos);
    CHECK(id.find("subsequent behavior") != std::string::npos);
    CHECK(report::render_heatmap(zero, "a<b").find("a&lt;b") != std::string::npos);
}

TEST_CASE("csv renderers") {
    auto m = square(2, true);
    const auto probs = report::matrix_csv(m, true);
    CHECK(probs.rfind("from,L0,L1", 0) == 0);
    CHECK(report::matrix_csv(m, false).find("L0,3,0") != std::string::npos);

    stats::TestResult r = stats::compare("fluency", {10, 2, 1}, {10, 1, 1});
    r.p_adj = r.test.p;
    const auto csv = report::results_csv({r});
    CHECK(csv.rfind("dimension,mean_a,sd_a,mean_b,sd_b,t,p,p_adj,d,defined", 0) == 0);
    CHECK(csv.find("fluency,") != std::string::npos);

    CHECK(report::fixed(1.23456, 2) == "1.23");
    CHECK(report::fixed(INFINITY, 3) == "inf");
    CHECK(report::fixed(-INFINITY, 3) == "-inf");
}

TEST_CASE("report notices for thin corpora") {
    stats::CodedCorpus empty;
    const auto none = report::build_report(empty);
    REQUIRE(none.notices.size() == 1);
    CHECK(none.notices[0].find("no complete sessions") != std::string::npos);

    stats::CodedCorpus one;
    SessionTranscript t;
    t.session_id = "t1-deep_think-r0";
    t.task_id = 1;
    t.condition = Condition::deep_think;
    t.status = SessionStatus::complete;
    t.termination = Termination::all_points_covered;
    Utterance u;
    u.session_id = t.session_id;
    u.content = "Welcome.";
    t.utterances.push_back(u);
    one.transcripts.push_back(t);
    const auto single = report::build_report(one);
    REQUIRE_FALSE(single.notices.empty());
    CHECK(single.notices[0].find("only one condition") != std::string::npos);
    CHECK(single.tables.empty());
    REQUIRE_FALSE(single.warnings.empty());
    const auto md = report::render_markdown(single);
    CHECK(md.find("only one condition") != std::string::npos);
    CHECK(md == report::render_markdown(report::build_report(one)));
}
