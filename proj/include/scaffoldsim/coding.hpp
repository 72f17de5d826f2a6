#pragma once

#include <compare>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "scaffoldsim/backend.hpp"
#include "scaffoldsim/core.hpp"
#include "scaffoldsim/prompts.hpp"

namespace scaffoldsim {

/// Binary quality dimensions; diversity is absent for teacher utterances.
struct QualityCode {
    int fluency = 0;
    int repetitiveness = 0;
    int contradiction = 0;
    int relevance = 0;
    std::optional<int> diversity;

    friend bool operator==(const QualityCode&, const QualityCode&) = default;
};

inline constexpr const char* kQualityDimensions[] = {"fluency", "repetitiveness", "contradiction", "relevance",
                                                     "diversity"};

/// Value of dimension `name` (one of kQualityDimensions); nullopt for absent diversity.
std::optional<int> quality_value(const QualityCode& code, std::string_view name);

/// Throws Error(validation) when values are not 0/1 or diversity presence does not match the speaker.
void validate_quality(const QualityCode& code, SpeakerKind kind);

inline constexpr const char* kStudentLabels[] = {"A1", "B1", "B2", "C1", "D1", "D2", "D3", "D4", "D5"};
inline constexpr const char* kTeacherLabels[] = {"T_A1", "T_B1", "T_C1"};

bool is_student_label(std::string_view label) noexcept;
bool is_teacher_label(std::string_view label) noexcept;
bool is_label_for(std::string_view label, SpeakerKind kind) noexcept;
/// Human-readable name ("Plan", "Encouragement"...); empty for unknown labels.
const char* label_name(std::string_view label) noexcept;

struct UtteranceRef {
    std::string session_id;
    int seq = 0;

    friend auto operator<=>(const UtteranceRef&, const UtteranceRef&) = default;
};

struct CodingDecision {
    UtteranceRef ref;
    /// "human:<name>", "model:<name>" or "rule_based".
    std::string coder;
    std::optional<QualityCode> quality;
    std::optional<std::string> behavior;
    std::string rationale;
    /// The coder could not produce codes for this utterance; code cells are empty.
    bool failed = false;
};

/// Throws Error(invalid_argument) unless `coder` is rule_based, human:<name> or model:<name>.
void validate_coder_id(std::string_view coder);

/// One utterance to code with the session context it was spoken in.
struct CodingItem {
    const PoetryTask& task;
    const Roster& roster;
    /// Every utterance of the session with seq below the target's, in order.
    std::span<const Utterance> history;
    const Utterance& target;
};

class Coder {
public:
    virtual ~Coder() = default;
    virtual std::string id() const = 0;
    virtual CodingDecision code_quality(const CodingItem& item) = 0;
    virtual CodingDecision code_behavior(const CodingItem& item) = 0;

    /// Quality and behavior merged into a single decision.
    CodingDecision code(const CodingItem& item);
};

/// Deterministic offline coder built on surface cues of the scripted templates.
class RuleBasedCoder final : public Coder {
public:
    static constexpr double kRepetitionThreshold = 0.5;
    static constexpr const char* kContradictionMarker = "on second thought, i no longer believe";

    std::string id() const override { return "rule_based"; }
    CodingDecision code_quality(const CodingItem& item) override;
    CodingDecision code_behavior(const CodingItem& item) override;
};

/// Backend-assisted coder: one structured call per utterance and scheme, full history in
/// context, mandatory rationale.
class ModelCoder final : public Coder {
public:
    ModelCoder(Backend& backend, std::string model_name,
               const PromptLibrary& prompts = PromptLibrary::builtin());

    std::string id() const override { return "model:" + model_name_; }
    CodingDecision code_quality(const CodingItem& item) override;
    CodingDecision code_behavior(const CodingItem& item) override;

private:
    Backend& backend_;
    std::string model_name_;
    const PromptLibrary& prompts_;
};

/// Codes every utterance of every transcript. Per-utterance failures become rows with
/// failed = true and the error in the rationale. Output follows transcript then seq order.
std::vector<CodingDecision> code_corpus(const std::vector<SessionTranscript>& corpus,
                                        const std::vector<PoetryTask>& tasks, Coder& coder);

// ---------------------------------------------------------------------------
// Codes files

inline constexpr const char* kCodesHeader =
    "session_id,seq,coder,fluency,repetitiveness,contradiction,relevance,diversity,behavior,rationale";

std::string write_codes(const std::vector<CodingDecision>& decisions);

struct CodesFile {
    std::vector<CodingDecision> decisions;
    /// Row-level problems; the offending rows are skipped.
    std::vector<std::string> diagnostics;
    std::vector<std::string> warnings;
};

/// Parses a codes CSV. Duplicate (coder, utterance) rows keep the last one with a warning.
/// Throws Error(format) only when the header is wrong or the CSV is malformed.
CodesFile parse_codes(std::string_view csv_text);
CodesFile load_codes(const std::filesystem::path& path);

/// Like load_codes, but every row must carry a human:<name> coder.
CodesFile ingest_human_codes(const std::filesystem::path& path);

// ---------------------------------------------------------------------------
// Agreement

struct AgreementReport {
    std::string dimension;
    std::size_t n = 0;
    double p_o = 0.0;
    double p_e = 0.0;
    double kappa = 0.0;
};

/// Two-rater Cohen's kappa over paired labels. Throws Error(invalid_argument) when the
/// vectors differ in length or are empty. Defined as 1 when p_e = 1.
AgreementReport cohen_kappa(const std::vector<std::string>& a, const std::vector<std::string>& b,
                            std::string dimension = {});

struct SampleItem {
    UtteranceRef ref;
    /// Stratum key, e.g. "student/deep_think".
    std::string stratum;
};

/// Seeded stratified sample of round(fraction * n) items, allocated to strata by largest
/// remainder. Result is sorted by ref.
std::vector<UtteranceRef> sample_for_validation(std::vector<SampleItem> items, double fraction,
                                                std::uint64_t seed);

/// Stratified items for every utterance of a corpus (speaker kind x condition).
std::vector<SampleItem> corpus_items(const std::vector<SessionTranscript>& corpus);

struct AgreementSummary {
    std::size_t overlap = 0;
    std::size_t only_a = 0;
    std::size_t only_b = 0;
    std::vector<AgreementReport> quality;
    /// Unweighted mean of the per-dimension quality kappas.
    double quality_mean = 0.0;
    std::vector<AgreementReport> behavior;
};

/// Aligns two codings on utterance refs (restricted to `subset` when given) and reports
/// per-dimension quality kappas, their mean, and behavior kappas (all, student, teacher).
/// Throws Error(invalid_argument) when nothing overlaps.
AgreementSummary compare_codings(const std::vector<CodingDecision>& a, const std::vector<CodingDecision>& b,
                                 const std::vector<UtteranceRef>* subset = nullptr);

}  // namespace scaffoldsim
