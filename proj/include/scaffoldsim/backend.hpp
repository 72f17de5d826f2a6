#pragma once

#include <atomic>
#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace scaffoldsim {

struct ChatMessage {
    /// "user", "assistant", or a speaker name; HTTP maps names onto the user role.
    std::string speaker_tag;
    std::string text;
};

struct GenerationRequest {
    std::string system_prompt;
    std::vector<ChatMessage> messages;
    /// Soft length budget in LengthPolicy units.
    int max_units = 80;
    double temperature = 0.7;
    std::optional<std::uint64_t> seed;
    /// Required field names of a structured reply; empty for free text.
    std::vector<std::string> expected_schema;
    /// Turn facts (phase, speaker, task vocabulary...) for offline backends. Never transmitted.
    std::map<std::string, std::string> hints;
};

struct GenerationResponse {
    std::string text;
    std::optional<std::map<std::string, std::string>> structured;
    int attempts = 1;
};

enum class BackendKind { http, scripted };

const char* to_string(BackendKind kind) noexcept;
BackendKind parse_backend_kind(std::string_view name);

struct BackendConfig {
    BackendKind kind = BackendKind::scripted;
    std::string endpoint;
    std::string model_name;
    std::string api_key_env = "OPENAI_API_KEY";
    double request_timeout = 60.0;
    int max_repair_attempts = 3;
    int max_transport_retries = 2;
    double temperature = 0.7;
    std::uint64_t global_seed = 0;
    /// Scripted only: probability that a student turn carries an injected self-contradiction.
    double scripted_contradiction_rate = 0.0;
};

/// Throws Error(invalid_argument) when a required field for the selected kind is missing.
void validate_backend_config(const BackendConfig& config);

/// How the teacher judges which scoring points a round addressed.
enum class CoverageMode { model, keywords };

class Backend {
public:
    virtual ~Backend() = default;

    /// Free-text generation. Throws Error(network) for transport failures that survived
    /// retries and Error(generation) for an empty reply.
    GenerationResponse generate(const GenerationRequest& request);

    /// Generation with a required field schema. Unparseable replies are re-prompted with a
    /// repair instruction; after `max_repair_attempts` total attempts StructuredOutputError
    /// is thrown carrying the last raw reply.
    GenerationResponse generate_structured(const GenerationRequest& request);

    virtual CoverageMode coverage_mode() const noexcept { return CoverageMode::model; }
    virtual std::string name() const = 0;

    int max_repair_attempts() const noexcept { return max_repair_attempts_; }
    void set_max_repair_attempts(int attempts);

    std::uint64_t request_count() const noexcept { return requests_.load(); }

protected:
    virtual GenerationResponse do_generate(const GenerationRequest& request) = 0;

private:
    int max_repair_attempts_ = 3;
    std::atomic<std::uint64_t> requests_{0};
};

/// Extracts a JSON object from `text` (tolerating code fences and surrounding prose) and
/// returns its schema fields as strings; nullopt if any field is missing or the text has no
/// parseable object.
std::optional<std::map<std::string, std::string>> parse_structured(const std::string& text,
                                                                   const std::vector<std::string>& schema);

std::string schema_instruction(const std::vector<std::string>& schema);
std::string repair_instruction(const std::vector<std::string>& schema);

std::unique_ptr<Backend> make_backend(const BackendConfig& config);

}  // namespace scaffoldsim
