#include "scaffoldsim/backend.hpp"

#include <json.hpp>

#include "scaffoldsim/error.hpp"
#include "scaffoldsim/http_backend.hpp"
#include "scaffoldsim/scripted_backend.hpp"
#include "scaffoldsim/text.hpp"

namespace scaffoldsim {

const char* to_string(BackendKind kind) noexcept {
    return kind == BackendKind::http ? "http" : "scripted";
}

BackendKind parse_backend_kind(std::string_view name) {
    if (name == "http") return BackendKind::http;
    if (name == "scripted") return BackendKind::scripted;
    fail(ErrorKind::invalid_argument, "unknown backend '" + std::string(name) + "'");
}

void validate_backend_config(const BackendConfig& c) {
    if (c.max_repair_attempts < 1) fail(ErrorKind::invalid_argument, "max_repair_attempts must be >= 1");
    if (c.max_transport_retries < 0) fail(ErrorKind::invalid_argument, "max_transport_retries must be >= 0");
    if (c.request_timeout <= 0.0) fail(ErrorKind::invalid_argument, "request_timeout must be positive");
    if (c.temperature < 0.0) fail(ErrorKind::invalid_argument, "temperature must be >= 0");
    if (c.kind == BackendKind::http) {
        if (c.endpoint.empty()) fail(ErrorKind::invalid_argument, "http backend requires an endpoint");
        if (c.model_name.empty()) fail(ErrorKind::invalid_argument, "http backend requires a model name");
        if (c.api_key_env.empty()) fail(ErrorKind::invalid_argument, "http backend requires api_key_env");
    }
    if (c.scripted_contradiction_rate < 0.0 || c.scripted_contradiction_rate > 1.0)
        fail(ErrorKind::invalid_argument, "scripted_contradiction_rate must lie in [0, 1]");
}

void Backend::set_max_repair_attempts(int attempts) {
    if (attempts < 1) fail(ErrorKind::invalid_argument, "max_repair_attempts must be >= 1");
    max_repair_attempts_ = attempts;
}

GenerationResponse Backend::generate(const GenerationRequest& request) {
    if (request.max_units <= 0) fail(ErrorKind::invalid_argument, "max_units must be positive");
    if (request.messages.empty() && text::trim(request.system_prompt).empty())
        fail(ErrorKind::invalid_argument, "request has neither system prompt nor messages");
    ++requests_;
    GenerationResponse response = do_generate(request);
    if (text::trim(response.text).empty()) fail(ErrorKind::generation, name() + " returned empty output");
    return response;
}

std::string schema_instruction(const std::vector<std::string>& schema) {
    std::string out = "Reply with a single JSON object whose keys are exactly: ";
    for (std::size_t i = 0; i < schema.size(); ++i) {
        if (i) out += ", ";
        out += "\"" + schema[i] + "\"";
    }
    return out + ". Every value must be a string.";
}

std::string repair_instruction(const std::vector<std::string>& schema) {
    return "Your previous reply could not be parsed. " + schema_instruction(schema) +
           " Do not add any text outside the JSON object.";
}

GenerationResponse Backend::generate_structured(const GenerationRequest& request) {
    if (request.expected_schema.empty())
        fail(ErrorKind::invalid_argument, "generate_structured requires a non-empty expected_schema");

    GenerationRequest current = request;
    current.system_prompt += (current.system_prompt.empty() ? "" : "\n\n") + schema_instruction(request.expected_schema);
    std::string last_raw;
    for (int attempt = 1; attempt <= max_repair_attempts_; ++attempt) {
        GenerationResponse r = generate(current);
        last_raw = r.text;
        if (auto parsed = parse_structured(r.text, request.expected_schema)) {
            r.structured = std::move(parsed);
            r.attempts = attempt;
            return r;
        }
        current.messages.push_back({"assistant", r.text});
        current.messages.push_back({"user", repair_instruction(request.expected_schema)});
    }
    throw StructuredOutputError("structured output missing required fields after " +
                                    std::to_string(max_repair_attempts_) + " attempts",
                                last_raw, max_repair_attempts_);
}

std::optional<std::map<std::string, std::string>> parse_structured(const std::string& text,
                                                                   const std::vector<std::string>& schema) {
    const auto open = text.find('{');
    const auto close = text.rfind('}');
    if (open == std::string::npos || close == std::string::npos || close < open) return std::nullopt;
    nlohmann::json doc = nlohmann::json::parse(text.begin() + static_cast<long>(open),
                                               text.begin() + static_cast<long>(close) + 1, nullptr, false);
    if (doc.is_discarded() || !doc.is_object()) return std::nullopt;
    std::map<std::string, std::string> out;
    for (const auto& field : schema) {
        auto it = doc.find(field);
        if (it == doc.end() || it->is_null()) return std::nullopt;
        if (it->is_string()) {
            if (text::trim(it->get<std::string>()).empty()) return std::nullopt;
            out[field] = it->get<std::string>();
        }
        else if (it->is_array()) {
            std::vector<std::string> parts;
            for (const auto& v : *it) parts.push_back(v.is_string() ? v.get<std::string>() : v.dump());
            out[field] = text::join(parts, ",");
        } else
            out[field] = it->dump();
    }
    return out;
}

std::unique_ptr<Backend> make_backend(const BackendConfig& config) {
    validate_backend_config(config);
    std::unique_ptr<Backend> backend;
    if (config.kind == BackendKind::http)
        backend = std::make_unique<HttpBackend>(config);
    else
        backend = std::make_unique<ScriptedBackend>(config);
    backend->set_max_repair_attempts(config.max_repair_attempts);
    return backend;
}

}  // namespace scaffoldsim
