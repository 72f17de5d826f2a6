#pragma once

#include <string>

#include "scaffoldsim/backend.hpp"

namespace scaffoldsim {

/// OpenAI-compatible chat-completions client: POST {endpoint}/v1/chat/completions.
/// One connection per request, so a single instance is safe to share across sessions.
class HttpBackend final : public Backend {
public:
    /// Reads the API key from the configured environment variable; throws
    /// Error(invalid_argument) when it is unset.
    explicit HttpBackend(BackendConfig config);

    std::string name() const override { return "http:" + config_.model_name; }

    /// Request body for `request`, exactly as it is sent.
    std::string request_body(const GenerationRequest& request) const;

    const BackendConfig& config() const noexcept { return config_; }

protected:
    GenerationResponse do_generate(const GenerationRequest& request) override;

private:
    BackendConfig config_;
    std::string api_key_;
    std::string scheme_host_port_;
    std::string base_path_;
};

}  // namespace scaffoldsim
