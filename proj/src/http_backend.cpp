#define CPPHTTPLIB_OPENSSL_SUPPORT
#include <httplib.h>

#include "scaffoldsim/http_backend.hpp"

#include <chrono>
#include <cstdlib>
#include <thread>

#include <json.hpp>

#include "scaffoldsim/error.hpp"
#include "scaffoldsim/text.hpp"

namespace scaffoldsim {

namespace {

std::string role_for(const std::string& tag) {
    if (tag == "assistant" || tag == "system") return tag;
    return "user";
}

}  // namespace

HttpBackend::HttpBackend(BackendConfig config) : config_(std::move(config)) {
    validate_backend_config(config_);
    const char* key = std::getenv(config_.api_key_env.c_str());
    if (key == nullptr || *key == '\0')
        fail(ErrorKind::invalid_argument, "environment variable " + config_.api_key_env + " is not set");
    api_key_ = key;

    std::string url = config_.endpoint;
    while (!url.empty() && url.back() == '/') url.pop_back();
    const auto scheme_end = url.find("://");
    if (scheme_end == std::string::npos)
        fail(ErrorKind::invalid_argument, "endpoint must start with http:// or https://");
    const auto path_start = url.find('/', scheme_end + 3);
    scheme_host_port_ = url.substr(0, path_start);
    base_path_ = path_start == std::string::npos ? "" : url.substr(path_start);
}

std::string HttpBackend::request_body(const GenerationRequest& request) const {
    nlohmann::ordered_json body;
    body["model"] = config_.model_name;
    nlohmann::ordered_json messages = nlohmann::ordered_json::array();
    if (!request.system_prompt.empty())
        messages.push_back({{"role", "system"}, {"content", request.system_prompt}});
    for (const auto& m : request.messages) {
        const std::string role = role_for(m.speaker_tag);
        std::string content = m.text;
        if (role == "user" && m.speaker_tag != "user") content = m.speaker_tag + ": " + content;
        messages.push_back({{"role", role}, {"content", content}});
    }
    body["messages"] = std::move(messages);
    body["temperature"] = request.temperature;
    // Units are words or characters; four tokens per unit leaves room for JSON framing.
    body["max_tokens"] = std::max(256, 4 * request.max_units);
    if (request.seed) body["seed"] = *request.seed;
    return body.dump();
}

GenerationResponse HttpBackend::do_generate(const GenerationRequest& request) {
    const std::string body = request_body(request);
    const std::string path = base_path_ + "/v1/chat/completions";
    const auto secs = static_cast<time_t>(config_.request_timeout);
    const auto usecs = static_cast<time_t>((config_.request_timeout - static_cast<double>(secs)) * 1e6);

    std::string last_error;
    bool last_retryable = true;
    for (int attempt = 0; attempt <= config_.max_transport_retries; ++attempt) {
        if (attempt > 0) std::this_thread::sleep_for(std::chrono::milliseconds(200 * attempt));
        httplib::Client client(scheme_host_port_);
        client.set_connection_timeout(secs, usecs);
        client.set_read_timeout(secs, usecs);
        client.set_write_timeout(secs, usecs);
        client.set_bearer_token_auth(api_key_);

        auto res = client.Post(path, body, "application/json");
        if (!res) {
            last_error = "transport error: " + httplib::to_string(res.error());
            last_retryable = true;
            continue;
        }
        if (res->status == 429 || res->status >= 500) {
            last_error = "server returned HTTP " + std::to_string(res->status);
            last_retryable = true;
            continue;
        }
        if (res->status != 200) {
            fail(ErrorKind::generation, "server returned HTTP " + std::to_string(res->status) + ": " +
                                            res->body.substr(0, 300));
        }
        auto doc = nlohmann::json::parse(res->body, nullptr, false);
        std::string content;
        if (!doc.is_discarded()) {
            try {
                const auto& c = doc.at("choices").at(0).at("message").at("content");
                if (c.is_string()) content = c.get<std::string>();
            } catch (const nlohmann::json::exception&) {
            }
        }
        if (text::trim(content).empty()) {
            last_error = "empty completion";
            last_retryable = false;
            continue;
        }
        return {content, std::nullopt, 1};
    }
    fail(last_retryable ? ErrorKind::network : ErrorKind::generation,
         last_error + " (after " + std::to_string(config_.max_transport_retries + 1) + " attempts)");
}

}  // namespace scaffoldsim
