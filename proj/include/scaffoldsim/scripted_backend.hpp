#pragma once

#include <cstdint>
#include <string>

#include "scaffoldsim/backend.hpp"

namespace scaffoldsim {

/// Offline backend that fills role- and phase-specific templates from the request's hints.
/// Every reply is a pure function of (global_seed, request): no clock, no shared state.
class ScriptedBackend final : public Backend {
public:
    explicit ScriptedBackend(const BackendConfig& config);

    CoverageMode coverage_mode() const noexcept override { return CoverageMode::keywords; }
    std::string name() const override { return "scripted"; }

    /// Stream key for `request`; covers every request field except temperature.
    std::uint64_t request_key(const GenerationRequest& request) const;

protected:
    GenerationResponse do_generate(const GenerationRequest& request) override;

private:
    std::uint64_t global_seed_;
    double contradiction_rate_;
};

}  // namespace scaffoldsim
