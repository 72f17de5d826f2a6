#pragma once

#include <atomic>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <unistd.h>

#include <deque>
#include <mutex>

#include "scaffoldsim/backend.hpp"
#include "scaffoldsim/core.hpp"
#include "scaffoldsim/error.hpp"

namespace testing {

inline std::filesystem::path data_path(const std::string& rel) { return std::filesystem::path(SCAFFOLDSIM_DATA_DIR) / rel; }

inline std::string read_file(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline const std::vector<scaffoldsim::PoetryTask>& shipped_tasks() {
    static const auto tasks = scaffoldsim::load_task_set(data_path("tasks.json"));
    return tasks;
}

// Scratch directory removed on scope exit.
class TempDir {
public:
    TempDir() {
        static std::atomic<int> counter{0};
        path_ = std::filesystem::temp_directory_path() /
                ("scaffoldsim-test-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
        std::filesystem::remove_all(path_);
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    const std::filesystem::path& path() const { return path_; }
    std::filesystem::path operator/(const std::string& rel) const { return path_ / rel; }

private:
    std::filesystem::path path_;
};

// Replies from a fixed queue and keeps every request it saw.
class QueueBackend : public scaffoldsim::Backend {
public:
    explicit QueueBackend(std::vector<std::string> replies, scaffoldsim::CoverageMode mode = scaffoldsim::CoverageMode::model)
        : replies_(replies.begin(), replies.end()), mode_(mode) {}

    scaffoldsim::CoverageMode coverage_mode() const noexcept override { return mode_; }
    std::string name() const override { return "queue"; }

    std::vector<scaffoldsim::GenerationRequest> seen;

protected:
    scaffoldsim::GenerationResponse do_generate(const scaffoldsim::GenerationRequest& request) override {
        std::lock_guard lock(mu_);
        seen.push_back(request);
        if (replies_.empty()) scaffoldsim::fail(scaffoldsim::ErrorKind::generation, "queue exhausted");
        auto text = replies_.front();
        replies_.pop_front();
        return {text, std::nullopt, 1};
    }

private:
    std::mutex mu_;
    std::deque<std::string> replies_;
    scaffoldsim::CoverageMode mode_;
};

}  // namespace testing
