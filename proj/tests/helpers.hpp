#pragma once

#include <filesystem>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <utility>

#include "glitchhunter/error.hpp"

namespace testutil {

// Runs f and reports the Errc it threw, or nullopt if it returned normally.
template <typename F>
std::optional<glitchhunter::Errc> thrown_errc(F&& f) {
    try {
        std::forward<F>(f)();
    } catch (const glitchhunter::Error& e) {
        return e.code();
    }
    return std::nullopt;
}

// Unique directory under the system temp root, removed on destruction.
struct TempDir {
    std::filesystem::path path;

    TempDir() {
        auto base = std::filesystem::temp_directory_path();
        std::random_device rd;
        for (int attempt = 0; attempt < 64; ++attempt) {
            auto candidate = base / ("gh_test_" + std::to_string(rd()));
            std::error_code ec;
            if (std::filesystem::create_directory(candidate, ec)) {
                path = candidate;
                return;
            }
        }
        throw std::runtime_error("could not create a temp directory");
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;
};

}  // namespace testutil
